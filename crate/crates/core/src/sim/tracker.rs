use crate::error::SimError;
use crate::stats::CompensatedSum;

/// Running integral of the instantaneous age `Delta(t) = t - u(t)`, where
/// `u(t)` is the generation time of the freshest delivered packet.
#[derive(Debug, Clone)]
pub struct AgeTracker {
    freshest_gen: f64,
    last_event_time: f64,
    area: CompensatedSum,
    peak_sum: CompensatedSum,
    peak_count: u64,
    initial_age: f64,
}

/// What one delivery contributed to the tracker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryEffect {
    /// Area under `Delta(t)` since the previous event.
    pub area: f64,
    /// Age just before the delivery.
    pub peak: f64,
    /// Age right after the delivery.
    pub age_after: f64,
}

impl AgeTracker {
    /// Observation starts at `start` with age `initial_age`.
    pub fn new(start: f64, initial_age: f64) -> Self {
        Self {
            freshest_gen: start - initial_age,
            last_event_time: start,
            area: CompensatedSum::default(),
            peak_sum: CompensatedSum::default(),
            peak_count: 0,
            initial_age,
        }
    }

    pub fn freshest_gen(&self) -> f64 {
        self.freshest_gen
    }

    pub fn last_event_time(&self) -> f64 {
        self.last_event_time
    }

    pub fn initial_age(&self) -> f64 {
        self.initial_age
    }

    pub fn age_at(&self, t: f64) -> f64 {
        t - self.freshest_gen
    }

    pub fn age_integral(&self) -> f64 {
        self.area.value()
    }

    pub fn peak_sum(&self) -> f64 {
        self.peak_sum.value()
    }

    pub fn peak_count(&self) -> u64 {
        self.peak_count
    }

    /// Integrates the linear ramp from the last event to `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<f64, SimError> {
        if t < self.last_event_time {
            return Err(SimError::TimeReversal { at: t, last: self.last_event_time });
        }
        let dt = t - self.last_event_time;
        let piece = dt * self.age_at(self.last_event_time) + 0.5 * dt * dt;
        self.area.add(piece);
        self.last_event_time = t;
        Ok(piece)
    }

    /// Records delivery at `at` of a packet generated at `gen`: adds the
    /// trapezoid up to `at`, records the peak, then drops the age to `at - gen`.
    pub fn observe_delivery(&mut self, at: f64, gen: f64) -> Result<DeliveryEffect, SimError> {
        if gen <= self.freshest_gen {
            return Err(SimError::StaleDelivery { gen, freshest: self.freshest_gen });
        }
        let area = self.advance_to(at)?;
        let peak = self.age_at(at);
        self.peak_sum.add(peak);
        self.peak_count += 1;
        self.freshest_gen = gen;
        Ok(DeliveryEffect { area, peak, age_after: at - gen })
    }

    /// Zeroes the accumulators at `t`, keeping the current age.
    pub fn reset_window(&mut self, t: f64) -> Result<(), SimError> {
        self.advance_to(t)?;
        self.area = CompensatedSum::default();
        self.peak_sum = CompensatedSum::default();
        self.peak_count = 0;
        Ok(())
    }
}
