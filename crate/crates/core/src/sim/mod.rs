//! Discrete-event simulation of a Poisson source feeding one LCFS server.
//!
//! Event loop rules:
//! - time starts at 0 with an empty queue and age 0;
//! - a service time is drawn from the stream when service starts;
//! - when a completion and an arrival share a timestamp the completion runs
//!   first;
//! - the run stops just before the arrival of packet `horizon + 1`, and that
//!   instant closes the observation window;
//! - the window opens at the `warmup`-th delivery (at t = 0 when `warmup` is 0).
//!
//! Estimators are computed over the window only. Standard errors come from
//! batch means over `batches` equal groups of consecutive deliveries.

mod queue;
mod tracker;

use std::io::Write;

use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

pub use queue::{step_nopreempt, step_preempt, Delivery, Event, InService, Packet, QueueState};
pub use tracker::{AgeTracker, DeliveryEffect};

use crate::analytic::{Scheme, SystemParams};
use crate::error::SimError;
use crate::rng;
use crate::stats::{batch_ratio, Estimate};

pub const DEFAULT_BATCHES: usize = 20;
pub const DEFAULT_WARMUP: u64 = 10_000;
/// Upper bound on generated packets per run.
pub const MAX_HORIZON: u64 = 100_000_000;

/// Deliveries per micro-batch; micro-batches are regrouped into the
/// requested number of batches once the run ends.
const MICRO_BATCH: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: SystemParams,
    pub seed: u64,
    /// Number of generated packets.
    pub horizon: u64,
    /// Deliveries discarded before the observation window opens.
    pub warmup: u64,
    pub batches: usize,
}

impl SimConfig {
    pub fn new(params: SystemParams, seed: u64, horizon: u64) -> Self {
        Self {
            params,
            seed,
            horizon,
            warmup: DEFAULT_WARMUP.min(horizon.saturating_sub(1)),
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn with_warmup(self, warmup: u64) -> Self {
        Self { warmup, ..self }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        if self.horizon > MAX_HORIZON {
            return Err(SimError::Config(format!("horizon {} exceeds {MAX_HORIZON}", self.horizon)));
        }
        if self.horizon <= self.warmup {
            return Err(SimError::Config(format!(
                "horizon ({}) must exceed warmup ({})",
                self.horizon, self.warmup
            )));
        }
        if self.batches < 2 {
            return Err(SimError::Config(format!("need at least 2 batches, got {}", self.batches)));
        }
        Ok(())
    }
}

/// Window estimates from one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    /// Age integral over the window divided by its length.
    pub avg_age: Estimate,
    /// Mean of the peak-age samples.
    pub avg_peak: Estimate,
    /// Deliveries per unit time.
    pub effective_rate: Estimate,
    /// `1 - delivered / generated`.
    pub drop_fraction: Estimate,
    pub mean_system_time: Estimate,
    pub mean_interdeparture: Estimate,
    pub second_moment_interdeparture: Estimate,
    pub n_generated: u64,
    pub n_delivered: u64,
    pub window_start: f64,
    pub window_end: f64,
    pub age_integral: f64,
    /// False when the window held too few deliveries for batch means.
    pub reliable: bool,
    pub seed: u64,
}

/// Per-delivery data for trace-based statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryRecord {
    pub delivery: Delivery,
    /// Pending arrival time at the moment of delivery.
    pub next_arrival: f64,
    pub in_window: bool,
}

impl DeliveryRecord {
    pub fn system_time(&self) -> f64 {
        self.delivery.delivered_at - self.delivery.gen_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Arrival,
    Completion,
}

/// Hooks for watching a run.
pub trait SimObserver {
    fn on_event(&mut self, _time: f64, _kind: TraceKind, _gen_time: f64) {}
    fn on_delivery(&mut self, _record: &DeliveryRecord) {}
}

impl SimObserver for () {}

/// Collects every delivery.
#[derive(Debug, Default)]
pub struct DeliveryTrace {
    pub records: Vec<DeliveryRecord>,
}

impl SimObserver for DeliveryTrace {
    fn on_delivery(&mut self, record: &DeliveryRecord) {
        self.records.push(*record);
    }
}

/// Writes `time,type,gen_time` lines.
pub struct EventLog<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> EventLog<W> {
    pub fn new(mut out: W) -> Self {
        let error = writeln!(out, "time,type,gen_time").err();
        Self { out, error }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> SimObserver for EventLog<W> {
    fn on_event(&mut self, time: f64, kind: TraceKind, gen_time: f64) {
        if self.error.is_some() {
            return;
        }
        let kind = match kind {
            TraceKind::Arrival => "arrival",
            TraceKind::Completion => "completion",
        };
        if let Err(e) = writeln!(self.out, "{time:?},{kind},{gen_time:?}") {
            self.error = Some(e);
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct MicroBatch {
    duration: f64,
    area: f64,
    generated: u64,
    deliveries: u64,
    peak: f64,
    system_time: f64,
    y: f64,
    y2: f64,
}

impl MicroBatch {
    fn merge(&mut self, o: &MicroBatch) {
        self.duration += o.duration;
        self.area += o.area;
        self.generated += o.generated;
        self.deliveries += o.deliveries;
        self.peak += o.peak;
        self.system_time += o.system_time;
        self.y += o.y;
        self.y2 += o.y2;
    }
}

pub fn run(config: &SimConfig) -> Result<SimReport, SimError> {
    run_observed(config, &mut ())
}

/// Runs and keeps every delivery record.
pub fn run_traced(config: &SimConfig) -> Result<(SimReport, DeliveryTrace), SimError> {
    let mut trace = DeliveryTrace::default();
    let report = run_observed(config, &mut trace)?;
    Ok((report, trace))
}

pub fn run_observed<O: SimObserver>(config: &SimConfig, observer: &mut O) -> Result<SimReport, SimError> {
    config.validate()?;
    let params = config.params;
    let mut rng = rng::stream(config.seed);
    let interarrival = Exp::new(params.lambda).map_err(|e| SimError::Config(e.to_string()))?;
    let service = params.service;
    let mut state = QueueState::default();
    let mut tracker = AgeTracker::new(0.0, 0.0);

    let mut next_arrival: f64 = rng.sample(interarrival);
    let mut generated: u64 = 0;
    let mut delivered: u64 = 0;

    let mut in_window = config.warmup == 0;
    let mut window_start = 0.0;
    let mut last_delivery = 0.0f64;
    let mut micro: Vec<MicroBatch> = Vec::new();
    let mut current = MicroBatch::default();
    let mut window_generated: u64 = 0;
    let mut window_delivered: u64 = 0;

    let end = loop {
        let event = match state.next_completion() {
            Some(c) if c <= next_arrival => Event::Completion { time: c },
            _ => {
                if generated == config.horizon {
                    break next_arrival;
                }
                Event::Arrival { time: next_arrival }
            }
        };

        let outcome = {
            let mut draw = || service.sample(&mut rng);
            match params.scheme {
                Scheme::LcfsPreempt => step_preempt(&mut state, event, &mut draw)?,
                Scheme::LcfsNoPreempt => step_nopreempt(&mut state, event, &mut draw)?,
            }
        };

        match event {
            Event::Arrival { time } => {
                generated += 1;
                if in_window {
                    current.generated += 1;
                    window_generated += 1;
                }
                observer.on_event(time, TraceKind::Arrival, time);
                next_arrival = time + rng.sample(interarrival);
            }
            Event::Completion { time } => {
                let d = outcome.ok_or(SimError::IdleCompletion(time))?;
                let effect = tracker.observe_delivery(time, d.gen_time)?;
                delivered += 1;
                observer.on_event(time, TraceKind::Completion, d.gen_time);
                observer.on_delivery(&DeliveryRecord { delivery: d, next_arrival, in_window });
                if in_window {
                    let prev = last_delivery.max(window_start);
                    current.duration += time - prev;
                    current.area += effect.area;
                    current.deliveries += 1;
                    current.peak += effect.peak;
                    current.system_time += time - d.gen_time;
                    let y = time - prev;
                    current.y += y;
                    current.y2 += y * y;
                    window_delivered += 1;
                    if current.deliveries == MICRO_BATCH {
                        micro.push(std::mem::take(&mut current));
                    }
                } else if delivered == config.warmup {
                    tracker.reset_window(time)?;
                    in_window = true;
                    window_start = time;
                }
                last_delivery = time;
            }
        }
    };

    if in_window {
        let tail = tracker.advance_to(end)?;
        current.area += tail;
        current.duration += end - last_delivery.max(window_start);
        // Trailing deliveries and arrivals join the last full micro-batch so
        // every batch ratio stays well defined.
        match micro.last_mut() {
            Some(last) => last.merge(&current),
            None => micro.push(current),
        }
    }

    let age_integral = tracker.age_integral();
    Ok(summarize(
        &micro,
        config,
        window_generated,
        window_delivered,
        if in_window { window_start } else { end },
        end,
        age_integral,
        in_window,
    ))
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    micro: &[MicroBatch],
    config: &SimConfig,
    n_generated: u64,
    n_delivered: u64,
    window_start: f64,
    window_end: f64,
    age_integral: f64,
    opened: bool,
) -> SimReport {
    let b = config.batches;
    let reliable = opened && micro.len() >= b && n_delivered >= (b as u64) * MICRO_BATCH;
    let groups: Vec<MicroBatch> = if micro.len() >= b {
        (0..b)
            .map(|i| {
                let (lo, hi) = (i * micro.len() / b, (i + 1) * micro.len() / b);
                let mut g = MicroBatch::default();
                micro[lo..hi].iter().for_each(|m| g.merge(m));
                g
            })
            .collect()
    } else {
        micro.to_vec()
    };
    let est = |f: &dyn Fn(&MicroBatch) -> (f64, f64)| -> Estimate {
        if groups.is_empty() {
            return Estimate { value: f64::NAN, stderr: f64::NAN };
        }
        let pairs: Vec<(f64, f64)> = groups.iter().map(f).collect();
        let mut e = batch_ratio(&pairs);
        if !reliable {
            e.stderr = f64::NAN;
        }
        e
    };
    SimReport {
        avg_age: est(&|g| (g.area, g.duration)),
        avg_peak: est(&|g| (g.peak, g.deliveries as f64)),
        effective_rate: est(&|g| (g.deliveries as f64, g.duration)),
        drop_fraction: est(&|g| ((g.generated as f64) - g.deliveries as f64, g.generated as f64)),
        mean_system_time: est(&|g| (g.system_time, g.deliveries as f64)),
        mean_interdeparture: est(&|g| (g.y, g.deliveries as f64)),
        second_moment_interdeparture: est(&|g| (g.y2, g.deliveries as f64)),
        n_generated,
        n_delivered,
        window_start,
        window_end,
        age_integral,
        reliable,
        seed: config.seed,
    }
}

/// Residual interarrival `X_hat = X - T` and system time `T` at one delivery
/// that left the queue empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub residual: f64,
    pub system_time: f64,
}

/// Residual interarrival samples at in-window deliveries that empty the queue.
pub fn residual_interarrival_samples(records: &[DeliveryRecord]) -> Vec<ResidualSample> {
    records
        .iter()
        .filter(|r| r.in_window && r.delivery.left_empty)
        .map(|r| ResidualSample {
            residual: r.next_arrival - r.delivery.delivered_at,
            system_time: r.system_time(),
        })
        .collect()
}

/// `(T_i, Y_i)` pairs: system time of an in-window delivery and the gap to
/// the next delivery.
pub fn system_time_interdeparture_pairs(records: &[DeliveryRecord]) -> Vec<(f64, f64)> {
    records
        .windows(2)
        .filter(|w| w[0].in_window)
        .map(|w| (w[0].system_time(), w[1].delivery.delivered_at - w[0].delivery.delivered_at))
        .collect()
}
