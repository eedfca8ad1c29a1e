//! Single-server queue state and the two LCFS transition rules.

use crate::error::SimError;

/// A generated status update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub gen_time: f64,
    /// Service requirement, drawn when service starts.
    pub service_draw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InService {
    pub packet: Packet,
    pub started: f64,
}

impl InService {
    pub fn completes_at(&self) -> f64 {
        self.started + self.packet.service_draw
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Arrival { time: f64 },
    Completion { time: f64 },
}

impl Event {
    pub fn time(&self) -> f64 {
        match *self {
            Event::Arrival { time } | Event::Completion { time } => time,
        }
    }
}

/// A successful delivery to the monitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub gen_time: f64,
    pub service_start: f64,
    pub delivered_at: f64,
    /// No packet was waiting when this one left.
    pub left_empty: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueueState {
    pub in_service: Option<InService>,
    /// Generation time of the packet in the size-1 buffer (no-preempt only).
    pub buffer: Option<f64>,
    pub dropped: u64,
}

impl QueueState {
    pub fn next_completion(&self) -> Option<f64> {
        self.in_service.map(|s| s.completes_at())
    }

    pub fn is_idle(&self) -> bool {
        self.in_service.is_none()
    }

    fn start(&mut self, gen_time: f64, now: f64, draw: &mut impl FnMut() -> f64) {
        self.in_service = Some(InService {
            packet: Packet { gen_time, service_draw: draw() },
            started: now,
        });
    }

    fn complete(&mut self, time: f64) -> Result<InService, SimError> {
        self.in_service.take().ok_or(SimError::IdleCompletion(time))
    }
}

/// LCFS with preemption: an arrival always takes the server, evicting the
/// packet in service.
pub fn step_preempt(
    state: &mut QueueState,
    event: Event,
    draw: &mut impl FnMut() -> f64,
) -> Result<Option<Delivery>, SimError> {
    match event {
        Event::Arrival { time } => {
            if state.in_service.is_some() {
                state.dropped += 1;
            }
            state.start(time, time, draw);
            Ok(None)
        }
        Event::Completion { time } => {
            let done = state.complete(time)?;
            Ok(Some(Delivery {
                gen_time: done.packet.gen_time,
                service_start: done.started,
                delivered_at: time,
                left_empty: true,
            }))
        }
    }
}

/// LCFS without preemption: arrivals to a busy server overwrite the size-1
/// buffer; on completion the buffered packet starts service immediately.
pub fn step_nopreempt(
    state: &mut QueueState,
    event: Event,
    draw: &mut impl FnMut() -> f64,
) -> Result<Option<Delivery>, SimError> {
    match event {
        Event::Arrival { time } => {
            if state.in_service.is_none() {
                state.start(time, time, draw);
            } else if state.buffer.replace(time).is_some() {
                state.dropped += 1;
            }
            Ok(None)
        }
        Event::Completion { time } => {
            let done = state.complete(time)?;
            let waiting = state.buffer.take();
            if let Some(gen) = waiting {
                state.start(gen, time, draw);
            }
            Ok(Some(Delivery {
                gen_time: done.packet.gen_time,
                service_start: done.started,
                delivered_at: time,
                left_empty: waiting.is_none(),
            }))
        }
    }
}
