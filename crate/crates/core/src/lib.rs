//! Age of information for a Poisson source served by a single LCFS server
//! with gamma or deterministic service, with or without preemption.
//!
//! - [`analytic`]: closed-form averages (age, peak age, effective rate, ...).
//! - [`sim`]: seeded discrete-event simulator with batch-means error bars.
//! - [`oracle`]: independent numeric checks of the closed forms.

pub mod analytic;
pub mod dist;
pub mod error;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod stats;

pub use analytic::{report, AnalyticReport, Scheme, SystemParams};
pub use dist::ServiceDistribution;
pub use error::{AnalyticError, DistError, OracleError, SimError};
pub use sim::{SimConfig, SimReport};
pub use stats::Estimate;
