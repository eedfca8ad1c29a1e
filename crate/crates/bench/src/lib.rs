//! Shared fixtures for the criterion benchmarks.

use aoi_core::{Scheme, SystemParams};

/// `(label, params)` pairs spanning light and heavy load.
pub fn reference_points(scheme: Scheme) -> Vec<(String, SystemParams)> {
    [(1.0, 1.0, 0.5), (2.0, 0.5, 1.0), (10.0, 0.1, 5.0), (100.0, 0.01, 2.0)]
        .into_iter()
        .map(|(k, theta, lambda)| {
            let p = SystemParams::gamma(lambda, k, theta, scheme).expect("valid parameters");
            (format!("k={k}/lambda={lambda}"), p)
        })
        .collect()
}
