//! Monte-Carlo checks of the two clock-race lemmas: a gamma clock `G`
//! against an independent exponential clock `F` of rate `lambda`.

use rand::Rng;
use rand_distr::Exp;
use serde::Serialize;

use crate::analytic::{mgf_conditioned_arrival, SystemParams};
use crate::dist::conditional_success_dist;
use crate::error::{AnalyticError, OracleError};
use crate::rng;
use crate::stats::{mean_estimate, variance_estimate};

pub const MIN_ACCEPTED: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZCheck {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub stderr: f64,
    pub z: f64,
}

impl ZCheck {
    fn new(name: impl Into<String>, expected: f64, observed: f64, stderr: f64) -> Self {
        let z = if stderr > 0.0 {
            (observed - expected) / stderr
        } else if observed == expected {
            0.0
        } else {
            f64::INFINITY
        };
        Self { name: name.into(), expected, observed, stderr, z }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub seed: u64,
    pub n_samples: usize,
    pub accepted_service: usize,
    pub accepted_arrival: usize,
    pub checks: Vec<ZCheck>,
}

impl LemmaReport {
    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z.abs()).fold(0.0, f64::max)
    }
}

/// Draws `n_samples` independent `(G, F)` pairs.
///
/// On `{G < F}` the sample mean and variance of `G` are compared with the
/// moments of `Gamma(k, theta/(1 + lambda*theta))`. On `{F < G}` the empirical
/// `E[exp(sF)]` is compared with the conditioned-arrival MGF at
/// `s in {0, +-0.1 lambda, +-0.25 lambda}`.
pub fn lemma_checks(params: &SystemParams, n_samples: usize, seed: u64) -> Result<LemmaReport, OracleError> {
    let (k, theta) = params.service.gamma_params().ok_or(AnalyticError::DeterministicService)?;
    params.validate()?;
    let lambda = params.lambda;
    let mut r = rng::stream(seed);
    let clock = Exp::new(lambda).map_err(|_| AnalyticError::NonPositiveRate(lambda))?;

    let mut served = Vec::new();
    let mut raced = Vec::new();
    for _ in 0..n_samples {
        let g = params.service.sample(&mut r);
        let f: f64 = r.sample(clock);
        if g < f {
            served.push(g);
        } else {
            raced.push(f);
        }
    }
    for accepted in [served.len(), raced.len()] {
        if accepted < MIN_ACCEPTED {
            return Err(OracleError::InsufficientSamples { accepted, required: MIN_ACCEPTED });
        }
    }

    let target = conditional_success_dist(k, theta, lambda).map_err(AnalyticError::from)?;
    let mut checks = Vec::new();
    let m = mean_estimate(&served);
    checks.push(ZCheck::new("service | served: mean", target.mean(), m.value, m.stderr));
    let v = variance_estimate(&served);
    checks.push(ZCheck::new("service | served: variance", target.variance(), v.value, v.stderr));

    for frac in [0.0, -0.25, -0.1, 0.1, 0.25] {
        let s = frac * lambda;
        let expected = mgf_conditioned_arrival(s, params)?;
        let values: Vec<f64> = raced.iter().map(|f| (s * f).exp()).collect();
        let e = mean_estimate(&values);
        checks.push(ZCheck::new(
            format!("arrival | preempted: mgf at s={frac}*lambda"),
            expected,
            e.value,
            e.stderr,
        ));
    }

    Ok(LemmaReport {
        seed,
        n_samples,
        accepted_service: served.len(),
        accepted_arrival: raced.len(),
        checks,
    })
}
