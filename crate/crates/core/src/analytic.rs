//! Closed-form age metrics for LCFS status-update queues fed by a Poisson
//! source, with gamma (any real shape) or Erlang service.
//!
//! Notation used throughout: arrival rate `lambda`, service `Gamma(k, theta)`,
//! `a = 1 + lambda*theta` and `q = 1/a`. Powers of `a` are formed as
//! `exp(n * ln_1p(lambda*theta))` so shapes in the thousands neither overflow
//! nor lose precision.
//!
//! The preemptive formulas accept any real `k > 0`. The non-preemptive ones
//! are derived from the phase-type (Erlang) representation of the service time
//! and reject non-integer `k` with [`AnalyticError::NonIntegerShape`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::ServiceDistribution;
use crate::error::AnalyticError;

/// Packet management discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    /// A new arrival evicts the packet in service.
    #[serde(rename = "preempt")]
    LcfsPreempt,
    /// Service runs to completion; a size-1 buffer keeps the newest arrival.
    #[serde(rename = "nopreempt")]
    LcfsNoPreempt,
}

impl Scheme {
    pub const ALL: [Scheme; 2] = [Scheme::LcfsPreempt, Scheme::LcfsNoPreempt];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::LcfsPreempt => "preempt",
            Scheme::LcfsNoPreempt => "nopreempt",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "preempt" => Ok(Scheme::LcfsPreempt),
            "nopreempt" => Ok(Scheme::LcfsNoPreempt),
            other => Err(format!("unknown scheme '{other}' (expected preempt or nopreempt)")),
        }
    }
}

/// Arrival rate, service law and discipline of one queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub lambda: f64,
    pub service: ServiceDistribution,
    pub scheme: Scheme,
}

impl SystemParams {
    pub fn new(lambda: f64, service: ServiceDistribution, scheme: Scheme) -> Result<Self, AnalyticError> {
        let params = Self { lambda, service, scheme };
        params.validate()?;
        Ok(params)
    }

    pub fn gamma(lambda: f64, k: f64, theta: f64, scheme: Scheme) -> Result<Self, AnalyticError> {
        Self::new(lambda, ServiceDistribution::gamma(k, theta)?, scheme)
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        if self.lambda.is_finite() && self.lambda > 0.0 {
            Ok(())
        } else {
            Err(AnalyticError::NonPositiveRate(self.lambda))
        }
    }

    /// `q = 1/(1 + lambda*theta)`; `None` for deterministic service.
    pub fn q(&self) -> Option<f64> {
        self.service.gamma_params().map(|(_, theta)| 1.0 / (1.0 + self.lambda * theta))
    }

    /// Offered load `lambda * E(S)` (`rho = lambda/mu` for deterministic service).
    pub fn rho(&self) -> f64 {
        self.lambda * self.service.mean()
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }
}

/// Stationary quantities of one system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticReport {
    pub avg_age: f64,
    pub avg_peak_age: f64,
    pub effective_rate: f64,
    /// `P(S < X)`: service beats the next arrival.
    pub success_prob: f64,
    pub mean_system_time: f64,
    pub mean_interdeparture: f64,
    pub second_moment_interdeparture: f64,
    pub mean_area: f64,
    /// `E(TY)`; reported for the non-preemptive scheme only.
    pub cross_moment: Option<f64>,
}

impl AnalyticReport {
    /// Long-run fraction of generated packets that never reach the monitor.
    pub fn drop_fraction(&self, lambda: f64) -> f64 {
        1.0 - self.effective_rate / lambda
    }
}

#[derive(Debug, Clone, Copy)]
struct GammaView {
    lambda: f64,
    k: f64,
    theta: f64,
}

impl GammaView {
    fn of(params: &SystemParams) -> Result<Self, AnalyticError> {
        params.validate()?;
        let (k, theta) = params
            .service
            .gamma_params()
            .ok_or(AnalyticError::DeterministicService)?;
        Ok(Self { lambda: params.lambda, k, theta })
    }

    fn erlang(params: &SystemParams) -> Result<(Self, u64), AnalyticError> {
        let g = Self::of(params)?;
        if g.k.fract() != 0.0 {
            return Err(AnalyticError::NonIntegerShape(g.k));
        }
        Ok((g, g.k as u64))
    }

    fn lt(&self) -> f64 {
        self.lambda * self.theta
    }

    /// `(1 + lambda*theta)^n`
    fn a_pow(&self, n: f64) -> f64 {
        (n * self.lt().ln_1p()).exp()
    }

    /// `q^n = (1 + lambda*theta)^(-n)`
    fn q_pow(&self, n: f64) -> f64 {
        (-n * self.lt().ln_1p()).exp()
    }
}

/// `p = P(S < X) = (1 + lambda*theta)^(-k)`.
pub fn success_prob(params: &SystemParams) -> Result<f64, AnalyticError> {
    let g = GammaView::of(params)?;
    Ok(g.q_pow(g.k))
}

/// `E(T) = k*theta / (1 + lambda*theta)`: system time of a delivered packet
/// under preemption is `Gamma(k, theta/(1+lambda*theta))`.
pub fn mean_system_time_preempt(params: &SystemParams) -> Result<f64, AnalyticError> {
    let g = GammaView::of(params)?;
    Ok(g.k * g.theta / (1.0 + g.lt()))
}

/// MGF of an interarrival time conditioned on beating the service clock.
/// Defined for `s < lambda`.
pub fn mgf_conditioned_arrival(s: f64, params: &SystemParams) -> Result<f64, AnalyticError> {
    let g = GammaView::of(params)?;
    if s.is_nan() || s >= g.lambda {
        return Err(AnalyticError::OutOfDomain { s, bound: g.lambda });
    }
    let p = g.q_pow(g.k);
    let ratio = g.lambda / (g.lambda - s);
    let tail = (-g.k * (g.theta * (g.lambda - s)).ln_1p()).exp();
    Ok(ratio * (1.0 - tail) / (1.0 - p))
}

fn interdeparture_denominator(g: &GammaView, s: f64) -> f64 {
    g.lambda - s * (g.k * (g.theta * (g.lambda - s)).ln_1p()).exp()
}

/// Smallest positive root of `lambda = s (1 + theta(lambda - s))^k`, the pole
/// of the preemptive interdeparture MGF.
pub fn interdeparture_mgf_pole(params: &SystemParams) -> Result<f64, AnalyticError> {
    let g = GammaView::of(params)?;
    // `s = lambda` is always a root; look for an earlier sign change.
    const SCAN: usize = 4096;
    let f = |s: f64| interdeparture_denominator(&g, s);
    let mut prev = 0.0;
    for i in 1..SCAN {
        let s = g.lambda * i as f64 / SCAN as f64;
        if f(s) <= 0.0 {
            let (mut lo, mut hi) = (prev, s);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= f64::EPSILON * hi {
                    break;
                }
            }
            return Ok(lo);
        }
        prev = s;
    }
    Ok(g.lambda)
}

fn check_pole(s: f64, params: &SystemParams) -> Result<GammaView, AnalyticError> {
    let g = GammaView::of(params)?;
    if s <= 0.0 {
        return Ok(g);
    }
    let bound = interdeparture_mgf_pole(params)?;
    if s < bound {
        Ok(g)
    } else {
        Err(AnalyticError::OutOfDomain { s, bound })
    }
}

/// `Phi_Y(s) = lambda / (lambda - s (1 + theta(lambda - s))^k)`, preemptive
/// interdeparture time.
pub fn mgf_interdeparture_preempt(s: f64, params: &SystemParams) -> Result<f64, AnalyticError> {
    let g = check_pole(s, params)?;
    Ok(g.lambda / interdeparture_denominator(&g, s))
}

/// `Phi_W(s) = (lambda - s) / (lambda - s (1 + theta(lambda - s))^k)`, the time
/// `W` spent busy between leaving the empty state and the next delivery
/// (`Y = X + W`). `W` is a geometric number of preempted attempts followed by
/// one successful service.
pub fn mgf_busy_period_preempt(s: f64, params: &SystemParams) -> Result<f64, AnalyticError> {
    let g = check_pole(s, params)?;
    Ok((g.lambda - s) / interdeparture_denominator(&g, s))
}

/// `(E(Y), E(Y^2))` for the preemptive scheme.
pub fn interdeparture_moments_preempt(params: &SystemParams) -> Result<(f64, f64), AnalyticError> {
    let g = GammaView::of(params)?;
    let l = g.lambda;
    let mean = g.a_pow(g.k) / l;
    let second = 2.0 * g.a_pow(g.k - 1.0) / (l * l) * (g.a_pow(g.k + 1.0) - g.k * g.lt());
    Ok((mean, second))
}

/// Full stationary report for the preemptive scheme.
pub fn preempt_report(params: &SystemParams) -> Result<AnalyticReport, AnalyticError> {
    let g = GammaView::of(params)?;
    let p = g.q_pow(g.k);
    let mean_t = mean_system_time_preempt(params)?;
    let (mean_y, second_y) = interdeparture_moments_preempt(params)?;
    // T and Y are independent, so E(Q) = E(T)E(Y) + E(Y^2)/2, which
    // simplifies to (1 + lambda*theta)^(2k) / lambda^2.
    let mean_area = g.a_pow(2.0 * g.k) / (g.lambda * g.lambda);
    let effective_rate = g.lambda * p;
    Ok(AnalyticReport {
        avg_age: avg_age_preempt(params)?,
        avg_peak_age: avg_peak_preempt(params)?,
        effective_rate,
        success_prob: p,
        mean_system_time: mean_t,
        mean_interdeparture: mean_y,
        second_moment_interdeparture: second_y,
        mean_area,
        cross_moment: None,
    })
}

/// `Delta = (1 + lambda*theta)^k / lambda`.
pub fn avg_age_preempt(params: &SystemParams) -> Result<f64, AnalyticError> {
    let g = GammaView::of(params)?;
    Ok(g.a_pow(g.k) / g.lambda)
}

/// `E(P) = k*theta/(1 + lambda*theta) + (1 + lambda*theta)^k / lambda`.
pub fn avg_peak_preempt(params: &SystemParams) -> Result<f64, AnalyticError> {
    Ok(mean_system_time_preempt(params)? + avg_age_preempt(params)?)
}

/// Probability that the last arrival during a delivered packet's service
/// happened in phase `j` (`j = 0`: no arrival at all, the queue empties).
/// The family `j = 0..=k` partitions the sample space.
pub fn psi_prob(j: usize, params: &SystemParams) -> Result<f64, AnalyticError> {
    let (g, k) = GammaView::erlang(params)?;
    check_index(j, k)?;
    Ok(if j == 0 {
        g.q_pow(g.k)
    } else {
        g.lt() * g.q_pow((k - j as u64 + 1) as f64)
    })
}

fn check_index(index: usize, k: u64) -> Result<(), AnalyticError> {
    if index as u64 > k {
        Err(AnalyticError::IndexOutOfRange { index, k })
    } else {
        Ok(())
    }
}

/// `E(T_{i-1} | Psi_j^{i-1}, Psi_l^{i-2})` for the non-preemptive scheme.
///
/// The waiting time is zero when the previous delivery emptied the queue
/// (`l = 0`), else `Gamma(k-l+1, theta/(1+lambda*theta))`. The service time
/// given `Psi_j` has `j-1` free phases, one phase that saw an arrival, and
/// `k-j` phases that saw none.
pub fn cond_system_time_np(j: usize, l: usize, params: &SystemParams) -> Result<f64, AnalyticError> {
    let (g, k) = GammaView::erlang(params)?;
    check_index(j, k)?;
    check_index(l, k)?;
    let (kf, jf, lf) = (g.k, j as f64, l as f64);
    let a = 1.0 + g.lt();
    let th = g.theta;
    Ok(match (l == 0, j == 0) {
        (true, true) => kf * th / a,
        (true, false) => th * (kf + 1.0 + jf * g.lt()) / a,
        (false, true) => th * (2.0 * kf - lf + 1.0) / a,
        (false, false) => th * (2.0 * kf - lf + 2.0 + jf * g.lt()) / a,
    })
}

/// `E(Y_{i-1} | Psi_j^{i-1})`: an idle gap plus a full service when the queue
/// emptied, else just the next service.
pub fn cond_interdeparture_np(j: usize, params: &SystemParams) -> Result<f64, AnalyticError> {
    let (g, k) = GammaView::erlang(params)?;
    check_index(j, k)?;
    let service = g.k * g.theta;
    Ok(if j == 0 { 1.0 / g.lambda + service } else { service })
}

/// Closed-form moments of the non-preemptive scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoPreemptMoments {
    /// `E(TY)`
    pub cross_moment: f64,
    /// `E(Y^2)`
    pub second_moment_interdeparture: f64,
    /// `E(Q) = E(TY) + E(Y^2)/2`
    pub mean_area: f64,
    /// `E(T)`
    pub mean_system_time: f64,
    /// `E(Y)`
    pub mean_interdeparture: f64,
}

pub fn nopreempt_moments(params: &SystemParams) -> Result<NoPreemptMoments, AnalyticError> {
    let (g, _) = GammaView::erlang(params)?;
    let (l, k, th, lt) = (g.lambda, g.k, g.theta, g.lt());
    let l2 = l * l;
    let qk = g.q_pow(k);
    let qk1 = g.q_pow(k + 1.0);
    let q2k = g.q_pow(2.0 * k);
    let q2k1 = g.q_pow(2.0 * k + 1.0);

    let cross_moment = k * th / l * (1.0 + k * lt) + qk * (1.0 - k * lt * (2.0 * k + 1.0)) / l2
        + qk1 * (k * th * (1.0 + k * lt + 2.0 * k) / l)
        - q2k / l2
        - k * th / l * q2k1;
    let second = k * th * th + k * k * th * th + qk * (2.0 + 2.0 * k * lt) / l2;
    let mean_area = cross_moment + second / 2.0;
    let mean_t = 1.0 / l + k * th - qk1 * (1.0 + lt + k * lt) / l;
    let mean_y = k * th + qk / l;
    Ok(NoPreemptMoments {
        cross_moment,
        second_moment_interdeparture: second,
        mean_area,
        mean_system_time: mean_t,
        mean_interdeparture: mean_y,
    })
}

/// `lambda_e = lambda (1+lambda*theta)^k / (1 + k*lambda*theta (1+lambda*theta)^k)`.
pub fn effective_rate_nopreempt(params: &SystemParams) -> Result<f64, AnalyticError> {
    let (g, _) = GammaView::erlang(params)?;
    let ak = g.a_pow(g.k);
    if ak.is_infinite() {
        return Ok(1.0 / (g.k * g.theta));
    }
    Ok(g.lambda * ak / (1.0 + g.k * g.lt() * ak))
}

/// Four-term closed form for the non-preemptive average age.
pub fn avg_age_nopreempt(params: &SystemParams) -> Result<f64, AnalyticError> {
    let (g, _) = GammaView::erlang(params)?;
    let (l, k, th, lt) = (g.lambda, g.k, g.theta, g.lt());
    let a = 1.0 + lt;
    let qk = g.q_pow(k);
    let ak = g.a_pow(k);
    let ak1 = g.a_pow(k + 1.0);
    let a2k = g.a_pow(2.0 * k);

    let t1 = k * th * (2.0 + lt + 3.0 * k * lt) / (2.0 * (qk + k * lt));
    let t2 = 2.0 * (1.0 - k * k * lt) / (l * (1.0 + k * lt * ak));
    let t3 = k * th * (1.0 + k * lt + 2.0 * k) / (a + k * lt * ak1);
    let t4 = (a + k * lt) / (l * a * (ak + k * lt * a2k));
    Ok(t1 + t2 + t3 - t4)
}

/// The same average age assembled as `lambda_e * E(Q)`.
pub fn avg_age_nopreempt_via_area(params: &SystemParams) -> Result<f64, AnalyticError> {
    Ok(effective_rate_nopreempt(params)? * nopreempt_moments(params)?.mean_area)
}

/// `E(P) = 1/lambda + 2k*theta - k*theta / (1+lambda*theta)^(k+1)`.
pub fn avg_peak_nopreempt(params: &SystemParams) -> Result<f64, AnalyticError> {
    let (g, _) = GammaView::erlang(params)?;
    Ok(1.0 / g.lambda + 2.0 * g.k * g.theta - g.k * g.theta * g.q_pow(g.k + 1.0))
}

/// Full stationary report for the non-preemptive scheme.
pub fn nopreempt_report(params: &SystemParams) -> Result<AnalyticReport, AnalyticError> {
    let m = nopreempt_moments(params)?;
    Ok(AnalyticReport {
        avg_age: avg_age_nopreempt(params)?,
        avg_peak_age: avg_peak_nopreempt(params)?,
        effective_rate: effective_rate_nopreempt(params)?,
        success_prob: success_prob(params)?,
        mean_system_time: m.mean_system_time,
        mean_interdeparture: m.mean_interdeparture,
        second_moment_interdeparture: m.second_moment_interdeparture,
        mean_area: m.mean_area,
        cross_moment: Some(m.cross_moment),
    })
}

/// Limit of the non-preemptive average age as `lambda -> inf`:
/// `E(S) + E(S^2)/(2E(S)) = theta/2 + 3k*theta/2`.
pub fn heavy_traffic_age_nopreempt(k: f64, theta: f64) -> f64 {
    theta / 2.0 + 1.5 * k * theta
}

/// Ages under deterministic service `1/mu`, the `k -> inf` limits of the
/// gamma formulas at fixed mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterministicAges {
    pub age_preempt: f64,
    pub peak_preempt: f64,
    pub age_nopreempt: f64,
    pub peak_nopreempt: f64,
}

pub fn deterministic_ages(lambda: f64, mu: f64) -> Result<DeterministicAges, AnalyticError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(AnalyticError::NonPositiveRate(lambda));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(crate::error::DistError::NonPositive { name: "mu", value: mu }.into());
    }
    let rho = lambda / mu;
    let e = rho.exp();
    let e_neg = (-rho).exp();
    let age_nopreempt = (2.0 * (2.0 + rho - rho * rho) - 2.0 * e_neg * (1.0 + rho) + rho * e * (2.0 + 3.0 * rho))
        / (2.0 * lambda * (1.0 + rho * e));
    Ok(DeterministicAges {
        age_preempt: e / lambda,
        peak_preempt: 1.0 / mu + e / lambda,
        age_nopreempt,
        peak_nopreempt: 1.0 / lambda + (2.0 - e_neg) / mu,
    })
}

/// Full report under deterministic service, every field the `k -> inf`
/// limit of its gamma counterpart.
pub fn deterministic_report(params: &SystemParams) -> Result<AnalyticReport, AnalyticError> {
    params.validate()?;
    let d = match params.service {
        ServiceDistribution::Deterministic { value } => value,
        ServiceDistribution::Gamma { .. } => return Err(AnalyticError::NotDeterministic),
    };
    let l = params.lambda;
    let l2 = l * l;
    let rho = l * d;
    let e = rho.exp();
    let e_neg = (-rho).exp();
    let ages = deterministic_ages(l, 1.0 / d)?;
    Ok(match params.scheme {
        Scheme::LcfsPreempt => AnalyticReport {
            avg_age: ages.age_preempt,
            avg_peak_age: ages.peak_preempt,
            effective_rate: l * e_neg,
            success_prob: e_neg,
            mean_system_time: d,
            mean_interdeparture: e / l,
            second_moment_interdeparture: 2.0 * e * (e - rho) / l2,
            mean_area: e * e / l2,
            cross_moment: None,
        },
        Scheme::LcfsNoPreempt => {
            let cross = d / l * (1.0 + rho) + e_neg * (1.0 - rho) / l2 - 2.0 * rho * rho * e_neg / l2
                + e_neg * d * (1.0 + rho) / l
                - e_neg * e_neg / l2
                - d / l * e_neg * e_neg;
            let second = d * d + e_neg * (2.0 + 2.0 * rho) / l2;
            AnalyticReport {
                avg_age: ages.age_nopreempt,
                avg_peak_age: ages.peak_nopreempt,
                effective_rate: l * e / (1.0 + rho * e),
                success_prob: e_neg,
                mean_system_time: 1.0 / l + d - e_neg * (1.0 + rho) / l,
                mean_interdeparture: d + e_neg / l,
                second_moment_interdeparture: second,
                mean_area: cross + second / 2.0,
                cross_moment: Some(cross),
            }
        }
    })
}

/// Stationary report for any valid system.
pub fn report(params: &SystemParams) -> Result<AnalyticReport, AnalyticError> {
    match (params.service, params.scheme) {
        (ServiceDistribution::Deterministic { .. }, _) => deterministic_report(params),
        (_, Scheme::LcfsPreempt) => preempt_report(params),
        (_, Scheme::LcfsNoPreempt) => nopreempt_report(params),
    }
}
