//! The full oracle suite: every closed form against an independent route.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    closed_form_pi_one, cross_moment_by_summation, effective_rate_from_chain, lemma_checks, mgf_moments,
    psi_total, steady_state, build_uniformized_chain, success_prob_quadrature, system_time_by_summation,
};
use crate::analytic::{
    self, avg_age_nopreempt, deterministic_ages, heavy_traffic_age_nopreempt, mgf_busy_period_preempt,
    mgf_interdeparture_preempt, psi_prob, success_prob, AnalyticReport, Scheme, SystemParams,
};
use crate::dist::ServiceDistribution;
use crate::error::AnalyticError;
use crate::rng::derive_seed;
use crate::sim::{self, SimConfig};
use crate::stats::{correlation, correlation_z, ks_test, mean_estimate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Tolerance {
    Relative(f64),
    Absolute(f64),
    /// Pass when `|observed - expected| <= n * stderr`.
    StdErrs(f64),
    /// Pass when the KS p-value is at least alpha.
    Alpha(f64),
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Relative(t) => write!(f, "rel {t:e}"),
            Tolerance::Absolute(t) => write!(f, "abs {t:e}"),
            Tolerance::StdErrs(n) => write!(f, "{n} SE"),
            Tolerance::Alpha(a) => write!(f, "p >= {a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: Tolerance,
    /// Present for statistical checks; for KS rows this holds the p-value.
    pub stderr: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn deterministic(name: impl Into<String>, expected: f64, observed: f64, tolerance: Tolerance) -> Self {
        let err = (observed - expected).abs();
        let passed = match tolerance {
            Tolerance::Relative(t) => err <= t * expected.abs(),
            Tolerance::Absolute(t) => err <= t,
            _ => false,
        };
        Self { name: name.into(), expected, observed, tolerance, stderr: None, passed }
    }

    pub fn statistical(name: impl Into<String>, expected: f64, observed: f64, stderr: f64, n_se: f64) -> Self {
        let passed = (observed - expected).abs() <= n_se * stderr;
        Self {
            name: name.into(),
            expected,
            observed,
            tolerance: Tolerance::StdErrs(n_se),
            stderr: Some(stderr),
            passed,
        }
    }

    fn error_ratio(&self) -> f64 {
        let err = (self.observed - self.expected).abs();
        match self.tolerance {
            Tolerance::Relative(t) => err / (t * self.expected.abs()),
            Tolerance::Absolute(t) => err / t,
            _ => f64::INFINITY,
        }
    }
}

/// Non-preemptive average-age formula under test. Swappable so a broken
/// formula can be shown to trip the suite.
pub type AgeFormula = fn(&SystemParams) -> Result<f64, AnalyticError>;

type BoxError = Box<dyn std::error::Error + Send + Sync>;
type GridCheck = fn(AgeFormula) -> Result<Check, BoxError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Smaller samples, 4 SE instead of 3 on simulation checks.
    pub quick: bool,
    pub seed: u64,
}

impl SuiteOptions {
    fn mc_samples(&self) -> usize {
        if self.quick { 100_000 } else { 1_000_000 }
    }

    fn horizon(&self) -> u64 {
        if self.quick { 200_000 } else { 2_000_000 }
    }

    fn sim_se(&self) -> f64 {
        if self.quick { 4.0 } else { 3.0 }
    }
}

pub const MC_Z_LIMIT: f64 = 5.0;
pub const KS_ALPHA: f64 = 0.01;

const LAMBDAS: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];

fn grid(max_k: u32) -> impl Iterator<Item = (f64, f64, f64)> {
    (1..=max_k).flat_map(|k| LAMBDAS.iter().map(move |&l| (k as f64, 1.0 / k as f64, l)))
}

/// Keeps the grid point with the largest error relative to tolerance.
fn worst<I>(name: &str, tolerance: Tolerance, points: I) -> Result<Check, BoxError>
where
    I: IntoIterator<Item = Result<(String, f64, f64), BoxError>>,
{
    let mut out: Option<Check> = None;
    for p in points {
        let (label, expected, observed) = p?;
        let c = Check::deterministic(format!("{name} [{label}]"), expected, observed, tolerance);
        let replace = match &out {
            None => true,
            Some(prev) => c.error_ratio().is_nan() || c.error_ratio() > prev.error_ratio(),
        };
        if replace {
            out = Some(c);
        }
    }
    Ok(out.expect("non-empty grid"))
}

fn label(k: f64, theta: f64, lambda: f64) -> String {
    format!("k={k} theta={theta:.4} lambda={lambda}")
}

fn failed(name: &str, err: impl fmt::Display) -> Check {
    Check {
        name: format!("{name}: {err}"),
        expected: f64::NAN,
        observed: f64::NAN,
        tolerance: Tolerance::Absolute(0.0),
        stderr: None,
        passed: false,
    }
}

pub fn run(opts: &SuiteOptions) -> Vec<Check> {
    run_with(opts, avg_age_nopreempt)
}

pub fn run_with(opts: &SuiteOptions, age_np: AgeFormula) -> Vec<Check> {
    let mut out = Vec::new();
    let closed: [(&str, GridCheck); 8] = [
        ("identities", identity_age),
        ("peak identity", identity_peak),
        ("psi partition", psi_partition),
        ("summation", summation_cross),
        ("summation", summation_system_time),
        ("chain + summation", chain_summation_age),
        ("deterministic limit", deterministic_limit),
        ("heavy traffic", heavy_traffic),
    ];
    for (name, f) in closed {
        out.push(f(age_np).unwrap_or_else(|e| failed(name, e)));
    }
    out.extend(chain_checks().unwrap_or_else(|e| vec![failed("chain", e)]));
    out.push(quadrature_check().unwrap_or_else(|e| failed("quadrature", e)));
    out.extend(mgf_checks().unwrap_or_else(|e| vec![failed("finite differences", e)]));
    out.extend(lemma_rows(opts));
    out.extend(simulation_rows(opts, age_np));
    out
}

fn age_of(p: &SystemParams, age_np: AgeFormula) -> Result<f64, AnalyticError> {
    match p.scheme {
        Scheme::LcfsPreempt => analytic::avg_age_preempt(p),
        Scheme::LcfsNoPreempt => age_np(p),
    }
}

fn both_schemes() -> impl Iterator<Item = (Scheme, f64, f64, f64)> {
    Scheme::ALL.into_iter().flat_map(|s| grid(10).map(move |(k, t, l)| (s, k, t, l)))
}

fn identity_age(age_np: AgeFormula) -> Result<Check, BoxError> {
    worst(
        "avg age = lambda_e E(Q)",
        Tolerance::Relative(1e-12),
        both_schemes().map(|(s, k, t, l)| {
            let p = SystemParams::gamma(l, k, t, s)?;
            let r = analytic::report(&p)?;
            Ok((format!("{s} {}", label(k, t, l)), r.effective_rate * r.mean_area, age_of(&p, age_np)?))
        }),
    )
}

fn identity_peak(_: AgeFormula) -> Result<Check, BoxError> {
    worst(
        "avg peak = E(T) + E(Y)",
        Tolerance::Relative(1e-12),
        both_schemes().map(|(s, k, t, l)| {
            let p = SystemParams::gamma(l, k, t, s)?;
            let r: AnalyticReport = analytic::report(&p)?;
            Ok((format!("{s} {}", label(k, t, l)), r.mean_system_time + r.mean_interdeparture, r.avg_peak_age))
        }),
    )
}

fn np_grid(max_k: u32) -> impl Iterator<Item = Result<(String, SystemParams), BoxError>> {
    grid(max_k).map(|(k, t, l)| Ok((label(k, t, l), SystemParams::gamma(l, k, t, Scheme::LcfsNoPreempt)?)))
}

fn psi_partition(_: AgeFormula) -> Result<Check, BoxError> {
    worst(
        "sum of P(Psi_j) = 1",
        Tolerance::Absolute(1e-12),
        np_grid(20).map(|r| {
            let (name, p) = r?;
            Ok((name, 1.0, psi_total(&p)?))
        }),
    )
}

fn summation_cross(_: AgeFormula) -> Result<Check, BoxError> {
    worst(
        "E(TY) by conditional sums",
        Tolerance::Relative(1e-10),
        np_grid(10).map(|r| {
            let (name, p) = r?;
            Ok((name, analytic::nopreempt_moments(&p)?.cross_moment, cross_moment_by_summation(&p)?))
        }),
    )
}

fn summation_system_time(_: AgeFormula) -> Result<Check, BoxError> {
    worst(
        "E(T) by conditional sums",
        Tolerance::Relative(1e-10),
        np_grid(10).map(|r| {
            let (name, p) = r?;
            Ok((name, analytic::nopreempt_moments(&p)?.mean_system_time, system_time_by_summation(&p)?))
        }),
    )
}

/// `E(Y^2)` from the conditional pieces: after `Psi_0` the next delivery
/// waits for an arrival, otherwise it is one bare service.
fn second_moment_by_parts(p: &SystemParams) -> Result<f64, AnalyticError> {
    let (k, theta) = p.service.gamma_params().ok_or(AnalyticError::DeterministicService)?;
    let l = p.lambda;
    let s2 = k * (k + 1.0) * theta * theta;
    let with_wait = 2.0 / (l * l) + 2.0 * k * theta / l + s2;
    let p0 = psi_prob(0, p)?;
    Ok(p0 * with_wait + (1.0 - p0) * s2)
}

fn chain_summation_age(age_np: AgeFormula) -> Result<Check, BoxError> {
    worst(
        "nopreempt avg age vs chain lambda_e * summed E(Q)",
        Tolerance::Relative(1e-10),
        grid(10).map(|(k, t, l)| {
            let p = SystemParams::gamma(l, k, t, Scheme::LcfsNoPreempt)?;
            let rate = effective_rate_from_chain(k, l, t)?;
            let area = cross_moment_by_summation(&p)? + second_moment_by_parts(&p)? / 2.0;
            Ok((label(k, t, l), rate * area, age_np(&p)?))
        }),
    )
}

fn deterministic_limit(_: AgeFormula) -> Result<Check, BoxError> {
    worst(
        "preempt avg age at k=1000 vs e^lambda/lambda",
        Tolerance::Relative(1e-3),
        [0.5, 1.0].into_iter().map(|l| {
            let p = SystemParams::gamma(l, 1000.0, 1e-3, Scheme::LcfsPreempt)?;
            Ok((format!("lambda={l}"), deterministic_ages(l, 1.0)?.age_preempt, analytic::avg_age_preempt(&p)?))
        }),
    )
}

fn heavy_traffic(age_np: AgeFormula) -> Result<Check, BoxError> {
    worst(
        "nopreempt avg age at lambda=1000 vs heavy-traffic limit",
        Tolerance::Relative(1e-2),
        [1.0, 2.0, 3.0].into_iter().map(|k| {
            let t = 1.0 / k;
            let p = SystemParams::gamma(1e3, k, t, Scheme::LcfsNoPreempt)?;
            Ok((format!("k={k}"), heavy_traffic_age_nopreempt(k, t), age_np(&p)?))
        }),
    )
}

fn chain_checks() -> Result<Vec<Check>, BoxError> {
    let mut pi = Vec::new();
    let mut rate = Vec::new();
    let mut residual = 0.0f64;
    for (k, t, l) in grid(20) {
        let m = build_uniformized_chain(k, l, t)?;
        let ss = steady_state(&m)?;
        residual = residual.max(ss.residual);
        let name = label(k, t, l);
        pi.push(Ok((name.clone(), closed_form_pi_one(k, l, t), ss.pi[m.phase(1)])));
        let p = SystemParams::gamma(l, k, t, Scheme::LcfsNoPreempt)?;
        rate.push(Ok((name, analytic::effective_rate_nopreempt(&p)?, (l + 1.0 / t) * ss.pi[m.phase(1)])));
    }
    Ok(vec![
        Check::deterministic("chain residual |pi M - pi|", 0.0, residual, Tolerance::Absolute(1e-12)),
        worst("chain pi_1 vs closed form", Tolerance::Absolute(1e-10), pi)?,
        worst("chain (lambda + 1/theta) pi_1 vs lambda_e", Tolerance::Relative(1e-10), rate)?,
    ])
}

fn quadrature_check() -> Result<Check, BoxError> {
    let extra = [(1.5, 0.5, 1.0), (2.5, 0.4, 3.0), (7.3, 0.1, 0.7)];
    worst(
        "P(S < X) by quadrature",
        Tolerance::Absolute(1e-9),
        grid(10).chain(extra).map(|(k, t, l)| {
            let p = SystemParams::gamma(l, k, t, Scheme::LcfsPreempt)?;
            let quad = success_prob_quadrature(k, t, l)?;
            Ok((label(k, t, l), success_prob(&p)?, quad))
        }),
    )
}

fn mgf_checks() -> Result<Vec<Check>, BoxError> {
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut busy = Vec::new();
    for &(k, t, l) in &[(1.0, 1.0, 1.0), (2.0, 0.5, 1.0), (3.0, 1.0 / 3.0, 5.0), (2.5, 0.4, 0.5)] {
        let p = SystemParams::gamma(l, k, t, Scheme::LcfsPreempt)?;
        let (ey, ey2) = analytic::interdeparture_moments_preempt(&p)?;
        let step = 1e-2 * l;
        let y = mgf_moments(|s| mgf_interdeparture_preempt(s, &p).ok(), step)?;
        let w = mgf_moments(|s| mgf_busy_period_preempt(s, &p).ok(), step)?;
        let name = label(k, t, l);
        first.push(Ok((name.clone(), ey, y.first)));
        second.push(Ok((name.clone(), ey2, y.second)));
        busy.push(Ok((name, ey - 1.0 / l, w.first)));
    }
    Ok(vec![
        worst("E(Y) by MGF differences", Tolerance::Relative(1e-4), first)?,
        worst("E(Y^2) by MGF differences", Tolerance::Relative(1e-4), second)?,
        worst("E(W) = E(Y) - 1/lambda by MGF differences", Tolerance::Relative(1e-4), busy)?,
    ])
}

fn lemma_rows(opts: &SuiteOptions) -> Vec<Check> {
    let points = [(2.0, 1.0, 1.0), (1.0, 1.0, 1.0)];
    points
        .par_iter()
        .enumerate()
        .map(|(i, &(k, t, l))| {
            let seed = derive_seed(opts.seed, 100 + i as u64);
            let p = match SystemParams::gamma(l, k, t, Scheme::LcfsPreempt) {
                Ok(p) => p,
                Err(e) => return vec![failed("lemma", e)],
            };
            match lemma_checks(&p, opts.mc_samples(), seed) {
                Ok(rep) => rep
                    .checks
                    .into_iter()
                    .map(|c| Check {
                        name: format!("lemma {} [{} seed={seed}]", c.name, label(k, t, l)),
                        expected: c.expected,
                        observed: c.observed,
                        tolerance: Tolerance::StdErrs(MC_Z_LIMIT),
                        stderr: Some(c.stderr),
                        passed: c.z.abs() < MC_Z_LIMIT,
                    })
                    .collect(),
                Err(e) => vec![failed("lemma", e)],
            }
        })
        .flatten()
        .collect()
}

enum SimPoint {
    Full(SystemParams),
    Trace(SystemParams),
}

fn simulation_rows(opts: &SuiteOptions, age_np: AgeFormula) -> Vec<Check> {
    let det = ServiceDistribution::deterministic(1.0).expect("positive");
    let points = [
        SimPoint::Full(SystemParams::gamma(1.0, 1.0, 1.0, Scheme::LcfsPreempt).expect("valid")),
        SimPoint::Full(SystemParams::gamma(5.0, 2.0, 0.5, Scheme::LcfsNoPreempt).expect("valid")),
        SimPoint::Full(SystemParams::gamma(1.0, 1.0, 1.0, Scheme::LcfsNoPreempt).expect("valid")),
        SimPoint::Full(SystemParams::new(1.0, det, Scheme::LcfsNoPreempt).expect("valid")),
        SimPoint::Trace(SystemParams::gamma(1.0, 2.0, 0.5, Scheme::LcfsPreempt).expect("valid")),
    ];
    points
        .par_iter()
        .enumerate()
        .map(|(i, point)| {
            let seed = derive_seed(opts.seed, i as u64);
            match point {
                SimPoint::Full(p) => sim_point(p, seed, opts, age_np),
                SimPoint::Trace(p) => trace_point(p, seed, opts),
            }
            .unwrap_or_else(|e| vec![failed("simulation", e)])
        })
        .flatten()
        .collect()
}

fn sim_label(p: &SystemParams, seed: u64) -> String {
    let service = match p.service {
        ServiceDistribution::Gamma { shape, scale } => format!("k={shape} theta={scale:.4}"),
        ServiceDistribution::Deterministic { value } => format!("det={value}"),
    };
    format!("{} {service} lambda={} seed={seed}", p.scheme, p.lambda)
}

fn sim_point(
    p: &SystemParams,
    seed: u64,
    opts: &SuiteOptions,
    age_np: AgeFormula,
) -> Result<Vec<Check>, BoxError> {
    let r = analytic::report(p)?;
    let expected_age = match p.service {
        ServiceDistribution::Gamma { .. } => age_of(p, age_np)?,
        ServiceDistribution::Deterministic { .. } => r.avg_age,
    };
    let s = sim::run(&SimConfig::new(*p, seed, opts.horizon()))?;
    let tag = sim_label(p, seed);
    let n = opts.sim_se();
    let mut rows = vec![
        Check::statistical(format!("sim avg age [{tag}]"), expected_age, s.avg_age.value, s.avg_age.stderr, n),
        Check::statistical(format!("sim avg peak [{tag}]"), r.avg_peak_age, s.avg_peak.value, s.avg_peak.stderr, n),
        Check::statistical(
            format!("sim lambda_e [{tag}]"),
            r.effective_rate,
            s.effective_rate.value,
            s.effective_rate.stderr,
            n,
        ),
    ];
    if p.scheme == Scheme::LcfsPreempt {
        rows.push(Check::statistical(
            format!("sim drop fraction [{tag}]"),
            1.0 - r.success_prob,
            s.drop_fraction.value,
            s.drop_fraction.stderr,
            n,
        ));
    }
    Ok(rows)
}

fn trace_point(
    p: &SystemParams,
    seed: u64,
    opts: &SuiteOptions,
) -> Result<Vec<Check>, BoxError> {
    let (_, trace) = sim::run_traced(&SimConfig::new(*p, seed, opts.horizon()))?;
    let tag = sim_label(p, seed);
    let l = p.lambda;
    let residual: Vec<f64> = sim::residual_interarrival_samples(&trace.records).iter().map(|r| r.residual).collect();
    let ks = ks_test(&residual, |x| if x <= 0.0 { 0.0 } else { -(-l * x).exp_m1() });
    let m = mean_estimate(&residual);
    let pairs = sim::system_time_interdeparture_pairs(&trace.records);
    let (t, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let r = correlation(&t, &y);
    Ok(vec![
        Check {
            name: format!("residual interarrival KS vs Exp(lambda) [{tag} n={}]", ks.n),
            expected: 0.0,
            observed: ks.statistic,
            tolerance: Tolerance::Alpha(KS_ALPHA),
            stderr: Some(ks.p_value),
            passed: ks.p_value >= KS_ALPHA,
        },
        Check::statistical(format!("residual interarrival mean [{tag}]"), 1.0 / l, m.value, m.stderr, MC_Z_LIMIT),
        Check::statistical(format!("corr(T, Y) z-score [{tag}]"), 0.0, correlation_z(r, t.len()), 1.0, MC_Z_LIMIT),
    ])
}
