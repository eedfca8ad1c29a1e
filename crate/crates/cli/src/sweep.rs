//! Parameter sweeps over a lambda grid, with the figure presets.

use std::fmt;

use aoi_core::rng::derive_seed;
use aoi_core::sim::{self, SimConfig, DEFAULT_BATCHES, DEFAULT_WARMUP};
use aoi_core::{report, AnalyticReport, Scheme, ServiceDistribution, SystemParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::output::{analytic_rows, error_row, sim_rows, Row, Source, CHECKED_METRICS};

/// Shape parameter of the service law: a gamma shape or the deterministic
/// limit. Serialized as a number or the string `"det"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ShapeRepr", into = "ShapeRepr")]
pub enum Shape {
    K(f64),
    Det,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ShapeRepr {
    Num(f64),
    Sym(String),
}

impl TryFrom<ShapeRepr> for Shape {
    type Error = String;

    fn try_from(r: ShapeRepr) -> Result<Self, String> {
        match r {
            ShapeRepr::Num(k) => Ok(Shape::K(k)),
            ShapeRepr::Sym(s) => s.parse(),
        }
    }
}

impl From<Shape> for ShapeRepr {
    fn from(s: Shape) -> Self {
        match s {
            Shape::K(k) => ShapeRepr::Num(k),
            Shape::Det => ShapeRepr::Sym("det".into()),
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "det" {
            return Ok(Shape::Det);
        }
        s.parse::<f64>().map(Shape::K).map_err(|_| format!("invalid shape '{s}' (expected a number or 'det')"))
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::K(k) => write!(f, "{k}"),
            Shape::Det => f.write_str("det"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
    /// Extra points merged into the grid.
    #[serde(default)]
    pub anchors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub enabled: bool,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub batches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub shapes: Vec<Shape>,
    /// `E(S)`; gamma points use `theta = mean_service / k`.
    pub mean_service: f64,
    pub lambda: LambdaGrid,
    pub sim: SimSettings,
}

pub const PRESETS: [&str; 4] = ["fig4", "fig5", "fig6", "fig7"];
pub const DEFAULT_SWEEP_HORIZON: u64 = 200_000;
pub const DEFAULT_SEED: u64 = 1;

pub fn preset(name: &str) -> Option<SweepSpec> {
    let k = |ks: &[f64]| ks.iter().map(|&k| Shape::K(k)).collect::<Vec<_>>();
    let (schemes, shapes) = match name {
        "fig4" => (vec![Scheme::LcfsPreempt], k(&[1.0, 2.0, 3.0, 10.0])),
        "fig5" => (vec![Scheme::LcfsNoPreempt], k(&[1.0, 2.0, 3.0])),
        "fig6" => (Scheme::ALL.to_vec(), k(&[2.0])),
        "fig7" => (Scheme::ALL.to_vec(), vec![Shape::Det]),
        _ => return None,
    };
    Some(SweepSpec {
        schemes,
        shapes,
        mean_service: 1.0,
        lambda: LambdaGrid {
            min: 0.05,
            max: 20.0,
            count: 30,
            spacing: Spacing::Log,
            anchors: vec![1.0, 10.0],
        },
        sim: SimSettings {
            enabled: true,
            horizon: DEFAULT_SWEEP_HORIZON,
            warmup: DEFAULT_WARMUP,
            seed: DEFAULT_SEED,
            batches: DEFAULT_BATCHES,
        },
    })
}

impl LambdaGrid {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.min.is_finite() && self.min > 0.0) {
            return Err(format!("lambda min must be positive, got {}", self.min));
        }
        if self.count == 0 {
            return Err("lambda count must be at least 1".into());
        }
        if self.count > 1 && !(self.max.is_finite() && self.max > self.min) {
            return Err(format!("lambda max ({}) must exceed min ({})", self.max, self.min));
        }
        if let Some(a) = self.anchors.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(format!("lambda anchors must be positive, got {a}"));
        }
        Ok(())
    }

    /// Grid points plus anchors, sorted and deduplicated.
    pub fn points(&self) -> Vec<f64> {
        let n = self.count;
        let mut pts: Vec<f64> = if n == 1 {
            vec![self.min]
        } else {
            (0..n)
                .map(|i| {
                    let f = i as f64 / (n - 1) as f64;
                    if i == 0 {
                        return self.min;
                    }
                    if i == n - 1 {
                        return self.max;
                    }
                    match self.spacing {
                        Spacing::Linear => self.min + (self.max - self.min) * f,
                        Spacing::Log => (self.min.ln() + (self.max / self.min).ln() * f).exp(),
                    }
                })
                .collect()
        };
        pts.extend(&self.anchors);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        pts
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.schemes.is_empty() {
            return Err("at least one scheme is required".into());
        }
        if self.shapes.is_empty() {
            return Err("at least one shape is required".into());
        }
        if !(self.mean_service.is_finite() && self.mean_service > 0.0) {
            return Err(format!("mean service time must be positive, got {}", self.mean_service));
        }
        for shape in &self.shapes {
            if let Shape::K(k) = *shape {
                if !(k.is_finite() && k > 0.0) {
                    return Err(format!("k must be positive, got {k}"));
                }
                if k.fract() != 0.0 && self.schemes.contains(&Scheme::LcfsNoPreempt) {
                    return Err(format!("k must be an integer for nopreempt, got {k}"));
                }
            }
        }
        self.lambda.validate()?;
        if self.sim.enabled {
            let probe = SimConfig {
                params: SystemParams::new(1.0, ServiceDistribution::deterministic(1.0).expect("positive"), Scheme::LcfsPreempt)
                    .expect("valid"),
                seed: self.sim.seed,
                horizon: self.sim.horizon,
                warmup: self.sim.warmup,
                batches: self.sim.batches,
            };
            probe.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    fn service(&self, shape: Shape) -> Result<ServiceDistribution, String> {
        match shape {
            Shape::K(k) => ServiceDistribution::gamma_with_mean(k, self.mean_service),
            Shape::Det => ServiceDistribution::deterministic(self.mean_service),
        }
        .map_err(|e| e.to_string())
    }

    /// Every grid point in output order.
    pub fn points(&self) -> Result<Vec<SystemParams>, String> {
        let lambdas = self.lambda.points();
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            for &shape in &self.shapes {
                let service = self.service(shape)?;
                for &l in &lambdas {
                    out.push(SystemParams::new(l, service, scheme).map_err(|e| e.to_string())?);
                }
            }
        }
        Ok(out)
    }
}

pub struct SweepOutcome {
    pub rows: Vec<Row>,
    pub failures: Vec<String>,
    /// Simulated points left out of `--check` for lack of deliveries.
    pub unchecked: Vec<String>,
}

/// Warmup for one point: the configured value, capped at a tenth of the
/// deliveries the run is expected to produce so heavily dropping systems
/// still open a window.
fn point_warmup(spec: &SweepSpec, p: &SystemParams, analytic: Option<&AnalyticReport>) -> u64 {
    match analytic {
        Some(r) => {
            let expected = spec.sim.horizon as f64 * r.effective_rate / p.lambda;
            spec.sim.warmup.min((expected / 10.0) as u64)
        }
        None => spec.sim.warmup,
    }
}

/// Evaluates every point in parallel; rows come back in point order with
/// the analytic rows of a point ahead of its simulated rows.
pub fn execute(spec: &SweepSpec, analytic_only: bool, check: bool) -> Result<SweepOutcome, String> {
    let points = spec.points()?;
    let simulate = spec.sim.enabled && !analytic_only;
    let per_point: Vec<(Vec<Row>, Vec<String>, Vec<String>)> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rows = Vec::new();
            let mut failures = Vec::new();
            let mut unchecked = Vec::new();
            let analytic = report(p);
            match &analytic {
                Ok(r) => rows.extend(analytic_rows(p, r)),
                Err(e) => {
                    failures.push(format!("{}: analytic: {e}", describe(p)));
                    rows.push(error_row(p, Source::Analytic));
                }
            }
            if simulate {
                let cfg = SimConfig {
                    params: *p,
                    seed: derive_seed(spec.sim.seed, i as u64),
                    horizon: spec.sim.horizon,
                    warmup: point_warmup(spec, p, analytic.as_ref().ok()),
                    batches: spec.sim.batches,
                };
                match sim::run(&cfg) {
                    Ok(s) => {
                        let sim = sim_rows(p, &s);
                        match (&analytic, check) {
                            (Ok(r), true) if s.reliable => failures.extend(compare(p, &analytic_rows(p, r), &sim)),
                            (Ok(_), true) => {
                                unchecked.push(format!("{}: {} deliveries in window", describe(p), s.n_delivered))
                            }
                            _ => {}
                        }
                        rows.extend(sim);
                    }
                    Err(e) => {
                        failures.push(format!("{}: sim: {e}", describe(p)));
                        rows.push(error_row(p, Source::Sim));
                    }
                }
            }
            (rows, failures, unchecked)
        })
        .collect();
    let mut outcome = SweepOutcome { rows: Vec::new(), failures: Vec::new(), unchecked: Vec::new() };
    for (rows, failures, unchecked) in per_point {
        outcome.rows.extend(rows);
        outcome.failures.extend(failures);
        outcome.unchecked.extend(unchecked);
    }
    Ok(outcome)
}

/// Number of standard errors `sweep --check` allows.
pub const CHECK_SE: f64 = 3.0;

fn compare(p: &SystemParams, analytic: &[Row], sim: &[Row]) -> Vec<String> {
    let mut out = Vec::new();
    for metric in CHECKED_METRICS {
        let find = |rows: &[Row]| rows.iter().find(|r| r.metric == metric).cloned();
        let (Some(a), Some(s)) = (find(analytic), find(sim)) else { continue };
        let (Some(expected), Some(observed)) = (a.value, s.value) else { continue };
        let ok = match s.stderr {
            Some(se) => (observed - expected).abs() <= CHECK_SE * se,
            None => false,
        };
        if !ok {
            out.push(format!(
                "{}: {metric} sim {observed} vs analytic {expected} (se {:?})",
                describe(p),
                s.stderr
            ));
        }
    }
    out
}

fn describe(p: &SystemParams) -> String {
    let service = match p.service {
        ServiceDistribution::Gamma { shape, scale } => format!("k={shape} theta={scale}"),
        ServiceDistribution::Deterministic { value } => format!("det={value}"),
    };
    format!("{} {service} lambda={}", p.scheme, p.lambda)
}
