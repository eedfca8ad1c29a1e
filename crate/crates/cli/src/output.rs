use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use aoi_core::{AnalyticReport, Estimate, ServiceDistribution, SimReport, SystemParams};

pub const HEADER: [&str; 9] = ["scheme", "k", "theta", "lambda", "metric", "value", "stderr", "source", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    Analytic,
    Sim,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Sim => "sim",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub params: SystemParams,
    pub metric: &'static str,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
    pub source: Source,
    pub seed: Option<u64>,
}

/// Formats like C's `%.9g`.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn shape_columns(service: &ServiceDistribution) -> (String, String) {
    match *service {
        ServiceDistribution::Gamma { shape, scale } => (sig9(shape), sig9(scale)),
        ServiceDistribution::Deterministic { value } => ("det".into(), sig9(value)),
    }
}

impl Row {
    fn record(&self) -> [String; 9] {
        let (k, theta) = shape_columns(&self.params.service);
        [
            self.params.scheme.as_str().into(),
            k,
            theta,
            sig9(self.params.lambda),
            self.metric.into(),
            self.value.map(sig9).unwrap_or_default(),
            self.stderr.map(sig9).unwrap_or_default(),
            self.source.as_str().into(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

pub fn analytic_rows(params: &SystemParams, r: &AnalyticReport) -> Vec<Row> {
    let mut metrics = vec![
        ("avg_age", r.avg_age),
        ("avg_peak_age", r.avg_peak_age),
        ("effective_rate", r.effective_rate),
        ("success_prob", r.success_prob),
        ("drop_fraction", r.drop_fraction(params.lambda)),
        ("mean_system_time", r.mean_system_time),
        ("mean_interdeparture", r.mean_interdeparture),
        ("second_moment_interdeparture", r.second_moment_interdeparture),
        ("mean_area", r.mean_area),
    ];
    if let Some(c) = r.cross_moment {
        metrics.push(("cross_moment", c));
    }
    metrics
        .into_iter()
        .map(|(metric, v)| Row {
            params: *params,
            metric,
            value: Some(v),
            stderr: None,
            source: Source::Analytic,
            seed: None,
        })
        .collect()
}

/// Metrics both sources report, compared by `sweep --check`.
pub const CHECKED_METRICS: [&str; 4] = ["avg_age", "avg_peak_age", "effective_rate", "drop_fraction"];

pub fn sim_rows(params: &SystemParams, s: &SimReport) -> Vec<Row> {
    let est = |metric, e: &Estimate| Row {
        params: *params,
        metric,
        value: Some(e.value).filter(|v| v.is_finite()),
        stderr: Some(e.stderr).filter(|v| v.is_finite()),
        source: Source::Sim,
        seed: Some(s.seed),
    };
    let count = |metric, n: u64| Row {
        params: *params,
        metric,
        value: Some(n as f64),
        stderr: None,
        source: Source::Sim,
        seed: Some(s.seed),
    };
    vec![
        est("avg_age", &s.avg_age),
        est("avg_peak_age", &s.avg_peak),
        est("effective_rate", &s.effective_rate),
        est("drop_fraction", &s.drop_fraction),
        est("mean_system_time", &s.mean_system_time),
        est("mean_interdeparture", &s.mean_interdeparture),
        est("second_moment_interdeparture", &s.second_moment_interdeparture),
        count("n_generated", s.n_generated),
        count("n_delivered", s.n_delivered),
    ]
}

pub fn error_row(params: &SystemParams, source: Source) -> Row {
    Row { params: *params, metric: "error", value: None, stderr: None, source, seed: None }
}

pub fn open_sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_rows(sink: Box<dyn Write>, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}
