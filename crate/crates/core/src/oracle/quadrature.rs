//! Adaptive Gauss–Kronrod (7/15) quadrature.

use crate::dist::ServiceDistribution;
use crate::error::OracleError;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive
/// bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, OracleError> {
    let mut total = 0.0;
    let mut err_total = 0.0;
    // Work list of (a, b, estimate, error, depth).
    let (v, e) = gk15(&f, a, b);
    let mut stack = vec![(a, b, v, e, 0u32)];
    while let Some((lo, hi, v, e, depth)) = stack.pop() {
        let width_share = tol * (hi - lo) / (b - a);
        if e <= width_share.max(f64::EPSILON * v.abs()) || depth >= 48 {
            if depth >= 48 && e > width_share {
                err_total += e;
            }
            total += v;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        stack.push((lo, mid, v1, e1, depth + 1));
        stack.push((mid, hi, v2, e2, depth + 1));
    }
    if err_total > tol {
        return Err(OracleError::Quadrature { estimate: err_total });
    }
    Ok(total)
}

/// Integrates over `[0, inf)` through `s = c u/(1-u)`, `u in [0, 1)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, scale: f64, tol: f64) -> Result<f64, OracleError> {
    let g = |u: f64| {
        if u >= 1.0 {
            return 0.0;
        }
        let one_minus = 1.0 - u;
        let s = scale * u / one_minus;
        let v = f(s) * scale / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// `P(S < X) = integral of f_S(s) e^(-lambda s) ds`, evaluated numerically.
pub fn success_prob_quadrature(k: f64, theta: f64, lambda: f64) -> Result<f64, OracleError> {
    let dist = ServiceDistribution::gamma(k, theta).map_err(crate::error::AnalyticError::from)?;
    let f = |s: f64| dist.pdf(s).unwrap_or(0.0) * (-lambda * s).exp();
    integrate_half_line(f, k * theta, 1e-11)
}
