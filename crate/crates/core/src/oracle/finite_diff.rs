//! Raw moments from a moment generating function by central differences
//! with Richardson extrapolation.

use crate::error::OracleError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfMoments {
    pub first: f64,
    pub second: f64,
}

/// Richardson levels; each halves the step.
const LEVELS: usize = 4;

/// `E(X)` and `E(X^2)` as `Phi'(0)` and `Phi''(0)`.
///
/// `step` is the largest step tried and must keep `[-step, step]` inside the
/// MGF's domain. Both central differences have `O(h^2)` error with even
/// powers only, so each extrapolation level removes the next even term.
pub fn mgf_moments<F>(mgf: F, step: f64) -> Result<MgfMoments, OracleError>
where
    F: Fn(f64) -> Option<f64>,
{
    if step.is_nan() || step <= 1e-12 {
        return Err(OracleError::StepUnderflow(step));
    }
    let f0 = mgf(0.0).ok_or(OracleError::StepUnderflow(step))?;
    let mut d1 = [[0.0; LEVELS]; LEVELS];
    let mut d2 = [[0.0; LEVELS]; LEVELS];
    for i in 0..LEVELS {
        let h = step / (1u32 << i) as f64;
        let (fp, fm) = match (mgf(h), mgf(-h)) {
            (Some(fp), Some(fm)) if fp.is_finite() && fm.is_finite() => (fp, fm),
            _ => return Err(OracleError::StepUnderflow(h)),
        };
        d1[i][0] = (fp - fm) / (2.0 * h);
        d2[i][0] = (fp - 2.0 * f0 + fm) / (h * h);
        let mut factor = 4.0;
        for j in 1..=i {
            d1[i][j] = d1[i][j - 1] + (d1[i][j - 1] - d1[i - 1][j - 1]) / (factor - 1.0);
            d2[i][j] = d2[i][j - 1] + (d2[i][j - 1] - d2[i - 1][j - 1]) / (factor - 1.0);
            factor *= 4.0;
        }
    }
    Ok(MgfMoments {
        first: d1[LEVELS - 1][LEVELS - 1],
        second: d2[LEVELS - 1][LEVELS - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{mgf_busy_period_preempt, mgf_interdeparture_preempt, Scheme, SystemParams};

    #[test]
    fn exponential_mgf() {
        let lambda = 2.5;
        let m = mgf_moments(|s| (s < lambda).then(|| lambda / (lambda - s)), 1e-2 * lambda).unwrap();
        assert!((m.first - 1.0 / lambda).abs() < 1e-10);
        assert!((m.second - 2.0 / (lambda * lambda)).abs() < 1e-9);
    }

    #[test]
    fn interdeparture_moments() {
        let p = SystemParams::gamma(1.0, 1.0, 1.0, Scheme::LcfsPreempt).unwrap();
        let m = mgf_moments(|s| mgf_interdeparture_preempt(s, &p).ok(), 1e-2).unwrap();
        assert!((m.first - 2.0).abs() / 2.0 < 1e-6, "{m:?}");
        assert!((m.second - 6.0).abs() / 6.0 < 1e-6, "{m:?}");
        let w = mgf_moments(|s| mgf_busy_period_preempt(s, &p).ok(), 1e-2).unwrap();
        assert!((w.first - 1.0).abs() < 1e-6);
    }

    #[test]
    fn step_underflow() {
        assert_eq!(mgf_moments(|_| Some(1.0), 0.0), Err(OracleError::StepUnderflow(0.0)));
        assert!(matches!(mgf_moments(|s| (s < 0.0).then_some(1.0), 0.1), Err(OracleError::StepUnderflow(_))));
    }
}
