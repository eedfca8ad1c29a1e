//! Conditional-expectation sums for the non-preemptive scheme, built only
//! from the per-event pieces (`psi_prob`, `cond_system_time_np`,
//! `cond_interdeparture_np`) and never from the collapsed closed forms.

use crate::analytic::{cond_interdeparture_np, cond_system_time_np, psi_prob, SystemParams};
use crate::error::AnalyticError;

fn shape(params: &SystemParams) -> Result<usize, AnalyticError> {
    let (k, _) = params.service.gamma_params().ok_or(AnalyticError::DeterministicService)?;
    if k.fract() != 0.0 {
        return Err(AnalyticError::NonIntegerShape(k));
    }
    Ok(k as usize)
}

fn double_sum(
    params: &SystemParams,
    term: impl Fn(usize, usize) -> Result<f64, AnalyticError>,
) -> Result<f64, AnalyticError> {
    let k = shape(params)?;
    let psi: Vec<f64> = (0..=k).map(|j| psi_prob(j, params)).collect::<Result<_, _>>()?;
    let mut total = 0.0;
    for j in 0..=k {
        for l in 0..=k {
            total += term(j, l)? * psi[j] * psi[l];
        }
    }
    Ok(total)
}

/// `E(TY) = sum_{j,l} E(T | Psi_j, Psi_l) E(Y | Psi_j) P(Psi_j) P(Psi_l)`.
pub fn cross_moment_by_summation(params: &SystemParams) -> Result<f64, AnalyticError> {
    double_sum(params, |j, l| {
        Ok(cond_system_time_np(j, l, params)? * cond_interdeparture_np(j, params)?)
    })
}

/// `E(T) = sum_{j,l} E(T | Psi_j, Psi_l) P(Psi_j) P(Psi_l)`.
pub fn system_time_by_summation(params: &SystemParams) -> Result<f64, AnalyticError> {
    double_sum(params, |j, l| cond_system_time_np(j, l, params))
}

/// `sum_j P(Psi_j)`, which must be 1.
pub fn psi_total(params: &SystemParams) -> Result<f64, AnalyticError> {
    let k = shape(params)?;
    (0..=k).map(|j| psi_prob(j, params)).sum()
}
