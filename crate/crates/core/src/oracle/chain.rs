//! Uniformized jump chain of the non-preemptive queue with Erlang service.
//!
//! State layout: index 0 is the empty queue, `1..=k` are the service phases
//! with an empty buffer, `k+1..=2k` the same phases with a full buffer
//! (`1'..k'`). Every state is left at the common rate `lambda + 1/theta`;
//! a phase clock firing moves one phase on, an arrival fills (or refreshes)
//! the buffer. Outcomes that leave the state unchanged are self-loops.

use nalgebra::{DMatrix, DVector};

use crate::error::OracleError;

/// States up to this count are solved directly; larger chains use power
/// iteration.
pub const DIRECT_SOLVE_MAX_STATES: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    k: usize,
    rows: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.rows[(from, to)]
    }

    pub fn row(&self, from: usize) -> Vec<f64> {
        self.rows.row(from).iter().copied().collect()
    }

    /// Index of phase `j` (1-based) with an empty buffer.
    pub fn phase(&self, j: usize) -> usize {
        j
    }

    /// Index of phase `j'` (1-based) with a full buffer.
    pub fn phase_buffered(&self, j: usize) -> usize {
        self.k + j
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// Two-state or any other hand-built row-stochastic matrix.
    pub fn from_rows(rows: DMatrix<f64>) -> Self {
        Self { k: 0, rows }
    }
}

fn integer_shape(k: f64) -> Result<usize, OracleError> {
    if k >= 1.0 && k.fract() == 0.0 && k.is_finite() {
        Ok(k as usize)
    } else {
        Err(OracleError::InvalidShape(k))
    }
}

pub fn build_uniformized_chain(k: f64, lambda: f64, theta: f64) -> Result<TransitionMatrix, OracleError> {
    let k = integer_shape(k)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(crate::error::AnalyticError::NonPositiveRate(lambda).into());
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(crate::error::AnalyticError::Dist(crate::error::DistError::NonPositive {
            name: "theta",
            value: theta,
        })
        .into());
    }
    let phase_rate = 1.0 / theta;
    let total = lambda + phase_rate;
    let a = phase_rate / total;
    let b = lambda / total;
    let n = 2 * k + 1;
    let mut m = DMatrix::zeros(n, n);
    let plain = |j: usize| j;
    let buffered = |j: usize| k + j;

    m[(0, 0)] += a;
    m[(0, plain(1))] += b;
    for j in 1..=k {
        let next = if j < k { plain(j + 1) } else { 0 };
        m[(plain(j), next)] += a;
        m[(plain(j), buffered(j))] += b;

        let next = if j < k { buffered(j + 1) } else { plain(1) };
        m[(buffered(j), next)] += a;
        m[(buffered(j), buffered(j))] += b;
    }
    Ok(TransitionMatrix { k, rows: m })
}

/// Stationary distribution with its residual `max |pi M - pi|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub pi: Vec<f64>,
    pub residual: f64,
}

pub const STEADY_STATE_TOLERANCE: f64 = 1e-12;

pub fn steady_state(matrix: &TransitionMatrix) -> Result<SteadyState, OracleError> {
    let m = matrix.as_matrix();
    let n = m.nrows();
    let pi = if n <= DIRECT_SOLVE_MAX_STATES {
        direct_solve(m)?
    } else {
        power_iteration(m)
    };
    let residual = residual(m, &pi);
    if residual > STEADY_STATE_TOLERANCE || pi.iter().any(|p| *p < -STEADY_STATE_TOLERANCE) {
        return Err(OracleError::NoConvergence { residual });
    }
    Ok(SteadyState { pi: pi.iter().copied().collect(), residual })
}

fn direct_solve(m: &DMatrix<f64>) -> Result<DVector<f64>, OracleError> {
    // pi (M - I) = 0 with the last balance equation replaced by sum(pi) = 1.
    let n = m.nrows();
    let mut a = m.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    a.lu().solve(&rhs).ok_or(OracleError::NoConvergence { residual: f64::INFINITY })
}

fn power_iteration(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mt = m.transpose();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..1_000_000 {
        let next = &mt * &pi;
        let s = next.sum();
        let next = next / s;
        let diff = (&next - &pi).amax();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    pi
}

fn residual(m: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    (m.transpose() * pi - pi).amax()
}

/// `pi_1 = q(1-q) / (q^(k+1) + k(1-q))`, `q = 1/(1 + lambda*theta)`.
pub fn closed_form_pi_one(k: f64, lambda: f64, theta: f64) -> f64 {
    let lt = lambda * theta;
    let q = 1.0 / (1.0 + lt);
    let one_minus_q = lt / (1.0 + lt);
    let qk1 = (-(k + 1.0) * lt.ln_1p()).exp();
    q * one_minus_q / (qk1 + k * one_minus_q)
}

/// `(lambda + 1/theta) * pi_1`: every served packet enters phase 1 exactly once.
pub fn effective_rate_from_chain(k: f64, lambda: f64, theta: f64) -> Result<f64, OracleError> {
    let chain = build_uniformized_chain(k, lambda, theta)?;
    let ss = steady_state(&chain)?;
    Ok((lambda + 1.0 / theta) * ss.pi[chain.phase(1)])
}
