//! Independent verifiers for the closed forms: a steady-state solve of the
//! uniformized Markov chain, numeric quadrature, conditional-expectation
//! sums, Monte-Carlo clock races and finite-difference MGF moments.

mod chain;
mod finite_diff;
mod montecarlo;
mod quadrature;
mod summation;
pub mod suite;

pub use chain::{
    build_uniformized_chain, closed_form_pi_one, effective_rate_from_chain, steady_state, SteadyState,
    TransitionMatrix, DIRECT_SOLVE_MAX_STATES, STEADY_STATE_TOLERANCE,
};
pub use finite_diff::{mgf_moments, MgfMoments};
pub use montecarlo::{lemma_checks, LemmaReport, ZCheck, MIN_ACCEPTED};
pub use quadrature::{integrate, integrate_half_line, success_prob_quadrature};
pub use summation::{cross_moment_by_summation, psi_total, system_time_by_summation};
