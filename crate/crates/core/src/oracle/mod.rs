//! Exact computations on a finite truncation of the state space.

mod chain;
mod greedy;
mod hitting;
mod mevents;
mod stationary;

pub use chain::{build_generator, enumerate_states, Transition, TruncatedChain};
pub use greedy::{
    admissible_moves, greedy_consensus_check, is_admissible, Counterexample, LemmaReport,
};
pub use hitting::{
    expected_hitting_times, expected_return_times_embedded, hitting_survival, kac_consistency,
    KacReport,
};
pub use mevents::m_event_probability;
pub use stationary::{stationary_distribution, stationary_power_iteration, Stationary};

use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("truncation cap {0} leaves a single state")]
    Degenerate(i64),
    #[error("truncated chain is not irreducible")]
    Reducible,
    #[error("target unreachable from state {0}")]
    Unreachable(usize),
    #[error("target set is empty")]
    EmptyTarget,
    #[error("state {0} lies outside the truncation window")]
    OutsideWindow(String),
    #[error("linear system is singular")]
    Singular,
    #[error(transparent)]
    Model(#[from] ModelError),
}
