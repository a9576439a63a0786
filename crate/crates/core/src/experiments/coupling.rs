//! Probability of being off the ladder set at a fixed time, against the
//! stationary bound `(1 - μ(L))/μ(L)`.

use serde::Serialize;

use super::{run_replications, ExperimentError};
use crate::engine::{Process, Scheme};
use crate::model::{is_ladder, ModelParams, PressureList};
use crate::oracle::{build_generator, stationary_distribution};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingResult {
    pub n_actors: usize,
    pub beta: f64,
    pub time: f64,
    pub replications: usize,
    pub off_ladder: u64,
    pub p_hat: f64,
    pub se: f64,
    pub mu_ladder: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Starts at the ladder `(0,1,…,N-1)`; `μ(L)` comes from the window of
/// half-width `cap`.
pub fn coupling_check(
    p: &ModelParams,
    time: f64,
    reps: usize,
    master_seed: u64,
    scheme: Scheme,
    cap: i64,
) -> Result<CouplingResult, ExperimentError> {
    let chain = build_generator(p, cap)?;
    let st = stationary_distribution(&chain)?;
    let mu_ladder = st.mass(&chain, is_ladder);
    let start = PressureList::ladder(p.n_actors());
    let off = run_replications(reps, master_seed, None, |_, rng| {
        let mut proc = Process::new(*p, start.clone(), scheme, rng)?;
        while proc.step_until(time)?.is_some() {}
        Ok(!is_ladder(proc.state()))
    })?;
    let off_ladder = off.iter().filter(|&&x| x).count() as u64;
    let p_hat = off_ladder as f64 / reps as f64;
    let se = (p_hat * (1.0 - p_hat) / reps as f64).sqrt();
    let bound = (1.0 - mu_ladder) / mu_ladder;
    Ok(CouplingResult {
        n_actors: p.n_actors(),
        beta: p.beta(),
        time,
        replications: reps,
        off_ladder,
        p_hat,
        se,
        mu_ladder,
        bound,
        pass: p_hat - 3.0 * se <= bound,
    })
}
