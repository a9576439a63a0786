//! Probability that the first `m` jumps are admissible moves.

use serde::Serialize;

use super::{run_replications, ExperimentError, ExperimentSpec};
use crate::engine::Process;
use crate::oracle::{build_generator, is_admissible, m_event_probability};
use crate::stats::wilson_interval;

/// Relative slack for comparing an exact probability with `ζ^m` in floating
/// point.
pub const EXACT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MEventRow {
    pub n_actors: usize,
    pub beta: f64,
    pub start: String,
    pub m: usize,
    pub replications: usize,
    pub successes: u64,
    pub estimate: f64,
    pub se: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub zeta_m: f64,
    /// Kernel computation on a window wide enough that no jump saturates.
    pub exact: f64,
    pub pass_mc: bool,
    pub pass_exact: bool,
}

pub fn m_event_probability_experiment(
    spec: &ExperimentSpec,
    m: usize,
) -> Result<Vec<MEventRow>, ExperimentError> {
    let mut rows = Vec::new();
    for (p, start) in spec.cells()? {
        let ok = run_replications(
            spec.replications,
            spec.master_seed,
            spec.threads,
            |_, rng| {
                let mut proc = Process::new(p, start.clone(), spec.scheme, rng)?;
                for _ in 0..m {
                    let before = proc.state().clone();
                    let j = proc.step()?;
                    if !is_admissible(&before, j.record.actor, j.record.opinion) {
                        return Ok(false);
                    }
                }
                Ok(true)
            },
        )?;
        let successes = ok.iter().filter(|&&x| x).count() as u64;
        let n = spec.replications as f64;
        let estimate = successes as f64 / n;
        let se = (estimate * (1.0 - estimate) / n).sqrt();
        let (lo, hi) = wilson_interval(successes, spec.replications as u64, 1.96);
        let cap = start.max_abs() + m as i64 + 1;
        let chain = build_generator(&p, cap)?;
        let exact = m_event_probability(&chain, &start, m)?;
        let zeta_m = p.zeta().powi(m as i32);
        rows.push(MEventRow {
            n_actors: p.n_actors(),
            beta: p.beta(),
            start: start.to_string(),
            m,
            replications: spec.replications,
            successes,
            estimate,
            se,
            wilson_lo: lo,
            wilson_hi: hi,
            zeta_m,
            exact,
            pass_mc: estimate + 3.0 * se >= zeta_m,
            pass_exact: exact >= zeta_m * (1.0 - EXACT_RTOL),
        });
    }
    Ok(rows)
}
