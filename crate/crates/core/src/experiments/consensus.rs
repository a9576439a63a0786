//! Tail of the time needed to reach the ladder set.

use serde::Serialize;

use super::{cell_label, run_replications, ExperimentError, ExperimentSpec, ReplicationRecord};
use crate::engine::{hitting_time_from, Censoring, Process, StopCondition, Target};
use crate::stats::wilson_interval;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsensusRow {
    pub n_actors: usize,
    pub beta: f64,
    pub start: String,
    pub delta: f64,
    /// `e^{-β(1-δ)}`; for the zero start it is added to the first holding time.
    pub threshold: f64,
    pub replications: usize,
    pub exceed: u64,
    pub p_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    pub zero_start: bool,
}

/// Estimates `P(R(L) > e^{-β(1-δ)})` per cell. From the zero list the clock
/// starts after the first jump, whose holding time is Exp(2N).
pub fn consensus_time_experiment(
    spec: &ExperimentSpec,
) -> Result<(Vec<ConsensusRow>, Vec<ReplicationRecord>), ExperimentError> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (p, start) in spec.cells()? {
        let base = (-p.beta() * (1.0 - spec.delta)).exp();
        let zero_start = start.is_zero();
        let outcomes = run_replications(
            spec.replications,
            spec.master_seed,
            spec.threads,
            |_, rng| {
                let mut proc = Process::new(p, start.clone(), spec.scheme, rng)?;
                let mut offset = 0.0;
                if zero_start {
                    let j = proc.step()?;
                    offset = j.record.time;
                    if Target::Ladder.contains(proc.state()) {
                        return Ok((Some(j.record.time - offset), offset + base));
                    }
                }
                let threshold = offset + base;
                let mut budget = StopCondition::horizon(threshold);
                budget.max_events = spec.budget.max_events;
                let h = hitting_time_from(proc, &Target::Ladder, &budget)?;
                match h.censored_at {
                    None => Ok((Some(h.hitting_time - offset), threshold)),
                    Some(Censoring::Time(_)) => Ok((None, threshold)),
                    Some(Censoring::Events(_)) => Ok((Some(f64::NAN), threshold)),
                }
            },
        )?;
        let label = cell_label(&p, &start);
        let mut exceed = 0;
        for (i, (r, _)) in outcomes.iter().enumerate() {
            match r {
                Some(x) if x.is_nan() => {
                    return Err(ExperimentError::InvalidSpec(format!(
                        "{label}: replication {i} exhausted its event budget before the threshold"
                    )))
                }
                Some(x) => records.push(ReplicationRecord {
                    cell: label.clone(),
                    replication: i,
                    value: *x,
                    censored: false,
                }),
                None => {
                    exceed += 1;
                    records.push(ReplicationRecord {
                        cell: label.clone(),
                        replication: i,
                        value: base,
                        censored: true,
                    });
                }
            }
        }
        let n = spec.replications as u64;
        let (lo, hi) = wilson_interval(exceed, n, 1.96);
        rows.push(ConsensusRow {
            n_actors: p.n_actors(),
            beta: p.beta(),
            start: start.to_string(),
            delta: spec.delta,
            threshold: base,
            replications: spec.replications,
            exceed,
            p_hat: exceed as f64 / n as f64,
            wilson_lo: lo,
            wilson_hi: hi,
            zero_start,
        });
    }
    Ok((rows, records))
}
