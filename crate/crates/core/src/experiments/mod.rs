//! Replicated Monte Carlo experiments and their outputs.

mod consensus;
mod coupling;
mod equivalence;
mod metastability;
mod mevents;
mod occupation;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::engine::{Scheme, SimError, StopCondition};
use crate::model::{in_state_space, ModelError, ModelParams, PressureList};
use crate::oracle::OracleError;
use crate::rng::{self, SimRng};
use crate::stats::StatsError;

pub use consensus::{consensus_time_experiment, ConsensusRow};
pub use coupling::{coupling_check, CouplingResult};
pub use equivalence::{embedded_state_counts, scheme_equivalence, EquivalenceResult};
pub use metastability::{
    cbeta_lower_bound, geometric_tail_slope, metastability_experiment, rho_diagnostic,
    MetastabilityResult, Normalization, RhoResult,
};
pub use mevents::{m_event_probability_experiment, MEventRow};
pub use occupation::{occupation_experiment, total_variation_to, OccupationRow};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("replication {index} failed: {source}")]
    Replication { index: usize, source: SimError },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub grid: Vec<(usize, f64)>,
    pub starts: Vec<PressureList>,
    pub replications: usize,
    pub master_seed: u64,
    pub scheme: Scheme,
    pub budget: StopCondition,
    pub delta: f64,
    /// Worker threads; `None` uses the global pool. Results do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(
        n_actors: usize,
        beta: f64,
        start: PressureList,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            grid: vec![(n_actors, beta)],
            starts: vec![start],
            replications,
            master_seed,
            scheme: Scheme::Direct,
            budget: StopCondition::default(),
            delta: 0.5,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.replications == 0 {
            return Err(ExperimentError::InvalidSpec(
                "replications must be at least 1".into(),
            ));
        }
        if self.grid.is_empty() || self.starts.is_empty() {
            return Err(ExperimentError::InvalidSpec(
                "empty parameter grid or start list".into(),
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ExperimentError::InvalidSpec(format!(
                "delta {} outside (0,1)",
                self.delta
            )));
        }
        for &(n, beta) in &self.grid {
            let p = ModelParams::new(n, beta)?;
            for s in self.starts.iter().filter(|s| s.len() == n) {
                if !in_state_space(s) {
                    return Err(ModelError::NotInStateSpace(s.clone()).into());
                }
                p.check_len(s)?;
            }
            if !self.starts.iter().any(|s| s.len() == n) {
                return Err(ExperimentError::InvalidSpec(format!(
                    "no start of length {n}"
                )));
            }
        }
        Ok(())
    }

    /// `(params, start)` for every grid point and matching start.
    pub fn cells(&self) -> Result<Vec<(ModelParams, PressureList)>, ExperimentError> {
        self.validate()?;
        let mut out = Vec::new();
        for &(n, beta) in &self.grid {
            let p = ModelParams::new(n, beta)?;
            for s in self.starts.iter().filter(|s| s.len() == n) {
                out.push((p, s.clone()));
            }
        }
        Ok(out)
    }

    /// Hex SHA-256 of the serialized spec and the task name.
    pub fn hash(&self, task: &str) -> String {
        let json = serde_json::to_string(&(task, self)).expect("spec serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Runs `reps` independent replications, replication `i` on
/// `stream(master_seed, i)`. Output is in replication order whatever the
/// thread count; the first failing index is reported.
pub fn run_replications<T, F>(
    reps: usize,
    master_seed: u64,
    threads: Option<usize>,
    task: F,
) -> Result<Vec<T>, ExperimentError>
where
    T: Send,
    F: Fn(usize, SimRng) -> Result<T, SimError> + Sync,
{
    let run = || -> Vec<Result<T, SimError>> {
        (0..reps)
            .into_par_iter()
            .map(|i| task(i, rng::stream(master_seed, i as u64)))
            .collect()
    };
    let results = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| ExperimentError::InvalidSpec(e.to_string()))?
            .install(run),
        None => run(),
    };
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|source| ExperimentError::Replication { index, source }))
        .collect()
}

/// One replication's scalar outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub cell: String,
    pub replication: usize,
    pub value: f64,
    pub censored: bool,
}

pub fn cell_label(p: &ModelParams, start: &PressureList) -> String {
    format!("N={} beta={} start={}", p.n_actors(), p.beta(), start)
}

/// CSV with columns `spec_hash,seed,cell,replication,value,censored`.
pub fn write_replications_csv<W: Write>(
    mut w: W,
    spec_hash: &str,
    master_seed: u64,
    rows: &[ReplicationRecord],
) -> std::io::Result<()> {
    writeln!(w, "spec_hash,seed,cell,replication,value,censored")?;
    for r in rows {
        writeln!(
            w,
            "{spec_hash},{master_seed},\"{}\",{},{},{}",
            r.cell, r.replication, r.value, r.censored
        )?;
    }
    Ok(())
}
