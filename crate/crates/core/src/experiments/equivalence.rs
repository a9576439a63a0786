//! Direct versus thinning: law of the embedded state after a fixed number
//! of jumps.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{run_replications, ExperimentError};
use crate::engine::{Process, Scheme};
use crate::model::{ModelParams, PressureList};
use crate::stats::{chi_square_two_sample, ChiSquareResult};

/// Counts of the embedded state after `steps` jumps over `samples`
/// replications, using replication streams `offset..offset+samples`.
pub fn embedded_state_counts(
    p: &ModelParams,
    start: &PressureList,
    steps: usize,
    samples: usize,
    master_seed: u64,
    offset: u64,
    scheme: Scheme,
) -> Result<BTreeMap<PressureList, u64>, ExperimentError> {
    let finals = run_replications(samples, master_seed, None, |i, _| {
        let rng = crate::rng::stream(master_seed, offset + i as u64);
        let mut proc = Process::new(*p, start.clone(), scheme, rng)?;
        for _ in 0..steps {
            proc.step()?;
        }
        Ok(proc.state().clone())
    })?;
    let mut counts = BTreeMap::new();
    for s in finals {
        *counts.entry(s).or_insert(0) += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceResult {
    pub steps: usize,
    pub samples: usize,
    pub chi_square: ChiSquareResult,
}

/// Direct runs use streams `0..samples`, thinning runs `samples..2·samples`.
pub fn scheme_equivalence(
    p: &ModelParams,
    start: &PressureList,
    steps: usize,
    samples: usize,
    master_seed: u64,
) -> Result<EquivalenceResult, ExperimentError> {
    let d = embedded_state_counts(p, start, steps, samples, master_seed, 0, Scheme::Direct)?;
    let t = embedded_state_counts(
        p,
        start,
        steps,
        samples,
        master_seed,
        samples as u64,
        Scheme::Thinning,
    )?;
    Ok(EquivalenceResult {
        steps,
        samples,
        chi_square: chi_square_two_sample(&d, &t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schemes_agree_after_few_steps() {
        let p = ModelParams::new(3, 1.0).unwrap();
        let r = scheme_equivalence(&p, &PressureList::single_one(3), 4, 20_000, 21).unwrap();
        assert!(r.chi_square.p_value > 0.001, "{r:?}");
        assert!(r.chi_square.dof > 5);
    }
}
