//! Time-weighted occupation of the classes over long runs.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{run_replications, ExperimentError, ExperimentSpec};
use crate::engine::{Process, SimError};
use crate::model::{classify_unchecked, PressureList};
use crate::oracle::TruncatedChain;
use crate::stats::batch_mean_se;

pub const BURN_IN_FRACTION: f64 = 0.1;
pub const BATCHES: usize = 20;

const CLASSES: [&str; 5] = ["L", "L+", "L-", "C", "zero"];

fn class_mask(u: &PressureList) -> [bool; 5] {
    let f = classify_unchecked(u);
    [
        f.ladder(),
        f.ladder_plus,
        f.ladder_minus,
        f.consensus(),
        f.is_zero,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupationRow {
    pub n_actors: usize,
    pub beta: f64,
    pub start: PressureList,
    pub horizon: f64,
    pub replications: usize,
    pub events_after_burn_in: u64,
    /// Time fraction per class with batch-means standard error.
    pub classes: BTreeMap<String, Estimate>,
    /// Time fraction per visited state.
    #[serde(skip)]
    pub states: BTreeMap<PressureList, f64>,
}

struct RunTally {
    state_time: HashMap<PressureList, f64>,
    batch_time: Vec<[f64; 5]>,
    events: u64,
}

fn one_run(proc: &mut Process, horizon: f64) -> Result<RunTally, SimError> {
    let burn = BURN_IN_FRACTION * horizon;
    let width = (horizon - burn) / BATCHES as f64;
    let mut tally = RunTally {
        state_time: HashMap::new(),
        batch_time: vec![[0.0; 5]; BATCHES],
        events: 0,
    };
    loop {
        let t0 = proc.time();
        let state = proc.state().clone();
        let jump = proc.step_until(horizon)?;
        let t1 = jump.map_or(horizon, |j| j.record.time);
        if jump.is_some() && t1 > burn {
            tally.events += 1;
        }
        let lo = t0.max(burn);
        if t1 > lo {
            *tally.state_time.entry(state.clone()).or_insert(0.0) += t1 - lo;
            let mask = class_mask(&state);
            let mut a = lo;
            while a < t1 {
                let k = (((a - burn) / width) as usize).min(BATCHES - 1);
                let edge = if k == BATCHES - 1 {
                    t1
                } else {
                    (burn + (k + 1) as f64 * width).min(t1)
                };
                let piece = edge - a;
                for (c, &m) in mask.iter().enumerate() {
                    if m {
                        tally.batch_time[k][c] += piece;
                    }
                }
                if edge <= a {
                    break;
                }
                a = edge;
            }
        }
        if jump.is_none() {
            return Ok(tally);
        }
    }
}

/// One row per grid cell. Each replication runs to `horizon`, discards the
/// first tenth and splits the rest into equal-time batches.
pub fn occupation_experiment(
    spec: &ExperimentSpec,
    horizon: f64,
) -> Result<Vec<OccupationRow>, ExperimentError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(ExperimentError::InvalidSpec(
            "occupation needs a finite positive horizon".into(),
        ));
    }
    let mut rows = Vec::new();
    for (p, start) in spec.cells()? {
        let tallies = run_replications(
            spec.replications,
            spec.master_seed,
            spec.threads,
            |_, rng| {
                let mut proc = Process::new(p, start.clone(), spec.scheme, rng)?;
                one_run(&mut proc, horizon)
            },
        )?;
        let window = (1.0 - BURN_IN_FRACTION) * horizon * spec.replications as f64;
        let batch_len = window / (BATCHES * spec.replications) as f64;
        let mut states: BTreeMap<PressureList, f64> = BTreeMap::new();
        let mut batches: Vec<[f64; 5]> = Vec::new();
        let mut events = 0;
        for t in tallies {
            let mut sorted: Vec<_> = t.state_time.into_iter().collect();
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            for (s, x) in sorted {
                *states.entry(s).or_insert(0.0) += x / window;
            }
            batches.extend(t.batch_time);
            events += t.events;
        }
        let classes = CLASSES
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let fr: Vec<f64> = batches.iter().map(|b| b[c] / batch_len).collect();
                let (value, se) = batch_mean_se(&fr);
                (name.to_string(), Estimate { value, se })
            })
            .collect();
        rows.push(OccupationRow {
            n_actors: p.n_actors(),
            beta: p.beta(),
            start,
            horizon,
            replications: spec.replications,
            events_after_burn_in: events,
            classes,
            states,
        });
    }
    Ok(rows)
}

/// Total variation between the empirical occupation and `mu` on the chain's
/// window; empirical mass outside the window counts in full.
pub fn total_variation_to(row: &OccupationRow, chain: &TruncatedChain, mu: &[f64]) -> f64 {
    let mut inside = 0.0;
    let mut outside = 0.0;
    let mut seen = vec![false; chain.len()];
    for (s, &x) in &row.states {
        match chain.index_of(s) {
            Some(i) => {
                inside += (x - mu[i]).abs();
                seen[i] = true;
            }
            None => outside += x,
        }
    }
    for (i, &m) in mu.iter().enumerate() {
        if !seen[i] {
            inside += m;
        }
    }
    0.5 * inside + 0.5 * outside
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::oracle::{build_generator, stationary_distribution};

    #[test]
    fn fractions_are_consistent() {
        let mut spec = ExperimentSpec::new(3, 1.0, PressureList::zeros(3), 2, 5);
        spec.threads = Some(1);
        let rows = occupation_experiment(&spec, 500.0).unwrap();
        let r = &rows[0];
        let total: f64 = r.states.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
        let l = r.classes["L"].value;
        let lp = r.classes["L+"].value;
        let lm = r.classes["L-"].value;
        assert!((l - lp - lm).abs() < 1e-9);
        let direct_l: f64 = r
            .states
            .iter()
            .filter(|(s, _)| class_mask(s)[0])
            .map(|(_, x)| x)
            .sum();
        assert!((direct_l - l).abs() < 1e-9);
    }

    #[test]
    fn matches_oracle_at_zero_beta() {
        let p = ModelParams::new(3, 0.0).unwrap();
        let chain = build_generator(&p, 4).unwrap();
        let st = stationary_distribution(&chain).unwrap();
        let mu_l = st.mass(&chain, |s| class_mask(s)[0]);
        let spec = ExperimentSpec::new(3, 0.0, PressureList::zeros(3), 4, 11);
        let rows = occupation_experiment(&spec, 5_000.0).unwrap();
        let e = rows[0].classes["L"];
        assert!(
            (e.value - mu_l).abs() < 3.0 * e.se,
            "{} vs {mu_l} (se {})",
            e.value,
            e.se
        );
    }
}
