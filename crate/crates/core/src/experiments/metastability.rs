//! Hitting times of the opposite ladder or consensus set.

use serde::Serialize;

use super::{cell_label, run_replications, ExperimentError, ExperimentSpec, ReplicationRecord};
use crate::engine::{hitting_time, Process, Scheme, Target};
use crate::model::{classify_unchecked, ModelParams, PressureList};
use crate::oracle::is_admissible;
use crate::stats::{
    empirical_quantile, ks_critical_5pct, ks_exp1_statistic, ols_slope, wilson_interval,
    SampleSummary,
};

/// Scale applied before the Exp(1) comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Mean,
    Cbeta,
}

/// `((N-1)e^{-β} + λ_β)^{-1}` with `λ_β = 2(N-1)/((N-1)+e^β)`.
pub fn cbeta_lower_bound(p: &ModelParams) -> f64 {
    let m = (p.n_actors() - 1) as f64;
    let lambda = 2.0 * m / (m + p.beta().exp());
    1.0 / (m * (-p.beta()).exp() + lambda)
}

/// Slope of `ln P(X/c > n)` on `n = 1..=4`, over the points with positive
/// survival. `None` with fewer than two such points.
pub fn geometric_tail_slope(samples: &[f64], c: f64) -> Option<f64> {
    let total = samples.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (1..=4)
        .filter_map(|n| {
            let s = samples.iter().filter(|&&x| x / c > n as f64).count() as f64 / total;
            (s > 0.0).then(|| (n as f64, s.ln()))
        })
        .unzip();
    (xs.len() >= 2).then(|| ols_slope(&xs, &ys))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetastabilityResult {
    pub n_actors: usize,
    pub beta: f64,
    pub start: String,
    pub target: String,
    pub censored: usize,
    /// Empirical `(1 - e^{-1})`-quantile of the uncensored hitting times.
    pub c_hat: f64,
    pub summary: SampleSummary,
    pub normalization: Normalization,
    pub ks_statistic: f64,
    pub ks_threshold: f64,
    /// False whenever a replication was censored.
    pub ks_valid: bool,
    pub ks_pass: bool,
    pub bound: f64,
    pub bound_ok: bool,
    pub mean_over_c: f64,
    pub tail_slope: Option<f64>,
}

/// Replicated hitting times of `target` for every cell. `ks_threshold`
/// defaults to the asymptotic 5% critical value.
pub fn metastability_experiment(
    spec: &ExperimentSpec,
    target: &Target,
    normalization: Normalization,
    ks_threshold: Option<f64>,
) -> Result<(Vec<MetastabilityResult>, Vec<ReplicationRecord>), ExperimentError> {
    let mut out = Vec::new();
    let mut records = Vec::new();
    for (p, start) in spec.cells()? {
        let hits = run_replications(
            spec.replications,
            spec.master_seed,
            spec.threads,
            |_, rng| hitting_time(&p, &start, target, &spec.budget, spec.scheme, rng),
        )?;
        let label = cell_label(&p, &start);
        let mut samples = Vec::with_capacity(hits.len());
        let mut censored = 0;
        for (i, h) in hits.iter().enumerate() {
            records.push(ReplicationRecord {
                cell: label.clone(),
                replication: i,
                value: h.hitting_time,
                censored: !h.hit,
            });
            if h.hit {
                samples.push(h.hitting_time);
            } else {
                censored += 1;
            }
        }
        let summary = SampleSummary::new(&samples, censored)?;
        let c_hat = if samples.len() == 1 {
            samples[0]
        } else {
            empirical_quantile(&samples, 1.0 - (-1f64).exp())?
        };
        let ks_statistic = match normalization {
            Normalization::Mean => summary.ks_exp1,
            Normalization::Cbeta => {
                let scaled: Vec<f64> = samples.iter().map(|x| x / c_hat).collect();
                ks_exp1_statistic(&scaled)?
            }
        };
        let threshold = ks_threshold.unwrap_or_else(|| ks_critical_5pct(samples.len()));
        let bound = cbeta_lower_bound(&p);
        out.push(MetastabilityResult {
            n_actors: p.n_actors(),
            beta: p.beta(),
            start: start.to_string(),
            target: target.to_string(),
            censored,
            c_hat,
            ks_statistic,
            ks_threshold: threshold,
            ks_valid: censored == 0,
            ks_pass: censored == 0 && ks_statistic < threshold,
            bound,
            bound_ok: c_hat >= bound,
            mean_over_c: summary.mean / c_hat,
            tail_slope: geometric_tail_slope(&samples, c_hat),
            normalization,
            summary,
        });
    }
    Ok((out, records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoResult {
    pub start: String,
    pub replications: usize,
    /// Replications whose first `3(N-1)` jumps were all admissible.
    pub conditioned: u64,
    pub plus_first: u64,
    pub rho_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Diagnostic estimate of the chance that, given admissible first
/// `3(N-1)` jumps, the ladder reached is `L+`.
pub fn rho_diagnostic(
    p: &ModelParams,
    start: &PressureList,
    reps: usize,
    master_seed: u64,
    scheme: Scheme,
) -> Result<RhoResult, ExperimentError> {
    let steps = 3 * (p.n_actors() - 1);
    let outcomes = run_replications(reps, master_seed, None, |_, rng| {
        let mut proc = Process::new(*p, start.clone(), scheme, rng)?;
        for _ in 0..steps {
            let before = proc.state().clone();
            let j = proc.step()?;
            if !is_admissible(&before, j.record.actor, j.record.opinion) {
                return Ok(None);
            }
        }
        Ok(Some(classify_unchecked(proc.state()).ladder_plus))
    })?;
    let conditioned = outcomes.iter().filter(|o| o.is_some()).count() as u64;
    let plus_first = outcomes.iter().filter(|o| **o == Some(true)).count() as u64;
    let (lo, hi) = wilson_interval(plus_first, conditioned, 1.96);
    Ok(RhoResult {
        start: start.to_string(),
        replications: reps,
        conditioned,
        plus_first,
        rho_hat: if conditioned > 0 {
            plus_first as f64 / conditioned as f64
        } else {
            f64::NAN
        },
        wilson_lo: lo,
        wilson_hi: hi,
    })
}
