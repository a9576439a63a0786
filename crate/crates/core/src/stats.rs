//! Small estimators and tests used by the experiments.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
    #[error("probability {0} outside (0,1)")]
    InvalidProbability(f64),
    #[error("sample {0} is not positive")]
    NonPositive(f64),
    #[error("sample contains NaN")]
    NotANumber,
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(StatsError::NotANumber);
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(s)
}

fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Linear interpolation between order statistics at position `(n-1)p`.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::InvalidProbability(p));
    }
    let s = sorted(samples)?;
    Ok(quantile_sorted(&s, p))
}

/// `sup_t |F_n(t) - (1 - e^{-t})|` for already normalized samples.
pub fn ks_exp1_statistic(samples: &[f64]) -> Result<f64, StatsError> {
    let s = sorted(samples)?;
    if let Some(&x) = s.iter().find(|&&x| x <= 0.0) {
        return Err(StatsError::NonPositive(x));
    }
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = -(-x).exp_m1();
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic 5% critical value of the one-sample KS statistic.
pub fn ks_critical_5pct(n: usize) -> f64 {
    1.36 / (n as f64).sqrt()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for a single sample.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean and standard error from batch means.
pub fn batch_mean_se(batches: &[f64]) -> (f64, f64) {
    let m = mean(batches);
    (m, (variance(batches) / batches.len() as f64).sqrt())
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub const SUMMARY_PROBS: [f64; 6] = [0.1, 0.25, 0.5, 0.632_120_558_828_557_7, 0.75, 0.9];

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Keyed by the probability formatted with its shortest representation.
    pub quantiles: BTreeMap<String, f64>,
    /// KS distance of `samples / mean` to Exp(1).
    pub ks_exp1: f64,
    pub censored: usize,
    /// False when any replication was censored.
    pub valid: bool,
}

impl SampleSummary {
    pub fn new(samples: &[f64], censored: usize) -> Result<Self, StatsError> {
        let s = sorted(samples)?;
        let m = mean(&s);
        let quantiles = SUMMARY_PROBS
            .iter()
            .map(|&p| (p.to_string(), quantile_sorted(&s, p)))
            .collect();
        let scaled: Vec<f64> = s.iter().map(|x| x / m).collect();
        Ok(SampleSummary {
            n: s.len(),
            mean: m,
            variance: variance(&s),
            quantiles,
            ks_exp1: ks_exp1_statistic(&scaled)?,
            censored,
            valid: censored == 0,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Bins the two samples occupy before pooling.
    pub bins: usize,
}

/// Two-sample homogeneity test on categorical counts. Categories whose
/// expected count falls below 5 in either sample are pooled into one bin.
pub fn chi_square_two_sample<K: Ord + Clone>(
    a: &BTreeMap<K, u64>,
    b: &BTreeMap<K, u64>,
) -> ChiSquareResult {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let total = (na + nb) as f64;
    let mut keys: Vec<&K> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let bins = keys.len();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for k in keys {
        let ca = *a.get(k).unwrap_or(&0) as f64;
        let cb = *b.get(k).unwrap_or(&0) as f64;
        let row = ca + cb;
        let ea = row * na as f64 / total;
        let eb = row * nb as f64 / total;
        if ea < 5.0 || eb < 5.0 {
            pooled.0 += ca;
            pooled.1 += cb;
        } else {
            cells.push((ca, cb));
        }
    }
    let row = pooled.0 + pooled.1;
    if row * (na.min(nb) as f64) / total >= 5.0 {
        cells.push(pooled);
    } else if let Some(last) = cells.last_mut() {
        // too small to stand alone: fold into the last retained bin
        last.0 += pooled.0;
        last.1 += pooled.1;
    }
    let mut stat = 0.0;
    for &(ca, cb) in &cells {
        let row = ca + cb;
        let ea = row * na as f64 / total;
        let eb = row * nb as f64 / total;
        stat += (ca - ea).powi(2) / ea + (cb - eb).powi(2) / eb;
    }
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(stat)
    };
    ChiSquareResult {
        statistic: stat,
        dof,
        p_value,
        bins,
    }
}
