//! Stationary laws of the truncated chain and of its jump chain.

use super::{OracleError, TruncatedChain};
use crate::model::PressureList;

#[derive(Debug, Clone)]
pub struct Stationary {
    /// Law of the continuous-time process, indexed like `chain.states()`;
    /// zero on transient states.
    pub mu: Vec<f64>,
    /// Law of the embedded jump chain.
    pub mu_tilde: Vec<f64>,
    /// `max_j |(μQ)_j| / max_i μ(i) q(i)`.
    pub residual: f64,
    /// `max_i |μ(i)q(i)/Σμq − μ̃(i)| / μ̃(i)`.
    pub proportionality_error: f64,
}

impl Stationary {
    pub fn mass<F: Fn(&PressureList) -> bool>(&self, chain: &TruncatedChain, pred: F) -> f64 {
        chain
            .states()
            .iter()
            .zip(&self.mu)
            .filter(|(s, _)| pred(s))
            .map(|(_, m)| m)
            .sum()
    }
}

/// Grassmann-Taksar-Heyman elimination on a row-major matrix of
/// off-diagonal transition weights. Subtraction-free, so every entry of the
/// result carries small relative error.
fn gth(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>, OracleError> {
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[k * n + j]).sum();
        if !(s > 0.0) {
            return Err(OracleError::Reducible);
        }
        for i in 0..k {
            a[i * n + k] /= s;
        }
        for i in 0..k {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                if i != j {
                    a[i * n + j] += aik * a[k * n + j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    x[0] = 1.0;
    for j in 1..n {
        x[j] = (0..j).map(|i| x[i] * a[i * n + j]).sum();
    }
    let total: f64 = x.iter().sum();
    Ok(x.into_iter().map(|v| v / total).collect())
}

pub fn stationary_distribution(chain: &TruncatedChain) -> Result<Stationary, OracleError> {
    let class = chain.recurrent_class()?;
    let n = chain.len();
    let m = class.len();
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in class.iter().enumerate() {
        pos[i] = k;
    }
    let mut rates = vec![0.0; m * m];
    let mut probs = vec![0.0; m * m];
    for (k, &i) in class.iter().enumerate() {
        let q = chain.exit_rate(i);
        for t in chain.transitions(i) {
            let l = pos[t.to];
            rates[k * m + l] += t.rate;
            probs[k * m + l] += t.rate / q;
        }
    }
    let mut mu = vec![0.0; n];
    let mut mu_tilde = vec![0.0; n];
    for (k, x) in gth(rates, m)?.into_iter().enumerate() {
        mu[class[k]] = x;
    }
    for (k, x) in gth(probs, m)?.into_iter().enumerate() {
        mu_tilde[class[k]] = x;
    }

    let mut flow = vec![0.0; n];
    let mut scale: f64 = 0.0;
    for i in 0..n {
        let out = mu[i] * chain.exit_rate(i);
        scale = scale.max(out);
        flow[i] -= out;
        for t in chain.transitions(i) {
            flow[t.to] += mu[i] * t.rate;
        }
    }
    let residual = flow.iter().fold(0.0f64, |m, f| m.max(f.abs())) / scale;

    let z: f64 = (0..n).map(|i| mu[i] * chain.exit_rate(i)).sum();
    let proportionality_error = class
        .iter()
        .map(|&i| ((mu[i] * chain.exit_rate(i) / z) - mu_tilde[i]).abs() / mu_tilde[i])
        .fold(0.0f64, f64::max);

    Ok(Stationary {
        mu,
        mu_tilde,
        residual,
        proportionality_error,
    })
}

/// Uniformized power iteration; slow when rates are badly scaled but
/// independent of the elimination path.
pub fn stationary_power_iteration(chain: &TruncatedChain, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = chain.len();
    let lambda = (0..n).map(|i| chain.exit_rate(i)).fold(0.0f64, f64::max) * 1.05;
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        for (i, x) in next.iter_mut().enumerate() {
            *x = pi[i] * (1.0 - chain.exit_rate(i) / lambda);
        }
        for i in 0..n {
            for t in chain.transitions(i) {
                next[t.to] += pi[i] * t.rate / lambda;
            }
        }
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if diff < tol {
            break;
        }
    }
    pi
}
