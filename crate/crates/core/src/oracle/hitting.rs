//! First-passage expectations and hitting-time laws.

use nalgebra::DMatrix;

use super::{OracleError, Stationary, TruncatedChain};
use crate::model::PressureList;

/// `E_u[T_A]` for every state, with `T_A` the first entrance time of the
/// continuous-time chain into `A`. Zero on `A`.
pub fn expected_hitting_times<F>(chain: &TruncatedChain, target: F) -> Result<Vec<f64>, OracleError>
where
    F: Fn(&PressureList) -> bool,
{
    let in_a: Vec<bool> = chain.states().iter().map(&target).collect();
    if !in_a.iter().any(|&x| x) {
        return Err(OracleError::EmptyTarget);
    }
    let reach = chain.can_reach(&in_a);
    if let Some(i) = reach.iter().position(|&r| !r) {
        return Err(OracleError::Unreachable(i));
    }
    let free: Vec<usize> = (0..chain.len()).filter(|&i| !in_a[i]).collect();
    let mut out = vec![0.0; chain.len()];
    if free.is_empty() {
        return Ok(out);
    }
    let mut pos = vec![usize::MAX; chain.len()];
    for (k, &i) in free.iter().enumerate() {
        pos[i] = k;
    }
    let m = free.len();
    let mut w = vec![0.0; m * m];
    let mut leak = vec![0.0; m];
    for (k, &i) in free.iter().enumerate() {
        for t in chain.transitions(i) {
            if in_a[t.to] {
                leak[k] += t.rate;
            } else {
                w[k * m + pos[t.to]] += t.rate;
            }
        }
    }
    let h = first_passage(w, leak, vec![1.0; m])?;
    for (k, &i) in free.iter().enumerate() {
        out[i] = h[k];
    }
    Ok(out)
}

/// Solves `d_i h_i - sum_j w_ij h_j = c_i` where `d_i = leak_i + sum_j w_ij`,
/// `w` is a row-major matrix of nonnegative weights with zero diagonal and
/// `leak_i >= 0` is the weight into the target. States are eliminated one at
/// a time with every pivot rebuilt as a sum of nonnegative terms, so the
/// solution keeps small componentwise relative error even when the answers
/// span many orders of magnitude.
fn first_passage(
    mut w: Vec<f64>,
    mut leak: Vec<f64>,
    mut c: Vec<f64>,
) -> Result<Vec<f64>, OracleError> {
    let m = leak.len();
    let mut d = vec![0.0; m];
    for k in (0..m).rev() {
        d[k] = leak[k] + (0..k).map(|j| w[k * m + j]).sum::<f64>();
        if !(d[k] > 0.0) {
            return Err(OracleError::Singular);
        }
        for i in 0..k {
            let f = w[i * m + k] / d[k];
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                if j != i {
                    w[i * m + j] += f * w[k * m + j];
                }
            }
            leak[i] += f * leak[k];
            c[i] += f * c[k];
        }
    }
    let mut h = vec![0.0; m];
    for k in 0..m {
        h[k] = (c[k] + (0..k).map(|j| w[k * m + j] * h[j]).sum::<f64>()) / d[k];
    }
    Ok(h)
}

/// Mean return time of the jump chain to each recurrent state, in steps
/// (NaN on transient states). One dense solve per state, so intended for
/// small windows.
pub fn expected_return_times_embedded(chain: &TruncatedChain) -> Result<Vec<f64>, OracleError> {
    let class = chain.recurrent_class()?;
    let p = chain.embedded_dense();
    let mut out = vec![f64::NAN; chain.len()];
    for &u in &class {
        let others: Vec<usize> = class.iter().copied().filter(|&i| i != u).collect();
        let m = others.len();
        let mut w = vec![0.0; m * m];
        let mut leak = vec![0.0; m];
        for (r, &i) in others.iter().enumerate() {
            leak[r] = p[(i, u)];
            for (c, &j) in others.iter().enumerate() {
                w[r * m + c] = p[(i, j)];
            }
        }
        let h = first_passage(w, leak, vec![1.0; m])?;
        out[u] = 1.0
            + others
                .iter()
                .enumerate()
                .map(|(k, &j)| p[(u, j)] * h[k])
                .sum::<f64>();
    }
    Ok(out)
}

/// `P_u(T_A > k·dt)` for `k = 1..=steps`, by repeated multiplication with
/// the exponential of the generator killed on `A`.
pub fn hitting_survival<F>(
    chain: &TruncatedChain,
    start: &PressureList,
    target: F,
    dt: f64,
    steps: usize,
) -> Result<Vec<f64>, OracleError>
where
    F: Fn(&PressureList) -> bool,
{
    let i0 = chain
        .index_of(start)
        .ok_or_else(|| OracleError::OutsideWindow(start.to_string()))?;
    let in_a: Vec<bool> = chain.states().iter().map(&target).collect();
    if in_a[i0] {
        return Ok(vec![0.0; steps]);
    }
    let free: Vec<usize> = (0..chain.len()).filter(|&i| !in_a[i]).collect();
    let mut pos = vec![usize::MAX; chain.len()];
    for (k, &i) in free.iter().enumerate() {
        pos[i] = k;
    }
    let m = free.len();
    let mut q = DMatrix::<f64>::zeros(m, m);
    for (k, &i) in free.iter().enumerate() {
        q[(k, k)] = -chain.exit_rate(i);
        for t in chain.transitions(i) {
            if !in_a[t.to] {
                q[(k, pos[t.to])] += t.rate;
            }
        }
    }
    let step = (q * dt).exp();
    let mut v = DMatrix::<f64>::zeros(1, m);
    v[(0, pos[i0])] = 1.0;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        v = &v * &step;
        out.push(v.iter().sum());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct KacReport {
    /// `max_u |μ̃(u) E[R̃(u)] − 1|`.
    pub max_error: f64,
    pub worst_state: usize,
}

pub fn kac_consistency(chain: &TruncatedChain, st: &Stationary) -> Result<KacReport, OracleError> {
    let ret = expected_return_times_embedded(chain)?;
    let mut max_error = 0.0;
    let mut worst_state = 0;
    for (i, r) in ret.iter().enumerate() {
        if r.is_nan() {
            continue;
        }
        let e = (st.mu_tilde[i] * r - 1.0).abs();
        if e > max_error {
            max_error = e;
            worst_state = i;
        }
    }
    Ok(KacReport {
        max_error,
        worst_state,
    })
}
