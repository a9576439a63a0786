//! Exact probability that the first `m` jumps are all admissible.

use super::{is_admissible, OracleError, TruncatedChain};
use crate::model::PressureList;

/// Propagates the start mass through the sub-stochastic kernel that keeps
/// only admissible jumps and returns the surviving mass after `m` steps.
pub fn m_event_probability(
    chain: &TruncatedChain,
    start: &PressureList,
    m: usize,
) -> Result<f64, OracleError> {
    let i0 = chain
        .index_of(start)
        .ok_or_else(|| OracleError::OutsideWindow(start.to_string()))?;
    let mut d = vec![0.0; chain.len()];
    d[i0] = 1.0;
    let mut next = vec![0.0; chain.len()];
    for _ in 0..m {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, &mass) in d.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let u = chain.state(i);
            let q = chain.exit_rate(i);
            for t in chain.transitions(i) {
                if is_admissible(u, t.actor, t.opinion) {
                    next[t.to] += mass * t.rate / q;
                }
            }
        }
        std::mem::swap(&mut d, &mut next);
    }
    Ok(d.iter().sum())
}
