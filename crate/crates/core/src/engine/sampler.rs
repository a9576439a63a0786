//! Single-event samplers.
//!
//! The direct scheme races the `2N` exponential clocks in log domain. The
//! thinning scheme decodes marks of a unit-rate Poisson process in the plane
//! through the lower band `[0, q^<(u))`, the dead band `[q^<(u), λ)` and the
//! upper band `[λ, λ + q^>(u))`.

use rand::Rng;
use rand_distr::Exp1;

use super::SimError;
use crate::model::{raw_log_rate, ModelParams, Opinion, PressureList, DIRECT_EXP_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub dt: f64,
    pub actor: usize,
    pub opinion: Opinion,
}

/// Diagnostics of one thinning draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningStep {
    pub step: Step,
    /// Marks of the dominating process that fell in the dead band.
    pub rejected: u64,
    /// `true` when the accepted mark fell in the lower band.
    pub lower_band: bool,
}

/// Reusable buffer for the direct sampler. Pair `k` is actor `k / 2` with
/// opinion `+1` for even `k`, `-1` for odd `k`, which fixes the tie-breaking
/// order (actor index first, `+1` before `-1`).
#[derive(Debug, Clone, Default)]
pub(crate) struct DirectScratch {
    weights: Vec<f64>,
}

#[inline]
fn pair(k: usize) -> (usize, Opinion) {
    (
        k / 2,
        if k.is_multiple_of(2) {
            Opinion::Plus
        } else {
            Opinion::Minus
        },
    )
}

impl DirectScratch {
    pub(crate) fn sample<R: Rng + ?Sized>(
        &mut self,
        beta: f64,
        u: &PressureList,
        rng: &mut R,
    ) -> Result<Step, SimError> {
        let n = u.len();
        self.weights.clear();
        let mut max = f64::NEG_INFINITY;
        let mut max_abs = 0.0f64;
        for &x in u.values() {
            for o in Opinion::BOTH {
                let l = raw_log_rate(beta, x, o);
                max = max.max(l);
                max_abs = max_abs.max(l.abs());
                self.weights.push(l);
            }
        }
        // Weights are rates scaled by e^{-shift}.
        let shift = if max_abs <= DIRECT_EXP_THRESHOLD {
            0.0
        } else {
            max
        };
        let mut total = 0.0;
        for w in self.weights.iter_mut() {
            *w = (*w - shift).exp();
            total += *w;
        }
        let e: f64 = rng.sample(Exp1);
        let dt = e / total * (-shift).exp();
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::TimeResolution);
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (k, &w) in self.weights.iter().enumerate() {
            acc += w;
            if target < acc {
                chosen = Some(k);
                break;
            }
        }
        // Rounding can leave target a hair above the accumulated total.
        let k = chosen.unwrap_or_else(|| {
            (0..2 * n)
                .rev()
                .find(|&k| self.weights[k] > 0.0)
                .unwrap_or(0)
        });
        let (actor, opinion) = pair(k);
        Ok(Step { dt, actor, opinion })
    }
}

/// Exact next event by the exponential race.
pub fn next_event_direct<R: Rng + ?Sized>(
    p: &ModelParams,
    u: &PressureList,
    rng: &mut R,
) -> Result<Step, SimError> {
    p.check_len(u)?;
    DirectScratch::default().sample(p.beta(), u, rng)
}

/// Rates of actors with `|u(a)| < N` and `|u(a)| ≥ N`.
pub fn band_rates(p: &ModelParams, u: &PressureList) -> (f64, f64) {
    let n = p.n_actors() as i64;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for &x in u.values() {
        let y = p.beta() * x as f64;
        let r = y.exp() + (-y).exp();
        if x.abs() < n {
            lower += r;
        } else {
            upper += r;
        }
    }
    (lower, upper)
}

/// Finds the pair whose interval of the partition contains `r`, scanning actors
/// of one band with the `-1` interval before the `+1` interval.
fn decode(beta: f64, u: &PressureList, n: i64, lower: bool, r: f64) -> (usize, Opinion) {
    let mut acc = 0.0;
    let mut last = None;
    for (a, &x) in u.values().iter().enumerate() {
        if (x.abs() < n) != lower {
            continue;
        }
        let y = beta * x as f64;
        for (o, w) in [(Opinion::Minus, (-y).exp()), (Opinion::Plus, y.exp())] {
            acc += w;
            last = Some((a, o));
            if r < acc {
                return (a, o);
            }
        }
    }
    last.expect("decode called on an empty band")
}

pub(crate) fn thinning_sample<R: Rng + ?Sized>(
    p: &ModelParams,
    u: &PressureList,
    rng: &mut R,
) -> Result<ThinningStep, SimError> {
    let lambda = p.lower_band_bound();
    let (q_lower, q_upper) = band_rates(p, u);
    let dominating = lambda + q_upper;
    if !dominating.is_finite() {
        return Err(SimError::RateOverflow);
    }
    let n = p.n_actors() as i64;
    let mut dt = 0.0;
    let mut rejected = 0u64;
    loop {
        let e: f64 = rng.sample(Exp1);
        dt += e / dominating;
        let r = rng.random::<f64>() * dominating;
        if r < q_lower {
            let (actor, opinion) = decode(p.beta(), u, n, true, r);
            return Ok(ThinningStep {
                step: Step { dt, actor, opinion },
                rejected,
                lower_band: true,
            });
        }
        if r >= lambda && q_upper > 0.0 {
            let (actor, opinion) = decode(p.beta(), u, n, false, r - lambda);
            return Ok(ThinningStep {
                step: Step { dt, actor, opinion },
                rejected,
                lower_band: false,
            });
        }
        rejected += 1;
    }
}

/// Exact next event by Poisson-plane thinning; equal in law to
/// [`next_event_direct`].
pub fn next_event_thinning<R: Rng + ?Sized>(
    p: &ModelParams,
    u: &PressureList,
    rng: &mut R,
) -> Result<ThinningStep, SimError> {
    p.check_len(u)?;
    thinning_sample(p, u, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::f64::consts::E;

    fn pl(v: &[i64]) -> PressureList {
        PressureList::new(v.to_vec())
    }

    #[test]
    fn band_rates_example() {
        let p = ModelParams::new(3, 1.0).unwrap();
        let (lo, hi) = band_rates(&p, &pl(&[0, 1, 5]));
        assert!((lo - (2.0 + E + 1.0 / E)).abs() < 1e-12);
        assert!((hi - (5f64.exp() + (-5f64).exp())).abs() < 1e-9);
        let (_, hi) = band_rates(&p, &pl(&[0, 2, -2]));
        assert_eq!(hi, 0.0);
    }

    #[test]
    fn lower_band_never_exceeds_lambda() {
        let p = ModelParams::new(4, 2.0).unwrap();
        let (lo, _) = band_rates(&p, &pl(&[0, 3, -3, 3]));
        assert!(lo <= p.lower_band_bound());
    }

    #[test]
    fn uniform_rates_at_zero_beta() {
        let p = ModelParams::new(3, 0.0).unwrap();
        let u = pl(&[0, 3, -1]);
        let mut rng = stream(11, 0);
        let mut counts = [0usize; 6];
        let mut dt_sum = 0.0;
        let n = 60_000;
        for _ in 0..n {
            let s = next_event_direct(&p, &u, &mut rng).unwrap();
            counts[2 * s.actor + (s.opinion == Opinion::Minus) as usize] += 1;
            dt_sum += s.dt;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 1.0 / 6.0).abs() < 0.01, "{f}");
        }
        // sd of the mean is (1/6)/sqrt(n)
        assert!((dt_sum / n as f64 - 1.0 / 6.0).abs() < 4.0 * (1.0 / 6.0) / (n as f64).sqrt());
    }

    #[test]
    fn direct_selection_matches_normalized_rates() {
        let p = ModelParams::new(3, 1.0).unwrap();
        let u = pl(&[0, 1, 2]);
        let q: f64 = u
            .values()
            .iter()
            .map(|&x| (x as f64).exp() + (-(x as f64)).exp())
            .sum();
        let want = E * E / q;
        let mut rng = stream(5, 1);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let s = next_event_direct(&p, &u, &mut rng).unwrap();
                s.actor == 2 && s.opinion == Opinion::Plus
            })
            .count();
        let f = hits as f64 / n as f64;
        let se = (want * (1.0 - want) / n as f64).sqrt();
        assert!((f - want).abs() < 4.0 * se, "{f} vs {want}");
    }

    #[test]
    fn thinning_dead_band_is_rejected() {
        // beta large: lambda dwarfs q^< at (0,0,0), so most marks are rejected
        let p = ModelParams::new(3, 2.0).unwrap();
        let mut rng = stream(3, 0);
        let mut rejected = 0;
        for _ in 0..1000 {
            let s = next_event_thinning(&p, &pl(&[0, 0, 0]), &mut rng).unwrap();
            assert!(s.lower_band);
            rejected += s.rejected;
        }
        // acceptance probability 6 / lambda
        let lambda = p.lower_band_bound();
        let expected = 1000.0 * (lambda / 6.0 - 1.0);
        assert!((rejected as f64 - expected).abs() < 0.1 * expected);
    }

    #[test]
    fn thinning_uses_upper_band_for_large_pressures() {
        let p = ModelParams::new(3, 1.0).unwrap();
        let u = pl(&[0, 1, 5]);
        let mut rng = stream(9, 0);
        let n = 20_000;
        let mut upper = 0;
        for _ in 0..n {
            let s = next_event_thinning(&p, &u, &mut rng).unwrap();
            if !s.lower_band {
                upper += 1;
                assert_eq!(s.step.actor, 2);
            }
        }
        let (lo, hi) = band_rates(&p, &u);
        let want = hi / (lo + hi);
        let f = upper as f64 / n as f64;
        assert!((f - want).abs() < 0.01, "{f} vs {want}");
    }
}
