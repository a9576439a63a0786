//! Pressure lists, the jump map and rate arithmetic.
//!
//! A state of the network is the list of social pressures `u(a)` exerted
//! on each actor. Every admissible state has at least one actor with zero
//! pressure. Actors are indexed from `0` in this API; exported files use
//! 1-based indices.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exponents at or below this magnitude are summed directly; larger ones go
/// through the max-shifted log-sum-exp.
pub const DIRECT_EXP_THRESHOLD: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("need at least 3 actors, got {0}")]
    TooFewActors(usize),
    #[error("polarization coefficient must be finite and nonnegative, got {0}")]
    InvalidBeta(f64),
    #[error("pressure list has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("actor index {index} out of range for {n_actors} actors")]
    ActorOutOfRange { index: usize, n_actors: usize },
    #[error("pressure list {0} has no actor with zero pressure")]
    NotInStateSpace(PressureList),
    #[error("permutation is not a bijection of 0..{0}")]
    NotAPermutation(usize),
    #[error("opinion must be +1 or -1, got {0}")]
    InvalidOpinion(i64),
}

/// Number of actors and polarization coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n_actors: usize,
    beta: f64,
}

impl ModelParams {
    pub fn new(n_actors: usize, beta: f64) -> Result<Self, ModelError> {
        if n_actors < 3 {
            return Err(ModelError::TooFewActors(n_actors));
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(ModelError::InvalidBeta(beta));
        }
        Ok(Self { n_actors, beta })
    }

    pub fn n_actors(&self) -> usize {
        self.n_actors
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Bound on the total rate of actors with `|u(a)| < N`:
    /// `N (e^{β(N-1)} + e^{-β(N-1)})`.
    pub fn lower_band_bound(&self) -> f64 {
        let x = self.beta * (self.n_actors as f64 - 1.0);
        self.n_actors as f64 * (x.exp() + (-x).exp())
    }

    /// Probability of an admissible move from the worst-case list `(1,0,...,0)`:
    /// `e^β / (e^β + e^{-β} + 2(N-1))`.
    pub fn zeta(&self) -> f64 {
        let b = self.beta;
        1.0 / (1.0 + (-2.0 * b).exp() + 2.0 * (self.n_actors as f64 - 1.0) * (-b).exp())
    }

    pub fn check_len(&self, u: &PressureList) -> Result<(), ModelError> {
        if u.len() != self.n_actors {
            return Err(ModelError::Dimension {
                expected: self.n_actors,
                got: u.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Opinion {
    Minus,
    Plus,
}

impl Opinion {
    pub const BOTH: [Opinion; 2] = [Opinion::Plus, Opinion::Minus];

    pub fn sign(self) -> i64 {
        match self {
            Opinion::Plus => 1,
            Opinion::Minus => -1,
        }
    }

    pub fn from_sign(s: i64) -> Result<Self, ModelError> {
        match s {
            1 => Ok(Opinion::Plus),
            -1 => Ok(Opinion::Minus),
            other => Err(ModelError::InvalidOpinion(other)),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Opinion::Plus => Opinion::Minus,
            Opinion::Minus => Opinion::Plus,
        }
    }
}

impl fmt::Display for Opinion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.sign())
    }
}

/// Signed integer pressure per actor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PressureList(Vec<i64>);

impl PressureList {
    pub fn new(values: Vec<i64>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// The ladder `(0, 1, ..., N-1)`.
    pub fn ladder(n: usize) -> Self {
        Self((0..n as i64).collect())
    }

    /// `(1, 0, ..., 0)`.
    pub fn single_one(n: usize) -> Self {
        let mut v = vec![0; n];
        v[0] = 1;
        Self(v)
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<i64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, a: usize) -> i64 {
        self.0[a]
    }

    pub fn max_abs(&self) -> i64 {
        self.0.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// In-place jump map; the caller guarantees `a` is in range.
    pub(crate) fn jump_in_place(&mut self, a: usize, o: Opinion) {
        let s = o.sign();
        for (b, x) in self.0.iter_mut().enumerate() {
            if b == a {
                *x = 0;
            } else {
                *x += s;
            }
        }
    }
}

impl fmt::Display for PressureList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for PressureList {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

/// Membership and class flags for a list of `S`. Classes overlap and are
/// reported independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassFlags {
    pub is_zero: bool,
    pub ladder_plus: bool,
    pub ladder_minus: bool,
    pub consensus_plus: bool,
    pub consensus_minus: bool,
    pub s_plus: bool,
    pub s_minus: bool,
    /// Largest valid staging length for the positive staged set.
    pub n_plus: Option<usize>,
    /// Largest valid staging length for the negative staged set.
    pub n_minus: Option<usize>,
}

impl ClassFlags {
    pub fn ladder(&self) -> bool {
        self.ladder_plus || self.ladder_minus
    }

    pub fn consensus(&self) -> bool {
        self.consensus_plus || self.consensus_minus
    }

    /// Maximal staging length over both signs, when either staged set holds.
    pub fn n_of_u(&self) -> Option<usize> {
        match (self.n_plus, self.n_minus) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            is_zero: self.is_zero,
            ladder_plus: self.ladder_minus,
            ladder_minus: self.ladder_plus,
            consensus_plus: self.consensus_minus,
            consensus_minus: self.consensus_plus,
            s_plus: self.s_minus,
            s_minus: self.s_plus,
            n_plus: self.n_minus,
            n_minus: self.n_plus,
        }
    }
}

/// `true` iff some actor has pressure exactly zero.
pub fn validate_membership(p: &ModelParams, u: &PressureList) -> Result<bool, ModelError> {
    p.check_len(u)?;
    Ok(in_state_space(u))
}

pub(crate) fn in_state_space(u: &PressureList) -> bool {
    u.values().contains(&0)
}

fn require_member(p: &ModelParams, u: &PressureList) -> Result<(), ModelError> {
    if !validate_membership(p, u)? {
        return Err(ModelError::NotInStateSpace(u.clone()));
    }
    Ok(())
}

fn check_actor(p: &ModelParams, a: usize) -> Result<(), ModelError> {
    if a >= p.n_actors() {
        return Err(ModelError::ActorOutOfRange {
            index: a,
            n_actors: p.n_actors(),
        });
    }
    Ok(())
}

/// Actor `a` resets to zero; everyone else shifts by `o`.
pub fn apply_jump(
    p: &ModelParams,
    u: &PressureList,
    a: usize,
    o: Opinion,
) -> Result<PressureList, ModelError> {
    require_member(p, u)?;
    check_actor(p, a)?;
    let mut v = u.clone();
    v.jump_in_place(a, o);
    Ok(v)
}

/// Natural log of the rate of pair `(a, o)`: `β o u(a)`.
pub fn log_rate(
    p: &ModelParams,
    u: &PressureList,
    a: usize,
    o: Opinion,
) -> Result<f64, ModelError> {
    p.check_len(u)?;
    check_actor(p, a)?;
    Ok(raw_log_rate(p.beta(), u.get(a), o))
}

#[inline]
pub(crate) fn raw_log_rate(beta: f64, pressure: i64, o: Opinion) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    beta * (o.sign() * pressure) as f64
}

/// Log of the total jump rate `q_β(u) = Σ_a (e^{βu(a)} + e^{-βu(a)})`.
pub fn log_total_rate(p: &ModelParams, u: &PressureList) -> Result<f64, ModelError> {
    require_member(p, u)?;
    Ok(raw_log_total_rate(p.beta(), u))
}

pub(crate) fn raw_log_total_rate(beta: f64, u: &PressureList) -> f64 {
    let exps = u
        .values()
        .iter()
        .flat_map(|&x| Opinion::BOTH.map(|o| raw_log_rate(beta, x, o)));
    log_sum_exp(exps)
}

/// Log-sum-exp that exponentiates directly when every exponent is small and
/// shifts by the running maximum otherwise.
pub fn log_sum_exp<I>(xs: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let it = xs.into_iter();
    let max = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let max_abs = it.clone().fold(0.0f64, |m, x| m.max(x.abs()));
    if max_abs <= DIRECT_EXP_THRESHOLD {
        it.map(f64::exp).sum::<f64>().ln()
    } else {
        max + it.map(|x| (x - max).exp()).sum::<f64>().ln()
    }
}

/// `q_β(u)` as a plain float. Overflows to infinity for very large `β|u|`.
pub fn total_rate(beta: f64, u: &PressureList) -> f64 {
    u.values()
        .iter()
        .map(|&x| {
            let y = beta * x as f64;
            y.exp() + (-y).exp()
        })
        .sum()
}

fn is_ladder_with_sign(u: &PressureList, sign: i64) -> bool {
    let n = u.len() as i64;
    let mut seen = vec![false; u.len()];
    for &x in u.values() {
        let k = sign * x;
        if !(0..n).contains(&k) || seen[k as usize] {
            return false;
        }
        seen[k as usize] = true;
    }
    true
}

/// Largest `n ∈ {1..N-1}` with pressures `1..n` (times `sign`) all realized
/// by distinct actors and every pressure `sign·u(a) ≥ -(n-1)`.
fn staged_length(u: &PressureList, sign: i64) -> Option<usize> {
    let n_actors = u.len();
    let vals: Vec<i64> = u.values().iter().map(|&x| sign * x).collect();
    let min = *vals.iter().min()?;
    let mut best = None;
    for n in 1..n_actors {
        // pressures are integers so distinct values imply distinct actors
        let realized = (1..=n as i64).all(|j| vals.contains(&j));
        if !realized {
            break;
        }
        if min >= -(n as i64 - 1) {
            best = Some(n);
        }
    }
    best
}

/// Class membership of `u`.
pub fn classify(p: &ModelParams, u: &PressureList) -> Result<ClassFlags, ModelError> {
    require_member(p, u)?;
    Ok(classify_unchecked(u))
}

pub(crate) fn classify_unchecked(u: &PressureList) -> ClassFlags {
    let is_zero = u.is_zero();
    let consensus_plus = !is_zero && u.values().iter().all(|&x| x >= 0);
    let consensus_minus = !is_zero && u.values().iter().all(|&x| x <= 0);
    let n_plus = staged_length(u, 1);
    let n_minus = staged_length(u, -1);
    ClassFlags {
        is_zero,
        ladder_plus: is_ladder_with_sign(u, 1),
        ladder_minus: is_ladder_with_sign(u, -1),
        consensus_plus,
        consensus_minus,
        s_plus: n_plus.is_some(),
        s_minus: n_minus.is_some(),
        n_plus,
        n_minus,
    }
}

pub(crate) fn is_ladder(u: &PressureList) -> bool {
    is_ladder_with_sign(u, 1) || is_ladder_with_sign(u, -1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Symmetry {
    Negate,
    /// `result(a) = u(sigma[a])`.
    Permute(Vec<usize>),
}

pub fn symmetry_transform(u: &PressureList, t: &Symmetry) -> Result<PressureList, ModelError> {
    match t {
        Symmetry::Negate => Ok(PressureList(u.values().iter().map(|x| -x).collect())),
        Symmetry::Permute(sigma) => {
            let n = u.len();
            if sigma.len() != n {
                return Err(ModelError::NotAPermutation(n));
            }
            let mut seen = vec![false; n];
            for &s in sigma {
                if s >= n || seen[s] {
                    return Err(ModelError::NotAPermutation(n));
                }
                seen[s] = true;
            }
            Ok(PressureList(sigma.iter().map(|&s| u.get(s)).collect()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(v: &[i64]) -> PressureList {
        PressureList::new(v.to_vec())
    }

    fn p3(beta: f64) -> ModelParams {
        ModelParams::new(3, beta).unwrap()
    }

    #[test]
    fn params_reject_bad_inputs() {
        assert_eq!(ModelParams::new(2, 1.0), Err(ModelError::TooFewActors(2)));
        assert!(matches!(
            ModelParams::new(3, -0.1),
            Err(ModelError::InvalidBeta(_))
        ));
        assert!(ModelParams::new(3, f64::NAN).is_err());
    }

    #[test]
    fn membership_examples() {
        let p = p3(1.0);
        assert!(validate_membership(&p, &pl(&[0, 0, 0])).unwrap());
        assert!(validate_membership(&p, &pl(&[0, 1, 2])).unwrap());
        assert!(!validate_membership(&p, &pl(&[1, 2, 3])).unwrap());
        assert!(matches!(
            validate_membership(&p, &pl(&[0, 1])),
            Err(ModelError::Dimension {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn jump_examples() {
        let p = p3(1.0);
        assert_eq!(
            apply_jump(&p, &pl(&[0, 2, -1]), 1, Opinion::Plus).unwrap(),
            pl(&[1, 0, 0])
        );
        assert_eq!(
            apply_jump(&p, &pl(&[0, 0, 0]), 0, Opinion::Minus).unwrap(),
            pl(&[0, -1, -1])
        );
        assert_eq!(
            apply_jump(&p, &pl(&[0, 1, 2]), 2, Opinion::Plus).unwrap(),
            pl(&[1, 2, 0])
        );
        assert!(matches!(
            apply_jump(&p, &pl(&[0, 1, 2]), 3, Opinion::Plus),
            Err(ModelError::ActorOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn log_rate_examples() {
        let u = pl(&[0, 1, 2]);
        assert_eq!(log_rate(&p3(0.0), &u, 2, Opinion::Minus).unwrap(), 0.0);
        let ln2 = 2f64.ln();
        let r = log_rate(&p3(ln2), &u, 2, Opinion::Plus).unwrap();
        assert!((r - 2.0 * ln2).abs() < 1e-15);
        assert!((r.exp() - 4.0).abs() < 1e-12);
        let r = log_rate(&p3(1.0), &pl(&[0, 0, -3]), 2, Opinion::Plus).unwrap();
        assert_eq!(r, -3.0);
    }

    #[test]
    fn log_total_rate_examples() {
        let e = std::f64::consts::E;
        let r = log_total_rate(&p3(0.0), &pl(&[0, 4, -2])).unwrap();
        assert!((r - 6f64.ln()).abs() < 1e-14);
        let r = log_total_rate(&p3(1.0), &pl(&[0, 1, 2])).unwrap();
        let want = (2.0 + e + 1.0 / e + e * e + 1.0 / (e * e)).ln();
        assert!((r - want).abs() < 1e-14);
    }

    #[test]
    fn log_total_rate_large_exponent_is_finite() {
        // ln(e^50 + e^-50 + e + e^-1 + 2) = 50 + ln(1 + e^-100 + (e + e^-1 + 2) e^-50)
        let e = std::f64::consts::E;
        let oracle = 50.0 + ((-100f64).exp() + (e + 1.0 / e + 2.0) * (-50f64).exp()).ln_1p();
        let r = log_total_rate(&p3(1.0), &pl(&[0, 1, 50])).unwrap();
        assert!(r.is_finite());
        assert!((r - oracle).abs() < 1e-13, "{r} vs {oracle}");
        // far beyond f64 exponent range
        let r = log_total_rate(&p3(1.0), &pl(&[0, 1, 5000])).unwrap();
        assert!((r - 5000.0).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let p = p3(1.0);
        let c = classify(&p, &pl(&[0, 1, 2])).unwrap();
        assert!(c.ladder_plus && c.consensus_plus && c.s_plus);
        assert_eq!(c.n_plus, Some(2));
        assert!(!c.ladder_minus && !c.consensus_minus);

        let c = classify(&p, &pl(&[0, 0, 5])).unwrap();
        assert!(c.consensus_plus && !c.ladder_plus);

        let c = classify(&p, &pl(&[0, 0, 0])).unwrap();
        assert!(c.is_zero && !c.consensus() && !c.ladder() && !c.s_plus && !c.s_minus);

        assert!(matches!(
            classify(&p, &pl(&[1, 1, 1])),
            Err(ModelError::NotInStateSpace(_))
        ));
    }

    #[test]
    fn staged_sets_need_lower_bound() {
        // n = 1 requires every pressure >= 0, n = 2 would need a 2
        let c = classify_unchecked(&pl(&[0, 1, -1]));
        assert!(!c.s_plus && !c.s_minus);
        assert!(!c.consensus());
        assert_eq!(c.n_of_u(), None);

        // brute-force the definition for a handful of lists
        for v in [
            [0, 1, 0],
            [1, 0, -1],
            [0, 2, 1],
            [0, 1, 1],
            [-1, 0, -2],
            [2, 0, 0],
        ] {
            let u = pl(&v);
            let brute = (1..3usize)
                .filter(|&n| {
                    (1..=n as i64).all(|j| v.contains(&j))
                        && v.iter().all(|&x| x >= -(n as i64 - 1))
                })
                .max();
            assert_eq!(classify_unchecked(&u).n_plus, brute, "{u}");
        }
        assert_eq!(classify_unchecked(&pl(&[1, 0, -1, 2])).n_plus, Some(2));
    }

    #[test]
    fn symmetry_examples() {
        let u = pl(&[0, 1, 2]);
        assert_eq!(
            symmetry_transform(&u, &Symmetry::Negate).unwrap(),
            pl(&[0, -1, -2])
        );
        let s = Symmetry::Permute(vec![1, 2, 0]);
        assert_eq!(symmetry_transform(&u, &s).unwrap(), pl(&[1, 2, 0]));
        let w = pl(&[0, -4, 7]);
        let back = symmetry_transform(
            &symmetry_transform(&w, &Symmetry::Negate).unwrap(),
            &Symmetry::Negate,
        );
        assert_eq!(back.unwrap(), w);
        assert!(symmetry_transform(&u, &Symmetry::Permute(vec![0, 0, 1])).is_err());
        assert!(symmetry_transform(&u, &Symmetry::Permute(vec![0, 1])).is_err());
    }

    #[test]
    fn zeta_and_lambda() {
        let p = p3(0.0);
        assert!((p.zeta() - 1.0 / 6.0).abs() < 1e-15);
        assert!((p.lower_band_bound() - 6.0).abs() < 1e-12);
        let b: f64 = 1.3;
        let p = p3(b);
        let want = b.exp() / (b.exp() + (-b).exp() + 4.0);
        assert!((p.zeta() - want).abs() < 1e-15);
    }
}
