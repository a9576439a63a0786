//! Finite window of the state space and its generator.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::DMatrix;

use super::OracleError;
use crate::model::{ModelParams, Opinion, PressureList};

/// One `(b, o)` jump out of a state. Jumps whose clamped image equals the
/// source are not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub to: usize,
    pub rate: f64,
    pub actor: usize,
    pub opinion: Opinion,
}

/// All `u ∈ S` with `max |u(a)| ≤ cap`, in lexicographic order.
pub fn enumerate_states(n_actors: usize, cap: i64) -> Vec<PressureList> {
    let mut out = Vec::new();
    let mut cur = vec![-cap; n_actors];
    if n_actors == 0 {
        return out;
    }
    loop {
        if cur.contains(&0) {
            out.push(PressureList::new(cur.clone()));
        }
        // odometer increment, last coordinate fastest
        let mut k = n_actors;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < cap {
                cur[k] += 1;
                break;
            }
            cur[k] = -cap;
        }
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedChain {
    params: ModelParams,
    cap: i64,
    states: Vec<PressureList>,
    index: HashMap<PressureList, usize>,
    transitions: Vec<Vec<Transition>>,
    exit_rates: Vec<f64>,
}

/// Jump image with every coordinate saturated at `±cap`.
fn clamped_image(u: &PressureList, b: usize, o: Opinion, cap: i64) -> PressureList {
    let s = o.sign();
    let v = u
        .values()
        .iter()
        .enumerate()
        .map(|(a, &x)| if a == b { 0 } else { (x + s).clamp(-cap, cap) })
        .collect();
    PressureList::new(v)
}

/// Generator of the chain truncated to `max |u(a)| ≤ cap` with saturating
/// boundary and self-loops dropped.
pub fn build_generator(p: &ModelParams, cap: i64) -> Result<TruncatedChain, OracleError> {
    if cap < 1 {
        return Err(OracleError::Degenerate(cap));
    }
    let states = enumerate_states(p.n_actors(), cap);
    let index: HashMap<PressureList, usize> = states
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    let beta = p.beta();
    let mut transitions = Vec::with_capacity(states.len());
    let mut exit_rates = Vec::with_capacity(states.len());
    for u in &states {
        let mut row = Vec::with_capacity(2 * p.n_actors());
        let mut q = 0.0;
        for b in 0..p.n_actors() {
            for o in Opinion::BOTH {
                let v = clamped_image(u, b, o, cap);
                if &v == u {
                    continue;
                }
                let to = *index.get(&v).expect("clamped image leaves the window");
                let rate = (beta * (o.sign() * u.get(b)) as f64).exp();
                q += rate;
                row.push(Transition {
                    to,
                    rate,
                    actor: b,
                    opinion: o,
                });
            }
        }
        transitions.push(row);
        exit_rates.push(q);
    }
    Ok(TruncatedChain {
        params: *p,
        cap,
        states,
        index,
        transitions,
        exit_rates,
    })
}

impl TruncatedChain {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn cap(&self) -> i64 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[PressureList] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &PressureList {
        &self.states[i]
    }

    pub fn index_of(&self, u: &PressureList) -> Option<usize> {
        self.index.get(u).copied()
    }

    pub fn transitions(&self, i: usize) -> &[Transition] {
        &self.transitions[i]
    }

    /// Total rate out of state `i` inside the window (self-loops excluded).
    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit_rates[i]
    }

    /// Merged off-diagonal rate from `i` to `j`.
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.transitions[i]
            .iter()
            .filter(|t| t.to == j)
            .map(|t| t.rate)
            .sum()
    }

    pub fn generator_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut q = DMatrix::zeros(n, n);
        for (i, row) in self.transitions.iter().enumerate() {
            for t in row {
                q[(i, t.to)] += t.rate;
            }
            q[(i, i)] = -self.exit_rates[i];
        }
        q
    }

    pub fn embedded_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut p = DMatrix::zeros(n, n);
        for (i, row) in self.transitions.iter().enumerate() {
            for t in row {
                p[(i, t.to)] += t.rate / self.exit_rates[i];
            }
        }
        p
    }

    /// `true` iff every state reaches every other.
    pub fn is_irreducible(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return false;
        }
        let forward = self.reach(0, false);
        let backward = self.reach(0, true);
        forward.iter().all(|&x| x) && backward.iter().all(|&x| x) && n > 1
    }

    fn reach(&self, from: usize, reverse: bool) -> Vec<bool> {
        let n = self.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in self.transitions.iter().enumerate() {
            for t in row {
                if reverse {
                    adj[t.to].push(i);
                } else {
                    adj[i].push(t.to);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Indices of the closed class containing the zero state. Saturation
    /// makes some boundary states transient; this fails unless the class is
    /// closed and reachable from every state.
    pub fn recurrent_class(&self) -> Result<Vec<usize>, OracleError> {
        let zero = self
            .index_of(&PressureList::zeros(self.params.n_actors()))
            .ok_or(OracleError::Reducible)?;
        let fwd = self.reach(zero, false);
        let bwd = self.reach(zero, true);
        if !bwd.iter().all(|&x| x) {
            return Err(OracleError::Reducible);
        }
        // everything reaches zero, so the forward set is the closed class
        let class: Vec<usize> = (0..self.len()).filter(|&i| fwd[i] && bwd[i]).collect();
        if class.len() < 2 {
            return Err(OracleError::Reducible);
        }
        Ok(class)
    }

    /// States from which some state in `target` is reachable.
    pub(crate) fn can_reach(&self, target: &[bool]) -> Vec<bool> {
        let n = self.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, row) in self.transitions.iter().enumerate() {
            for t in row {
                rev[t.to].push(i);
            }
        }
        let mut seen = target.to_vec();
        let mut stack: Vec<usize> = (0..n).filter(|&i| target[i]).collect();
        while let Some(i) = stack.pop() {
            for &j in &rev[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// CSV with one row per state, columns `u1..uN`.
    pub fn write_states_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.params.n_actors())
            .map(|a| format!("u{a}"))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for s in &self.states {
            let row: Vec<String> = s.values().iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// CSV of generator triplets `row,col,rate` (0-based indices into the
    /// state CSV), diagonal included.
    pub fn write_triplets_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,rate")?;
        for (i, row) in self.transitions.iter().enumerate() {
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for t in row {
                match merged.iter_mut().find(|(j, _)| *j == t.to) {
                    Some((_, r)) => *r += t.rate,
                    None => merged.push((t.to, t.rate)),
                }
            }
            merged.push((i, -self.exit_rates[i]));
            merged.sort_by_key(|(j, _)| *j);
            for (j, r) in merged {
                writeln!(w, "{i},{j},{r}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(v: &[i64]) -> PressureList {
        PressureList::new(v.to_vec())
    }

    #[test]
    fn enumeration_counts() {
        // brute force over {-1,0,1}^3
        let mut brute = 0;
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    if a == 0 || b == 0 || c == 0 {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(brute, 19);
        assert_eq!(enumerate_states(3, 1).len(), 19);
        assert_eq!(enumerate_states(3, 0), vec![PressureList::zeros(3)]);
        for (n, m) in [(3usize, 2i64), (3, 4), (4, 2), (4, 3), (5, 1)] {
            let want = (2 * m + 1).pow(n as u32) - (2 * m).pow(n as u32);
            assert_eq!(enumerate_states(n, m).len() as i64, want, "N={n} M={m}");
        }
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let s = enumerate_states(4, 2);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s[0], pl(&[-2, -2, -2, 0]));
    }

    #[test]
    fn zero_cap_is_degenerate() {
        let p = ModelParams::new(3, 1.0).unwrap();
        assert!(matches!(
            build_generator(&p, 0),
            Err(OracleError::Degenerate(0))
        ));
    }

    #[test]
    fn uniform_rates_at_zero_beta() {
        let p = ModelParams::new(3, 0.0).unwrap();
        let c = build_generator(&p, 2).unwrap();
        let q = c.generator_dense();
        for i in 0..c.len() {
            let row: f64 = q.row(i).iter().sum();
            assert!(row.abs() < 1e-12);
            assert!((0..c.len()).filter(|&j| j != i).all(|j| q[(i, j)] >= 0.0));
        }
        // interior state: no jump reaches the boundary
        let i = c.index_of(&pl(&[0, 1, 0])).unwrap();
        assert_eq!(c.transitions(i).len(), 6);
        assert!(c.transitions(i).iter().all(|t| t.rate == 1.0));
        assert_eq!(q[(i, i)], -6.0);
    }

    #[test]
    fn clamping_examples() {
        let p = ModelParams::new(3, 1.0).unwrap();
        let c = build_generator(&p, 2).unwrap();
        let i = c.index_of(&pl(&[0, 1, 2])).unwrap();
        let j = c.index_of(&pl(&[1, 2, 0])).unwrap();
        let t: Vec<_> = c
            .transitions(i)
            .iter()
            .filter(|t| t.actor == 2 && t.opinion == Opinion::Plus)
            .collect();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].to, j);
        assert!((t[0].rate - 2f64.exp()).abs() < 1e-12);
        // (0,2,2) with actor 1 saying +1 saturates back onto itself
        let k = c.index_of(&pl(&[0, 2, 2])).unwrap();
        assert!(!c
            .transitions(k)
            .iter()
            .any(|t| t.actor == 0 && t.opinion == Opinion::Plus));
        assert!(c.transitions(k).iter().all(|t| t.to != k));
        let expected_q: f64 = 2.0 * (2.0 * (2.0f64.cosh())) + 1.0;
        assert!((c.exit_rate(k) - expected_q).abs() < 1e-12);
    }

    #[test]
    fn embedded_rows_are_stochastic() {
        let p = ModelParams::new(3, 1.5).unwrap();
        let c = build_generator(&p, 3).unwrap();
        let e = c.embedded_dense();
        for i in 0..c.len() {
            let s: f64 = e.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let class = c.recurrent_class().unwrap();
        assert!(class.len() < c.len());
        // both extremes at once cannot be produced by a saturating jump
        let i = c.index_of(&pl(&[-3, 3, 0])).unwrap();
        assert!(!class.contains(&i));
        assert!(class.contains(&c.index_of(&PressureList::ladder(3)).unwrap()));
    }

    #[test]
    fn exports_have_expected_shape() {
        let p = ModelParams::new(3, 0.0).unwrap();
        let c = build_generator(&p, 1).unwrap();
        let mut s = Vec::new();
        c.write_states_csv(&mut s).unwrap();
        let s = String::from_utf8(s).unwrap();
        assert_eq!(s.lines().count(), 20);
        assert_eq!(s.lines().next().unwrap(), "u1,u2,u3");
        let mut t = Vec::new();
        c.write_triplets_csv(&mut t).unwrap();
        let t = String::from_utf8(t).unwrap();
        let mut row_sums = vec![0.0; c.len()];
        for line in t.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let i: usize = f[0].parse().unwrap();
            row_sums[i] += f[2].parse::<f64>().unwrap();
        }
        assert!(row_sums.iter().all(|s| s.abs() < 1e-12));
    }
}
