//! Exhaustive check that admissible moves drive every start to a ladder
//! within `3(N-1)` steps, stage by stage.

use crate::model::{classify_unchecked, is_ladder, ClassFlags, Opinion, PressureList};

use super::enumerate_states;

/// A move `(a, o)` is admissible at `u` when `|u(a)|` is maximal and
/// `o·u(a) ≥ 0`.
pub fn is_admissible(u: &PressureList, a: usize, o: Opinion) -> bool {
    let x = u.get(a);
    x.abs() == u.max_abs() && o.sign() * x >= 0
}

/// Admissible moves ordered by actor, `+1` before `-1`.
pub fn admissible_moves(u: &PressureList) -> Vec<(usize, Opinion)> {
    let m = u.max_abs();
    let mut out = Vec::new();
    for (a, &x) in u.values().iter().enumerate() {
        if x.abs() != m {
            continue;
        }
        for o in Opinion::BOTH {
            if o.sign() * x >= 0 {
                out.push((a, o));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub start: PressureList,
    pub moves: Vec<(usize, Opinion)>,
    pub stage: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub n_actors: usize,
    pub cap: i64,
    pub n_states_checked: usize,
    pub paths_checked: u64,
    /// Largest first-entrance step into the ladder set over all paths.
    pub max_steps_needed: usize,
    /// True iff `counterexample` is `None`.
    pub all_pass: bool,
    pub counterexample: Option<Counterexample>,
}

fn s_index(f: &ClassFlags, sign: i64) -> Option<usize> {
    if sign > 0 {
        f.n_plus
    } else {
        f.n_minus
    }
}

fn in_consensus(f: &ClassFlags, sign: i64) -> bool {
    if sign > 0 {
        f.consensus_plus
    } else {
        f.consensus_minus
    }
}

/// Checks one maximal path; returns the failing stage or the first ladder step.
fn check_path(
    n: usize,
    states: &[PressureList],
    moves: &[(usize, Opinion)],
) -> Result<usize, &'static str> {
    let start = &states[0];
    let mut seen = vec![false; n];
    for (a, &x) in start.values().iter().enumerate() {
        if x == 0 {
            seen[a] = true;
        }
    }
    let mut tau = None;
    let mut used = vec![false; n];
    for (k, &(a, _)) in moves.iter().enumerate() {
        if used[a] || seen[a] {
            tau = Some(k + 1);
            break;
        }
        used[a] = true;
    }
    let tau = match tau {
        Some(t) if t <= n => t,
        _ => return Err("tau"),
    };
    let fv = classify_unchecked(&states[tau]);
    if !(fv.s_plus || fv.s_minus) {
        return Err("sigma");
    }
    let mut ok_c = None;
    for sign in [1, -1] {
        if let Some(m) = s_index(&fv, sign) {
            let c = tau + m - 1;
            if c < states.len() && in_consensus(&classify_unchecked(&states[c]), sign) {
                ok_c = Some(c);
                break;
            }
        }
    }
    let c = ok_c.ok_or("consensus")?;
    let l = c + n - 1;
    if l >= states.len() || !is_ladder(&states[l]) {
        return Err("ladder");
    }
    let first = states.iter().position(is_ladder).expect("ladder reached");
    if !states[first..].iter().all(is_ladder) {
        return Err("closure");
    }
    Ok(first)
}

struct Walk {
    n: usize,
    depth: usize,
    states: Vec<PressureList>,
    moves: Vec<(usize, Opinion)>,
    paths: u64,
    max_first: usize,
}

impl Walk {
    fn run(&mut self) -> Option<&'static str> {
        if self.moves.len() == self.depth {
            self.paths += 1;
            return match check_path(self.n, &self.states, &self.moves) {
                Ok(first) => {
                    self.max_first = self.max_first.max(first);
                    None
                }
                Err(stage) => Some(stage),
            };
        }
        let u = self.states.last().unwrap().clone();
        for (a, o) in admissible_moves(&u) {
            let mut v = u.clone();
            v.jump_in_place(a, o);
            self.states.push(v);
            self.moves.push((a, o));
            if let Some(stage) = self.run() {
                return Some(stage);
            }
            self.states.pop();
            self.moves.pop();
        }
        None
    }
}

/// Walks every admissible path of length `3(N-1)` from every state with
/// `max |u(a)| ≤ cap`. Paths themselves are not truncated.
pub fn greedy_consensus_check(n_actors: usize, cap: i64) -> LemmaReport {
    let depth = 3 * (n_actors - 1);
    let starts = enumerate_states(n_actors, cap);
    let mut report = LemmaReport {
        n_actors,
        cap,
        n_states_checked: 0,
        paths_checked: 0,
        max_steps_needed: 0,
        all_pass: true,
        counterexample: None,
    };
    for s in starts {
        let mut w = Walk {
            n: n_actors,
            depth,
            states: vec![s.clone()],
            moves: Vec::with_capacity(depth),
            paths: 0,
            max_first: 0,
        };
        let fail = w.run();
        report.n_states_checked += 1;
        report.paths_checked += w.paths;
        report.max_steps_needed = report.max_steps_needed.max(w.max_first);
        if let Some(stage) = fail {
            report.all_pass = false;
            report.counterexample = Some(Counterexample {
                start: s,
                moves: w.moves,
                stage,
            });
            break;
        }
    }
    report
}
