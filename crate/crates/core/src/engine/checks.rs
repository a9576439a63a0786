//! Exact structural checks on logged trajectories.

use super::Trajectory;

/// Pressure of the acting actor just before each event.
pub fn pre_jump_pressures(traj: &Trajectory) -> Vec<i64> {
    let mut u = traj.initial.clone();
    traj.events
        .iter()
        .map(|e| {
            let before = u.get(e.actor);
            u.jump_in_place(e.actor, e.opinion);
            before
        })
        .collect()
}

/// Start index of the first window of `n` consecutive events in which every
/// acting actor had `|pressure| ≥ n` before its jump.
pub fn first_short_memory_violation(traj: &Trajectory, n: usize) -> Option<usize> {
    let pre = pre_jump_pressures(traj);
    let mut run = 0usize;
    for (i, p) in pre.iter().enumerate() {
        if p.unsigned_abs() as usize >= n {
            run += 1;
            if run >= n {
                return Some(i + 1 - n);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Index of the first event after which the acting actor's pressure is not 0.
pub fn first_reset_violation(traj: &Trajectory) -> Option<usize> {
    let mut u = traj.initial.clone();
    for (i, e) in traj.events.iter().enumerate() {
        u.jump_in_place(e.actor, e.opinion);
        if u.get(e.actor) != 0 || !u.values().contains(&0) {
            return Some(i);
        }
    }
    None
}
