//! State at time `t` from the event log.

use super::{EventRecord, SimError};
use crate::model::PressureList;

fn check_sorted(events: &[EventRecord]) -> Result<(), SimError> {
    let mut prev = 0.0;
    for (i, e) in events.iter().enumerate() {
        if !(e.time > prev) {
            return Err(SimError::UnsortedEvents(i));
        }
        prev = e.time;
    }
    Ok(())
}

/// Pressure at time `t` from the counting measures: an actor that spoke in
/// `(0, t]` carries the signed count of others' opinions since its last
/// expression time; an actor that never spoke adds that count to `u0(a)`.
pub fn reconstruct_state(
    u0: &PressureList,
    events: &[EventRecord],
    t: f64,
) -> Result<PressureList, SimError> {
    check_sorted(events)?;
    let n = u0.len();
    if let Some(e) = events.iter().find(|e| e.actor >= n) {
        return Err(crate::model::ModelError::ActorOutOfRange {
            index: e.actor,
            n_actors: n,
        }
        .into());
    }
    let upto = events.partition_point(|e| e.time <= t);
    let seen = &events[..upto];
    // prefix[k] = Σ_{j<k} o_j, so Z-sums over any window are differences
    let mut prefix = Vec::with_capacity(upto + 1);
    prefix.push(0i64);
    for e in seen {
        prefix.push(prefix.last().unwrap() + e.opinion.sign());
    }
    let mut last = vec![None; n];
    for (k, e) in seen.iter().enumerate() {
        last[e.actor] = Some(k);
    }
    let values = (0..n)
        .map(|a| match last[a] {
            // the actor's own events after k are impossible by choice of k
            Some(k) => prefix[upto] - prefix[k + 1],
            None => u0.get(a) + prefix[upto],
        })
        .collect();
    Ok(PressureList::new(values))
}

/// Reference path: apply the jump map event by event up to time `t`.
pub fn fold_state(u0: &PressureList, events: &[EventRecord], t: f64) -> PressureList {
    let mut u = u0.clone();
    for e in events.iter().take_while(|e| e.time <= t) {
        u.jump_in_place(e.actor, e.opinion);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Opinion;

    fn ev(time: f64, actor: usize, o: i64) -> EventRecord {
        EventRecord {
            time,
            actor,
            opinion: Opinion::from_sign(o).unwrap(),
        }
    }

    #[test]
    fn no_events_gives_start() {
        let u = PressureList::new(vec![0, 2, -1]);
        assert_eq!(reconstruct_state(&u, &[], 5.0).unwrap(), u);
    }

    #[test]
    fn single_event_matches_jump() {
        let u = PressureList::new(vec![0, 2, -1]);
        let evs = [ev(0.5, 1, 1)];
        assert_eq!(
            reconstruct_state(&u, &evs, 1.0).unwrap(),
            PressureList::new(vec![1, 0, 0])
        );
        assert_eq!(reconstruct_state(&u, &evs, 0.4).unwrap(), u);
        assert_eq!(
            reconstruct_state(&u, &evs, 0.5).unwrap(),
            PressureList::new(vec![1, 0, 0])
        );
    }

    #[test]
    fn unsorted_events_are_rejected() {
        let u = PressureList::zeros(3);
        let evs = [ev(0.5, 1, 1), ev(0.5, 2, -1)];
        assert!(matches!(
            reconstruct_state(&u, &evs, 1.0),
            Err(SimError::UnsortedEvents(1))
        ));
        let evs = [ev(0.0, 1, 1)];
        assert!(matches!(
            reconstruct_state(&u, &evs, 1.0),
            Err(SimError::UnsortedEvents(0))
        ));
    }

    #[test]
    fn agrees_with_fold_on_hand_sequence() {
        let u = PressureList::new(vec![0, 3, -2, 1]);
        let evs = [
            ev(0.1, 0, 1),
            ev(0.2, 2, -1),
            ev(0.3, 0, -1),
            ev(0.4, 3, 1),
            ev(0.9, 1, 1),
        ];
        for t in [0.05, 0.15, 0.25, 0.35, 0.45, 1.0] {
            assert_eq!(
                reconstruct_state(&u, &evs, t).unwrap(),
                fold_state(&u, &evs, t),
                "t={t}"
            );
        }
    }
}
