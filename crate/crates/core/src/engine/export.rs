//! JSON-lines trajectory files: a header line, then one `{"t","a","o"}`
//! record per event with 1-based actor indices.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EventRecord, Scheme, SimError};
use crate::model::{Opinion, PressureList};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    #[serde(rename = "N")]
    pub n_actors: usize,
    pub beta: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub initial: PressureList,
}

#[derive(Serialize, Deserialize)]
struct Line {
    t: f64,
    a: usize,
    o: i64,
}

pub fn write_jsonl<W: Write>(
    mut w: W,
    header: &TrajectoryHeader,
    events: &[EventRecord],
) -> Result<(), SimError> {
    serde_json::to_writer(&mut w, header).map_err(|e| SimError::Format(e.to_string()))?;
    w.write_all(b"\n")?;
    for e in events {
        let line = Line {
            t: e.time,
            a: e.actor + 1,
            o: e.opinion.sign(),
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| SimError::Format(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<(TrajectoryHeader, Vec<EventRecord>), SimError> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| SimError::Format("missing header".into()))??;
    let header: TrajectoryHeader =
        serde_json::from_str(&first).map_err(|e| SimError::Format(e.to_string()))?;
    let mut events = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(&line)
            .map_err(|e| SimError::Format(format!("line {}: {e}", i + 2)))?;
        if l.a == 0 || l.a > header.n_actors {
            return Err(SimError::Format(format!(
                "line {}: actor {} out of range",
                i + 2,
                l.a
            )));
        }
        events.push(EventRecord {
            time: l.t,
            actor: l.a - 1,
            opinion: Opinion::from_sign(l.o)?,
        });
    }
    Ok((header, events))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, StopCondition};
    use crate::model::ModelParams;

    #[test]
    fn round_trip_is_exact() {
        let p = ModelParams::new(3, 1.0).unwrap();
        let u = PressureList::new(vec![0, 1, -1]);
        let tr = simulate(&p, &u, &StopCondition::events(200), Scheme::Thinning, 7).unwrap();
        let header = TrajectoryHeader {
            n_actors: 3,
            beta: 1.0,
            seed: 7,
            scheme: Scheme::Thinning,
            initial: u,
        };
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &header, &tr.events).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.contains("\"N\":3") && first.contains("\"scheme\":\"thinning\""));
        let second = text.lines().nth(1).unwrap();
        assert!(second.starts_with("{\"t\":"));
        let (h, evs) = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(evs, tr.events);
    }

    #[test]
    fn bad_actor_is_rejected() {
        let text = "{\"N\":3,\"beta\":1.0,\"seed\":1,\"scheme\":\"direct\",\"initial\":[0,0,0]}\n{\"t\":0.5,\"a\":4,\"o\":1}\n";
        assert!(matches!(
            read_jsonl(text.as_bytes()),
            Err(SimError::Format(_))
        ));
    }
}
