//! Monte Carlo estimates from the engine against exact values from the
//! truncated chain, on events the truncation cannot affect.

use polarlab::engine::{hitting_time, Process, Scheme, StopCondition, Target};
use polarlab::model::{classify, ModelParams, PressureList};
use polarlab::oracle::{build_generator, expected_hitting_times, m_event_probability};
use polarlab::rng::stream;
use polarlab::stats::{mean, variance};

const REPS: u64 = 20_000;

fn z_score(samples: &[f64], exact: f64) -> f64 {
    (mean(samples) - exact) / (variance(samples) / samples.len() as f64).sqrt()
}

/// Leaving `max|u| < 3` happens before any clamp at cap 3 is felt.
#[test]
fn box_exit_time_matches_exact_mean() {
    for (beta, scheme) in [(0.0, Scheme::Direct), (1.0, Scheme::Thinning)] {
        let p = ModelParams::new(3, beta).unwrap();
        let chain = build_generator(&p, 3).unwrap();
        let h = expected_hitting_times(&chain, |u| u.max_abs() >= 3).unwrap();
        let exact = h[chain.index_of(&PressureList::zeros(3)).unwrap()];
        let samples: Vec<f64> = (0..REPS)
            .map(|i| {
                let mut proc =
                    Process::new(p, PressureList::zeros(3), scheme, stream(91, i)).unwrap();
                while proc.state().max_abs() < 3 {
                    proc.step().unwrap();
                }
                proc.time()
            })
            .collect();
        let z = z_score(&samples, exact);
        assert!(
            z.abs() < 4.0,
            "beta={beta}: exact {exact}, mc {}, z {z}",
            mean(&samples)
        );
    }
}

#[test]
fn ladder_hitting_time_matches_converged_oracle() {
    let p = ModelParams::new(3, 0.5).unwrap();
    let exact: Vec<f64> = [7, 9]
        .iter()
        .map(|&cap| {
            let chain = build_generator(&p, cap).unwrap();
            let h = expected_hitting_times(&chain, |u| classify(&p, u).unwrap().ladder()).unwrap();
            h[chain.index_of(&PressureList::zeros(3)).unwrap()]
        })
        .collect();
    assert!((exact[0] - exact[1]).abs() < 1e-5);
    let budget = StopCondition::events(10_000);
    let samples: Vec<f64> = (0..REPS)
        .map(|i| {
            let r = hitting_time(
                &p,
                &PressureList::zeros(3),
                &Target::Ladder,
                &budget,
                Scheme::Direct,
                stream(5, i),
            );
            let r = r.unwrap();
            assert!(r.hit);
            r.hitting_time
        })
        .collect();
    let z = z_score(&samples, exact[1]);
    assert!(
        z.abs() < 4.0,
        "exact {}, mc {}, z {z}",
        exact[1],
        mean(&samples)
    );
}

#[test]
fn restricted_kernel_matches_simulated_admissible_runs() {
    let p = ModelParams::new(3, 1.0).unwrap();
    let start = PressureList::single_one(3);
    let m = 4;
    let chain = build_generator(&p, start.max_abs() + m as i64 + 1).unwrap();
    let exact = m_event_probability(&chain, &start, m).unwrap();
    let hits = (0..REPS)
        .filter(|&i| {
            let mut proc = Process::new(p, start.clone(), Scheme::Direct, stream(17, i)).unwrap();
            (0..m).all(|_| {
                let before = proc.state().clone();
                let j = proc.step().unwrap();
                polarlab::oracle::is_admissible(&before, j.record.actor, j.record.opinion)
            })
        })
        .count() as f64;
    let p_hat = hits / REPS as f64;
    let se = (exact * (1.0 - exact) / REPS as f64).sqrt();
    assert!(
        (p_hat - exact).abs() < 4.0 * se,
        "exact {exact}, mc {p_hat}"
    );
}
