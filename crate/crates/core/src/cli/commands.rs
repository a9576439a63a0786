use std::collections::BTreeMap;

use serde_json::json;

use super::output::{histogram_svg, Output};
use super::{CliError, Command, RunConfig};
use crate::engine::{
    first_reset_violation, first_short_memory_violation, simulate, write_jsonl, StopCondition,
    TrajectoryHeader,
};
use crate::experiments::{
    consensus_time_experiment, m_event_probability_experiment, metastability_experiment,
    occupation_experiment, total_variation_to, write_replications_csv, ExperimentSpec,
};
use crate::model::{classify_unchecked, is_ladder, symmetry_transform, PressureList, Symmetry};
use crate::oracle::{
    build_generator, greedy_consensus_check, kac_consistency, stationary_distribution, OracleError,
};

type Flags = BTreeMap<String, bool>;

/// Largest window for which the per-state Kac solves are run.
const KAC_MAX_STATES: usize = 350;
const TV_TOLERANCE: f64 = 0.02;
const TAIL_LEVEL: f64 = 0.05;

pub(super) fn execute(cfg: &RunConfig) -> Result<Flags, CliError> {
    let mut out = Output::create(&cfg.out)?;
    let flags = match cfg.command {
        Command::Simulate => run_simulate(cfg, &mut out)?,
        Command::Occupation => run_occupation(cfg, &mut out)?,
        Command::Consensus => run_consensus(cfg, &mut out)?,
        Command::Metastable => run_metastable(cfg, &mut out)?,
        Command::OracleCheck => run_oracle(cfg, &mut out)?,
        Command::GreedyCheck => run_greedy(cfg, &mut out)?,
        Command::MEvents => run_m_events(cfg, &mut out)?,
    };
    out.finish(cfg, &flags)?;
    Ok(flags)
}

fn single_beta(cfg: &RunConfig) -> Result<f64, CliError> {
    match cfg.beta.as_slice() {
        [b] => Ok(*b),
        _ => Err(CliError::Usage(format!(
            "{} takes a single beta",
            cfg.command.name()
        ))),
    }
}

fn spec_for(cfg: &RunConfig) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(cfg.n, cfg.beta[0], cfg.start.clone(), cfg.reps, cfg.seed);
    spec.grid = cfg.beta.iter().map(|&b| (cfg.n, b)).collect();
    spec.scheme = cfg.scheme;
    spec.delta = cfg.delta;
    spec.threads = cfg.threads;
    spec.budget = StopCondition::events(cfg.max_events);
    spec.budget.max_time = cfg.max_time;
    spec
}

fn run_simulate(cfg: &RunConfig, out: &mut Output) -> Result<Flags, CliError> {
    let beta = single_beta(cfg)?;
    let p = cfg.params(beta)?;
    let stop = StopCondition {
        max_time: cfg.max_time,
        max_events: Some(cfg.max_events),
        target: cfg.target.clone(),
    };
    let traj = simulate(&p, &cfg.start, &stop, cfg.scheme, cfg.seed)?;
    if cfg.format.jsonl() {
        let header = TrajectoryHeader {
            n_actors: cfg.n,
            beta,
            seed: cfg.seed,
            scheme: cfg.scheme,
            initial: cfg.start.clone(),
        };
        out.write_with("trajectory.jsonl", |w| {
            write_jsonl(w, &header, &traj.events).map_err(|e| std::io::Error::other(e.to_string()))
        })?;
    }
    if cfg.format.csv() {
        out.write_with("events.csv", |w| {
            writeln!(w, "t,a,o")?;
            for e in &traj.events {
                writeln!(w, "{},{},{}", e.time, e.actor + 1, e.opinion.sign())?;
            }
            Ok(())
        })?;
    }
    let mut flags = Flags::new();
    flags.insert(
        "reset_to_zero".into(),
        first_reset_violation(&traj).is_none(),
    );
    flags.insert(
        "memory_window".into(),
        first_short_memory_violation(&traj, cfg.n).is_none(),
    );
    out.write_json(
        "summary.json",
        &json!({
            "events": traj.events.len(),
            "end_time": traj.end_time,
            "final_state": traj.final_state,
            "terminated_by": traj.terminated_by,
            "rejected_marks": traj.rejected_marks,
        }),
    )?;
    Ok(flags)
}

fn run_occupation(cfg: &RunConfig, out: &mut Output) -> Result<Flags, CliError> {
    let horizon = cfg.max_time.unwrap_or(10_000.0);
    let rows = occupation_experiment(&spec_for(cfg), horizon)?;
    let mut flags = Flags::new();
    let mut tvs = BTreeMap::new();
    if let Some(cap) = cfg.cap {
        for r in &rows {
            let chain = build_generator(&cfg.params(r.beta)?, cap)?;
            let st = stationary_distribution(&chain)?;
            let tv = total_variation_to(r, &chain, &st.mu);
            flags.insert(
                format!("tv_within_{TV_TOLERANCE}[beta={}]", r.beta),
                tv <= TV_TOLERANCE,
            );
            tvs.insert(r.beta.to_string(), tv);
        }
    }
    for r in &rows {
        let (lp, lm) = (r.classes["L+"], r.classes["L-"]);
        let tol = 3.0 * (lp.se * lp.se + lm.se * lm.se).sqrt();
        flags.insert(
            format!("ladder_sign_symmetry[beta={}]", r.beta),
            (lp.value - lm.value).abs() <= tol,
        );
    }
    if rows.len() > 1 {
        let off: Vec<f64> = rows.iter().map(|r| 1.0 - r.classes["L"].value).collect();
        flags.insert(
            "off_ladder_decreasing".into(),
            off.windows(2).all(|w| w[1] < w[0]),
        );
    }
    out.write_with("occupation.csv", |w| {
        writeln!(w, "N,beta,class,fraction,se")?;
        for r in &rows {
            for (c, e) in &r.classes {
                writeln!(w, "{},{},{},{},{}", r.n_actors, r.beta, c, e.value, e.se)?;
            }
        }
        Ok(())
    })?;
    out.write_with("states.csv", |w| {
        writeln!(w, "N,beta,state,fraction")?;
        for r in &rows {
            for (s, x) in &r.states {
                writeln!(w, "{},{},\"{}\",{}", r.n_actors, r.beta, s, x)?;
            }
        }
        Ok(())
    })?;
    out.write_json(
        "summary.json",
        &json!({ "rows": rows, "total_variation": tvs, "pass_flags": flags }),
    )?;
    Ok(flags)
}

fn run_consensus(cfg: &RunConfig, out: &mut Output) -> Result<Flags, CliError> {
    let spec = spec_for(cfg);
    let hash = spec.hash("consensus");
    let (rows, records) = consensus_time_experiment(&spec)?;
    let mut flags = Flags::new();
    if rows.len() > 1 {
        flags.insert(
            "tail_decreasing".into(),
            rows.windows(2).all(|w| w[1].p_hat < w[0].p_hat),
        );
    }
    let last = rows
        .iter()
        .max_by(|a, b| a.beta.total_cmp(&b.beta))
        .expect("nonempty grid");
    flags.insert(
        format!("tail_below_{TAIL_LEVEL}[beta={}]", last.beta),
        last.p_hat < TAIL_LEVEL,
    );
    out.write_with("replications.csv", |w| {
        write_replications_csv(w, &hash, cfg.seed, &records)
    })?;
    out.write_with("consensus.csv", |w| {
        writeln!(
            w,
            "N,beta,start,delta,threshold,reps,exceed,p_hat,wilson_lo,wilson_hi"
        )?;
        for r in &rows {
            writeln!(
                w,
                "{},{},\"{}\",{},{},{},{},{},{},{}",
                r.n_actors,
                r.beta,
                r.start,
                r.delta,
                r.threshold,
                r.replications,
                r.exceed,
                r.p_hat,
                r.wilson_lo,
                r.wilson_hi
            )?;
        }
        Ok(())
    })?;
    out.write_json(
        "summary.json",
        &json!({ "spec": spec, "spec_hash": hash, "estimates": rows, "pass_flags": flags }),
    )?;
    Ok(flags)
}

fn run_metastable(cfg: &RunConfig, out: &mut Output) -> Result<Flags, CliError> {
    let spec = spec_for(cfg);
    let target = cfg.target.clone().expect("resolved with the config");
    let hash = spec.hash("metastable");
    let (results, records) = metastability_experiment(&spec, &target, cfg.normalize, None)?;
    let mut flags = Flags::new();
    for r in &results {
        let b = r.beta;
        flags.insert(format!("uncensored[beta={b}]"), r.censored == 0);
        flags.insert(format!("bound_ok[beta={b}]"), r.bound_ok);
        flags.insert(format!("ks_pass[beta={b}]"), r.ks_pass);
        if b >= 2.0 {
            let ok = r.tail_slope.is_some_and(|s| s <= 0.9f64.ln());
            flags.insert(format!("geometric_tail[beta={b}]"), ok);
        }
    }
    out.write_with("hitting_times.csv", |w| {
        write_replications_csv(w, &hash, cfg.seed, &records)
    })?;
    if cfg.svg {
        for r in &results {
            let cell: Vec<f64> = records
                .iter()
                .filter(|x| !x.censored && x.cell.contains(&format!("beta={} ", r.beta)))
                .map(|x| x.value)
                .collect();
            let svg = histogram_svg(
                &cell,
                40,
                &format!("hitting times of {} at beta={}", r.target, r.beta),
            );
            out.write_with(&format!("hist_beta{}.svg", r.beta), |w| {
                w.write_all(svg.as_bytes())
            })?;
        }
    }
    out.write_json(
        "summary.json",
        &json!({ "spec": spec, "spec_hash": hash, "estimates": results, "pass_flags": flags }),
    )?;
    Ok(flags)
}

fn run_oracle(cfg: &RunConfig, out: &mut Output) -> Result<Flags, CliError> {
    let cap = cfg.cap.unwrap_or(4);
    let mut flags = Flags::new();
    let mut per_beta = Vec::new();
    let mut ladder_mass = Vec::new();
    for (k, &beta) in cfg.beta.iter().enumerate() {
        let p = cfg.params(beta)?;
        let chain = build_generator(&p, cap)?;
        let st = stationary_distribution(&chain)?;
        if k == 0 {
            out.write_with("states.csv", |w| chain.write_states_csv(w))?;
        }
        out.write_with(&format!("triplets_beta{beta}.csv"), |w| {
            chain.write_triplets_csv(w)
        })?;
        out.write_with(&format!("stationary_beta{beta}.csv"), |w| {
            writeln!(w, "state,mu,mu_tilde")?;
            for (i, s) in chain.states().iter().enumerate() {
                writeln!(w, "\"{}\",{},{}", s, st.mu[i], st.mu_tilde[i])?;
            }
            Ok(())
        })?;
        let kac = if chain.len() <= KAC_MAX_STATES {
            Some(kac_consistency(&chain, &st)?.max_error)
        } else {
            None
        };
        let sym = symmetry_error(&chain, &st.mu)?;
        let mu_l = st.mass(&chain, is_ladder);
        ladder_mass.push(mu_l);
        flags.insert(format!("residual[beta={beta}]"), st.residual <= 1e-10);
        flags.insert(
            format!("proportionality[beta={beta}]"),
            st.proportionality_error <= 1e-8,
        );
        flags.insert(format!("symmetry[beta={beta}]"), sym <= 1e-10);
        if let Some(k) = kac {
            flags.insert(format!("kac[beta={beta}]"), k <= 1e-8);
        }
        if beta >= 2.0 {
            let zero = st.mu_tilde[chain
                .index_of(&PressureList::zeros(cfg.n))
                .expect("zero in window")];
            let ok = chain
                .states()
                .iter()
                .enumerate()
                .filter(|(_, s)| is_ladder(s))
                .all(|(i, _)| zero < st.mu_tilde[i]);
            flags.insert(format!("zero_below_ladders[beta={beta}]"), ok);
        }
        per_beta.push(json!({
            "beta": beta,
            "states": chain.len(),
            "recurrent_states": chain.recurrent_class()?.len(),
            "mu_ladder": mu_l,
            "mu_consensus": st.mass(&chain, |s| classify_unchecked(s).consensus()),
            "mu_zero": st.mass(&chain, |s| s.is_zero()),
            "residual": st.residual,
            "proportionality_error": st.proportionality_error,
            "kac_max_error": kac,
            "symmetry_error": sym,
        }));
    }
    if ladder_mass.len() > 1 {
        flags.insert(
            "ladder_mass_increasing".into(),
            ladder_mass.windows(2).all(|w| w[1] > w[0]),
        );
    }
    out.write_json(
        "summary.json",
        &json!({ "N": cfg.n, "cap": cap, "results": per_beta, "pass_flags": flags }),
    )?;
    Ok(flags)
}

/// Largest relative change of `mu` under negation and adjacent transpositions.
fn symmetry_error(chain: &crate::oracle::TruncatedChain, mu: &[f64]) -> Result<f64, OracleError> {
    let n = chain.params().n_actors();
    let mut transforms = vec![Symmetry::Negate];
    for k in 0..n - 1 {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(k, k + 1);
        transforms.push(Symmetry::Permute(perm));
    }
    let mut worst: f64 = 0.0;
    for (i, s) in chain.states().iter().enumerate() {
        for t in &transforms {
            let j = chain
                .index_of(&symmetry_transform(s, t)?)
                .expect("window is symmetric");
            let scale = mu[i].max(mu[j]);
            if scale > 0.0 {
                worst = worst.max((mu[i] - mu[j]).abs() / scale);
            }
        }
    }
    Ok(worst)
}

fn run_greedy(cfg: &RunConfig, out: &mut Output) -> Result<Flags, CliError> {
    let cap = cfg.cap.unwrap_or(if cfg.n == 3 { 4 } else { 3 });
    let r = greedy_consensus_check(cfg.n, cap);
    let counterexample = r.counterexample.as_ref().map(|c| {
        json!({
            "state": c.start,
            "moves": c.moves.iter().map(|(a, o)| json!([a + 1, o.sign()])).collect::<Vec<_>>(),
            "stage": c.stage,
        })
    });
    out.write_json(
        "lemma_report.json",
        &json!({
            "N": r.n_actors,
            "cap": r.cap,
            "n_states_checked": r.n_states_checked,
            "paths_checked": r.paths_checked,
            "max_steps_needed": r.max_steps_needed,
            "all_pass": r.all_pass,
            "counterexample": counterexample,
        }),
    )?;
    Ok(Flags::from([("all_pass".to_string(), r.all_pass)]))
}

fn run_m_events(cfg: &RunConfig, out: &mut Output) -> Result<Flags, CliError> {
    let spec = spec_for(cfg);
    let rows = m_event_probability_experiment(&spec, cfg.m)?;
    let mut flags = Flags::new();
    for r in &rows {
        flags.insert(format!("mc_above_zeta[beta={}]", r.beta), r.pass_mc);
        flags.insert(format!("exact_above_zeta[beta={}]", r.beta), r.pass_exact);
    }
    out.write_with("m_events.csv", |w| {
        writeln!(
            w,
            "N,beta,start,m,reps,successes,estimate,se,wilson_lo,wilson_hi,zeta_m,exact"
        )?;
        for r in &rows {
            writeln!(
                w,
                "{},{},\"{}\",{},{},{},{},{},{},{},{},{}",
                r.n_actors,
                r.beta,
                r.start,
                r.m,
                r.replications,
                r.successes,
                r.estimate,
                r.se,
                r.wilson_lo,
                r.wilson_hi,
                r.zeta_m,
                r.exact
            )?;
        }
        Ok(())
    })?;
    out.write_json(
        "summary.json",
        &json!({ "spec": spec, "estimates": rows, "pass_flags": flags }),
    )?;
    Ok(flags)
}
