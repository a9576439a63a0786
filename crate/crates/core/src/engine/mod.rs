//! Exact event-driven simulation of the pressure process.

mod checks;
mod clock;
mod export;
mod reconstruct;
mod sampler;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    classify_unchecked, in_state_space, is_ladder, ModelError, ModelParams, Opinion, PressureList,
};
use crate::rng::{self, SimRng};

pub use checks::{first_reset_violation, first_short_memory_violation, pre_jump_pressures};
pub use clock::CompensatedClock;
pub use export::{read_jsonl, write_jsonl, TrajectoryHeader};
pub use reconstruct::{fold_state, reconstruct_state};
pub use sampler::{band_rates, next_event_direct, next_event_thinning, Step, ThinningStep};

pub const DEFAULT_MAX_EVENTS: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("stop condition sets no bound")]
    EmptyStopCondition,
    #[error("event {0} is not strictly later than its predecessor")]
    UnsortedEvents(usize),
    #[error("total rate overflows double precision")]
    RateOverflow,
    #[error("holding time underflows or is not finite")]
    TimeResolution,
    #[error("malformed trajectory file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Direct,
    Thinning,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Scheme::Direct),
            "thinning" => Ok(Scheme::Thinning),
            other => Err(format!(
                "unknown scheme '{other}' (expected direct|thinning)"
            )),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Direct => "direct",
            Scheme::Thinning => "thinning",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub actor: usize,
    pub opinion: Opinion,
}

/// Target sets for hitting times.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    #[serde(rename = "L")]
    Ladder,
    #[serde(rename = "L+")]
    LadderPlus,
    #[serde(rename = "L-")]
    LadderMinus,
    #[serde(rename = "C+")]
    ConsensusPlus,
    #[serde(rename = "C-")]
    ConsensusMinus,
    #[serde(rename = "zero")]
    Zero,
    Exact(PressureList),
}

impl Target {
    pub fn contains(&self, u: &PressureList) -> bool {
        match self {
            Target::Ladder => is_ladder(u),
            Target::LadderPlus => classify_unchecked(u).ladder_plus,
            Target::LadderMinus => classify_unchecked(u).ladder_minus,
            Target::ConsensusPlus => classify_unchecked(u).consensus_plus,
            Target::ConsensusMinus => classify_unchecked(u).consensus_minus,
            Target::Zero => u.is_zero(),
            Target::Exact(v) => u == v,
        }
    }
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" => Ok(Target::Ladder),
            "L+" => Ok(Target::LadderPlus),
            "L-" => Ok(Target::LadderMinus),
            "C+" => Ok(Target::ConsensusPlus),
            "C-" => Ok(Target::ConsensusMinus),
            "0" | "zero" => Ok(Target::Zero),
            other => Err(format!("unknown target '{other}' (expected L|L+|L-|C+|C-)")),
        }
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Ladder => f.write_str("L"),
            Target::LadderPlus => f.write_str("L+"),
            Target::LadderMinus => f.write_str("L-"),
            Target::ConsensusPlus => f.write_str("C+"),
            Target::ConsensusMinus => f.write_str("C-"),
            Target::Zero => f.write_str("zero"),
            Target::Exact(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopCondition {
    pub max_time: Option<f64>,
    pub max_events: Option<u64>,
    pub target: Option<Target>,
}

impl Default for StopCondition {
    fn default() -> Self {
        Self {
            max_time: None,
            max_events: Some(DEFAULT_MAX_EVENTS),
            target: None,
        }
    }
}

impl StopCondition {
    /// No bound at all; rejected by [`simulate`].
    pub fn unbounded() -> Self {
        Self {
            max_time: None,
            max_events: None,
            target: None,
        }
    }

    pub fn events(n: u64) -> Self {
        Self {
            max_events: Some(n),
            ..Self::unbounded()
        }
    }

    pub fn horizon(t: f64) -> Self {
        Self {
            max_time: Some(t),
            ..Self::unbounded()
        }
    }

    pub fn with_max_time(mut self, t: f64) -> Self {
        self.max_time = Some(t);
        self
    }

    pub fn with_max_events(mut self, n: u64) -> Self {
        self.max_events = Some(n);
        self
    }

    pub fn with_target(mut self, t: Target) -> Self {
        self.target = Some(t);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.max_time.is_none() && self.max_events.is_none() && self.target.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TimeHorizon,
    EventBudget,
    TargetHit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: PressureList,
    pub events: Vec<EventRecord>,
    pub final_state: PressureList,
    pub terminated_by: Termination,
    /// Time at which the run stopped: the horizon, or the last event time.
    pub end_time: f64,
    /// Dead-band marks rejected by the thinning scheme (0 for direct).
    pub rejected_marks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Censoring {
    Time(f64),
    Events(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitResult {
    pub hit: bool,
    /// Meaningful only when `hit` is true.
    pub hitting_time: f64,
    pub events_used: u64,
    pub censored_at: Option<Censoring>,
}

/// What the process did on one jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub record: EventRecord,
    /// Pressure of the acting actor just before the jump.
    pub pre_pressure: i64,
    /// Holding time spent in the pre-jump state.
    pub holding: f64,
}

/// A running copy of the process that owns its random stream.
#[derive(Debug, Clone)]
pub struct Process {
    params: ModelParams,
    state: PressureList,
    clock: CompensatedClock,
    events: u64,
    scheme: Scheme,
    rng: SimRng,
    scratch: sampler::DirectScratch,
    rejected: u64,
    lower_band_events: u64,
}

impl Process {
    pub fn new(
        params: ModelParams,
        start: PressureList,
        scheme: Scheme,
        rng: SimRng,
    ) -> Result<Self, SimError> {
        params.check_len(&start)?;
        if !in_state_space(&start) {
            return Err(ModelError::NotInStateSpace(start).into());
        }
        Ok(Self {
            params,
            state: start,
            clock: CompensatedClock::new(),
            events: 0,
            scheme,
            rng,
            scratch: sampler::DirectScratch::default(),
            rejected: 0,
            lower_band_events: 0,
        })
    }

    pub fn state(&self) -> &PressureList {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.clock.value()
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn rejected_marks(&self) -> u64 {
        self.rejected
    }

    /// Events whose acting actor had `|pressure| < N` before the jump.
    pub fn lower_band_events(&self) -> u64 {
        self.lower_band_events
    }

    pub fn rng_mut(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    /// Draws the next event without applying it.
    fn draw(&mut self) -> Result<Step, SimError> {
        match self.scheme {
            Scheme::Direct => self
                .scratch
                .sample(self.params.beta(), &self.state, &mut self.rng),
            Scheme::Thinning => {
                let s = sampler::thinning_sample(&self.params, &self.state, &mut self.rng)?;
                self.rejected += s.rejected;
                Ok(s.step)
            }
        }
    }

    fn commit(&mut self, step: Step) -> Result<Jump, SimError> {
        let before = self.clock.value();
        self.clock.add(step.dt);
        let time = self.clock.value();
        if time <= before {
            return Err(SimError::TimeResolution);
        }
        let pre_pressure = self.state.get(step.actor);
        if pre_pressure.abs() < self.params.n_actors() as i64 {
            self.lower_band_events += 1;
        }
        self.state.jump_in_place(step.actor, step.opinion);
        self.events += 1;
        Ok(Jump {
            record: EventRecord {
                time,
                actor: step.actor,
                opinion: step.opinion,
            },
            pre_pressure,
            holding: step.dt,
        })
    }

    pub fn step(&mut self) -> Result<Jump, SimError> {
        let s = self.draw()?;
        self.commit(s)
    }

    /// Advances by one event unless it would land after `horizon`. Returns
    /// `None` and moves the clock to `horizon` in that case.
    pub fn step_until(&mut self, horizon: f64) -> Result<Option<Jump>, SimError> {
        let s = self.draw()?;
        if self.clock.peek(s.dt) > horizon {
            self.clock = CompensatedClock::new();
            self.clock.add(horizon);
            return Ok(None);
        }
        self.commit(s).map(Some)
    }
}

pub fn simulate(
    p: &ModelParams,
    u0: &PressureList,
    stop: &StopCondition,
    scheme: Scheme,
    seed: u64,
) -> Result<Trajectory, SimError> {
    simulate_with_rng(p, u0, stop, scheme, rng::stream(seed, 0))
}

/// Runs until the first satisfied bound of `stop`.
pub fn simulate_with_rng(
    p: &ModelParams,
    u0: &PressureList,
    stop: &StopCondition,
    scheme: Scheme,
    rng: SimRng,
) -> Result<Trajectory, SimError> {
    if stop.is_empty() {
        return Err(SimError::EmptyStopCondition);
    }
    let mut proc = Process::new(*p, u0.clone(), scheme, rng)?;
    let mut events = Vec::new();
    let horizon = stop.max_time.unwrap_or(f64::INFINITY);
    let terminated_by = loop {
        if stop.max_events.is_some_and(|m| proc.events() >= m) {
            break Termination::EventBudget;
        }
        match proc.step_until(horizon)? {
            None => break Termination::TimeHorizon,
            Some(jump) => {
                events.push(jump.record);
                if stop
                    .target
                    .as_ref()
                    .is_some_and(|t| t.contains(proc.state()))
                {
                    break Termination::TargetHit;
                }
            }
        }
    };
    Ok(Trajectory {
        initial: u0.clone(),
        final_state: proc.state().clone(),
        end_time: proc.time(),
        terminated_by,
        rejected_marks: proc.rejected_marks(),
        events,
    })
}

/// First event time at which the process lands in `target`. A start already
/// inside `target` yields its first return time.
pub fn hitting_time(
    p: &ModelParams,
    u0: &PressureList,
    target: &Target,
    budget: &StopCondition,
    scheme: Scheme,
    rng: SimRng,
) -> Result<HitResult, SimError> {
    let proc = Process::new(*p, u0.clone(), scheme, rng)?;
    hitting_time_from(proc, target, budget)
}

pub fn hitting_time_from(
    mut proc: Process,
    target: &Target,
    budget: &StopCondition,
) -> Result<HitResult, SimError> {
    if budget.max_time.is_none() && budget.max_events.is_none() {
        return Err(SimError::EmptyStopCondition);
    }
    let horizon = budget.max_time.unwrap_or(f64::INFINITY);
    let start_events = proc.events();
    loop {
        let used = proc.events() - start_events;
        if budget.max_events.is_some_and(|m| used >= m) {
            return Ok(HitResult {
                hit: false,
                hitting_time: f64::NAN,
                events_used: used,
                censored_at: Some(Censoring::Events(used)),
            });
        }
        match proc.step_until(horizon)? {
            None => {
                return Ok(HitResult {
                    hit: false,
                    hitting_time: f64::NAN,
                    events_used: proc.events() - start_events,
                    censored_at: Some(Censoring::Time(horizon)),
                })
            }
            Some(jump) => {
                if target.contains(proc.state()) {
                    return Ok(HitResult {
                        hit: true,
                        hitting_time: jump.record.time,
                        events_used: proc.events() - start_events,
                        censored_at: None,
                    });
                }
            }
        }
    }
}
