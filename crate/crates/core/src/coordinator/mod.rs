//! Runs a full initial-attack episode: the true fire, two drones keeping a
//! shared belief map, and one or two helicopters dropping water on a fixed
//! cadence.

pub mod dispatch;
pub mod log;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dispatch::{
    early_dispatch_decision, predict_ring, DispatchError, DispatchLatch, DispatchPolicy, LinearRingPredictor, RingHistory,
    RingPredictor, TEN_ACRE_RING_M,
};
pub use log::{classify, classify_outcome, DropRecord, EpisodeLog, OutcomeClass, StepRecord};

use crate::drops::{SuppressionActionSpec, TemplateSet};
use crate::grid::{BoolGrid, RealGrid};
use crate::gridstate::{cell_destruction, instantaneous_destruction, ring_radius, touches_boundary, BeliefState, Scenario, WorldState};
use crate::mcts::{MctsConfig, MctsError};
use crate::propagation::{step, FireModel, SuppressionOutcome};
use crate::rng::{stream, SimRng};
use crate::suppress_planner::{firefighting_technique, plan_suppression, SuppressPlannerConfig, SuppressPlannerError, TechniqueMemory};
use crate::surveil_planner::{plan_surveillance, SurveillanceModelKind};
use crate::uav::{apply_action, ranging, DronePos, SurveillanceState};

#[derive(Debug, Error)]
pub enum CoordinatorError {
    #[error("invalid timeline: {0}")]
    Timeline(String),
    #[error("surveillance planner: {0}")]
    Surveillance(#[from] MctsError),
    #[error("suppression planner: {0}")]
    Suppression(#[from] SuppressPlannerError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
}

/// Arrival times, horizon and drop cadence, in minutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub uav_arrival: u32,
    pub manned_arrival: u32,
    pub horizon: u32,
    /// Minutes between drops.
    pub k: u32,
}

impl Default for Timeline {
    fn default() -> Self {
        Self {
            uav_arrival: 5,
            manned_arrival: 15,
            horizon: 120,
            k: 5,
        }
    }
}

impl Timeline {
    pub fn validate(&self) -> Result<(), CoordinatorError> {
        if self.uav_arrival > self.manned_arrival || self.manned_arrival > self.horizon {
            return Err(CoordinatorError::Timeline(format!(
                "need uav_arrival <= manned_arrival <= horizon, got {} / {} / {}",
                self.uav_arrival, self.manned_arrival, self.horizon
            )));
        }
        if self.k == 0 {
            return Err(CoordinatorError::Timeline("k must be at least 1".into()));
        }
        Ok(())
    }

    /// Phase offset of the dispatched aircraft.
    pub fn second_offset(&self) -> u32 {
        self.k.div_ceil(2)
    }

    /// Whether an aircraft whose schedule is shifted by `offset` drops at
    /// `minute`.
    pub fn is_drop_minute(&self, minute: u32, offset: u32) -> bool {
        let first = self.manned_arrival + offset;
        minute >= first && minute < self.horizon && (minute - first) % self.k == 0
    }

    /// Minutes at which the first aircraft drops.
    pub fn drop_minutes(&self) -> Vec<u32> {
        (self.manned_arrival..self.horizon).filter(|&m| self.is_drop_minute(m, 0)).collect()
    }

    /// Minutes at which ring samples are taken and dispatch is evaluated.
    pub fn is_suppression_step(&self, minute: u32) -> bool {
        minute >= self.manned_arrival && (minute - self.manned_arrival) % self.k == 0 && minute <= self.horizon
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveilConfig {
    pub kind: SurveillanceModelKind,
    pub mcts: MctsConfig,
}

impl Default for SurveilConfig {
    fn default() -> Self {
        Self {
            kind: SurveillanceModelKind::Uncertainty,
            mcts: MctsConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressionPolicy {
    Disabled,
    /// Search-based or greedy planner, by reward kind.
    Planner(SuppressPlannerConfig),
    /// Rule-based firefighting technique.
    Technique,
}

impl SuppressionPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Disabled => "none",
            Self::Planner(c) => c.reward_kind.name(),
            Self::Technique => "technique",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub timeline: Timeline,
    /// `None` keeps the drones grounded.
    pub surveillance: Option<SurveilConfig>,
    pub suppression: SuppressionPolicy,
    pub dispatch: DispatchPolicy,
    /// Planners see the true fire every minute instead of the drone belief.
    pub perfect_info: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            timeline: Timeline::default(),
            surveillance: Some(SurveilConfig::default()),
            suppression: SuppressionPolicy::Planner(SuppressPlannerConfig::default()),
            dispatch: DispatchPolicy::default(),
            perfect_info: false,
        }
    }
}

/// Random streams of one episode. Each consumer has its own so that
/// changing one policy leaves the others' draws untouched.
mod streams {
    pub const WORLD: u64 = 0;
    pub const RANGING: u64 = 1;
    pub const SURVEIL: u64 = 2;
    pub const AIRCRAFT1: u64 = 3;
    pub const AIRCRAFT2: u64 = 4;
}

/// Starting drone positions: stacked over the origin column, 60 m apart.
pub fn initial_drones(scenario: &Scenario) -> SurveillanceState {
    let x = (scenario.origin.col as usize / crate::uav::CELLS_PER_COLUMN) as u8;
    let y = (scenario.origin.row as usize / crate::uav::CELLS_PER_COLUMN) as u8;
    SurveillanceState::new(DronePos::new(x, y, 2), DronePos::new(x, y, 5))
}

struct Aircraft {
    id: u8,
    offset: u32,
    rng: SimRng,
    memory: TechniqueMemory,
    pending: Option<SuppressionActionSpec>,
}

impl Aircraft {
    fn new(id: u8, offset: u32, rng: SimRng) -> Self {
        Self {
            id,
            offset,
            rng,
            memory: TechniqueMemory::new(),
            pending: None,
        }
    }

    fn plan(
        &mut self,
        policy: &SuppressionPolicy,
        belief: &BeliefState,
        minute: u32,
        scenario: &Scenario,
        fire: &FireModel,
        templates: &TemplateSet,
    ) -> Result<(), CoordinatorError> {
        self.pending = match policy {
            SuppressionPolicy::Disabled => None,
            SuppressionPolicy::Planner(cfg) => plan_suppression(belief, minute, scenario, fire, templates, cfg, &mut self.rng)?,
            SuppressionPolicy::Technique => firefighting_technique(&belief.burning, scenario, &mut self.memory),
        };
        Ok(())
    }
}

/// Share of cells where `belief` equals `truth`.
pub fn belief_accuracy(belief: &BoolGrid, truth: &BoolGrid) -> f64 {
    let same = belief.as_slice().iter().zip(truth.as_slice()).filter(|(a, b)| a == b).count();
    same as f64 / truth.as_slice().len() as f64
}

/// Share of truly burning cells also believed burning; 1 when nothing burns.
pub fn burning_accuracy(belief: &BoolGrid, truth: &BoolGrid) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for (&b, &t) in belief.as_slice().iter().zip(truth.as_slice()) {
        if t {
            total += 1;
            hit += usize::from(b);
        }
    }
    if total == 0 {
        1.0
    } else {
        hit as f64 / total as f64
    }
}

fn burned_destruction(ever: &BoolGrid, resources: &RealGrid) -> f64 {
    ever.as_slice()
        .iter()
        .zip(resources.as_slice())
        .filter(|(&b, _)| b)
        .map(|(_, &r)| cell_destruction(r))
        .sum()
}

fn merge_outcomes(outcomes: &[SuppressionOutcome]) -> Option<SuppressionOutcome> {
    match outcomes {
        [] => None,
        [one] => Some(one.clone()),
        many => Some(SuppressionOutcome::new(
            many.iter().flat_map(|o| o.full().iter().copied()).collect::<Vec<_>>(),
            many.iter().flat_map(|o| o.partial().iter().copied()).collect::<Vec<_>>(),
        )),
    }
}

/// Runs one episode with the default linear ring forecast.
pub fn run_episode(scenario: &Scenario, cfg: &EpisodeConfig, seed: u64) -> Result<EpisodeLog, CoordinatorError> {
    run_episode_with(scenario, cfg, seed, &LinearRingPredictor, &TemplateSet::default())
}

/// Runs one episode.
///
/// Each minute `t`: the planners see the belief, drones move and observe
/// the true fire, the row for `t` is recorded, then the world advances with
/// any drop scheduled for `t`. A drop at `t` is planned at `t - 1` and
/// handed to that minute's surveillance call.
pub fn run_episode_with(
    scenario: &Scenario,
    cfg: &EpisodeConfig,
    seed: u64,
    predictor: &dyn RingPredictor,
    templates: &TemplateSet,
) -> Result<EpisodeLog, CoordinatorError> {
    let tl = cfg.timeline;
    tl.validate()?;
    let fire = FireModel::new(scenario);
    let params = *fire.params();
    let mut world_rng = stream(seed, streams::WORLD);
    let mut ranging_rng = stream(seed, streams::RANGING);
    let mut surveil_rng = stream(seed, streams::SURVEIL);
    let mut aircraft = vec![Aircraft::new(1, 0, stream(seed, streams::AIRCRAFT1))];

    let mut world = WorldState::ignite(scenario);
    let mut belief = BeliefState::new(scenario.dims, scenario.median_initial_fuel());
    let mut drones = initial_drones(scenario);
    let mut ever = world.burning.clone();
    let mut history = RingHistory::new();
    let mut latch = DispatchLatch::default();
    let mut rows = Vec::with_capacity(tl.horizon as usize + 1);
    let mut reached_boundary = false;

    for t in 0..=tl.horizon {
        if cfg.perfect_info {
            belief.sync_to_truth(&world);
            belief.assumed_fuel = world.fuel.clone();
        }

        // Plan drops due next minute.
        for ac in aircraft.iter_mut() {
            if tl.is_drop_minute(t + 1, ac.offset) {
                ac.plan(&cfg.suppression, &belief, t, scenario, &fire, templates)?;
            }
        }

        let drones_active = cfg.surveillance.is_some() && t >= tl.uav_arrival;
        if let (Some(sc), true) = (&cfg.surveillance, drones_active) {
            if !cfg.perfect_info {
                let pending = aircraft.iter().find(|a| tl.is_drop_minute(t + 1, a.offset)).and_then(|a| a.pending);
                let action = plan_surveillance(&belief, &drones, scenario, &fire, t, pending.as_ref(), sc.kind, &sc.mcts, &mut surveil_rng)?;
                drones = apply_action(&drones, &action).expect("planner returns legal actions");
                let obs = ranging(&drones, &world.burning, &scenario.ranging, &mut ranging_rng);
                belief.update(&obs);
                belief.increment_uncertainty(&obs.cells());
            }
        }

        let ring = ring_radius(&world.burning, scenario.origin);
        let mut dispatch_now = latch.triggered_at.is_some();
        let mut predicted = None;
        if tl.is_suppression_step(t) {
            history.push(t, ring)?;
            predicted = predictor.predict(&history, tl.horizon).ok();
            if !dispatch_now && latch.evaluate(&history, t, &cfg.dispatch, predictor, tl.horizon) {
                dispatch_now = true;
                aircraft.push(Aircraft::new(2, tl.second_offset(), stream(seed, streams::AIRCRAFT2)));
            }
        }

        let mut drops = Vec::new();
        let mut outcomes = Vec::new();
        for ac in aircraft.iter_mut() {
            if tl.is_drop_minute(t, ac.offset) {
                if let Some(a) = ac.pending.take() {
                    let o = templates.footprint(&a, scenario.dims);
                    drops.push(DropRecord { aircraft: ac.id, action: a });
                    outcomes.push(o);
                }
            }
        }

        rows.push(StepRecord {
            t,
            burning_count: world.burning.count(),
            destruction: burned_destruction(&ever, &scenario.resources),
            instant_destruction: instantaneous_destruction(&world.burning, &scenario.resources),
            ring_radius_m: ring,
            drones: drones_active.then_some((drones.drone1, drones.drone2)),
            drops,
            dispatch: dispatch_now,
            predicted_ring_m: predicted,
            belief_accuracy: belief_accuracy(&belief.burning, &world.burning),
            burning_accuracy: burning_accuracy(&belief.burning, &world.burning),
        });

        for o in &outcomes {
            for &c in o.full() {
                belief.burning[c] = false;
            }
        }

        if touches_boundary(&world.burning) {
            reached_boundary = true;
            break;
        }
        if t == tl.horizon {
            break;
        }
        let outcome = merge_outcomes(&outcomes);
        world = step(&world, outcome.as_ref(), &fire, &mut world_rng);
        for (e, &b) in ever.as_mut_slice().iter_mut().zip(world.burning.as_slice()) {
            *e |= b;
        }
        if let Some(o) = &outcome {
            for &c in o.full() {
                belief.assumed_fuel[c] = belief.assumed_fuel[c].saturating_sub(params.gamma_full);
            }
            for &c in o.partial() {
                belief.assumed_fuel[c] = belief.assumed_fuel[c].saturating_sub(params.gamma_partial);
            }
        }
        belief.consume_assumed_fuel(params.alpha);
    }

    let last = rows.last().expect("at least one row");
    let window = scenario.spread.plateau_window();
    let outcome = classify(last.burning_count, last.ring_radius_m, reached_boundary, &history, window);
    Ok(EpisodeLog {
        seed,
        rows,
        ring_history: history,
        plateau_window: window,
        reached_boundary,
        dispatched_at: latch.triggered_at,
        outcome,
    })
}
