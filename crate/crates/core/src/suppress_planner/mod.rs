//! Suppression planning: which drop the helicopter should make next.
//!
//! The planner searches over a restricted set of drops (see [`asr`]). Each
//! candidate is scored by rolling the believed fire forward with and without
//! the drop under common random numbers.

pub mod asr;
pub mod technique;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use asr::{asr, asr_strict, fire_head, resource_areas, AsrContext, AsrMethod, ResourceArea};
pub use technique::{firefighting_technique, TechniqueMemory};

use crate::drops::{apply_outcome, SuppressionActionSpec, TemplateSet};
use crate::grid::{BoolGrid, BoundingBox, CellIndex, RealGrid};
use crate::gridstate::{cell_destruction, instantaneous_destruction, BeliefState, Scenario, WorldState};
use crate::mcts::{search, GenerativeModel, MctsConfig, MctsError};
use crate::propagation::{step_with_key, FireModel, PropagationParams};
use crate::rng::{next_key, SimRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuppressionRewardKind {
    /// Destruction avoided inside a window around the drop.
    Localized,
    /// Negative destruction over the whole grid after the drop.
    Global,
    /// Greedy: expected believed-burning cells put out right now.
    Immediate,
}

impl SuppressionRewardKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Localized => "localized",
            Self::Global => "global",
            Self::Immediate => "immediate",
        }
    }
}

impl std::str::FromStr for SuppressionRewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "localized" => Ok(Self::Localized),
            "global" => Ok(Self::Global),
            "immediate" => Ok(Self::Immediate),
            other => Err(format!("unknown suppression reward `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SuppressPlannerError {
    #[error("quantile must lie in (0, 100), got {0}")]
    Quantile(f64),
    #[error("rollout depth must be at least 1")]
    RolloutDepth,
    #[error(transparent)]
    Search(#[from] MctsError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuppressPlannerConfig {
    pub asr_method: AsrMethod,
    /// Distance percentile for restriction methods 2 and 3.
    pub quantile: f64,
    /// Internal propagation steps per tree level.
    pub rollout_depth: usize,
    pub reward_kind: SuppressionRewardKind,
    pub mcts: MctsConfig,
}

impl Default for SuppressPlannerConfig {
    fn default() -> Self {
        Self {
            asr_method: AsrMethod::DistantQuantile,
            quantile: 90.0,
            rollout_depth: 10,
            reward_kind: SuppressionRewardKind::Localized,
            mcts: MctsConfig {
                max_depth: 2,
                exploration_c: 100.0,
                ..MctsConfig::default()
            },
        }
    }
}

impl SuppressPlannerConfig {
    pub fn validate(&self) -> Result<(), SuppressPlannerError> {
        if !(self.quantile > 0.0 && self.quantile < 100.0) {
            return Err(SuppressPlannerError::Quantile(self.quantile));
        }
        if self.rollout_depth == 0 {
            return Err(SuppressPlannerError::RolloutDepth);
        }
        self.mcts.validate()?;
        Ok(())
    }
}

/// Square region scored by the localized reward: `half_width` cells on each
/// side of the drop center, clipped to the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalWindow {
    pub center: CellIndex,
    pub half_width: usize,
}

impl LocalWindow {
    pub fn new(center: CellIndex, half_width: usize) -> Self {
        Self { center, half_width }
    }

    pub fn bounds(&self, rows: usize, cols: usize) -> BoundingBox {
        let (r, c, h) = (self.center.row as usize, self.center.col as usize, self.half_width);
        BoundingBox {
            r0: r.saturating_sub(h),
            c0: c.saturating_sub(h),
            r1: (r + h).min(rows - 1),
            c1: (c + h).min(cols - 1),
        }
    }

    /// Destruction of the burning cells inside the window.
    pub fn destruction(&self, burning: &BoolGrid, resources: &RealGrid) -> f64 {
        let dims = burning.dims();
        let b = self.bounds(dims.rows, dims.cols);
        let (bs, rs) = (burning.as_slice(), resources.as_slice());
        let mut total = 0.0;
        for r in b.r0..=b.r1 {
            for c in b.c0..=b.c1 {
                let i = r * dims.cols + c;
                if bs[i] {
                    total += cell_destruction(rs[i]);
                }
            }
        }
        total
    }
}

/// Random keys for one paired comparison: the partial-coverage draw and one
/// key per propagation step.
#[derive(Clone, Debug)]
struct PairedKeys {
    partial: u64,
    steps: Vec<u64>,
}

impl PairedKeys {
    fn draw(ro: usize, rng: &mut SimRng) -> Self {
        let partial = next_key(rng);
        let steps = (0..ro).map(|_| next_key(rng)).collect();
        Self { partial, steps }
    }
}

fn roll(state: &mut WorldState, keys: &[u64], fire: &FireModel) {
    for &k in keys {
        step_with_key(state, None, fire, k);
    }
}

fn suppressed(
    state: &WorldState,
    a: &SuppressionActionSpec,
    templates: &TemplateSet,
    params: &PropagationParams,
    fire: &FireModel,
    keys: &PairedKeys,
) -> WorldState {
    let mut s = state.clone();
    let outcome = templates.footprint(a, s.dims());
    apply_outcome(&mut s.burning, Some(&mut s.fuel), &outcome, params, keys.partial);
    roll(&mut s, &keys.steps, fire);
    s
}

/// Destruction avoided in the window around the drop over `ro` minutes:
/// reference rollout minus suppressed rollout, with shared random numbers.
pub fn localized_reward(
    state: &WorldState,
    a: &SuppressionActionSpec,
    scenario: &Scenario,
    fire: &FireModel,
    templates: &TemplateSet,
    ro: usize,
    rng: &mut SimRng,
) -> f64 {
    let keys = PairedKeys::draw(ro, rng);
    localized_with_keys(state, a, scenario, fire, templates, ro, &keys).0
}

fn localized_with_keys(
    state: &WorldState,
    a: &SuppressionActionSpec,
    scenario: &Scenario,
    fire: &FireModel,
    templates: &TemplateSet,
    ro: usize,
    keys: &PairedKeys,
) -> (f64, WorldState) {
    let mut reference = state.clone();
    roll(&mut reference, &keys.steps, fire);
    let after = suppressed(state, a, templates, fire.params(), fire, keys);
    let window = LocalWindow::new(a.center, ro);
    let r = window.destruction(&reference.burning, &scenario.resources) - window.destruction(&after.burning, &scenario.resources);
    (r, after)
}

/// Total destruction over the grid `ro` minutes after the drop.
pub fn global_penalty(
    state: &WorldState,
    a: &SuppressionActionSpec,
    scenario: &Scenario,
    fire: &FireModel,
    templates: &TemplateSet,
    ro: usize,
    rng: &mut SimRng,
) -> f64 {
    let keys = PairedKeys::draw(ro, rng);
    let after = suppressed(state, a, templates, fire.params(), fire, &keys);
    instantaneous_destruction(&after.burning, &scenario.resources)
}

/// Expected number of believed-burning cells a drop puts out at once.
pub fn expected_cleared(burning: &BoolGrid, a: &SuppressionActionSpec, templates: &TemplateSet, params: &PropagationParams) -> f64 {
    let outcome = templates.footprint(a, burning.dims());
    let full = outcome.full().iter().filter(|&&c| burning[c]).count() as f64;
    let partial = outcome.partial().iter().filter(|&&c| burning[c]).count() as f64;
    full + partial * (1.0 - params.p_partial)
}

/// Generative model over the planner's picture of the fire. Each tree level
/// is one drop followed by `rollout_depth` minutes of internal propagation.
pub struct SuppressionModel<'a> {
    pub scenario: &'a Scenario,
    pub fire: &'a FireModel,
    pub templates: &'a TemplateSet,
    pub asr: AsrContext,
    pub rollout_depth: usize,
    pub kind: SuppressionRewardKind,
}

impl<'a> SuppressionModel<'a> {
    pub fn new(scenario: &'a Scenario, fire: &'a FireModel, templates: &'a TemplateSet, cfg: &SuppressPlannerConfig) -> Self {
        Self {
            scenario,
            fire,
            templates,
            asr: AsrContext::new(cfg.asr_method, cfg.quantile, scenario.origin, &scenario.resources),
            rollout_depth: cfg.rollout_depth,
            kind: cfg.reward_kind,
        }
    }

    pub fn root_state(belief: &BeliefState, minute: u32) -> WorldState {
        WorldState {
            burning: belief.burning.clone(),
            fuel: belief.assumed_fuel.clone(),
            clock: minute,
        }
    }
}

impl GenerativeModel for SuppressionModel<'_> {
    type State = WorldState;
    type Action = SuppressionActionSpec;

    fn legal_actions(&self, state: &WorldState) -> Vec<SuppressionActionSpec> {
        self.asr.actions(&state.burning)
    }

    fn sample_transition(&self, state: &WorldState, a: &SuppressionActionSpec, rng: &mut SimRng) -> (WorldState, f64) {
        let keys = PairedKeys::draw(self.rollout_depth, rng);
        match self.kind {
            SuppressionRewardKind::Localized => {
                let (r, next) = localized_with_keys(state, a, self.scenario, self.fire, self.templates, self.rollout_depth, &keys);
                (next, r)
            }
            SuppressionRewardKind::Global => {
                let next = suppressed(state, a, self.templates, self.fire.params(), self.fire, &keys);
                let p = instantaneous_destruction(&next.burning, &self.scenario.resources);
                (next, -p)
            }
            SuppressionRewardKind::Immediate => {
                let r = expected_cleared(&state.burning, a, self.templates, self.fire.params());
                let next = suppressed(state, a, self.templates, self.fire.params(), self.fire, &keys);
                (next, r)
            }
        }
    }

    fn is_terminal(&self, state: &WorldState) -> bool {
        !state.burning.any()
    }
}

/// The greedy choice: the restricted action clearing the most expected
/// believed-burning cells, lowest action on ties.
pub fn immediate_suppression(
    burning: &BoolGrid,
    ctx: &AsrContext,
    templates: &TemplateSet,
    params: &PropagationParams,
) -> Option<SuppressionActionSpec> {
    let mut best: Option<(f64, SuppressionActionSpec)> = None;
    for a in ctx.actions(burning) {
        let v = expected_cleared(burning, &a, templates, params);
        if best.map_or(true, |(bv, _)| v > bv) {
            best = Some((v, a));
        }
    }
    best.map(|(_, a)| a)
}

/// Recommends the next drop from the current belief, or `None` when the
/// belief holds no fire.
pub fn plan_suppression(
    belief: &BeliefState,
    minute: u32,
    scenario: &Scenario,
    fire: &FireModel,
    templates: &TemplateSet,
    cfg: &SuppressPlannerConfig,
    rng: &mut SimRng,
) -> Result<Option<SuppressionActionSpec>, SuppressPlannerError> {
    cfg.validate()?;
    if !belief.burning.any() {
        return Ok(None);
    }
    let model = SuppressionModel::new(scenario, fire, templates, cfg);
    if cfg.reward_kind == SuppressionRewardKind::Immediate {
        return Ok(immediate_suppression(&belief.burning, &model.asr, templates, fire.params()));
    }
    let root = SuppressionModel::root_state(belief, minute);
    Ok(Some(search(&model, &root, &cfg.mcts, rng)?.action))
}

/// Mean reward of every restricted action over `samples` shared seeds.
/// Brute-force reference for testing the search.
pub fn exhaustive_values(
    model: &SuppressionModel<'_>,
    state: &WorldState,
    samples: usize,
    seed: u64,
) -> Vec<(SuppressionActionSpec, f64)> {
    model
        .legal_actions(state)
        .into_iter()
        .map(|a| {
            let mut rng = crate::rng::seeded(seed);
            let total: f64 = (0..samples).map(|_| model.sample_transition(state, &a, &mut rng).1).sum();
            (a, total / samples as f64)
        })
        .collect()
}
