//! Surveillance planning: MCTS over joint drone moves.
//!
//! Rollouts run on the planner's own picture of the fire: the believed
//! burning map and fuel estimate, advanced one minute per tree level by the
//! internal fire model. Drones "observe" that simulated fire. Two reward
//! models are available: observed uncertainty mass, or the number of
//! observations that contradict the belief map.

use serde::{Deserialize, Serialize};

use crate::drops::{AxisOfAdvance, SuppressionActionSpec};
use crate::grid::{BoolGrid, CellIndex, RealGrid};
use crate::gridstate::{increment_uncertainty, BeliefState, ObservationBatch, Scenario, WorldState};
use crate::mcts::{search, GenerativeModel, MctsConfig, MctsError};
use crate::propagation::{step_with_key, FireModel};
use crate::rng::{next_key, SimRng};
use crate::uav::{legal_actions, observed_cells, total_penalty, SurveillanceAction, SurveillanceState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveillanceModelKind {
    Uncertainty,
    BeliefBaseline,
}

impl SurveillanceModelKind {
    pub fn name(self) -> &'static str {
        match self {
            SurveillanceModelKind::Uncertainty => "uncertainty",
            SurveillanceModelKind::BeliefBaseline => "belief_baseline",
        }
    }
}

impl std::str::FromStr for SurveillanceModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uncertainty" => Ok(Self::Uncertainty),
            "belief_baseline" | "baseline" | "belief" => Ok(Self::BeliefBaseline),
            other => Err(format!("unknown surveillance model `{other}`")),
        }
    }
}

/// What the reward model tracks between steps.
#[derive(Clone, Debug, PartialEq)]
pub enum Tracker {
    Uncertainty(RealGrid),
    /// Belief map as the planner would hold it after simulated observations.
    Prior(BoolGrid),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurveilSimState {
    pub drones: SurveillanceState,
    /// Simulated fire (believed burning cells, assumed fuel, minute).
    pub world: WorldState,
    pub tracker: Tracker,
}

/// Generative surveillance model over the planner's information set.
pub struct SurveillanceModel<'a> {
    pub scenario: &'a Scenario,
    pub fire: &'a FireModel,
    pub kind: SurveillanceModelKind,
    pub aoa: Option<AxisOfAdvance>,
}

impl<'a> SurveillanceModel<'a> {
    pub fn new(
        scenario: &'a Scenario,
        fire: &'a FireModel,
        kind: SurveillanceModelKind,
        pending_drop: Option<&SuppressionActionSpec>,
    ) -> Self {
        Self {
            scenario,
            fire,
            kind,
            aoa: pending_drop.map(|a| AxisOfAdvance::for_action(a, scenario.water_source)),
        }
    }

    /// Root state built from the shared belief at `minute`.
    pub fn root_state(&self, belief: &BeliefState, drones: &SurveillanceState, minute: u32) -> SurveilSimState {
        let tracker = match self.kind {
            SurveillanceModelKind::Uncertainty => Tracker::Uncertainty(belief.uncertainty.clone()),
            SurveillanceModelKind::BeliefBaseline => Tracker::Prior(belief.burning.clone()),
        };
        SurveilSimState {
            drones: *drones,
            world: WorldState {
                burning: belief.burning.clone(),
                fuel: belief.assumed_fuel.clone(),
                clock: minute,
            },
            tracker,
        }
    }

    fn penalty(&self, drones: &SurveillanceState) -> f64 {
        total_penalty(
            drones,
            self.aoa.as_ref(),
            self.scenario.origin,
            self.scenario.dims,
            &self.scenario.penalties,
        )
    }
}

impl GenerativeModel for SurveillanceModel<'_> {
    type State = SurveilSimState;
    type Action = SurveillanceAction;

    fn legal_actions(&self, state: &SurveilSimState) -> Vec<SurveillanceAction> {
        legal_actions(&state.drones)
    }

    fn sample_transition(&self, state: &SurveilSimState, action: &SurveillanceAction, rng: &mut SimRng) -> (SurveilSimState, f64) {
        let mut next = state.clone();
        step_with_key(&mut next.world, None, self.fire, next_key(rng));
        next.drones = crate::uav::apply_action(&state.drones, action).expect("legal action");
        let cells = joint_observed_cells(&next.drones, self.scenario, rng);
        let tau1 = self.scenario.penalties.tau1;
        let gain = match &mut next.tracker {
            Tracker::Uncertainty(u) => {
                increment_uncertainty(u, &next.world.burning, &[]);
                let mass: f64 = cells.iter().map(|&c| u[c]).sum();
                for &c in &cells {
                    u[c] = 0.0;
                }
                tau1 * mass
            }
            Tracker::Prior(prior) => {
                let burning = &next.world.burning;
                let changed = cells.iter().filter(|&&c| burning[c] != prior[c]).count();
                for &c in &cells {
                    prior[c] = burning[c];
                }
                tau1 * changed as f64
            }
        };
        let reward = gain - self.penalty(&next.drones);
        (next, reward)
    }
}

/// Observation reward of the belief baseline: cells whose observed state
/// differs from the prior belief, scaled by `tau1`.
pub fn belief_baseline_reward(obs: &ObservationBatch, prior: &BoolGrid, tau1: f64) -> f64 {
    tau1 * obs.entries().iter().filter(|&&(c, b)| prior[c] != b).count() as f64
}

/// Cells a joint state would observe, deduplicated.
pub fn joint_observed_cells(drones: &SurveillanceState, scenario: &Scenario, rng: &mut SimRng) -> Vec<CellIndex> {
    let mut cells = observed_cells(&drones.drone1, scenario.dims, &scenario.ranging, rng);
    cells.extend(observed_cells(&drones.drone2, scenario.dims, &scenario.ranging, rng));
    cells.sort_unstable();
    cells.dedup();
    cells
}

/// Recommends the next joint drone action.
#[allow(clippy::too_many_arguments)]
pub fn plan_surveillance(
    belief: &BeliefState,
    drones: &SurveillanceState,
    scenario: &Scenario,
    fire: &FireModel,
    minute: u32,
    pending_drop: Option<&SuppressionActionSpec>,
    kind: SurveillanceModelKind,
    cfg: &MctsConfig,
    rng: &mut SimRng,
) -> Result<SurveillanceAction, MctsError> {
    let model = SurveillanceModel::new(scenario, fire, kind, pending_drop);
    let root = model.root_state(belief, drones, minute);
    Ok(search(&model, &root, cfg, rng)?.action)
}
