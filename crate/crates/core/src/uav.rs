//! Unmanned aircraft: airspace gridworld, joint actions, ranging and the
//! separation penalties used by the surveillance reward.
//!
//! The airspace is 10x10 columns of 20 m over the wildfire grid with seven
//! altitude levels. Column `(x, y)` sits above wildfire cells
//! `rows 10y..10y+9, cols 10x..10x+9`; `y` grows south like grid rows.

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::drops::AxisOfAdvance;
use crate::grid::{BoolGrid, CellIndex, Dims, Point2, RealGrid};
use crate::gridstate::ObservationBatch;
use crate::rng::SimRng;

pub const AIRSPACE_COLS: u8 = 10;
pub const AIRSPACE_ROWS: u8 = 10;
pub const AIRSPACE_LEVELS: u8 = 7;
/// Edge length of an airspace cell in meters.
pub const AIRSPACE_PITCH_M: f64 = 20.0;
/// Wildfire cells per airspace column edge.
pub const CELLS_PER_COLUMN: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UavError {
    #[error("action {0:?} is not legal from {1:?}")]
    IllegalAction(SurveillanceAction, SurveillanceState),
    #[error("invalid penalty parameters: {0}")]
    InvalidPenalties(String),
}

/// Position of one drone. `z` runs from 1 (lowest) to 7.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DronePos {
    pub x: u8,
    pub y: u8,
    pub z: u8,
}

impl DronePos {
    pub const fn new(x: u8, y: u8, z: u8) -> Self {
        Self { x, y, z }
    }

    pub fn in_bounds(&self) -> bool {
        self.x < AIRSPACE_COLS && self.y < AIRSPACE_ROWS && (1..=AIRSPACE_LEVELS).contains(&self.z)
    }

    /// Horizontal position in meters, grid frame.
    pub fn horizontal_m(&self) -> Point2 {
        Point2::new(
            (self.x as f64 + 0.5) * AIRSPACE_PITCH_M,
            (self.y as f64 + 0.5) * AIRSPACE_PITCH_M,
        )
    }

    pub fn altitude_m(&self) -> f64 {
        self.z as f64 * AIRSPACE_PITCH_M
    }

    pub fn distance_3d(&self, other: &DronePos) -> f64 {
        let h = self.horizontal_m().distance(other.horizontal_m());
        let dz = self.altitude_m() - other.altitude_m();
        (h * h + dz * dz).sqrt()
    }

    /// Position after `m`, or `None` if it leaves the airspace.
    pub fn moved(&self, m: Move) -> Option<DronePos> {
        let (dx, dy, dz) = m.delta();
        let p = DronePos {
            x: (self.x as i16 + dx as i16).try_into().ok()?,
            y: (self.y as i16 + dy as i16).try_into().ok()?,
            z: (self.z as i16 + dz as i16).try_into().ok()?,
        };
        p.in_bounds().then_some(p)
    }

    /// The wildfire cell under the middle of this column.
    pub fn center_cell(&self) -> CellIndex {
        CellIndex::new(
            self.y as usize * CELLS_PER_COLUMN + CELLS_PER_COLUMN / 2,
            self.x as usize * CELLS_PER_COLUMN + CELLS_PER_COLUMN / 2,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    /// North.
    Up,
    /// South.
    Down,
    /// West.
    Left,
    /// East.
    Right,
    Ascend,
    Descend,
    Hover,
}

impl Move {
    pub const ALL: [Move; 7] = [
        Move::Up,
        Move::Down,
        Move::Left,
        Move::Right,
        Move::Ascend,
        Move::Descend,
        Move::Hover,
    ];

    fn delta(self) -> (i8, i8, i8) {
        match self {
            Move::Up => (0, -1, 0),
            Move::Down => (0, 1, 0),
            Move::Left => (-1, 0, 0),
            Move::Right => (1, 0, 0),
            Move::Ascend => (0, 0, 1),
            Move::Descend => (0, 0, -1),
            Move::Hover => (0, 0, 0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Move::Up => "up",
            Move::Down => "down",
            Move::Left => "left",
            Move::Right => "right",
            Move::Ascend => "ascend",
            Move::Descend => "descend",
            Move::Hover => "hover",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SurveillanceState {
    pub drone1: DronePos,
    pub drone2: DronePos,
}

impl SurveillanceState {
    pub fn new(drone1: DronePos, drone2: DronePos) -> Self {
        Self { drone1, drone2 }
    }

    pub fn is_valid(&self) -> bool {
        self.drone1.in_bounds() && self.drone2.in_bounds() && self.drone1 != self.drone2
    }
}

/// A joint action. Ordering and [`SurveillanceAction::index`] follow
/// `move1 * 7 + move2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SurveillanceAction {
    pub move1: Move,
    pub move2: Move,
}

impl SurveillanceAction {
    pub const HOVER: SurveillanceAction = SurveillanceAction {
        move1: Move::Hover,
        move2: Move::Hover,
    };

    pub fn index(&self) -> usize {
        self.move1.index() * Move::ALL.len() + self.move2.index()
    }

    pub fn from_index(i: usize) -> Option<Self> {
        let n = Move::ALL.len();
        (i < n * n).then(|| Self {
            move1: Move::ALL[i / n],
            move2: Move::ALL[i % n],
        })
    }

    /// All 49 joint actions.
    pub fn all() -> impl Iterator<Item = SurveillanceAction> {
        (0..Move::ALL.len() * Move::ALL.len()).filter_map(Self::from_index)
    }
}

/// Joint actions that keep both drones inside the airspace and apart.
pub fn legal_actions(s: &SurveillanceState) -> Vec<SurveillanceAction> {
    SurveillanceAction::all()
        .filter(|e| successor(s, e).is_some())
        .collect()
}

fn successor(s: &SurveillanceState, e: &SurveillanceAction) -> Option<SurveillanceState> {
    let d1 = s.drone1.moved(e.move1)?;
    let d2 = s.drone2.moved(e.move2)?;
    (d1 != d2).then_some(SurveillanceState::new(d1, d2))
}

pub fn apply_action(s: &SurveillanceState, e: &SurveillanceAction) -> Result<SurveillanceState, UavError> {
    successor(s, e).ok_or(UavError::IllegalAction(*e, *s))
}

/// Sensor footprint law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangingParams {
    /// Footprint side in wildfire cells per altitude level.
    pub footprint_cells_per_level: usize,
    /// Most cells one drone observes per minute.
    pub cap: usize,
}

impl Default for RangingParams {
    fn default() -> Self {
        Self {
            footprint_cells_per_level: 10,
            cap: 100,
        }
    }
}

/// Wildfire cells under one drone: a square of side `z * per_level`
/// centered on the column, clipped to the grid, in row-major order.
pub fn footprint(drone: &DronePos, dims: Dims, params: &RangingParams) -> Vec<CellIndex> {
    let (rows, cols) = footprint_ranges(drone, dims, params);
    rows.flat_map(|r| cols.clone().map(move |c| CellIndex::new(r, c)))
        .collect()
}

fn footprint_ranges(drone: &DronePos, dims: Dims, params: &RangingParams) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let side = drone.z as i64 * params.footprint_cells_per_level as i64;
    let center = drone.center_cell();
    let r0 = center.row as i64 - side / 2;
    let c0 = center.col as i64 - side / 2;
    let clip = |lo: i64, n: usize| lo.max(0) as usize..(lo + side).clamp(0, n as i64) as usize;
    (clip(r0, dims.rows), clip(c0, dims.cols))
}

/// The cells one drone observes this minute: the whole footprint when it
/// fits under the cap, otherwise a uniform sample of `cap` cells.
pub fn observed_cells(drone: &DronePos, dims: Dims, params: &RangingParams, rng: &mut SimRng) -> Vec<CellIndex> {
    let (rows, cols) = footprint_ranges(drone, dims, params);
    let (h, w) = (rows.len(), cols.len());
    if h * w <= params.cap {
        return footprint(drone, dims, params);
    }
    let mut picked: Vec<usize> = index::sample(rng, h * w, params.cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| CellIndex::new(rows.start + i / w, cols.start + i % w)).collect()
}

/// Observes `burning` from both drones and merges the batches.
pub fn ranging(s: &SurveillanceState, burning: &BoolGrid, params: &RangingParams, rng: &mut SimRng) -> ObservationBatch {
    let dims = burning.dims();
    let a = observed_cells(&s.drone1, dims, params, rng);
    let b = observed_cells(&s.drone2, dims, params, rng);
    ObservationBatch::new(a.into_iter().chain(b).map(|c| (c, burning[c])))
}

/// Reward weights and separation distances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    /// Weight on observed uncertainty.
    pub tau1: f64,
    /// Drone-drone separation distance, meters.
    pub d_u: f64,
    /// Penalty when drones are within `d_u`.
    pub p_u: f64,
    /// Drone to axis-of-advance separation distance, meters.
    pub d_m: f64,
    /// Penalty when either drone is within `d_m` of the axis.
    pub p_m: f64,
    /// Per-meter weight on distance to the fire origin.
    pub tau4: f64,
}

impl Default for PenaltyParams {
    fn default() -> Self {
        Self {
            tau1: 1.0,
            d_u: 40.0,
            p_u: 50.0,
            d_m: 100.0,
            p_m: 500.0,
            tau4: 0.01,
        }
    }
}

impl PenaltyParams {
    pub fn validate(&self) -> Result<(), UavError> {
        let ok = self.d_u >= 0.0
            && self.d_m > self.d_u
            && self.p_u >= 0.0
            && self.p_m > self.p_u
            && self.tau1 >= 0.0
            && self.tau4 >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(UavError::InvalidPenalties(format!(
                "need d_m > d_u >= 0, p_m > p_u >= 0 and non-negative weights, got {self:?}"
            )))
        }
    }
}

/// Drone-drone proximity penalty.
pub fn proximity_penalty(s: &SurveillanceState, params: &PenaltyParams) -> f64 {
    if s.drone1.distance_3d(&s.drone2) <= params.d_u {
        params.p_u
    } else {
        0.0
    }
}

/// Axis-of-advance penalty, applied once if either drone is close.
pub fn aoa_penalty(s: &SurveillanceState, aoa: Option<&AxisOfAdvance>, dims: Dims, params: &PenaltyParams) -> f64 {
    let Some(aoa) = aoa else {
        return 0.0;
    };
    let near = |d: &DronePos| aoa.distance_within_grid(d.horizontal_m(), dims) <= params.d_m;
    if near(&s.drone1) || near(&s.drone2) {
        params.p_m
    } else {
        0.0
    }
}

/// Distance-to-origin penalty.
pub fn origin_penalty(s: &SurveillanceState, origin: CellIndex, params: &PenaltyParams) -> f64 {
    let o = origin.center_m();
    params.tau4 * (s.drone1.horizontal_m().distance(o) + s.drone2.horizontal_m().distance(o))
}

pub fn total_penalty(
    s: &SurveillanceState,
    aoa: Option<&AxisOfAdvance>,
    origin: CellIndex,
    dims: Dims,
    params: &PenaltyParams,
) -> f64 {
    proximity_penalty(s, params) + aoa_penalty(s, aoa, dims, params) + origin_penalty(s, origin, params)
}

/// Uncertainty-model surveillance reward for arriving at `s_next` and
/// observing `obs_cells`.
pub fn surveillance_reward(
    s_next: &SurveillanceState,
    uncertainty: &RealGrid,
    obs_cells: &[CellIndex],
    aoa: Option<&AxisOfAdvance>,
    origin: CellIndex,
    params: &PenaltyParams,
) -> f64 {
    let observed: f64 = obs_cells.iter().map(|&c| uncertainty[c]).sum();
    params.tau1 * observed - total_penalty(s_next, aoa, origin, uncertainty.dims(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drops::DropType;
    use crate::rng::seeded;

    fn dims() -> Dims {
        Dims::square(100)
    }

    #[test]
    fn forty_nine_joint_actions() {
        assert_eq!(SurveillanceAction::all().count(), 49);
        for (i, a) in SurveillanceAction::all().enumerate() {
            assert_eq!(a.index(), i);
        }
    }

    #[test]
    fn all_actions_legal_mid_airspace() {
        let s = SurveillanceState::new(DronePos::new(2, 2, 3), DronePos::new(7, 7, 4));
        assert_eq!(legal_actions(&s).len(), 49);
    }

    #[test]
    fn corner_at_ceiling_has_four_moves() {
        let s = SurveillanceState::new(DronePos::new(0, 0, 7), DronePos::new(6, 6, 3));
        let own: Vec<Move> = Move::ALL
            .into_iter()
            .filter(|&m| s.drone1.moved(m).is_some())
            .collect();
        assert_eq!(own, vec![Move::Down, Move::Right, Move::Descend, Move::Hover]);
        assert!(legal_actions(&s).len() <= 28);
        assert_eq!(legal_actions(&s).len(), 28);
    }

    #[test]
    fn collisions_are_pruned() {
        let s = SurveillanceState::new(DronePos::new(4, 4, 3), DronePos::new(5, 4, 3));
        let legal = legal_actions(&s);
        // Drone 1 right onto drone 2 hovering.
        assert!(!legal.contains(&SurveillanceAction {
            move1: Move::Right,
            move2: Move::Hover
        }));
        // Swapping places is allowed.
        assert!(legal.contains(&SurveillanceAction {
            move1: Move::Right,
            move2: Move::Left
        }));
        for e in legal {
            assert!(apply_action(&s, &e).unwrap().is_valid());
        }
    }

    #[test]
    fn apply_action_examples() {
        let s = SurveillanceState::new(DronePos::new(4, 4, 3), DronePos::new(6, 6, 2));
        assert_eq!(apply_action(&s, &SurveillanceAction::HOVER).unwrap(), s);
        let up = apply_action(
            &s,
            &SurveillanceAction {
                move1: Move::Ascend,
                move2: Move::Hover,
            },
        )
        .unwrap();
        assert_eq!(up.drone1, DronePos::new(4, 4, 4));
        let lr = apply_action(
            &s,
            &SurveillanceAction {
                move1: Move::Left,
                move2: Move::Right,
            },
        )
        .unwrap();
        assert_eq!((lr.drone1.x, lr.drone2.x), (3, 7));
        let edge = SurveillanceState::new(DronePos::new(0, 4, 1), DronePos::new(6, 6, 2));
        assert!(apply_action(
            &edge,
            &SurveillanceAction {
                move1: Move::Descend,
                move2: Move::Hover
            }
        )
        .is_err());
    }

    #[test]
    fn footprint_sizes() {
        let p = RangingParams::default();
        let low = DronePos::new(4, 4, 1);
        let cells = footprint(&low, dims(), &p);
        assert_eq!(cells.len(), 100);
        assert!(cells.iter().all(|c| (40..50).contains(&c.row) && (40..50).contains(&c.col)));
        let mut rng = seeded(0);
        assert_eq!(observed_cells(&low, dims(), &p, &mut rng).len(), 100);
        let high = DronePos::new(4, 4, 7);
        assert_eq!(footprint(&high, dims(), &p).len(), 4900);
        let seen = observed_cells(&high, dims(), &p, &mut rng);
        assert_eq!(seen.len(), 100);
        let mut dedup = seen.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 100);
    }

    #[test]
    fn corner_footprint_is_clipped() {
        let p = RangingParams::default();
        let cells = footprint(&DronePos::new(0, 0, 3), dims(), &p);
        // Side 30 centered on (5,5): rows and cols -10..20 clip to 0..20.
        assert_eq!(cells.len(), 400);
        assert!(cells.iter().all(|c| c.row < 20 && c.col < 20));
    }

    #[test]
    fn ranging_reads_truth_and_respects_cap() {
        let mut burning = BoolGrid::filled(dims(), false);
        burning[CellIndex::new(45, 45)] = true;
        let s = SurveillanceState::new(DronePos::new(4, 4, 1), DronePos::new(9, 9, 7));
        let batch = ranging(&s, &burning, &RangingParams::default(), &mut seeded(2));
        assert!(batch.len() <= 200);
        assert!(batch.entries().contains(&(CellIndex::new(45, 45), true)));
    }

    #[test]
    fn reward_vanishes_without_uncertainty_or_penalties() {
        let params = PenaltyParams::default();
        let origin = CellIndex::new(5, 5);
        let s = SurveillanceState::new(DronePos::new(0, 0, 1), DronePos::new(0, 0, 7));
        let u = RealGrid::filled(dims(), 0.0);
        // Same column, 120 m apart vertically, over the origin cell.
        let r = surveillance_reward(&s, &u, &[], None, origin, &params);
        assert_eq!(r, -origin_penalty(&s, origin, &params));
        assert!(r.abs() < 0.05);
        let free = PenaltyParams { tau4: 0.0, ..params };
        assert_eq!(surveillance_reward(&s, &u, &[], None, origin, &free), 0.0);
    }

    #[test]
    fn close_drones_pay_proximity_penalty() {
        let params = PenaltyParams::default();
        let s = SurveillanceState::new(DronePos::new(3, 3, 2), DronePos::new(4, 3, 2));
        assert_eq!(proximity_penalty(&s, &params), params.p_u);
    }

    #[test]
    fn aoa_penalty_applies_once_at_any_altitude() {
        let params = PenaltyParams::default();
        // East-west axis along y = 191 m.
        let center = CellIndex::new(95, 50);
        let aoa = AxisOfAdvance::for_drop(center, DropType::LineEw, Point2::new(-10_000.0, 100.0));
        let both = SurveillanceState::new(DronePos::new(5, 9, 7), DronePos::new(2, 9, 1));
        assert_eq!(aoa_penalty(&both, Some(&aoa), dims(), &params), params.p_m);
        let one = SurveillanceState::new(DronePos::new(5, 9, 7), DronePos::new(2, 0, 1));
        assert_eq!(aoa_penalty(&one, Some(&aoa), dims(), &params), params.p_m);
        let far = SurveillanceState::new(DronePos::new(0, 1, 7), DronePos::new(9, 2, 1));
        assert_eq!(aoa_penalty(&far, Some(&aoa), dims(), &params), 0.0);
        assert_eq!(aoa_penalty(&both, None, dims(), &params), 0.0);
    }

    #[test]
    fn penalty_ordering_is_validated() {
        assert!(PenaltyParams::default().validate().is_ok());
        let bad = PenaltyParams {
            d_m: 10.0,
            ..PenaltyParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
