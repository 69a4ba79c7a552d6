//! Grid-valued state: ground truth, the shared belief map with its
//! uncertainty layer, observation batches, and the scalar metrics computed
//! over them (instantaneous destruction and ring radius).

mod scenario;

pub use scenario::{
    Scenario, ScenarioError, SpreadPreset, WindPhase, ELEVATION_FILE, FUEL_FILE,
    RESOURCES_FILE, SCENARIO_FILE,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grid::{BoolGrid, BoundingBox, CellIndex, Dims, FuelGrid, RealGrid};

/// Chebyshev radius of the neighborhood that drives uncertainty growth.
pub const UNCERTAINTY_RADIUS: usize = 5;
/// Cells in that neighborhood, excluding the center.
pub const UNCERTAINTY_NEIGHBORHOOD: usize = (2 * UNCERTAINTY_RADIUS + 1).pow(2) - 1;

/// Ground truth: which cells burn, how much fuel remains, and the clock.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub burning: BoolGrid,
    pub fuel: FuelGrid,
    /// Minutes since ignition.
    pub clock: u32,
}

impl WorldState {
    /// The world at minute zero: scenario fuel with the seed cells alight.
    pub fn ignite(scenario: &Scenario) -> Self {
        let mut burning = BoolGrid::filled(scenario.dims, false);
        for &c in &scenario.ignition {
            burning[c] = true;
        }
        Self {
            burning,
            fuel: scenario.initial_fuel.clone(),
            clock: 0,
        }
    }

    pub fn dims(&self) -> Dims {
        self.burning.dims()
    }
}

/// The shared belief map maintained from drone observations.
///
/// `assumed_fuel` is the planners' fuel estimate: it starts uniform and is
/// drawn down by `alpha` for every minute a cell is believed burning, so the
/// internal fire model never reads true fuel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub burning: BoolGrid,
    pub uncertainty: RealGrid,
    pub assumed_fuel: FuelGrid,
}

impl BeliefState {
    pub fn new(dims: Dims, assumed_fuel: u32) -> Self {
        Self {
            burning: BoolGrid::filled(dims, false),
            uncertainty: RealGrid::filled(dims, 0.0),
            assumed_fuel: FuelGrid::filled(dims, assumed_fuel),
        }
    }

    pub fn dims(&self) -> Dims {
        self.burning.dims()
    }

    /// Overwrites observed cells with their observed state and zeroes their
    /// uncertainty. Unobserved cells are untouched.
    pub fn update(&mut self, obs: &ObservationBatch) {
        for &(cell, burning) in obs.entries() {
            self.burning[cell] = burning;
            self.uncertainty[cell] = 0.0;
        }
    }

    /// Grows uncertainty of unobserved cells by their proximity to believed
    /// fire and resets observed cells to zero.
    pub fn increment_uncertainty(&mut self, observed: &[CellIndex]) {
        increment_uncertainty(&mut self.uncertainty, &self.burning, observed);
    }

    /// Draws the fuel estimate down for one minute of believed burning.
    pub fn consume_assumed_fuel(&mut self, alpha: u32) {
        let burning = self.burning.as_slice();
        for (f, &b) in self.assumed_fuel.as_mut_slice().iter_mut().zip(burning) {
            if b {
                *f = f.saturating_sub(alpha);
            }
        }
    }

    /// Replaces the belief with the true state (perfect-information mode).
    /// Observed everywhere, so uncertainty is zero.
    pub fn sync_to_truth(&mut self, world: &WorldState) {
        self.burning = world.burning.clone();
        self.uncertainty.as_mut_slice().fill(0.0);
    }
}

/// Cells observed in one time step. Duplicates collapse to the last entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationBatch {
    entries: Vec<(CellIndex, bool)>,
}

impl ObservationBatch {
    pub fn new(entries: impl IntoIterator<Item = (CellIndex, bool)>) -> Self {
        let map: BTreeMap<CellIndex, bool> = entries.into_iter().collect();
        Self {
            entries: map.into_iter().collect(),
        }
    }

    /// Entries sorted by cell.
    pub fn entries(&self) -> &[(CellIndex, bool)] {
        &self.entries
    }

    pub fn cells(&self) -> Vec<CellIndex> {
        self.entries.iter().map(|&(c, _)| c).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Merges `other` into `self`; on a shared cell `other` wins.
    pub fn merge(&self, other: &ObservationBatch) -> ObservationBatch {
        ObservationBatch::new(self.entries.iter().chain(other.entries.iter()).copied())
    }
}

/// Per-cell uncertainty increment: the fraction of the (2r+1)^2 - 1
/// Chebyshev neighbors of each cell that are believed burning. Cells outside
/// the grid count as not burning, so the denominator is fixed.
pub fn uncertainty_increment(burning: &BoolGrid) -> RealGrid {
    let dims = burning.dims();
    let mut out = RealGrid::filled(dims, 0.0);
    let Some((region, counts)) = box_counts(burning) else {
        return out;
    };
    let w = region.c1 - region.c0 + 1;
    for (k, row) in (region.r0..=region.r1).enumerate() {
        for (j, col) in (region.c0..=region.c1).enumerate() {
            let cell = CellIndex::new(row, col);
            let own = burning[cell] as u32;
            out[cell] = (counts[k * w + j] - own) as f64 / UNCERTAINTY_NEIGHBORHOOD as f64;
        }
    }
    out
}

/// Applies one uncertainty update in place (see [`BeliefState::increment_uncertainty`]).
pub fn increment_uncertainty(uncertainty: &mut RealGrid, burning: &BoolGrid, observed: &[CellIndex]) {
    if let Some((region, counts)) = box_counts(burning) {
        let cols = burning.dims().cols;
        let w = region.c1 - region.c0 + 1;
        let (us, bs) = (uncertainty.as_mut_slice(), burning.as_slice());
        for (k, row) in (region.r0..=region.r1).enumerate() {
            let start = row * cols + region.c0;
            let u_row = &mut us[start..start + w];
            let b_row = &bs[start..start + w];
            for ((u, &b), &n) in u_row.iter_mut().zip(b_row).zip(&counts[k * w..(k + 1) * w]) {
                let n = n - b as u32;
                if n > 0 {
                    *u = (*u + n as f64 / UNCERTAINTY_NEIGHBORHOOD as f64).min(1.0);
                }
            }
        }
    }
    for &c in observed {
        uncertainty[c] = 0.0;
    }
}

/// Burning cells in the (2r+1)^2 box around each cell (the cell itself
/// included), for every cell within `r` of the fire's bounding box. Returns
/// that region and its counts in row-major order.
fn box_counts(burning: &BoolGrid) -> Option<(BoundingBox, Vec<u32>)> {
    let bb = burning.bounding_box()?;
    let dims = burning.dims();
    let r = UNCERTAINTY_RADIUS;
    let region = bb.expand(r, dims);
    let (h, w) = (region.r1 - region.r0 + 1, region.c1 - region.c0 + 1);
    let data = burning.as_slice();
    // Horizontal window sums for the rows that can hold fire.
    let mut horiz = vec![0u32; (bb.r1 - bb.r0 + 1) * w];
    for (k, row) in (bb.r0..=bb.r1).enumerate() {
        let line = &data[row * dims.cols + region.c0..][..w];
        let out = &mut horiz[k * w..(k + 1) * w];
        let mut run = line[..r.min(w)].iter().map(|&b| b as u32).sum::<u32>();
        for j in 0..w {
            if j + r < w {
                run += line[j + r] as u32;
            }
            if j > r {
                run -= line[j - r - 1] as u32;
            }
            out[j] = run;
        }
    }
    // Vertical window sums of the horizontal ones.
    let mut counts = vec![0u32; h * w];
    for (k, row) in (region.r0..=region.r1).enumerate() {
        let lo = row.saturating_sub(r).max(bb.r0);
        let hi = (row + r).min(bb.r1);
        let acc = &mut counts[k * w..(k + 1) * w];
        for src in lo..=hi {
            let line = &horiz[(src - bb.r0) * w..(src - bb.r0 + 1) * w];
            for (a, &v) in acc.iter_mut().zip(line) {
                *a += v;
            }
        }
    }
    Some((region, counts))
}

/// Destruction value of one burning cell: a unit for the burned area plus
/// the resource value on it.
#[inline]
pub fn cell_destruction(resource: f64) -> f64 {
    1.0 + resource
}

/// Sum of `1 + R(x)` over burning cells.
pub fn instantaneous_destruction(burning: &BoolGrid, resources: &RealGrid) -> f64 {
    assert_eq!(burning.dims(), resources.dims(), "grid shape mismatch");
    burning
        .as_slice()
        .iter()
        .zip(resources.as_slice())
        .filter(|(&b, _)| b)
        .map(|(_, &r)| cell_destruction(r))
        .sum()
}

/// Mean Euclidean distance in meters from `origin` to the burning cells,
/// zero when nothing burns.
pub fn ring_radius(burning: &BoolGrid, origin: CellIndex) -> f64 {
    let o = origin.center_m();
    let (sum, n) = burning
        .iter()
        .filter(|(_, &b)| b)
        .fold((0.0, 0usize), |(s, n), (c, _)| (s + c.center_m().distance(o), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// True when any burning cell sits on the outer edge of the grid.
pub fn touches_boundary(burning: &BoolGrid) -> bool {
    let dims = burning.dims();
    burning.iter().any(|(c, &b)| b && dims.is_boundary(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> Dims {
        Dims::square(100)
    }

    #[test]
    fn empty_batch_leaves_belief_unchanged() {
        let mut b = BeliefState::new(dims(), 10);
        b.uncertainty[CellIndex::new(3, 3)] = 0.4;
        let before = b.clone();
        b.update(&ObservationBatch::default());
        assert_eq!(b, before);
    }

    #[test]
    fn single_burning_observation_marks_one_cell() {
        let mut b = BeliefState::new(dims(), 10);
        b.update(&ObservationBatch::new([(CellIndex::new(50, 50), true)]));
        assert_eq!(b.burning.count(), 1);
        assert!(b.burning[CellIndex::new(50, 50)]);
    }

    #[test]
    fn duplicate_observations_keep_the_last() {
        let a = CellIndex::new(4, 9);
        let batch = ObservationBatch::new([(a, true), (a, false)]);
        assert_eq!(batch.len(), 1);
        let mut b = BeliefState::new(dims(), 10);
        b.update(&batch);
        assert!(!b.burning[a]);
    }

    #[test]
    fn no_believed_fire_means_no_uncertainty_growth() {
        let mut b = BeliefState::new(dims(), 10);
        b.increment_uncertainty(&[]);
        assert!(b.uncertainty.as_slice().iter().all(|&u| u == 0.0));
    }

    #[test]
    fn increment_matches_brute_force_neighborhood_count() {
        // 11 burning cells inside the radius-5 window of `x`, plus fire
        // outside it that must not count.
        let mut b = BeliefState::new(dims(), 10);
        let x = CellIndex::new(40, 40);
        let inside = [
            (35, 35), (35, 45), (45, 35), (45, 45), (40, 41), (41, 40), (39, 39),
            (36, 44), (44, 37), (40, 45), (38, 42),
        ];
        for (r, c) in inside {
            b.burning[CellIndex::new(r, c)] = true;
        }
        b.burning[CellIndex::new(40, 46)] = true;
        b.burning[CellIndex::new(34, 40)] = true;
        // Brute-force oracle.
        let mut count = 0;
        for r in 35..=45 {
            for c in 35..=45 {
                if (r, c) != (40, 40) && b.burning[CellIndex::new(r, c)] {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 11);
        b.increment_uncertainty(&[]);
        assert!((b.uncertainty[x] - 11.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn observed_cells_reset_to_zero() {
        let mut b = BeliefState::new(dims(), 10);
        b.burning[CellIndex::new(20, 20)] = true;
        let adjacent = CellIndex::new(20, 21);
        b.uncertainty[adjacent] = 0.7;
        b.increment_uncertainty(&[adjacent]);
        assert_eq!(b.uncertainty[adjacent], 0.0);
        assert!(b.uncertainty[CellIndex::new(20, 22)] > 0.0);
    }

    #[test]
    fn uncertainty_saturates_at_one() {
        let mut b = BeliefState::new(dims(), 10);
        for c in b.dims().cells().collect::<Vec<_>>() {
            b.burning[c] = true;
        }
        for _ in 0..5 {
            b.increment_uncertainty(&[]);
        }
        assert!(b.uncertainty.as_slice().iter().all(|&u| u <= 1.0));
        assert_eq!(b.uncertainty[CellIndex::new(50, 50)], 1.0);
    }

    #[test]
    fn destruction_sums_one_plus_resources() {
        let mut burning = BoolGrid::filled(dims(), false);
        let mut res = RealGrid::filled(dims(), 0.0);
        assert_eq!(instantaneous_destruction(&burning, &res), 0.0);
        burning[CellIndex::new(1, 1)] = true;
        assert_eq!(instantaneous_destruction(&burning, &res), 1.0);
        burning[CellIndex::new(2, 2)] = true;
        burning[CellIndex::new(3, 3)] = true;
        res[CellIndex::new(2, 2)] = 2.0;
        res[CellIndex::new(3, 3)] = 5.0;
        // (1+0) + (1+2) + (1+5)
        assert_eq!(instantaneous_destruction(&burning, &res), 10.0);
    }

    #[test]
    fn ring_radius_cases() {
        let origin = CellIndex::new(50, 50);
        let mut g = BoolGrid::filled(dims(), false);
        assert_eq!(ring_radius(&g, origin), 0.0);
        g[origin] = true;
        assert_eq!(ring_radius(&g, origin), 0.0);
        g[origin] = false;
        for (r, c) in [(45, 50), (55, 50), (50, 45), (50, 55)] {
            g[CellIndex::new(r, c)] = true;
        }
        assert!((ring_radius(&g, origin) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_detection() {
        let mut g = BoolGrid::filled(dims(), false);
        g[CellIndex::new(50, 50)] = true;
        assert!(!touches_boundary(&g));
        g[CellIndex::new(0, 30)] = true;
        assert!(touches_boundary(&g));
    }

    proptest::proptest! {
        #[test]
        fn increment_matches_brute_force(cells in proptest::collection::vec((0usize..30, 0usize..30), 0..40)) {
            let d = Dims::square(30);
            let mut g = BoolGrid::filled(d, false);
            for &(r, c) in &cells {
                g[CellIndex::new(r, c)] = true;
            }
            let fast = uncertainty_increment(&g);
            let rad = UNCERTAINTY_RADIUS as i64;
            for r in 0..30i64 {
                for c in 0..30i64 {
                    let mut n = 0;
                    for dr in -rad..=rad {
                        for dc in -rad..=rad {
                            let (rr, cc) = (r + dr, c + dc);
                            if (dr, dc) != (0, 0) && (0..30).contains(&rr) && (0..30).contains(&cc) && g[CellIndex::new(rr as usize, cc as usize)] {
                                n += 1;
                            }
                        }
                    }
                    let want = n as f64 / 120.0;
                    proptest::prop_assert_eq!(fast[CellIndex::new(r as usize, c as usize)], want);
                }
            }
        }
    }
}
