//! Stochastic fire dynamics.
//!
//! Every cell with fuel either keeps burning, burns out, or ignites from its
//! Moore neighbors. The per-pair ignition probability is a base rate scaled
//! by wind alignment and slope. Suppression on a drop step zeroes (full) or
//! scales (partial) a cell's burning probability and removes fuel.
//!
//! [`FireModel`] caches the 8-neighbor probability table for each wind phase
//! so a step costs one multiply-accumulate per neighbor. Steps only visit the
//! bounding box of the fire grown by one cell, plus the drop footprint.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BoolGrid, BoundingBox, CellIndex, Dims, FuelGrid, RealGrid, CELL_METERS, MOORE_OFFSETS};
use crate::gridstate::{Scenario, SpreadPreset, WindPhase, WorldState};
use crate::rng::{cell_uniform, next_key, SimRng};

#[derive(Debug, Error, PartialEq)]
pub enum PropagationError {
    #[error("cells {x} and {xp} are not Moore neighbors")]
    NotAdjacent { x: CellIndex, xp: CellIndex },
    #[error("invalid propagation parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationParams {
    /// Fuel burned per minute.
    pub alpha: u32,
    pub p0: f64,
    pub p_partial: f64,
    pub gamma_full: u32,
    pub gamma_partial: u32,
    pub wind_bias: f64,
    pub slope_bias: f64,
}

impl PropagationParams {
    pub const DEFAULT_WIND_BIAS: f64 = 0.6;
    pub const DEFAULT_SLOPE_BIAS: f64 = 1.0;

    /// Defaults for a spread preset on a map whose largest fuel load is
    /// `max_fuel`.
    pub fn for_preset(preset: SpreadPreset, max_fuel: u32) -> Self {
        Self {
            alpha: 1,
            p0: preset.default_p0(),
            p_partial: 0.5,
            gamma_full: max_fuel.max(1),
            gamma_partial: 1,
            wind_bias: Self::DEFAULT_WIND_BIAS,
            slope_bias: Self::DEFAULT_SLOPE_BIAS,
        }
    }

    pub fn validate(&self) -> Result<(), PropagationError> {
        let bad = |m: &str| Err(PropagationError::InvalidParams(m.to_string()));
        if self.alpha < 1 {
            return bad("alpha must be at least 1");
        }
        if !(self.p0 > 0.0 && self.p0 < 1.0) {
            return bad("p0 must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.p_partial) {
            return bad("p_partial must lie in [0, 1]");
        }
        if self.gamma_full < self.gamma_partial {
            return bad("gamma_full must be at least gamma_partial");
        }
        if !self.wind_bias.is_finite() || !self.slope_bias.is_finite() {
            return bad("bias terms must be finite");
        }
        Ok(())
    }
}

/// Cells fully (`F_T`) and partially (`P_T`) suppressed by one drop.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuppressionOutcome {
    full: Vec<CellIndex>,
    partial: Vec<CellIndex>,
}

impl SuppressionOutcome {
    /// Builds an outcome. Cells listed in both sets count as full.
    pub fn new(full: impl IntoIterator<Item = CellIndex>, partial: impl IntoIterator<Item = CellIndex>) -> Self {
        let mut full: Vec<CellIndex> = full.into_iter().collect();
        full.sort_unstable();
        full.dedup();
        let mut partial: Vec<CellIndex> = partial
            .into_iter()
            .filter(|c| full.binary_search(c).is_err())
            .collect();
        partial.sort_unstable();
        partial.dedup();
        Self { full, partial }
    }

    pub fn full(&self) -> &[CellIndex] {
        &self.full
    }

    pub fn partial(&self) -> &[CellIndex] {
        &self.partial
    }

    pub fn is_empty(&self) -> bool {
        self.full.is_empty() && self.partial.is_empty()
    }

    pub fn is_full(&self, cell: CellIndex) -> bool {
        self.full.binary_search(&cell).is_ok()
    }

    pub fn is_partial(&self, cell: CellIndex) -> bool {
        self.partial.binary_search(&cell).is_ok()
    }

    /// Probability multiplier on a drop step.
    pub fn delta(&self, cell: CellIndex, params: &PropagationParams) -> f64 {
        if self.is_full(cell) {
            0.0
        } else if self.is_partial(cell) {
            params.p_partial
        } else {
            1.0
        }
    }

    /// Fuel removed on a drop step.
    pub fn beta(&self, cell: CellIndex, params: &PropagationParams) -> u32 {
        if self.is_full(cell) {
            params.gamma_full
        } else if self.is_partial(cell) {
            params.gamma_partial
        } else {
            0
        }
    }

    fn bounding_box(&self) -> Option<BoundingBox> {
        self.full
            .iter()
            .chain(&self.partial)
            .fold(None, |bb: Option<BoundingBox>, c| {
                let (r, c) = (c.row as usize, c.col as usize);
                Some(bb.map_or(BoundingBox::point(r, c), |b| b.include(r, c)))
            })
    }

    /// Per-cell code: 0 untouched, 1 partial, 2 full.
    fn mask(&self, dims: Dims) -> Vec<u8> {
        let mut m = vec![0u8; dims.len()];
        for &c in &self.partial {
            m[dims.index_of(c)] = 1;
        }
        for &c in &self.full {
            m[dims.index_of(c)] = 2;
        }
        m
    }
}

/// Probability that burning neighbor `xp` ignites `x` in one minute.
pub fn neighbor_ignition_prob(
    x: CellIndex,
    xp: CellIndex,
    params: &PropagationParams,
    wind: &WindPhase,
    elevation: &RealGrid,
) -> Result<f64, PropagationError> {
    let dr = x.row as i64 - xp.row as i64;
    let dc = x.col as i64 - xp.col as i64;
    if x == xp || dr.abs() > 1 || dc.abs() > 1 {
        return Err(PropagationError::NotAdjacent { x, xp });
    }
    Ok(pair_probability(
        dr,
        dc,
        elevation[x] - elevation[xp],
        params,
        wind,
    ))
}

/// `dr, dc`: step from the igniting neighbor to the target cell.
fn pair_probability(dr: i64, dc: i64, rise: f64, params: &PropagationParams, wind: &WindPhase) -> f64 {
    let len = ((dr * dr + dc * dc) as f64).sqrt();
    let (ux, uy) = (dc as f64 / len, dr as f64 / len);
    let wv = wind.unit_vector();
    let w = wind.strength * (ux * wv.x + uy * wv.y);
    let s = rise / (len * CELL_METERS);
    let p = params.p0 * (1.0 + params.wind_bias * w) * (1.0 + params.slope_bias * s);
    p.clamp(0.0, 1.0)
}

/// `probs[i][k]`: probability that the neighbor of cell `i` at
/// `MOORE_OFFSETS[k]` ignites it. Out-of-grid neighbors get 0.
#[derive(Clone, Debug)]
pub struct NeighborKernel {
    dims: Dims,
    probs: Vec<[f64; 8]>,
}

impl NeighborKernel {
    pub fn build(dims: Dims, params: &PropagationParams, wind: &WindPhase, elevation: &RealGrid) -> Self {
        let mut probs = vec![[0.0; 8]; dims.len()];
        for (i, row) in probs.iter_mut().enumerate() {
            let x = dims.cell_at(i);
            for (k, &(dr, dc)) in MOORE_OFFSETS.iter().enumerate() {
                if let Some(xp) = dims.cell(x.row as i64 + dr, x.col as i64 + dc) {
                    row[k] = pair_probability(-dr, -dc, elevation[x] - elevation[xp], params, wind);
                }
            }
        }
        Self { dims, probs }
    }

    pub fn probs(&self, cell: CellIndex) -> &[f64; 8] {
        &self.probs[self.dims.index_of(cell)]
    }

    /// `1 - prod(1 - p_k * burning_k)` for cell `i` at `(r, c)`.
    #[inline]
    fn spread_probability(&self, burning: &[bool], i: usize, r: usize, c: usize) -> f64 {
        let Dims { rows, cols } = self.dims;
        let p = &self.probs[i];
        let mut keep = 1.0;
        if r > 0 && c > 0 && r + 1 < rows && c + 1 < cols {
            for (k, &(dr, dc)) in MOORE_OFFSETS.iter().enumerate() {
                let j = (i as i64 + dr * cols as i64 + dc) as usize;
                if burning[j] {
                    keep *= 1.0 - p[k];
                }
            }
        } else {
            for (k, &(dr, dc)) in MOORE_OFFSETS.iter().enumerate() {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols {
                    if burning[nr as usize * cols + nc as usize] {
                        keep *= 1.0 - p[k];
                    }
                }
            }
        }
        1.0 - keep
    }
}

/// Scenario-bound fire dynamics: parameters plus one kernel per wind phase.
#[derive(Clone, Debug)]
pub struct FireModel {
    params: PropagationParams,
    dims: Dims,
    phases: Vec<(Option<u32>, NeighborKernel)>,
}

impl FireModel {
    pub fn new(scenario: &Scenario) -> Self {
        Self::with_params(scenario, scenario.params)
    }

    pub fn with_params(scenario: &Scenario, params: PropagationParams) -> Self {
        let winds = if scenario.wind.is_empty() {
            vec![WindPhase::calm()]
        } else {
            scenario.wind.clone()
        };
        let phases = winds
            .iter()
            .map(|w| {
                (
                    w.switch_time,
                    NeighborKernel::build(scenario.dims, &params, w, &scenario.elevation),
                )
            })
            .collect();
        Self {
            params,
            dims: scenario.dims,
            phases,
        }
    }

    pub fn params(&self) -> &PropagationParams {
        &self.params
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn kernel_at(&self, minute: u32) -> &NeighborKernel {
        let i = self
            .phases
            .iter()
            .position(|(s, _)| s.is_none_or(|s| minute < s))
            .unwrap_or(self.phases.len() - 1);
        &self.phases[i].1
    }
}

/// Probability that `x` burns next minute, given the current state and an
/// optional drop executing this step.
pub fn ignition_probability(
    x: CellIndex,
    burning: &BoolGrid,
    fuel: &FuelGrid,
    suppression: Option<&SuppressionOutcome>,
    kernel: &NeighborKernel,
    params: &PropagationParams,
) -> f64 {
    if fuel[x] == 0 {
        return 0.0;
    }
    let delta = suppression.map_or(1.0, |s| s.delta(x, params));
    if burning[x] {
        return delta;
    }
    let dims = burning.dims();
    let i = dims.index_of(x);
    delta * kernel.spread_probability(burning.as_slice(), i, x.row as usize, x.col as usize)
}

/// Fuel left in `x` after one minute.
pub fn fuel_update(
    x: CellIndex,
    burning: &BoolGrid,
    fuel: &FuelGrid,
    suppression: Option<&SuppressionOutcome>,
    params: &PropagationParams,
) -> u32 {
    let beta = suppression.map_or(0, |s| s.beta(x, params));
    let burn = if burning[x] { params.alpha } else { 0 };
    fuel[x].saturating_sub(burn).saturating_sub(beta)
}

/// Advances `world` one minute in place using per-cell variates derived from
/// `key`. `suppression`, when given, is the drop executing this minute.
pub fn step_with_key(
    world: &mut WorldState,
    suppression: Option<&SuppressionOutcome>,
    model: &FireModel,
    key: u64,
) {
    let dims = world.dims();
    let params = model.params;
    let kernel = model.kernel_at(world.clock);
    world.clock += 1;
    let fire_bb = world.burning.bounding_box().map(|b| b.expand(1, dims));
    let drop_bb = suppression.and_then(|s| s.bounding_box());
    let region = match (fire_bb, drop_bb) {
        (Some(a), Some(b)) => a.union(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => return,
    };
    let mask = suppression.map(|s| s.mask(dims));
    let current = world.burning.as_slice().to_vec();
    let next = world.burning.as_mut_slice();
    let fuel = world.fuel.as_mut_slice();
    let cols = dims.cols;
    for r in region.r0..=region.r1 {
        for c in region.c0..=region.c1 {
            let i = r * cols + c;
            let f = fuel[i];
            let code = mask.as_ref().map_or(0, |m| m[i]);
            let (delta, beta) = match code {
                2 => (0.0, params.gamma_full),
                1 => (params.p_partial, params.gamma_partial),
                _ => (1.0, 0),
            };
            let was_burning = current[i];
            let p = if f == 0 {
                0.0
            } else if was_burning {
                delta
            } else if delta > 0.0 {
                delta * kernel.spread_probability(&current, i, r, c)
            } else {
                0.0
            };
            next[i] = p > 0.0 && (p >= 1.0 || cell_uniform(key, i) < p);
            let burn = if was_burning { params.alpha } else { 0 };
            fuel[i] = f.saturating_sub(burn).saturating_sub(beta);
        }
    }
}

/// Advances the true world one minute.
pub fn step(
    world: &WorldState,
    suppression: Option<&SuppressionOutcome>,
    model: &FireModel,
    rng: &mut SimRng,
) -> WorldState {
    let mut next = world.clone();
    step_with_key(&mut next, suppression, model, next_key(rng));
    next
}

/// Rolls a believed fire forward `depth` minutes under the planners' fuel
/// estimate. The state's fuel grid stands in for the unknown true fuel.
pub fn propagate_internal(state: &WorldState, depth: usize, model: &FireModel, rng: &mut SimRng) -> WorldState {
    let mut s = state.clone();
    propagate_internal_in_place(&mut s, depth, model, rng);
    s
}

pub fn propagate_internal_in_place(state: &mut WorldState, depth: usize, model: &FireModel, rng: &mut SimRng) {
    for _ in 0..depth {
        step_with_key(state, None, model, next_key(rng));
    }
}
