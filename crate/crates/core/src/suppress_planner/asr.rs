//! Action space restriction: which drops the suppression planner considers.

use serde::{Deserialize, Serialize};

use crate::drops::{DropType, SuppressionActionSpec};
use crate::grid::{BoolGrid, BoundingBox, CellIndex, Point2, RealGrid};

/// Restriction methods, from loosest to tightest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AsrMethod {
    /// Drops centered on believed-burning cells.
    BurningCells,
    /// Burning cells in the outer distance quantile from the origin.
    DistantQuantile,
    /// Distant cells inside the resource and head arcs.
    StrategicArcs,
}

impl AsrMethod {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Self::BurningCells),
            2 => Some(Self::DistantQuantile),
            3 => Some(Self::StrategicArcs),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::BurningCells => 1,
            Self::DistantQuantile => 2,
            Self::StrategicArcs => 3,
        }
    }

    fn looser(self) -> Option<Self> {
        match self {
            Self::BurningCells => None,
            Self::DistantQuantile => Some(Self::BurningCells),
            Self::StrategicArcs => Some(Self::DistantQuantile),
        }
    }
}

/// Half-angle of each strategic arc.
pub const ARC_HALF_ANGLE_DEG: f64 = 30.0;

/// A 4-connected region of positive resource value.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceArea {
    pub cells: Vec<CellIndex>,
    pub total: f64,
    pub bbox: BoundingBox,
    pub centroid: Point2,
}

/// Connected high-value areas, ordered by their first cell.
pub fn resource_areas(resources: &RealGrid) -> Vec<ResourceArea> {
    let dims = resources.dims();
    let mut seen = vec![false; dims.len()];
    let mut areas = Vec::new();
    for start in 0..dims.len() {
        if seen[start] || resources.as_slice()[start] <= 0.0 {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut cells = Vec::new();
        while let Some(i) = stack.pop() {
            let c = dims.cell_at(i);
            cells.push(c);
            for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                if let Some(n) = dims.cell(c.row as i64 + dr, c.col as i64 + dc) {
                    let j = dims.index_of(n);
                    if !seen[j] && resources.as_slice()[j] > 0.0 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        cells.sort_unstable();
        let total = cells.iter().map(|&c| resources[c]).sum();
        let bbox = cells
            .iter()
            .skip(1)
            .fold(BoundingBox::point(cells[0].row as usize, cells[0].col as usize), |b, c| {
                b.include(c.row as usize, c.col as usize)
            });
        let centroid = centroid(&cells);
        areas.push(ResourceArea {
            cells,
            total,
            bbox,
            centroid,
        });
    }
    areas
}

pub fn centroid(cells: &[CellIndex]) -> Point2 {
    let n = cells.len().max(1) as f64;
    let (sx, sy) = cells.iter().fold((0.0, 0.0), |(x, y), c| {
        let p = c.center_m();
        (x + p.x, y + p.y)
    });
    Point2::new(sx / n, sy / n)
}

/// The `k` burning cells farthest from `origin`; ties go to the lower
/// cell index.
pub fn farthest_burning(burning: &BoolGrid, origin: CellIndex, k: usize) -> Vec<CellIndex> {
    let o = origin.center_m();
    let mut cells: Vec<(f64, CellIndex)> = burning
        .true_cells()
        .into_iter()
        .map(|c| (c.center_m().distance(o), c))
        .collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    cells.truncate(k);
    let mut out: Vec<CellIndex> = cells.into_iter().map(|(_, c)| c).collect();
    out.sort_unstable();
    out
}

/// Centroid of the most distant tenth of the burning cells.
pub fn fire_head(burning: &BoolGrid, origin: CellIndex) -> Option<Point2> {
    let n = burning.count();
    if n == 0 {
        return None;
    }
    Some(centroid(&farthest_burning(burning, origin, n.div_ceil(10))))
}

fn with_all_drops(centers: &[CellIndex]) -> Vec<SuppressionActionSpec> {
    centers
        .iter()
        .flat_map(|&c| DropType::ALL.into_iter().map(move |d| SuppressionActionSpec::new(c, d)))
        .collect()
}

fn distant_centers(burning: &BoolGrid, origin: CellIndex, quantile: f64) -> Vec<CellIndex> {
    let n = burning.count();
    let k = ((n as f64) * (100.0 - quantile) / 100.0).ceil() as usize;
    farthest_burning(burning, origin, k.min(n))
}

fn within_arc(origin: Point2, p: Point2, axis: Point2) -> bool {
    let v = p.sub(origin);
    let Some(v) = v.normalized() else {
        return false;
    };
    v.dot(axis) >= ARC_HALF_ANGLE_DEG.to_radians().cos() - 1e-12
}

fn arc_centers(burning: &BoolGrid, origin: CellIndex, quantile: f64, resource_centroid: Option<Point2>) -> Vec<CellIndex> {
    let o = origin.center_m();
    let mut axes = Vec::new();
    if let Some(rc) = resource_centroid {
        axes.extend(rc.sub(o).normalized());
    }
    if let Some(head) = fire_head(burning, origin) {
        axes.extend(head.sub(o).normalized());
    }
    distant_centers(burning, origin, quantile)
        .into_iter()
        .filter(|c| axes.iter().any(|&ax| within_arc(o, c.center_m(), ax)))
        .collect()
}

/// Centroid of the resource area with the largest total value.
pub fn top_resource_centroid(resources: &RealGrid) -> Option<Point2> {
    resource_areas(resources)
        .into_iter()
        .max_by(|a, b| a.total.total_cmp(&b.total).then(b.cells[0].cmp(&a.cells[0])))
        .map(|a| a.centroid)
}

/// Restriction settings with the resource-derived arc precomputed, for
/// repeated use on changing fire maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsrContext {
    pub method: AsrMethod,
    pub quantile: f64,
    pub origin: CellIndex,
    pub resource_centroid: Option<Point2>,
}

impl AsrContext {
    pub fn new(method: AsrMethod, quantile: f64, origin: CellIndex, resources: &RealGrid) -> Self {
        Self {
            method,
            quantile,
            origin,
            resource_centroid: top_resource_centroid(resources),
        }
    }

    /// Actions for exactly `method`, without fallback.
    pub fn strict(&self, burning: &BoolGrid, method: AsrMethod) -> Vec<SuppressionActionSpec> {
        let centers = match method {
            AsrMethod::BurningCells => burning.true_cells(),
            AsrMethod::DistantQuantile => distant_centers(burning, self.origin, self.quantile),
            AsrMethod::StrategicArcs => arc_centers(burning, self.origin, self.quantile, self.resource_centroid),
        };
        with_all_drops(&centers)
    }

    /// Actions for the configured method, falling back to looser methods
    /// when empty.
    pub fn actions(&self, burning: &BoolGrid) -> Vec<SuppressionActionSpec> {
        let mut m = Some(self.method);
        while let Some(cur) = m {
            let out = self.strict(burning, cur);
            if !out.is_empty() {
                return out;
            }
            m = cur.looser();
        }
        Vec::new()
    }
}

/// The restricted action set without fallback.
pub fn asr_strict(
    burning: &BoolGrid,
    method: AsrMethod,
    quantile: f64,
    origin: CellIndex,
    resources: &RealGrid,
) -> Vec<SuppressionActionSpec> {
    AsrContext::new(method, quantile, origin, resources).strict(burning, method)
}

/// The restricted action set, falling back to looser methods when empty.
/// An empty result means nothing is believed to burn.
pub fn asr(
    burning: &BoolGrid,
    method: AsrMethod,
    quantile: f64,
    origin: CellIndex,
    resources: &RealGrid,
) -> Vec<SuppressionActionSpec> {
    AsrContext::new(method, quantile, origin, resources).actions(burning)
}
