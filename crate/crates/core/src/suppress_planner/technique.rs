//! Rule-based firefighting baseline: wet-lines around high-value areas
//! first, then attack the head of the fire.

use crate::drops::{DropType, SuppressionActionSpec};
use crate::grid::{BoolGrid, BoundingBox, CellIndex, Dims, Point2, RealGrid};
use crate::gridstate::Scenario;

use super::asr::{fire_head, resource_areas, ResourceArea};

/// Full-coverage length of a line drop, in cells.
pub const LINE_CORE_CELLS: usize = 13;

/// Resource maps with a coefficient of variation above this are uneven.
pub const UNEVEN_CV: f64 = 0.5;

/// Wet-line progress carried between decisions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TechniqueMemory {
    /// Areas (by first cell) whose wet-line is complete.
    completed: Vec<CellIndex>,
    /// Area currently being lined and its remaining segments.
    active: Option<(CellIndex, Vec<SuppressionActionSpec>)>,
}

impl TechniqueMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn completed_areas(&self) -> usize {
        self.completed.len()
    }

    pub fn lining(&self) -> bool {
        self.active.is_some()
    }
}

/// Coefficient of variation of the resource values over the whole grid.
pub fn resource_cv(resources: &RealGrid) -> f64 {
    let v = resources.as_slice();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return 0.0;
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

fn nearest_fire_distance(p: Point2, fire: &[CellIndex]) -> f64 {
    fire.iter().map(|c| c.center_m().distance(p)).fold(f64::INFINITY, f64::min)
}

fn box_distance(b: &BoundingBox, fire: &[CellIndex]) -> f64 {
    fire.iter()
        .map(|c| {
            let (r, col) = (c.row as f64, c.col as f64);
            let dr = (b.r0 as f64 - r).max(r - b.r1 as f64).max(0.0);
            let dc = (b.c0 as f64 - col).max(col - b.c1 as f64).max(0.0);
            dr.hypot(dc)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Centers spaced so `n = ceil(len / 13)` segments cover `start..start+len`.
fn segment_offsets(len: usize) -> Vec<usize> {
    let n = len.div_ceil(LINE_CORE_CELLS).max(1);
    let half = LINE_CORE_CELLS / 2;
    (0..n)
        .map(|i| {
            if n == 1 {
                (len - 1) / 2
            } else {
                let span = len.saturating_sub(LINE_CORE_CELLS);
                half + (i * span) / (n - 1)
            }
        })
        .collect()
}

/// Line segments tracing a ring one cell outside `bbox`, nearest-to-fire
/// sides first.
pub fn wet_line_segments(bbox: &BoundingBox, dims: Dims, fire: &[CellIndex]) -> Vec<SuppressionActionSpec> {
    let (r0, c0) = (bbox.r0 as i64 - 1, bbox.c0 as i64 - 1);
    let (r1, c1) = (bbox.r1 as i64 + 1, bbox.c1 as i64 + 1);
    let clamp = |r: i64, c: i64| {
        CellIndex::new(
            r.clamp(0, dims.rows as i64 - 1) as usize,
            c.clamp(0, dims.cols as i64 - 1) as usize,
        )
    };
    let width = (c1 - c0 + 1) as usize;
    let height = (r1 - r0 + 1) as usize;
    // North, south, west, east.
    let sides: [(Vec<CellIndex>, Point2); 4] = [
        (
            segment_offsets(width).into_iter().map(|o| clamp(r0, c0 + o as i64)).collect(),
            Point2::new((c0 + c1) as f64 + 1.0, r0 as f64 * 2.0 + 1.0),
        ),
        (
            segment_offsets(width).into_iter().map(|o| clamp(r1, c0 + o as i64)).collect(),
            Point2::new((c0 + c1) as f64 + 1.0, r1 as f64 * 2.0 + 1.0),
        ),
        (
            segment_offsets(height).into_iter().map(|o| clamp(r0 + o as i64, c0)).collect(),
            Point2::new(c0 as f64 * 2.0 + 1.0, (r0 + r1) as f64 + 1.0),
        ),
        (
            segment_offsets(height).into_iter().map(|o| clamp(r0 + o as i64, c1)).collect(),
            Point2::new(c1 as f64 * 2.0 + 1.0, (r0 + r1) as f64 + 1.0),
        ),
    ];
    let drops = [DropType::LineEw, DropType::LineEw, DropType::LineNs, DropType::LineNs];
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| {
        let da = nearest_fire_distance(sides[a].1, fire);
        let db = nearest_fire_distance(sides[b].1, fire);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    let mut out = Vec::new();
    for s in order {
        for &c in &sides[s].0 {
            let a = SuppressionActionSpec::new(c, drops[s]);
            if !out.contains(&a) {
                out.push(a);
            }
        }
    }
    out
}

/// The line orientation most nearly perpendicular to `axis`, ties to the
/// earlier drop type.
pub fn perpendicular_line(axis: Point2) -> DropType {
    let Some(axis) = axis.normalized() else {
        return DropType::LineEw;
    };
    DropType::ALL
        .into_iter()
        .filter_map(|d| d.line_direction().map(|v| (d, v.dot(axis).abs())))
        .fold((DropType::LineEw, f64::INFINITY), |best, (d, s)| if s < best.1 - 1e-12 { (d, s) } else { best })
        .0
}

fn head_attack(burning: &BoolGrid, origin: CellIndex) -> Option<SuppressionActionSpec> {
    let head = fire_head(burning, origin)?;
    let target = burning
        .true_cells()
        .into_iter()
        .min_by(|a, b| a.center_m().distance(head).total_cmp(&b.center_m().distance(head)).then(a.cmp(b)))?;
    let drop = perpendicular_line(head.sub(origin.center_m()));
    Some(SuppressionActionSpec::new(target, drop))
}

/// Next drop of the conditions-based firefighting technique. Returns `None`
/// when there is nothing left to line and no believed fire.
pub fn firefighting_technique(burning: &BoolGrid, scenario: &Scenario, memory: &mut TechniqueMemory) -> Option<SuppressionActionSpec> {
    let fire = burning.true_cells();
    if memory.active.is_none() && resource_cv(&scenario.resources) > UNEVEN_CV {
        let reference: Vec<CellIndex> = if fire.is_empty() { vec![scenario.origin] } else { fire.clone() };
        let next: Option<ResourceArea> = resource_areas(&scenario.resources)
            .into_iter()
            .filter(|a| !memory.completed.contains(&a.cells[0]))
            .min_by(|a, b| {
                box_distance(&a.bbox, &reference)
                    .total_cmp(&box_distance(&b.bbox, &reference))
                    .then(a.cells[0].cmp(&b.cells[0]))
            });
        if let Some(area) = next {
            let mut segs = wet_line_segments(&area.bbox, scenario.dims, &reference);
            segs.reverse();
            memory.active = Some((area.cells[0], segs));
        }
    }
    if let Some((id, segs)) = memory.active.as_mut() {
        let a = segs.pop();
        if segs.is_empty() {
            memory.completed.push(*id);
            memory.active = None;
        }
        if a.is_some() {
            return a;
        }
    }
    head_attack(burning, scenario.origin)
}
