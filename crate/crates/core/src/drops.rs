//! Manned-aircraft drops: drop types, footprint templates, axis of advance,
//! drop cadence and the application of a drop to a grid.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BoolGrid, CellIndex, Dims, FuelGrid, Point2};
use crate::propagation::{PropagationParams, SuppressionOutcome};
use crate::rng::{cell_uniform, next_key, SimRng};

/// Default template set: S-70 class helicopter, 660 gallon bucket.
pub const DEFAULT_TEMPLATES: &str = include_str!("../data/s70_660gal.templates");

#[derive(Debug, Error)]
pub enum DropError {
    #[error("template line {line}: {message}")]
    Template { line: usize, message: String },
    #[error("template set has no `{0}` section")]
    MissingTemplate(DropType),
    #[error("i/o error reading templates: {0}")]
    Io(#[from] std::io::Error),
    #[error("drop cadence needs positive inputs, got {0}")]
    NonPositive(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DropType {
    Point,
    LineNs,
    LineEw,
    LineNeSw,
    LineNwSe,
}

impl DropType {
    pub const ALL: [DropType; 5] = [
        DropType::Point,
        DropType::LineNs,
        DropType::LineEw,
        DropType::LineNeSw,
        DropType::LineNwSe,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            DropType::Point => "point",
            DropType::LineNs => "line_ns",
            DropType::LineEw => "line_ew",
            DropType::LineNeSw => "line_ne_sw",
            DropType::LineNwSe => "line_nw_se",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s)
    }

    /// Unit direction of a line drop in grid frame (x east, y south).
    pub fn line_direction(self) -> Option<Point2> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            DropType::Point => None,
            DropType::LineNs => Some(Point2::new(0.0, 1.0)),
            DropType::LineEw => Some(Point2::new(1.0, 0.0)),
            DropType::LineNeSw => Some(Point2::new(h, -h)),
            DropType::LineNwSe => Some(Point2::new(h, h)),
        }
    }
}

impl fmt::Display for DropType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One candidate drop: where and which shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SuppressionActionSpec {
    pub center: CellIndex,
    pub drop: DropType,
}

impl SuppressionActionSpec {
    pub fn new(center: CellIndex, drop: DropType) -> Self {
        Self { center, drop }
    }

    /// Position in the full action space, `cell_index * 5 + drop`.
    pub fn index(&self, dims: Dims) -> usize {
        dims.index_of(self.center) * DropType::ALL.len() + self.drop.index()
    }
}

/// Size of the unrestricted drop action space.
pub fn action_space_size(dims: Dims) -> usize {
    dims.len() * DropType::ALL.len()
}

/// Every drop on every cell.
pub fn all_actions(dims: Dims) -> impl Iterator<Item = SuppressionActionSpec> {
    (0..dims.len()).flat_map(move |i| {
        DropType::ALL
            .into_iter()
            .map(move |d| SuppressionActionSpec::new(dims.cell_at(i), d))
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FootprintTemplate {
    pub full_offsets: Vec<(i64, i64)>,
    pub partial_offsets: Vec<(i64, i64)>,
}

impl FootprintTemplate {
    /// Quarter turn clockwise on screen: `(dr, dc) -> (dc, -dr)`.
    pub fn rotated(&self) -> Self {
        let rot = |v: &Vec<(i64, i64)>| {
            let mut out: Vec<(i64, i64)> = v.iter().map(|&(dr, dc)| (dc, -dr)).collect();
            out.sort_unstable();
            out
        };
        Self {
            full_offsets: rot(&self.full_offsets),
            partial_offsets: rot(&self.partial_offsets),
        }
    }

    /// Water volume proxy: full cells plus half the partial cells.
    pub fn volume(&self) -> f64 {
        self.full_offsets.len() as f64 + 0.5 * self.partial_offsets.len() as f64
    }
}

/// One template per drop type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    templates: Vec<FootprintTemplate>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATES).expect("bundled templates parse")
    }
}

impl TemplateSet {
    /// Parses `[drop_type]` sections of `full: dr,dc` / `partial: dr,dc`
    /// lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, DropError> {
        let mut templates: Vec<Option<FootprintTemplate>> = vec![None; DropType::ALL.len()];
        let mut current: Option<usize> = None;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |message: String| DropError::Template {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let d = DropType::from_name(name.trim())
                    .ok_or_else(|| err(format!("unknown drop type `{name}`")))?;
                templates[d.index()].get_or_insert_with(FootprintTemplate::default);
                current = Some(d.index());
                continue;
            }
            let (kind, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `full:` or `partial:`".into()))?;
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| err("expected `drow,dcol`".into()))?;
            let parse = |s: &str| s.trim().parse::<i64>().map_err(|e| err(e.to_string()));
            let offset = (parse(a)?, parse(b)?);
            let t = current
                .and_then(|i| templates[i].as_mut())
                .ok_or_else(|| err("offset before any section header".into()))?;
            match kind.trim() {
                "full" => t.full_offsets.push(offset),
                "partial" => t.partial_offsets.push(offset),
                other => return Err(err(format!("unknown offset kind `{other}`"))),
            }
        }
        let mut out = Vec::with_capacity(DropType::ALL.len());
        for d in DropType::ALL {
            let mut t = templates[d.index()].take().ok_or(DropError::MissingTemplate(d))?;
            t.full_offsets.sort_unstable();
            t.full_offsets.dedup();
            t.partial_offsets.sort_unstable();
            t.partial_offsets.dedup();
            if let Some(o) = t.partial_offsets.iter().find(|o| t.full_offsets.contains(o)) {
                return Err(DropError::Template {
                    line: 0,
                    message: format!("offset {o:?} is both full and partial in `{d}`"),
                });
            }
            out.push(t);
        }
        Ok(Self { templates: out })
    }

    pub fn load(path: &Path) -> Result<Self, DropError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, drop: DropType) -> &FootprintTemplate {
        &self.templates[drop.index()]
    }

    /// Cells fully and partially covered by `a`, clipped to the grid.
    pub fn footprint(&self, a: &SuppressionActionSpec, dims: Dims) -> SuppressionOutcome {
        let t = self.get(a.drop);
        let place = |offs: &Vec<(i64, i64)>| -> Vec<CellIndex> {
            offs.iter()
                .filter_map(|&(dr, dc)| dims.cell(a.center.row as i64 + dr, a.center.col as i64 + dc))
                .collect()
        };
        SuppressionOutcome::new(place(&t.full_offsets), place(&t.partial_offsets))
    }
}

/// The manned aircraft's approach line through the drop point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisOfAdvance {
    pub anchor: Point2,
    pub direction: Point2,
}

impl AxisOfAdvance {
    /// Line drops fly along the line, heading away from the water source.
    /// Point drops approach straight from the water source.
    pub fn for_drop(center: CellIndex, drop: DropType, water_source: Point2) -> Self {
        let anchor = center.center_m();
        let inbound = anchor.sub(water_source);
        let direction = match drop.line_direction() {
            Some(d) if d.dot(inbound) < 0.0 => d.scale(-1.0),
            Some(d) => d,
            None => inbound.normalized().unwrap_or(Point2::new(1.0, 0.0)),
        };
        Self { anchor, direction }
    }

    pub fn for_action(a: &SuppressionActionSpec, water_source: Point2) -> Self {
        Self::for_drop(a.center, a.drop, water_source)
    }

    /// Portion of the axis over the wildfire grid, as a segment.
    pub fn clip_to_grid(&self, dims: Dims) -> Option<(Point2, Point2)> {
        let (w, h) = dims.extent_m();
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        let p = self.anchor;
        let d = self.direction;
        for (pos, dir, lo, hi) in [(p.x, d.x, 0.0, w), (p.y, d.y, 0.0, h)] {
            if dir.abs() < 1e-12 {
                if pos < lo || pos > hi {
                    return None;
                }
            } else {
                let a = (lo - pos) / dir;
                let b = (hi - pos) / dir;
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        (t0 <= t1).then(|| (p.add(d.scale(t0)), p.add(d.scale(t1))))
    }

    /// Horizontal distance from `q` to the axis segment over the grid.
    pub fn distance_within_grid(&self, q: Point2, dims: Dims) -> f64 {
        match self.clip_to_grid(dims) {
            Some((a, b)) => point_segment_distance(q, a, b),
            None => q.distance(self.anchor),
        }
    }
}

fn point_segment_distance(q: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return q.distance(a);
    }
    let t = (q.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    q.distance(a.add(ab.scale(t)))
}

/// Applies a drop to a grid in place and returns the footprint. Full cells
/// stop burning; partial cells stop burning with probability
/// `1 - p_partial`. Fuel, when given, loses `gamma_full` / `gamma_partial`.
pub fn apply_suppression(
    burning: &mut BoolGrid,
    fuel: Option<&mut FuelGrid>,
    a: &SuppressionActionSpec,
    templates: &TemplateSet,
    params: &PropagationParams,
    rng: &mut SimRng,
) -> SuppressionOutcome {
    let dims = burning.dims();
    let outcome = templates.footprint(a, dims);
    let key = next_key(rng);
    apply_outcome(burning, fuel, &outcome, params, key);
    outcome
}

/// [`apply_suppression`] for an already computed footprint, with per-cell
/// variates drawn from `key`.
pub fn apply_outcome(
    burning: &mut BoolGrid,
    fuel: Option<&mut FuelGrid>,
    outcome: &SuppressionOutcome,
    params: &PropagationParams,
    key: u64,
) {
    let dims = burning.dims();
    for &c in outcome.full() {
        burning[c] = false;
    }
    for &c in outcome.partial() {
        if burning[c] && cell_uniform(key, dims.index_of(c)) >= params.p_partial {
            burning[c] = false;
        }
    }
    if let Some(fuel) = fuel {
        for &c in outcome.full() {
            fuel[c] = fuel[c].saturating_sub(params.gamma_full);
        }
        for &c in outcome.partial() {
            fuel[c] = fuel[c].saturating_sub(params.gamma_partial);
        }
    }
}

/// Surveillance steps per drop cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuppressionTiming {
    /// Minutes per surveillance step.
    pub d_t: u32,
    pub k: u32,
    /// Minutes per drop cycle.
    pub d_cap_t: u32,
}

impl SuppressionTiming {
    pub fn new(k: u32) -> Self {
        let k = k.max(1);
        Self { d_t: 1, k, d_cap_t: k }
    }
}

impl Default for SuppressionTiming {
    fn default() -> Self {
        Self::new(5)
    }
}

/// Fill and drop maneuvering per cycle, minutes.
pub const CYCLE_OVERHEAD_MIN: f64 = 0.9;
const KM_PER_NMI: f64 = 1.852;

/// Drop cadence for a bucket shuttle. `distance_km` is the round trip
/// between fire and water, flown half loaded and half empty.
pub fn drop_cadence(distance_km: f64, loaded_speed_kts: f64, unloaded_speed_kts: f64) -> Result<SuppressionTiming, DropError> {
    if !(distance_km > 0.0 && loaded_speed_kts > 0.0 && unloaded_speed_kts > 0.0) {
        return Err(DropError::NonPositive(format!(
            "distance {distance_km} km, speeds {loaded_speed_kts}/{unloaded_speed_kts} kts"
        )));
    }
    let leg = distance_km / 2.0;
    let hours = leg / (loaded_speed_kts * KM_PER_NMI) + leg / (unloaded_speed_kts * KM_PER_NMI);
    let minutes = hours * 60.0 + CYCLE_OVERHEAD_MIN;
    Ok(SuppressionTiming::new(minutes.ceil() as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridstate::SpreadPreset;
    use crate::rng::seeded;

    fn dims() -> Dims {
        Dims::square(100)
    }

    #[test]
    fn default_templates_have_documented_sizes() {
        let t = TemplateSet::default();
        let p = t.footprint(&SuppressionActionSpec::new(CellIndex::new(50, 50), DropType::Point), dims());
        assert_eq!(p.full().len(), 16);
        assert_eq!(p.partial().len(), 20);
    }

    #[test]
    fn clipped_line_is_smaller() {
        let t = TemplateSet::default();
        let inner = t.footprint(&SuppressionActionSpec::new(CellIndex::new(50, 50), DropType::LineNs), dims());
        let edge = t.footprint(&SuppressionActionSpec::new(CellIndex::new(0, 50), DropType::LineNs), dims());
        assert!(edge.full().len() < inner.full().len());
        assert!(edge.full().iter().chain(edge.partial()).all(|c| dims().contains(*c)));
    }

    #[test]
    fn orientations_are_quarter_turns() {
        let t = TemplateSet::default();
        assert_eq!(t.get(DropType::LineEw).rotated(), *t.get(DropType::LineNs));
        assert_eq!(t.get(DropType::LineNeSw).rotated(), *t.get(DropType::LineNwSe));
        let center = CellIndex::new(40, 60);
        let ns = t.footprint(&SuppressionActionSpec::new(center, DropType::LineNs), dims());
        let ew = t.footprint(&SuppressionActionSpec::new(center, DropType::LineEw), dims());
        let mut turned: Vec<CellIndex> = ew
            .full()
            .iter()
            .map(|c| {
                let (dr, dc) = (c.row as i64 - 40, c.col as i64 - 60);
                CellIndex::new((40 + dc) as usize, (60 - dr) as usize)
            })
            .collect();
        turned.sort_unstable();
        assert_eq!(turned, ns.full());
    }

    #[test]
    fn template_volumes_agree_within_fifteen_percent() {
        let t = TemplateSet::default();
        let v: Vec<f64> = DropType::ALL.iter().map(|&d| t.get(d).volume()).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        for x in v {
            assert!((x - mean).abs() / mean <= 0.15, "{x} vs {mean}");
        }
    }

    #[test]
    fn template_parse_errors() {
        assert!(matches!(
            TemplateSet::parse("[point]\nfull: 0,0\n"),
            Err(DropError::MissingTemplate(DropType::LineNs))
        ));
        assert!(matches!(
            TemplateSet::parse("full: 0,0\n"),
            Err(DropError::Template { line: 1, .. })
        ));
        assert!(matches!(
            TemplateSet::parse("[blob]\n"),
            Err(DropError::Template { line: 1, .. })
        ));
    }

    #[test]
    fn axis_examples() {
        let src = Point2::new(-10_000.0, 101.0);
        let c = CellIndex::new(50, 50);
        let ns = AxisOfAdvance::for_drop(c, DropType::LineNs, src);
        assert_eq!(ns.direction.x, 0.0);
        assert_eq!(ns.direction.y.abs(), 1.0);
        let pt = AxisOfAdvance::for_drop(c, DropType::Point, src);
        assert!((pt.direction.x - 1.0).abs() < 1e-12 && pt.direction.y.abs() < 1e-12);
        let degenerate = AxisOfAdvance::for_drop(c, DropType::Point, c.center_m());
        assert_eq!(degenerate.direction, Point2::new(1.0, 0.0));
        let ew = AxisOfAdvance::for_drop(c, DropType::LineEw, src);
        assert_eq!(ew.direction, Point2::new(1.0, 0.0));
    }

    #[test]
    fn axis_distance_uses_clipped_segment() {
        let a = AxisOfAdvance::for_drop(CellIndex::new(50, 50), DropType::LineNs, Point2::new(0.0, -100.0));
        // Beyond the south edge the nearest point is the segment end.
        let q = Point2::new(101.0, 260.0);
        assert!((a.distance_within_grid(q, dims()) - 60.0).abs() < 1e-9);
        assert!((a.distance_within_grid(Point2::new(131.0, 50.0), dims()) - 30.0).abs() < 1e-9);
    }

    fn params() -> PropagationParams {
        PropagationParams::for_preset(SpreadPreset::Moderate, 20)
    }

    #[test]
    fn drop_off_the_fire_only_touches_fuel() {
        let mut burning = BoolGrid::filled(dims(), false);
        burning[CellIndex::new(10, 10)] = true;
        let before = burning.clone();
        let mut fuel = FuelGrid::filled(dims(), 30);
        let a = SuppressionActionSpec::new(CellIndex::new(70, 70), DropType::Point);
        let out = apply_suppression(&mut burning, Some(&mut fuel), &a, &TemplateSet::default(), &params(), &mut seeded(0));
        assert_eq!(burning, before);
        assert_eq!(fuel[out.full()[0]], 10);
        assert_eq!(fuel[out.partial()[0]], 29);
    }

    #[test]
    fn full_cells_always_cleared() {
        let t = TemplateSet::default();
        let a = SuppressionActionSpec::new(CellIndex::new(30, 30), DropType::LineNeSw);
        for seed in 0..50 {
            let mut burning = BoolGrid::filled(dims(), true);
            let out = apply_suppression(&mut burning, None, &a, &t, &params(), &mut seeded(seed));
            assert!(out.full().iter().all(|&c| !burning[c]));
        }
    }

    #[test]
    fn partial_survival_is_binomial() {
        // 18 burning partial cells, each survives with probability 1/2.
        let outcome = SuppressionOutcome::new([], (0..18).map(|i| CellIndex::new(5, i)));
        let trials = 10_000;
        let mut rng = seeded(77);
        let mut total = 0usize;
        for _ in 0..trials {
            let mut burning = BoolGrid::filled(dims(), false);
            for &c in outcome.partial() {
                burning[c] = true;
            }
            apply_outcome(&mut burning, None, &outcome, &params(), next_key(&mut rng));
            total += burning.count();
        }
        let mean = total as f64 / trials as f64;
        let se = (18.0 * 0.25 / trials as f64).sqrt();
        assert!((mean - 9.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn cadence_examples() {
        assert_eq!(drop_cadence(10.0, 80.0, 140.0).unwrap().k, 5);
        assert_eq!(drop_cadence(10.0, 80.0, 140.0).unwrap().d_cap_t, 5);
        assert_eq!(drop_cadence(1e-6, 80.0, 140.0).unwrap().k, 1);
        // Half the trip at 80 kts, half at 140 kts, 1852 m per nautical mile.
        let flying = |km: f64| (km / 2.0) * 1000.0 / 1852.0 * (60.0 / 80.0 + 60.0 / 140.0);
        assert!((flying(20.0) - 6.3638).abs() < 1e-3);
        assert_eq!(drop_cadence(20.0, 80.0, 140.0).unwrap().k, 8);
        assert_eq!(drop_cadence(20.0, 80.0, 140.0).unwrap().k, (flying(20.0) + CYCLE_OVERHEAD_MIN).ceil() as u32);
        assert!(drop_cadence(0.0, 80.0, 140.0).is_err());
        assert!(drop_cadence(10.0, -1.0, 140.0).is_err());
    }

    #[test]
    fn action_space_has_fifty_thousand_members() {
        assert_eq!(action_space_size(dims()), 50_000);
        assert_eq!(all_actions(dims()).count(), 50_000);
    }
}
