//! Scenario builders for the four case studies.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{CellIndex, Dims, FuelGrid, Point2, RealGrid, GRID_SIZE};
use crate::gridstate::{Scenario, ScenarioError, SpreadPreset, WindPhase};
use crate::propagation::PropagationParams;
use crate::rng::{splitmix64, stream};
use crate::uav::{PenaltyParams, RangingParams};

/// Scenario directory shipped for case 4.
pub fn default_case4_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("case4")
}

/// Stream id for the case-level random draws (the case 2 wind shift).
const CASE_STREAM: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CaseDefinition {
    /// Flat, variable winds, one high-value area.
    Case1,
    /// Flat, two areas, a seeded wind shift at minute 60.
    Case2,
    /// Hilly, variable winds, three areas.
    Case3,
    /// Loaded from a scenario directory.
    Case4 { dir: PathBuf },
}

impl CaseDefinition {
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Self::Case1),
            2 => Some(Self::Case2),
            3 => Some(Self::Case3),
            4 => Some(Self::Case4 { dir: default_case4_dir() }),
            _ => None,
        }
    }

    pub fn id(&self) -> u8 {
        match self {
            Self::Case1 => 1,
            Self::Case2 => 2,
            Self::Case3 => 3,
            Self::Case4 { .. } => 4,
        }
    }
}

/// Minute at which case 2's wind shifts.
pub const CASE2_SHIFT_MIN: u32 = 60;

const ORIGIN: CellIndex = CellIndex { row: 50, col: 50 };

fn dims() -> Dims {
    Dims::square(GRID_SIZE)
}

/// Fixed fuel texture: 10 to 14 units, varying over 5-cell patches.
fn base_fuel(salt: u64) -> FuelGrid {
    FuelGrid::from_fn(dims(), |c| {
        let patch = ((c.row / 5) as u64) << 16 | (c.col / 5) as u64;
        10 + (splitmix64(patch ^ salt) % 5) as u32
    })
}

fn with_areas(areas: &[(usize, usize, usize, f64)]) -> RealGrid {
    let mut r = RealGrid::filled(dims(), 0.0);
    for &(r0, c0, size, value) in areas {
        for row in r0..r0 + size {
            for col in c0..c0 + size {
                r[CellIndex::new(row, col)] = value;
            }
        }
    }
    r
}

fn ignition() -> Vec<CellIndex> {
    vec![
        ORIGIN,
        CellIndex::new(49, 50),
        CellIndex::new(51, 50),
        CellIndex::new(50, 49),
        CellIndex::new(50, 51),
    ]
}

fn phase(deg: f64, strength: f64, switch: Option<u32>) -> WindPhase {
    WindPhase {
        direction: deg.to_radians(),
        strength,
        switch_time: switch,
    }
}

fn assemble(
    spread: SpreadPreset,
    fuel: FuelGrid,
    elevation: RealGrid,
    resources: RealGrid,
    wind: Vec<WindPhase>,
) -> Scenario {
    let max_fuel = fuel.as_slice().iter().copied().max().unwrap_or(1);
    Scenario {
        dims: dims(),
        initial_fuel: fuel,
        elevation,
        resources,
        wind,
        ignition: ignition(),
        origin: ORIGIN,
        water_source: Point2::new(-2_000.0, 100.0),
        spread,
        params: PropagationParams::for_preset(spread, max_fuel),
        penalties: PenaltyParams::default(),
        ranging: RangingParams::default(),
    }
}

/// Rolling hills: a sum of Gaussian bumps, up to about 30 m.
fn hills() -> RealGrid {
    let bumps = [(25.0, 30.0, 30.0, 18.0), (70.0, 65.0, 25.0, 15.0), (60.0, 20.0, 18.0, 12.0), (20.0, 75.0, 22.0, 14.0)];
    RealGrid::from_fn(dims(), |c| {
        bumps
            .iter()
            .map(|&(r, col, h, s)| {
                let d2 = (c.row as f64 - r).powi(2) + (c.col as f64 - col).powi(2);
                h * (-d2 / (2.0 * s * s)).exp()
            })
            .sum()
    })
}

/// Builds the scenario for `def`. Only case 2 depends on `seed`.
pub fn build_case(def: &CaseDefinition, spread: SpreadPreset, seed: u64) -> Result<Scenario, ScenarioError> {
    let flat = RealGrid::filled(dims(), 0.0);
    let sc = match def {
        CaseDefinition::Case1 => assemble(
            spread,
            base_fuel(1),
            flat,
            with_areas(&[(18, 62, 10, 10.0)]),
            vec![phase(40.0, 0.5, Some(40)), phase(55.0, 0.7, Some(80)), phase(30.0, 0.5, None)],
        ),
        CaseDefinition::Case2 => {
            let mut rng = stream(seed, CASE_STREAM);
            let base = 20.0;
            let shift = base + rng.gen_range(90.0..270.0);
            assemble(
                spread,
                base_fuel(2),
                flat,
                with_areas(&[(18, 62, 10, 10.0), (70, 22, 8, 15.0)]),
                vec![phase(base, 0.6, Some(CASE2_SHIFT_MIN)), phase(shift, 0.6, None)],
            )
        }
        CaseDefinition::Case3 => assemble(
            spread,
            base_fuel(3),
            hills(),
            with_areas(&[(15, 60, 10, 10.0), (68, 18, 8, 12.0), (72, 70, 9, 8.0)]),
            vec![phase(100.0, 0.4, Some(50)), phase(70.0, 0.6, Some(90)), phase(120.0, 0.4, None)],
        ),
        CaseDefinition::Case4 { dir } => {
            let mut sc = Scenario::load_dir(dir)?;
            sc.spread = spread;
            sc.params.p0 = spread.default_p0();
            sc
        }
    };
    sc.validate()?;
    Ok(sc)
}

/// Synthetic stand-in for the Makaha Valley inputs: grass, shrub and
/// timber fuel classes along a valley floor rising to the north-east, with
/// trade winds from the north-east and a small community downwind.
pub fn makaha_standin() -> Scenario {
    let fuel = FuelGrid::from_fn(dims(), |c| {
        let (r, col) = (c.row as f64, c.col as f64);
        let jitter = (splitmix64(((c.row / 4) as u64) << 16 | (c.col / 4) as u64) % 3) as u32;
        // Grass on the valley floor, shrub on the lower slopes, timber above.
        let height = (100.0 - r) + col;
        if height < 80.0 {
            6 + jitter
        } else if height < 130.0 {
            11 + jitter
        } else {
            17 + jitter
        }
    });
    let elevation = RealGrid::from_fn(dims(), |c| {
        let (r, col) = (c.row as f64, c.col as f64);
        0.25 * ((100.0 - r) + col) + 6.0 * ((col / 12.0).sin() * (r / 15.0).cos())
    });
    let resources = with_areas(&[(72, 16, 12, 12.0)]);
    let wind = vec![phase(225.0, 0.4, Some(45)), phase(245.0, 0.5, Some(95)), phase(210.0, 0.35, None)];
    assemble(SpreadPreset::Moderate, fuel, elevation, resources, wind)
}
