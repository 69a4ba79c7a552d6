//! Scenario container and its on-disk directory format.
//!
//! A scenario directory holds three grid layers as headerless CSV
//! (`fuel.csv`, `elevation.csv`, `resources.csv`, one grid row per line) and
//! a flat `scenario.toml` with wind phases, ignition, origin, water source,
//! spread preset and optional parameter overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellIndex, Dims, FuelGrid, Grid, Point2, RealGrid};
use crate::propagation::PropagationParams;
use crate::uav::{PenaltyParams, RangingParams};

pub const FUEL_FILE: &str = "fuel.csv";
pub const ELEVATION_FILE: &str = "elevation.csv";
pub const RESOURCES_FILE: &str = "resources.csv";
pub const SCENARIO_FILE: &str = "scenario.toml";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("missing scenario layer `{layer}` at {path}")]
    MissingLayer { layer: &'static str, path: PathBuf },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed layer `{layer}`: {message}")]
    Layer { layer: &'static str, message: String },
    #[error("malformed scenario file: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

/// Qualitative spread rate. Each preset maps to a base ignition probability
/// calibrated so that unsuppressed fires on case 1 burn roughly 5%, 25%,
/// 50% and 85% of the grid by minute 120.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpreadPreset {
    Slow,
    Moderate,
    Rapid,
    Ultrarapid,
}

impl SpreadPreset {
    pub const ALL: [SpreadPreset; 4] = [
        SpreadPreset::Slow,
        SpreadPreset::Moderate,
        SpreadPreset::Rapid,
        SpreadPreset::Ultrarapid,
    ];

    /// Calibrated base ignition probability (see `iafire calibrate`).
    pub fn default_p0(self) -> f64 {
        match self {
            SpreadPreset::Slow => 0.0264,
            SpreadPreset::Moderate => 0.0469,
            SpreadPreset::Rapid => 0.0688,
            SpreadPreset::Ultrarapid => 0.1055,
        }
    }

    /// Burned fraction at minute 120 that the calibration targets.
    pub fn target_burn_fraction(self) -> f64 {
        match self {
            SpreadPreset::Slow => 0.05,
            SpreadPreset::Moderate => 0.25,
            SpreadPreset::Rapid => 0.50,
            SpreadPreset::Ultrarapid => 0.85,
        }
    }

    /// Ring samples averaged when testing for a plateau at the end of an
    /// episode.
    pub fn plateau_window(self) -> usize {
        match self {
            SpreadPreset::Rapid | SpreadPreset::Ultrarapid => 3,
            SpreadPreset::Slow | SpreadPreset::Moderate => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpreadPreset::Slow => "slow",
            SpreadPreset::Moderate => "moderate",
            SpreadPreset::Rapid => "rapid",
            SpreadPreset::Ultrarapid => "ultrarapid",
        }
    }
}

impl std::str::FromStr for SpreadPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "slow" => Ok(Self::Slow),
            "moderate" => Ok(Self::Moderate),
            "rapid" => Ok(Self::Rapid),
            "ultrarapid" => Ok(Self::Ultrarapid),
            other => Err(format!("unknown spread preset `{other}`")),
        }
    }
}

impl std::fmt::Display for SpreadPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One phase of a piecewise-constant wind profile.
///
/// `direction` is where the wind blows *toward*, in radians counterclockwise
/// from east. The phase lasts until `switch_time` (exclusive, minutes) or
/// for the rest of the episode when `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindPhase {
    pub direction: f64,
    pub strength: f64,
    pub switch_time: Option<u32>,
}

impl WindPhase {
    pub fn calm() -> Self {
        Self {
            direction: 0.0,
            strength: 0.0,
            switch_time: None,
        }
    }

    /// Unit vector the wind blows toward in grid orientation (x east, y south).
    pub fn unit_vector(&self) -> Point2 {
        Point2::new(self.direction.cos(), -self.direction.sin())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dims: Dims,
    pub initial_fuel: FuelGrid,
    /// Meters.
    pub elevation: RealGrid,
    pub resources: RealGrid,
    pub wind: Vec<WindPhase>,
    pub ignition: Vec<CellIndex>,
    pub origin: CellIndex,
    /// Water replenishing source in meters, grid frame (may lie off-grid).
    pub water_source: Point2,
    pub spread: SpreadPreset,
    pub params: PropagationParams,
    pub penalties: PenaltyParams,
    pub ranging: RangingParams,
}

impl Scenario {
    /// Index of the wind phase active at `minute`.
    pub fn wind_phase_index(&self, minute: u32) -> usize {
        self.wind
            .iter()
            .position(|p| p.switch_time.is_none_or(|s| minute < s))
            .unwrap_or(self.wind.len().saturating_sub(1))
    }

    pub fn wind_at(&self, minute: u32) -> WindPhase {
        self.wind
            .get(self.wind_phase_index(minute))
            .copied()
            .unwrap_or_else(WindPhase::calm)
    }

    /// Median of the initial fuel layer, the planners' uniform fuel prior.
    pub fn median_initial_fuel(&self) -> u32 {
        let mut v = self.initial_fuel.as_slice().to_vec();
        v.sort_unstable();
        v.get(v.len() / 2).copied().unwrap_or(0)
    }

    pub fn max_initial_fuel(&self) -> u32 {
        self.initial_fuel.as_slice().iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let d = self.dims;
        for (name, dims) in [
            ("fuel", self.initial_fuel.dims()),
            ("elevation", self.elevation.dims()),
            ("resources", self.resources.dims()),
        ] {
            if dims != d {
                return Err(ScenarioError::Invalid(format!(
                    "{name} layer is {}x{}, expected {}x{}",
                    dims.rows, dims.cols, d.rows, d.cols
                )));
            }
        }
        if self.ignition.is_empty() {
            return Err(ScenarioError::Invalid("no ignition cells".into()));
        }
        if let Some(c) = self.ignition.iter().chain([&self.origin]).find(|c| !d.contains(**c)) {
            return Err(ScenarioError::Invalid(format!("cell {c} out of bounds")));
        }
        if self.wind.iter().any(|w| !(w.strength >= 0.0)) {
            return Err(ScenarioError::Invalid("negative wind strength".into()));
        }
        if self.resources.as_slice().iter().any(|&r| !(r >= 0.0)) {
            return Err(ScenarioError::Invalid("negative resource value".into()));
        }
        let switches: Vec<u32> = self.wind.iter().filter_map(|w| w.switch_time).collect();
        if switches.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ScenarioError::Invalid("wind switch times must increase".into()));
        }
        self.params
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        self.penalties
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Reads a scenario directory.
    pub fn load_dir(dir: &Path) -> Result<Self, ScenarioError> {
        let file_path = dir.join(SCENARIO_FILE);
        let text = read_layer_text(&file_path, "scenario")?;
        let file: ScenarioFile =
            toml::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let dims = Dims::new(file.rows, file.cols);
        let initial_fuel = read_grid(&dir.join(FUEL_FILE), "fuel", dims, |s| {
            s.parse::<u32>().map_err(|e| e.to_string())
        })?;
        let elevation = read_grid(&dir.join(ELEVATION_FILE), "elevation", dims, parse_f64)?;
        let resources = read_grid(&dir.join(RESOURCES_FILE), "resources", dims, parse_f64)?;
        let scenario = file.into_scenario(initial_fuel, elevation, resources)?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Writes the scenario in directory format, creating `dir` if needed.
    pub fn save_dir(&self, dir: &Path) -> Result<(), ScenarioError> {
        fs::create_dir_all(dir).map_err(|source| ScenarioError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_grid(&dir.join(FUEL_FILE), &self.initial_fuel, |v| v.to_string())?;
        write_grid(&dir.join(ELEVATION_FILE), &self.elevation, fmt_f64)?;
        write_grid(&dir.join(RESOURCES_FILE), &self.resources, fmt_f64)?;
        let text = toml::to_string(&ScenarioFile::from_scenario(self))
            .map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let path = dir.join(SCENARIO_FILE);
        fs::write(&path, text).map_err(|source| ScenarioError::Io { path, source })
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn fmt_f64(v: &f64) -> String {
    format!("{v}")
}

fn read_layer_text(path: &Path, layer: &'static str) -> Result<String, ScenarioError> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(t),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(ScenarioError::MissingLayer {
            layer,
            path: path.to_path_buf(),
        }),
        Err(source) => Err(ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn read_grid<T>(
    path: &Path,
    layer: &'static str,
    dims: Dims,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Grid<T>, ScenarioError> {
    let text = read_layer_text(path, layer)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::with_capacity(dims.len());
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| ScenarioError::Layer {
            layer,
            message: e.to_string(),
        })?;
        if record.len() != dims.cols {
            return Err(ScenarioError::Layer {
                layer,
                message: format!("row {rows} has {} values, expected {}", record.len(), dims.cols),
            });
        }
        for field in record.iter() {
            data.push(parse(field).map_err(|message| ScenarioError::Layer {
                layer,
                message: format!("row {rows}: {message}"),
            })?);
        }
        rows += 1;
    }
    if rows != dims.rows {
        return Err(ScenarioError::Layer {
            layer,
            message: format!("{rows} rows, expected {}", dims.rows),
        });
    }
    Ok(Grid::from_vec(dims, data))
}

fn write_grid<T>(path: &Path, grid: &Grid<T>, fmt: impl Fn(&T) -> String) -> Result<(), ScenarioError> {
    let cols = grid.dims().cols;
    let mut out = String::new();
    for row in grid.as_slice().chunks(cols) {
        let line: Vec<String> = row.iter().map(&fmt).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Flat key-value form of everything that is not a grid layer.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    rows: usize,
    cols: usize,
    spread: SpreadPreset,
    origin: [usize; 2],
    ignition: Vec<[usize; 2]>,
    water_source_m: [f64; 2],
    wind_direction_deg: Vec<f64>,
    wind_strength: Vec<f64>,
    #[serde(default)]
    wind_switch_min: Vec<u32>,
    p0: Option<f64>,
    alpha: Option<u32>,
    p_partial: Option<f64>,
    gamma_full: Option<u32>,
    gamma_partial: Option<u32>,
    wind_bias: Option<f64>,
    slope_bias: Option<f64>,
    tau1: Option<f64>,
    d_u: Option<f64>,
    p_u: Option<f64>,
    d_m: Option<f64>,
    p_m: Option<f64>,
    tau4: Option<f64>,
    footprint_cells_per_level: Option<usize>,
    ranging_cap: Option<usize>,
}

impl ScenarioFile {
    fn from_scenario(s: &Scenario) -> Self {
        let p = &s.params;
        let u = &s.penalties;
        Self {
            rows: s.dims.rows,
            cols: s.dims.cols,
            spread: s.spread,
            origin: [s.origin.row as usize, s.origin.col as usize],
            ignition: s.ignition.iter().map(|c| [c.row as usize, c.col as usize]).collect(),
            water_source_m: [s.water_source.x, s.water_source.y],
            wind_direction_deg: s.wind.iter().map(|w| w.direction.to_degrees()).collect(),
            wind_strength: s.wind.iter().map(|w| w.strength).collect(),
            wind_switch_min: s.wind.iter().filter_map(|w| w.switch_time).collect(),
            p0: Some(p.p0),
            alpha: Some(p.alpha),
            p_partial: Some(p.p_partial),
            gamma_full: Some(p.gamma_full),
            gamma_partial: Some(p.gamma_partial),
            wind_bias: Some(p.wind_bias),
            slope_bias: Some(p.slope_bias),
            tau1: Some(u.tau1),
            d_u: Some(u.d_u),
            p_u: Some(u.p_u),
            d_m: Some(u.d_m),
            p_m: Some(u.p_m),
            tau4: Some(u.tau4),
            footprint_cells_per_level: Some(s.ranging.footprint_cells_per_level),
            ranging_cap: Some(s.ranging.cap),
        }
    }

    fn into_scenario(
        self,
        initial_fuel: FuelGrid,
        elevation: RealGrid,
        resources: RealGrid,
    ) -> Result<Scenario, ScenarioError> {
        let dims = Dims::new(self.rows, self.cols);
        if self.wind_direction_deg.len() != self.wind_strength.len() {
            return Err(ScenarioError::Parse(
                "wind_direction_deg and wind_strength differ in length".into(),
            ));
        }
        if !self.wind_direction_deg.is_empty()
            && self.wind_switch_min.len() + 1 != self.wind_direction_deg.len()
        {
            return Err(ScenarioError::Parse(
                "wind_switch_min needs one entry per phase boundary".into(),
            ));
        }
        let wind = self
            .wind_direction_deg
            .iter()
            .zip(&self.wind_strength)
            .enumerate()
            .map(|(i, (&deg, &strength))| WindPhase {
                direction: deg.to_radians(),
                strength,
                switch_time: self.wind_switch_min.get(i).copied(),
            })
            .collect();
        let cell = |[r, c]: [usize; 2]| {
            dims.cell(r as i64, c as i64)
                .ok_or_else(|| ScenarioError::Invalid(format!("cell ({r},{c}) out of bounds")))
        };
        let max_fuel = initial_fuel.as_slice().iter().copied().max().unwrap_or(0);
        let mut params = PropagationParams::for_preset(self.spread, max_fuel);
        if let Some(v) = self.p0 {
            params.p0 = v;
        }
        if let Some(v) = self.alpha {
            params.alpha = v;
        }
        if let Some(v) = self.p_partial {
            params.p_partial = v;
        }
        if let Some(v) = self.gamma_full {
            params.gamma_full = v;
        }
        if let Some(v) = self.gamma_partial {
            params.gamma_partial = v;
        }
        if let Some(v) = self.wind_bias {
            params.wind_bias = v;
        }
        if let Some(v) = self.slope_bias {
            params.slope_bias = v;
        }
        let mut penalties = PenaltyParams::default();
        if let Some(v) = self.tau1 {
            penalties.tau1 = v;
        }
        if let Some(v) = self.d_u {
            penalties.d_u = v;
        }
        if let Some(v) = self.p_u {
            penalties.p_u = v;
        }
        if let Some(v) = self.d_m {
            penalties.d_m = v;
        }
        if let Some(v) = self.p_m {
            penalties.p_m = v;
        }
        if let Some(v) = self.tau4 {
            penalties.tau4 = v;
        }
        let mut ranging = RangingParams::default();
        if let Some(v) = self.footprint_cells_per_level {
            ranging.footprint_cells_per_level = v;
        }
        if let Some(v) = self.ranging_cap {
            ranging.cap = v;
        }
        Ok(Scenario {
            dims,
            initial_fuel,
            elevation,
            resources,
            wind,
            ignition: self.ignition.into_iter().map(cell).collect::<Result<_, _>>()?,
            origin: cell(self.origin)?,
            water_source: Point2::new(self.water_source_m[0], self.water_source_m[1]),
            spread: self.spread,
            params,
            penalties,
            ranging,
        })
    }
}
