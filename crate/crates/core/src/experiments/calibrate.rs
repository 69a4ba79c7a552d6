//! Bisection on the base ignition probability so that unsuppressed fires
//! burn a target share of the grid by the horizon.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::BoolGrid;
use crate::gridstate::{Scenario, SpreadPreset, WorldState};
use crate::propagation::{step_with_key, FireModel};
use crate::rng::{next_key, stream};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("target burn fraction {0} outside [0, 1)")]
    Target(f64),
    #[error("search range [{lo}, {hi}] does not bracket the target {target} (burned {f_lo:.4} to {f_hi:.4})")]
    NonBracketing {
        lo: f64,
        hi: f64,
        target: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("no calibration seeds")]
    NoSeeds,
    #[error("writing calibration table: {0}")]
    Io(#[from] std::io::Error),
    #[error("serializing calibration table: {0}")]
    Serialize(#[from] toml::ser::Error),
}

/// Share of cells that have burned by `horizon` without suppression,
/// averaged over `seeds`. Uses the same world random stream as episodes.
pub fn burned_fraction(scenario: &Scenario, p0: f64, seeds: &[u64], horizon: u32) -> f64 {
    let mut params = scenario.params;
    params.p0 = p0;
    let fire = FireModel::with_params(scenario, params);
    let total: f64 = seeds
        .iter()
        .map(|&seed| {
            let mut rng = stream(seed, 0);
            let mut world = WorldState::ignite(scenario);
            let mut ever: BoolGrid = world.burning.clone();
            for _ in 0..horizon {
                step_with_key(&mut world, None, &fire, next_key(&mut rng));
                for (e, &b) in ever.as_mut_slice().iter_mut().zip(world.burning.as_slice()) {
                    *e |= b;
                }
                if !world.burning.any() {
                    break;
                }
            }
            ever.count() as f64 / ever.as_slice().len() as f64
        })
        .sum();
    total / seeds.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub p0: f64,
    pub target: f64,
    pub achieved: f64,
    pub evaluations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationSettings {
    pub tolerance: f64,
    pub lo: f64,
    pub hi: f64,
    pub horizon: u32,
    pub max_evaluations: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            tolerance: 0.01,
            lo: 0.0,
            hi: 1.0,
            horizon: 120,
            max_evaluations: 60,
        }
    }
}

/// Finds `p0` whose mean burned fraction over `seeds` is within
/// `tolerance` of `target`.
pub fn calibrate_spread(
    scenario: &Scenario,
    target: f64,
    seeds: &[u64],
    settings: &CalibrationSettings,
) -> Result<CalibrationResult, CalibrationError> {
    if !(0.0..1.0).contains(&target) {
        return Err(CalibrationError::Target(target));
    }
    if seeds.is_empty() {
        return Err(CalibrationError::NoSeeds);
    }
    let f = |p: f64| burned_fraction(scenario, p, seeds, settings.horizon);
    let (mut lo, mut hi) = (settings.lo, settings.hi);
    let f_lo = f(lo);
    let mut evaluations = 1;
    if f_lo >= target - settings.tolerance {
        return Ok(CalibrationResult {
            p0: lo,
            target,
            achieved: f_lo,
            evaluations,
        });
    }
    let f_hi = f(hi);
    evaluations += 1;
    if f_hi < target - settings.tolerance {
        return Err(CalibrationError::NonBracketing {
            lo,
            hi,
            target,
            f_lo,
            f_hi,
        });
    }
    let (mut best_p, mut best_f) = (hi, f_hi);
    while evaluations < settings.max_evaluations {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        evaluations += 1;
        if (fm - target).abs() < (best_f - target).abs() {
            best_p = mid;
            best_f = fm;
        }
        if (fm - target).abs() <= settings.tolerance {
            break;
        }
        if fm < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CalibrationResult {
        p0: best_p,
        target,
        achieved: best_f,
        evaluations,
    })
}

/// Writes `preset -> result` as a TOML table.
pub fn write_calibration_table(path: &Path, table: &BTreeMap<SpreadPreset, CalibrationResult>) -> Result<(), CalibrationError> {
    let named: BTreeMap<&str, &CalibrationResult> = table.iter().map(|(k, v)| (k.name(), v)).collect();
    let text = toml::to_string(&named)?;
    std::fs::write(path, text)?;
    Ok(())
}
