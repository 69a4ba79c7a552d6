//! Ring-size forecasting and the early-dispatch rule for a second aircraft.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean radius in meters of a circle covering ten acres.
pub const TEN_ACRE_RING_M: f64 = 113.5;

#[derive(Debug, Error, PartialEq)]
pub enum DispatchError {
    #[error("ring forecast needs at least 2 samples, have {0}")]
    InsufficientHistory(usize),
    #[error("ring samples must have strictly increasing minutes ({prev} then {next})")]
    NonIncreasing { prev: u32, next: u32 },
}

/// Ring radius samples, one per suppression step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RingHistory {
    samples: Vec<(u32, f64)>,
}

impl RingHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, minute: u32, radius_m: f64) -> Result<(), DispatchError> {
        if let Some(&(prev, _)) = self.samples.last() {
            if minute <= prev {
                return Err(DispatchError::NonIncreasing { prev, next: minute });
            }
        }
        self.samples.push((minute, radius_m));
        Ok(())
    }

    pub fn samples(&self) -> &[(u32, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Forecasts the ring radius at a future minute from the history.
pub trait RingPredictor {
    fn predict(&self, history: &RingHistory, at_minute: u32) -> Result<f64, DispatchError>;
}

/// Ordinary least-squares line through (minute, radius).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinearRingPredictor;

impl RingPredictor for LinearRingPredictor {
    fn predict(&self, history: &RingHistory, at_minute: u32) -> Result<f64, DispatchError> {
        let s = history.samples();
        if s.len() < 2 {
            return Err(DispatchError::InsufficientHistory(s.len()));
        }
        let n = s.len() as f64;
        let mx = s.iter().map(|&(t, _)| t as f64).sum::<f64>() / n;
        let my = s.iter().map(|&(_, r)| r).sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &(t, r) in s {
            let dx = t as f64 - mx;
            sxy += dx * (r - my);
            sxx += dx * dx;
        }
        let slope = sxy / sxx;
        Ok(my + slope * (at_minute as f64 - mx))
    }
}

/// Linear forecast of the ring radius at minute 120.
pub fn predict_ring(history: &RingHistory) -> Result<f64, DispatchError> {
    LinearRingPredictor.predict(history, 120)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispatchPolicy {
    pub enabled: bool,
    /// Dispatch is considered only after this minute.
    pub time_threshold: u32,
    /// Forecast radius, meters, above which the second aircraft goes.
    pub ring_threshold: f64,
}

impl Default for DispatchPolicy {
    fn default() -> Self {
        Self {
            enabled: false,
            time_threshold: 30,
            ring_threshold: 100.0,
        }
    }
}

/// Latching dispatch decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DispatchLatch {
    pub triggered_at: Option<u32>,
}

impl DispatchLatch {
    /// Evaluates the rule at `minute`; once true it stays true.
    pub fn evaluate(&mut self, history: &RingHistory, minute: u32, policy: &DispatchPolicy, predictor: &dyn RingPredictor, horizon: u32) -> bool {
        if self.triggered_at.is_some() {
            return true;
        }
        if policy.enabled && early_dispatch_with(history, minute, policy, predictor, horizon) {
            self.triggered_at = Some(minute);
            return true;
        }
        false
    }
}

fn early_dispatch_with(history: &RingHistory, minute: u32, policy: &DispatchPolicy, predictor: &dyn RingPredictor, horizon: u32) -> bool {
    if minute <= policy.time_threshold {
        return false;
    }
    predictor
        .predict(history, horizon)
        .map_or(false, |r| r > policy.ring_threshold)
}

/// True iff `minute` is past the time threshold and the forecast ring at
/// minute 120 exceeds the ring threshold.
pub fn early_dispatch_decision(history: &RingHistory, minute: u32, policy: &DispatchPolicy) -> bool {
    early_dispatch_with(history, minute, policy, &LinearRingPredictor, 120)
}
