//! Per-minute episode records, CSV output and outcome classification.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::dispatch::{RingHistory, TEN_ACRE_RING_M};
use crate::drops::SuppressionActionSpec;
use crate::uav::DronePos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeClass {
    FullySuppressed,
    Contained,
    Escaped,
}

impl OutcomeClass {
    pub const ALL: [OutcomeClass; 3] = [Self::FullySuppressed, Self::Contained, Self::Escaped];

    pub fn name(self) -> &'static str {
        match self {
            Self::FullySuppressed => "fully_suppressed",
            Self::Contained => "contained",
            Self::Escaped => "escaped",
        }
    }
}

impl std::fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One drop executed during a minute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    /// 1 for the initial aircraft, 2 for the dispatched one.
    pub aircraft: u8,
    pub action: SuppressionActionSpec,
}

/// The state at minute `t` after that minute's observations, plus the
/// actions taken during the minute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u32,
    pub burning_count: usize,
    /// Destruction of every cell burned so far.
    pub destruction: f64,
    /// Destruction of the cells burning now.
    pub instant_destruction: f64,
    pub ring_radius_m: f64,
    pub drones: Option<(DronePos, DronePos)>,
    pub drops: Vec<DropRecord>,
    pub dispatch: bool,
    pub predicted_ring_m: Option<f64>,
    /// Share of all cells where belief matches truth.
    pub belief_accuracy: f64,
    /// Share of truly burning cells the belief marks burning.
    pub burning_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub rows: Vec<StepRecord>,
    pub ring_history: RingHistory,
    /// Ring samples averaged by the plateau test.
    pub plateau_window: usize,
    pub reached_boundary: bool,
    pub dispatched_at: Option<u32>,
    pub outcome: OutcomeClass,
}

impl EpisodeLog {
    pub fn last(&self) -> &StepRecord {
        self.rows.last().expect("episode has rows")
    }

    pub fn final_destruction(&self) -> f64 {
        self.last().destruction
    }

    pub fn drop_count(&self) -> usize {
        self.rows.iter().map(|r| r.drops.len()).sum()
    }

    pub const CSV_HEADER: [&'static str; 15] = [
        "t",
        "burning_count",
        "destruction",
        "instant_destruction",
        "ring_radius_m",
        "drone1_xyz",
        "drone2_xyz",
        "drop_center",
        "drop_type",
        "drop_aircraft",
        "dispatch_flag",
        "predicted_ring_m",
        "belief_accuracy",
        "burning_accuracy",
        "outcome_at_end",
    ];

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        let xyz = |d: &DronePos| format!("{}:{}:{}", d.x, d.y, d.z);
        let join = |f: &dyn Fn(&DropRecord) -> String, drops: &[DropRecord]| drops.iter().map(f).collect::<Vec<_>>().join(";");
        let n = self.rows.len();
        for (i, r) in self.rows.iter().enumerate() {
            let (d1, d2) = r.drones.map_or((String::new(), String::new()), |(a, b)| (xyz(&a), xyz(&b)));
            w.write_record([
                r.t.to_string(),
                r.burning_count.to_string(),
                r.destruction.to_string(),
                r.instant_destruction.to_string(),
                r.ring_radius_m.to_string(),
                d1,
                d2,
                join(&|d| format!("{}:{}", d.action.center.row, d.action.center.col), &r.drops),
                join(&|d| d.action.drop.name().to_string(), &r.drops),
                join(&|d| d.aircraft.to_string(), &r.drops),
                u8::from(r.dispatch).to_string(),
                r.predicted_ring_m.map_or(String::new(), |p| p.to_string()),
                r.belief_accuracy.to_string(),
                r.burning_accuracy.to_string(),
                if i + 1 == n { self.outcome.name().to_string() } else { String::new() },
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 csv")
    }
}

/// Outcome of a finished episode from its last state and ring samples.
pub fn classify(
    final_burning: usize,
    final_ring_m: f64,
    reached_boundary: bool,
    history: &RingHistory,
    window: usize,
) -> OutcomeClass {
    if final_burning == 0 {
        return OutcomeClass::FullySuppressed;
    }
    if reached_boundary || final_ring_m > TEN_ACRE_RING_M {
        return OutcomeClass::Escaped;
    }
    let s = history.samples();
    if s.is_empty() || window == 0 {
        return OutcomeClass::Escaped;
    }
    let tail = &s[s.len().saturating_sub(window)..];
    let mean = tail.iter().map(|&(_, r)| r).sum::<f64>() / tail.len() as f64;
    if mean > 0.0 && (final_ring_m - mean).abs() <= 0.1 * mean {
        OutcomeClass::Contained
    } else {
        OutcomeClass::Escaped
    }
}

pub fn classify_outcome(log: &EpisodeLog) -> OutcomeClass {
    let last = log.last();
    classify(
        last.burning_count,
        last.ring_radius_m,
        log.reached_boundary,
        &log.ring_history,
        log.plateau_window,
    )
}
