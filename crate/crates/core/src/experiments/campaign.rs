//! Multi-seed campaigns: paired episodes per policy and their aggregates.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cases::{build_case, CaseDefinition};
use super::stats::{mean_ci, welch_test, MeanCi, WelchResult};
use super::ExperimentError;
use crate::coordinator::{
    run_episode, DispatchPolicy, EpisodeConfig, EpisodeLog, OutcomeClass, SuppressionPolicy, SurveilConfig, Timeline,
};
use crate::gridstate::{Scenario, SpreadPreset};
use crate::mcts::MctsConfig;
use crate::suppress_planner::{SuppressPlannerConfig, SuppressionRewardKind};
use crate::surveil_planner::SurveillanceModelKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    None,
    Localized,
    Global,
    Immediate,
    Technique,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [Self::None, Self::Localized, Self::Global, Self::Immediate, Self::Technique];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Localized => "localized",
            Self::Global => "global",
            Self::Immediate => "immediate",
            Self::Technique => "technique",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}` (expected none, localized, global, immediate or technique)"))
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything that defines a campaign. Hashed into the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub case: u8,
    /// Scenario directory for case 4; the shipped one when `None`.
    pub case4_dir: Option<PathBuf>,
    pub spread: SpreadPreset,
    /// Overrides the preset's base ignition probability.
    pub p0: Option<f64>,
    pub policies: Vec<PolicyKind>,
    pub runs: usize,
    pub base_seed: u64,
    /// `None` keeps the drones grounded.
    pub surveillance: Option<SurveillanceModelKind>,
    pub surveil_mcts: MctsConfig,
    /// Template for the search-based policies; the reward kind is set per
    /// policy.
    pub suppress: SuppressPlannerConfig,
    pub timeline: Timeline,
    pub dispatch: DispatchPolicy,
    pub perfect_info: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case: 1,
            case4_dir: None,
            spread: SpreadPreset::Moderate,
            p0: None,
            policies: vec![PolicyKind::Localized],
            runs: 20,
            base_seed: 0,
            surveillance: Some(SurveillanceModelKind::Uncertainty),
            surveil_mcts: MctsConfig::default(),
            suppress: SuppressPlannerConfig::default(),
            timeline: Timeline::default(),
            dispatch: DispatchPolicy::default(),
            perfect_info: false,
        }
    }
}

impl ExperimentConfig {
    pub fn case_definition(&self) -> Result<CaseDefinition, ExperimentError> {
        match (self.case, &self.case4_dir) {
            (4, Some(dir)) => Ok(CaseDefinition::Case4 { dir: dir.clone() }),
            (id, _) => CaseDefinition::from_id(id).ok_or(ExperimentError::Case(id)),
        }
    }

    /// Scenario for the run with `seed`.
    pub fn scenario(&self, seed: u64) -> Result<Scenario, ExperimentError> {
        let mut sc = build_case(&self.case_definition()?, self.spread, seed)?;
        if let Some(p0) = self.p0 {
            sc.params.p0 = p0;
        }
        Ok(sc)
    }

    pub fn episode_config(&self, policy: PolicyKind) -> EpisodeConfig {
        let planner = |kind| {
            SuppressionPolicy::Planner(SuppressPlannerConfig {
                reward_kind: kind,
                ..self.suppress.clone()
            })
        };
        EpisodeConfig {
            timeline: self.timeline,
            surveillance: self.surveillance.map(|kind| SurveilConfig {
                kind,
                mcts: self.surveil_mcts.clone(),
            }),
            suppression: match policy {
                PolicyKind::None => SuppressionPolicy::Disabled,
                PolicyKind::Localized => planner(SuppressionRewardKind::Localized),
                PolicyKind::Global => planner(SuppressionRewardKind::Global),
                PolicyKind::Immediate => planner(SuppressionRewardKind::Immediate),
                PolicyKind::Technique => SuppressionPolicy::Technique,
            },
            dispatch: self.dispatch,
            perfect_info: self.perfect_info,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.base_seed + i).collect()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Search budget shorthand used by the CLI.
    pub fn with_budgets(mut self, iterations: Option<usize>, time_limit: Option<Duration>) -> Self {
        if let Some(n) = iterations {
            self.surveil_mcts.iteration_limit = n;
            self.suppress.mcts.iteration_limit = n;
        }
        if time_limit.is_some() {
            self.surveil_mcts.time_limit = time_limit;
            self.suppress.mcts.time_limit = time_limit;
        }
        self
    }
}

/// Per-minute metrics of one run, the part of an episode the aggregates use.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub policy: String,
    pub seed: u64,
    /// Indexed by metric, then minute.
    pub metrics: BTreeMap<Metric, Vec<f64>>,
    pub outcome: OutcomeClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Destruction,
    FlameSize,
    RingRadius,
    BeliefAccuracy,
    BurningAccuracy,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Self::Destruction,
        Self::FlameSize,
        Self::RingRadius,
        Self::BeliefAccuracy,
        Self::BurningAccuracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Destruction => "destruction",
            Self::FlameSize => "flame_size",
            Self::RingRadius => "ring_radius",
            Self::BeliefAccuracy => "belief_accuracy",
            Self::BurningAccuracy => "burning_accuracy",
        }
    }

    /// Column of the episode CSV holding this metric.
    pub fn csv_column(self) -> &'static str {
        match self {
            Self::Destruction => "destruction",
            Self::FlameSize => "burning_count",
            Self::RingRadius => "ring_radius_m",
            Self::BeliefAccuracy => "belief_accuracy",
            Self::BurningAccuracy => "burning_accuracy",
        }
    }
}

impl RunSeries {
    /// Series padded to `horizon + 1` minutes by holding the last value, so
    /// runs that end early at the grid edge still line up.
    pub fn from_log(policy: &str, log: &EpisodeLog, horizon: u32) -> Self {
        let mut metrics = BTreeMap::new();
        for m in Metric::ALL {
            let mut v: Vec<f64> = log
                .rows
                .iter()
                .map(|r| match m {
                    Metric::Destruction => r.destruction,
                    Metric::FlameSize => r.burning_count as f64,
                    Metric::RingRadius => r.ring_radius_m,
                    Metric::BeliefAccuracy => r.belief_accuracy,
                    Metric::BurningAccuracy => r.burning_accuracy,
                })
                .collect();
            pad(&mut v, horizon);
            metrics.insert(m, v);
        }
        Self {
            policy: policy.to_string(),
            seed: log.seed,
            metrics,
            outcome: log.outcome,
        }
    }

    /// Reads the metrics back from an episode CSV.
    pub fn from_csv(policy: &str, seed: u64, text: &str, horizon: u32) -> Result<Self, ExperimentError> {
        let bad = |m: String| ExperimentError::Report(format!("{policy} seed {seed}: {m}"));
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(format!("missing column {name}")));
        let cols: Vec<(Metric, usize)> = Metric::ALL
            .into_iter()
            .map(|m| col(m.csv_column()).map(|c| (m, c)))
            .collect::<Result<_, _>>()?;
        let outcome_col = col("outcome_at_end")?;
        let mut metrics: BTreeMap<Metric, Vec<f64>> = Metric::ALL.into_iter().map(|m| (m, Vec::new())).collect();
        let mut outcome = None;
        for rec in reader.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            for &(m, c) in &cols {
                let v: f64 = rec[c].parse().map_err(|_| bad(format!("bad number `{}`", &rec[c])))?;
                metrics.get_mut(&m).expect("all metrics").push(v);
            }
            if !rec[outcome_col].is_empty() {
                outcome = OutcomeClass::ALL.into_iter().find(|o| o.name() == &rec[outcome_col]);
            }
        }
        for v in metrics.values_mut() {
            pad(v, horizon);
        }
        Ok(Self {
            policy: policy.to_string(),
            seed,
            metrics,
            outcome: outcome.ok_or_else(|| bad("no outcome".into()))?,
        })
    }

    pub fn final_value(&self, m: Metric) -> f64 {
        *self.metrics[&m].last().expect("non-empty series")
    }
}

fn pad(v: &mut Vec<f64>, horizon: u32) {
    let last = v.last().copied().unwrap_or(0.0);
    v.resize(horizon as usize + 1, last);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub runs: usize,
    pub finals: BTreeMap<Metric, MeanCi>,
    /// Per-minute mean and interval for each metric.
    pub series: BTreeMap<Metric, Vec<MeanCi>>,
    pub outcomes: BTreeMap<OutcomeClass, f64>,
    /// Raw final destruction per run, in seed order.
    pub final_destruction: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub welch: Option<WelchResult>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub horizon: u32,
    pub policies: Vec<PolicySummary>,
    /// Welch tests on final destruction for every policy pair.
    pub comparisons: Vec<Comparison>,
}

impl AggregateReport {
    pub fn policy(&self, name: &str) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.policy == name)
    }
}

/// Aggregates runs grouped by policy, preserving first-seen policy order
/// and sorting runs by seed.
pub fn aggregate(runs: &[RunSeries], horizon: u32) -> AggregateReport {
    let mut order: Vec<&str> = Vec::new();
    for r in runs {
        if !order.contains(&r.policy.as_str()) {
            order.push(&r.policy);
        }
    }
    let policies: Vec<PolicySummary> = order
        .iter()
        .map(|&name| {
            let mut group: Vec<&RunSeries> = runs.iter().filter(|r| r.policy == name).collect();
            group.sort_by_key(|r| r.seed);
            summarize(name, &group, horizon)
        })
        .collect();
    let mut comparisons = Vec::new();
    for i in 0..policies.len() {
        for j in i + 1..policies.len() {
            comparisons.push(Comparison {
                a: policies[i].policy.clone(),
                b: policies[j].policy.clone(),
                welch: welch_test(&policies[i].final_destruction, &policies[j].final_destruction),
            });
        }
    }
    AggregateReport {
        horizon,
        policies,
        comparisons,
    }
}

fn summarize(name: &str, group: &[&RunSeries], horizon: u32) -> PolicySummary {
    let mut finals = BTreeMap::new();
    let mut series = BTreeMap::new();
    for m in Metric::ALL {
        let f: Vec<f64> = group.iter().map(|r| r.final_value(m)).collect();
        finals.insert(m, mean_ci(&f));
        let s: Vec<MeanCi> = (0..=horizon as usize)
            .map(|t| mean_ci(&group.iter().map(|r| r.metrics[&m][t]).collect::<Vec<_>>()))
            .collect();
        series.insert(m, s);
    }
    let n = group.len().max(1) as f64;
    let outcomes = OutcomeClass::ALL
        .into_iter()
        .map(|o| (o, group.iter().filter(|r| r.outcome == o).count() as f64 / n))
        .collect();
    PolicySummary {
        policy: name.to_string(),
        runs: group.len(),
        finals,
        series,
        outcomes,
        final_destruction: group.iter().map(|r| r.final_value(Metric::Destruction)).collect(),
    }
}

/// Raw episodes of a campaign, ordered by policy then seed.
pub struct CampaignResult {
    pub config: ExperimentConfig,
    pub logs: Vec<(PolicyKind, EpisodeLog)>,
    pub report: AggregateReport,
}

/// Runs every policy on every seed. Seeds are shared across policies so
/// that comparisons are paired. Episodes run in parallel; results are
/// reduced in (policy, seed) order.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult, ExperimentError> {
    if cfg.runs == 0 {
        return Err(ExperimentError::Config("runs must be at least 1".into()));
    }
    let seeds = cfg.seeds();
    let scenarios: Vec<Scenario> = seeds.iter().map(|&s| cfg.scenario(s)).collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, PolicyKind, usize)> = cfg
        .policies
        .iter()
        .enumerate()
        .flat_map(|(pi, &p)| (0..seeds.len()).map(move |si| (pi, p, si)))
        .collect();
    let mut done: Vec<(usize, usize, PolicyKind, EpisodeLog)> = jobs
        .par_iter()
        .map(|&(pi, p, si)| {
            run_episode(&scenarios[si], &cfg.episode_config(p), seeds[si])
                .map(|log| (pi, si, p, log))
                .map_err(ExperimentError::from)
        })
        .collect::<Result<_, _>>()?;
    done.sort_by_key(|&(pi, si, _, _)| (pi, si));
    let logs: Vec<(PolicyKind, EpisodeLog)> = done.into_iter().map(|(_, _, p, l)| (p, l)).collect();
    let series: Vec<RunSeries> = logs
        .iter()
        .map(|(p, l)| RunSeries::from_log(p.name(), l, cfg.timeline.horizon))
        .collect();
    let report = aggregate(&series, cfg.timeline.horizon);
    Ok(CampaignResult {
        config: cfg.clone(),
        logs,
        report,
    })
}
