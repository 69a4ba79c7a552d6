//! `iafire`: run single episodes, campaigns, spread calibration and reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use iafire_core::coordinator::DispatchPolicy;
use iafire_core::experiments::{
    aggregate, build_case, calibrate_spread, emit_report, read_manifest, read_runs, run_campaign, write_calibration_table,
    write_campaign, CalibrationSettings, ExperimentConfig, ExperimentError, PolicyKind, ReportFormat,
};
use iafire_core::gridstate::SpreadPreset;
use iafire_core::suppress_planner::AsrMethod;
use iafire_core::surveil_planner::SurveillanceModelKind;

#[derive(Parser)]
#[command(name = "iafire", version, about = "Wildfire initial-attack simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its log under --out.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "localized")]
        policy: PolicyKind,
    },
    /// Run every policy on `--runs` paired seeds and write the report.
    Campaign {
        #[command(flatten)]
        common: Common,
        /// Comma-separated list.
        #[arg(long, value_delimiter = ',', default_value = "localized")]
        policy: Vec<PolicyKind>,
        #[arg(long, default_value_t = 20)]
        runs: usize,
    },
    /// Find the base ignition probability for each spread preset.
    Calibrate {
        #[arg(long, default_value_t = 1)]
        case: u8,
        #[arg(long)]
        case_dir: Option<PathBuf>,
        /// Calibrate only this preset; all four when omitted.
        #[arg(long)]
        spread: Option<SpreadPreset>,
        /// Overrides the preset's target burned fraction.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        tolerance: f64,
        /// Number of seeds averaged per evaluation.
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-aggregate the raw runs of a campaign directory.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "csv,text,svg")]
        format: Vec<Format>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1)]
    case: u8,
    /// Scenario directory for case 4.
    #[arg(long)]
    case_dir: Option<PathBuf>,
    #[arg(long, default_value = "moderate")]
    spread: SpreadPreset,
    /// Base ignition probability, overriding the preset.
    #[arg(long)]
    p0: Option<f64>,
    /// Surveillance model: uncertainty, belief, or none.
    #[arg(long, default_value = "uncertainty")]
    surveillance: String,
    /// Action space restriction method (1, 2 or 3).
    #[arg(long, default_value_t = 2)]
    asr: u8,
    #[arg(long, default_value_t = 90.0)]
    quantile: f64,
    #[arg(long, default_value_t = 10)]
    rollout_depth: usize,
    /// Base seed; run i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// MCTS iterations per decision for both planners.
    #[arg(long)]
    iters: Option<usize>,
    /// Wall-clock limit per decision, seconds. Breaks reproducibility.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    perfect_info: bool,
    /// Enable early dispatch of the second aircraft.
    #[arg(long)]
    dispatch: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Text,
    Svg,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Text => ReportFormat::Text,
            Format::Svg => ReportFormat::Svg,
        }
    }
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl Common {
    fn config(&self, policies: Vec<PolicyKind>, runs: usize) -> Result<ExperimentConfig, Failure> {
        let surveillance = match self.surveillance.as_str() {
            "none" => None,
            s => Some(s.parse::<SurveillanceModelKind>().map_err(Failure::Config)?),
        };
        let asr_method = AsrMethod::from_number(self.asr).ok_or_else(|| Failure::Config(format!("--asr must be 1, 2 or 3, got {}", self.asr)))?;
        let time_limit = match self.time_limit {
            Some(s) if !(s > 0.0 && s.is_finite()) => return Err(Failure::Config(format!("--time-limit must be positive, got {s}"))),
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        let mut cfg = ExperimentConfig {
            case: self.case,
            case4_dir: self.case_dir.clone(),
            spread: self.spread,
            p0: self.p0,
            policies,
            runs,
            base_seed: self.seed,
            surveillance,
            perfect_info: self.perfect_info,
            dispatch: DispatchPolicy {
                enabled: self.dispatch,
                ..DispatchPolicy::default()
            },
            ..ExperimentConfig::default()
        }
        .with_budgets(self.iters, time_limit);
        cfg.suppress.asr_method = asr_method;
        cfg.suppress.quantile = self.quantile;
        cfg.suppress.rollout_depth = self.rollout_depth;
        cfg.suppress.validate().map_err(|e| Failure::Config(e.to_string()))?;
        cfg.surveil_mcts.validate().map_err(|e| Failure::Config(e.to_string()))?;
        if let Some(p0) = cfg.p0 {
            if !(p0 > 0.0 && p0 < 1.0) {
                return Err(Failure::Config(format!("--p0 must lie in (0, 1), got {p0}")));
            }
        }
        Ok(cfg)
    }
}

fn campaign(cfg: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let result = run_campaign(cfg)?;
    write_campaign(&result, out)?;
    for p in &result.report.policies {
        let d = &p.finals[&iafire_core::experiments::Metric::Destruction];
        match d.half_width {
            Some(h) => println!("{:<10} final destruction {:.2} ± {:.2} (n={})", p.policy, d.mean, h, p.runs),
            None => println!("{:<10} final destruction {:.2} (n={})", p.policy, d.mean, p.runs),
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct CalibrationManifest<'a> {
    tool_version: &'static str,
    case: u8,
    case_dir: Option<&'a Path>,
    presets: Vec<SpreadPreset>,
    targets: BTreeMap<&'static str, f64>,
    tolerance: f64,
    seeds: Vec<u64>,
    config_hash: String,
}

#[allow(clippy::too_many_arguments)]
fn calibrate(
    case: u8,
    case_dir: Option<PathBuf>,
    spread: Option<SpreadPreset>,
    target: Option<f64>,
    tolerance: f64,
    runs: usize,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let cfg = ExperimentConfig {
        case,
        case4_dir: case_dir.clone(),
        ..ExperimentConfig::default()
    };
    let def = cfg.case_definition()?;
    if !(tolerance > 0.0) {
        return Err(Failure::Config(format!("--tolerance must be positive, got {tolerance}")));
    }
    let presets: Vec<SpreadPreset> = spread.map_or(SpreadPreset::ALL.to_vec(), |p| vec![p]);
    let seeds: Vec<u64> = (0..runs as u64).map(|i| seed + i).collect();
    let settings = CalibrationSettings {
        tolerance,
        ..CalibrationSettings::default()
    };
    let mut table = BTreeMap::new();
    let mut targets = BTreeMap::new();
    for p in &presets {
        let scenario = build_case(&def, *p, seed).map_err(ExperimentError::from)?;
        let t = target.unwrap_or(p.target_burn_fraction());
        let r = calibrate_spread(&scenario, t, &seeds, &settings).map_err(ExperimentError::from)?;
        println!("{:<11} target {:.3} -> p0 {:.5} (burned {:.3}, {} evaluations)", p.name(), t, r.p0, r.achieved, r.evaluations);
        table.insert(*p, r);
        targets.insert(p.name(), t);
    }
    std::fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    write_calibration_table(&out.join("calibration.toml"), &table).map_err(ExperimentError::from)?;
    let mut manifest = CalibrationManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        case,
        case_dir: case_dir.as_deref(),
        presets,
        targets,
        tolerance,
        seeds,
        config_hash: String::new(),
    };
    let digest = Sha256::digest(serde_json::to_string(&manifest).expect("manifest serializes").as_bytes());
    manifest.config_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
    let path = out.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")
        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn report(out: &Path, formats: &[Format]) -> Result<(), Failure> {
    let manifest = read_manifest(out)?;
    let runs = read_runs(out, &manifest)?;
    let rep = aggregate(&runs, manifest.config.timeline.horizon);
    let formats: Vec<ReportFormat> = formats.iter().map(|&f| f.into()).collect();
    let files = emit_report(&rep, out, &formats)?;
    println!("wrote {} report files to {}", files.len(), out.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { common, policy } => campaign(&common.config(vec![policy], 1)?, &common.out),
        Command::Campaign { common, policy, runs } => {
            if runs == 0 {
                return Err(Failure::Config("--runs must be at least 1".into()));
            }
            campaign(&common.config(policy, runs)?, &common.out)
        }
        Command::Calibrate {
            case,
            case_dir,
            spread,
            target,
            tolerance,
            runs,
            seed,
            out,
        } => calibrate(case, case_dir, spread, target, tolerance, runs, seed, &out),
        Command::Report { out, format } => report(&out, &format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
