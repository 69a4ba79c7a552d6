//! Report files: per-metric CSV series, final comparisons, outcome shares,
//! a text summary, SVG plots, raw run CSVs and the campaign manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::campaign::{AggregateReport, CampaignResult, ExperimentConfig, Metric, PolicySummary, RunSeries};
use super::stats::MeanCi;
use super::ExperimentError;
use crate::coordinator::{EpisodeLog, OutcomeClass};

pub const MANIFEST_FILE: &str = "manifest.json";
const RUNS_DIR: &str = "runs";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Text,
    Svg,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [Self::Csv, Self::Text, Self::Svg];
}

/// Inputs of a campaign, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// Run files relative to the output directory, in (policy, seed) order.
    pub runs: Vec<String>,
}

fn write(path: &Path, text: &str) -> Result<(), ExperimentError> {
    fs::write(path, text).map_err(ExperimentError::io(path))
}

fn create_dir(path: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(path).map_err(ExperimentError::io(path))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn series_csv(report: &AggregateReport, m: Metric) -> String {
    let mut out = String::from("t");
    for p in &report.policies {
        let n = &p.policy;
        write!(out, ",{n}_mean,{n}_lo,{n}_hi").unwrap();
    }
    out.push('\n');
    if report.policies.is_empty() {
        return out;
    }
    for t in 0..=report.horizon as usize {
        write!(out, "{t}").unwrap();
        for p in &report.policies {
            let ci = p.series[&m][t];
            write!(out, ",{},{},{}", ci.mean, fmt_opt(ci.lower()), fmt_opt(ci.upper())).unwrap();
        }
        out.push('\n');
    }
    out
}

fn finals_csv(report: &AggregateReport) -> String {
    let mut out = String::from("policy,metric,runs,mean,lo,hi\n");
    for p in &report.policies {
        for m in Metric::ALL {
            let ci = p.finals[&m];
            writeln!(out, "{},{},{},{},{},{}", p.policy, m.name(), p.runs, ci.mean, fmt_opt(ci.lower()), fmt_opt(ci.upper())).unwrap();
        }
    }
    out
}

fn outcomes_csv(report: &AggregateReport) -> String {
    let mut out = String::from("policy");
    for o in OutcomeClass::ALL {
        write!(out, ",{o}").unwrap();
    }
    out.push('\n');
    for p in &report.policies {
        out.push_str(&p.policy);
        for o in OutcomeClass::ALL {
            write!(out, ",{}", p.outcomes[&o]).unwrap();
        }
        out.push('\n');
    }
    out
}

fn comparisons_csv(report: &AggregateReport) -> String {
    let mut out = String::from("a,b,t,df,p,significant\n");
    for c in &report.comparisons {
        match c.welch {
            Some(w) => writeln!(out, "{},{},{},{},{},{}", c.a, c.b, w.t, w.df, w.p, w.significant(0.05)).unwrap(),
            None => writeln!(out, "{},{},,,,", c.a, c.b).unwrap(),
        }
    }
    out
}

fn describe(ci: &MeanCi) -> String {
    match ci.half_width {
        Some(h) => format!("{:.2} ± {:.2}", ci.mean, h),
        None => format!("{:.2} (no interval, n={})", ci.mean, ci.n),
    }
}

/// Plain-text summary of final values, outcome shares and Welch tests.
pub fn summary_text(report: &AggregateReport) -> String {
    let mut out = String::new();
    writeln!(out, "horizon: {} min", report.horizon).unwrap();
    if report.policies.is_empty() {
        out.push_str("no runs\n");
        return out;
    }
    for p in &report.policies {
        writeln!(out, "\n[{}] runs={}", p.policy, p.runs).unwrap();
        for m in Metric::ALL {
            writeln!(out, "  final {:<17} {}", m.name(), describe(&p.finals[&m])).unwrap();
        }
        let shares: Vec<String> = OutcomeClass::ALL
            .iter()
            .map(|o| format!("{o} {:.0}%", 100.0 * p.outcomes[o]))
            .collect();
        writeln!(out, "  outcomes: {}", shares.join(", ")).unwrap();
    }
    if !report.comparisons.is_empty() {
        out.push_str("\nWelch tests on final destruction (alpha 0.05):\n");
        for c in &report.comparisons {
            match c.welch {
                Some(w) => writeln!(
                    out,
                    "  {} vs {}: t={:.3} df={:.1} p={:.4}{}",
                    c.a,
                    c.b,
                    w.t,
                    w.df,
                    w.p,
                    if w.significant(0.05) { " *" } else { "" }
                )
                .unwrap(),
                None => writeln!(out, "  {} vs {}: needs two runs per policy", c.a, c.b).unwrap(),
            }
        }
    }
    out
}

/// Mean line with a shaded interval band over the horizon.
pub fn svg_plot(policy: &PolicySummary, m: Metric) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let s = &policy.series[&m];
    let lo = |c: &MeanCi| c.lower().unwrap_or(c.mean);
    let hi = |c: &MeanCi| c.upper().unwrap_or(c.mean);
    let ymin = s.iter().map(lo).fold(f64::INFINITY, f64::min).min(0.0);
    let mut ymax = s.iter().map(hi).fold(f64::NEG_INFINITY, f64::max);
    if !ymax.is_finite() || ymax <= ymin {
        ymax = ymin + 1.0;
    }
    let n = s.len().max(2) - 1;
    let x = |t: usize| PAD + (W - 2.0 * PAD) * t as f64 / n as f64;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - ymin) / (ymax - ymin);
    let mut band: Vec<String> = s.iter().enumerate().map(|(t, c)| format!("{:.1},{:.1}", x(t), y(hi(c)))).collect();
    band.extend(s.iter().enumerate().rev().map(|(t, c)| format!("{:.1},{:.1}", x(t), y(lo(c)))));
    let line: Vec<String> = s.iter().enumerate().map(|(t, c)| format!("{:.1},{:.1}", x(t), y(c.mean))).collect();
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="16">{} ({}, n={})</text>"#,
        W / 2.0,
        m.name(),
        policy.policy,
        policy.runs
    )
    .unwrap();
    writeln!(
        out,
        r#"<path d="M{PAD},{PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    )
    .unwrap();
    writeln!(out, r#"<text x="{PAD}" y="{}" font-family="sans-serif" font-size="12">0</text>"#, H - PAD + 18.0).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12">{n} min</text>"#,
        W - PAD,
        H - PAD + 18.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12">{ymax:.3}</text>"#,
        PAD - 4.0,
        PAD + 4.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="12">{ymin:.3}</text>"#,
        PAD - 4.0,
        H - PAD
    )
    .unwrap();
    if !s.is_empty() {
        writeln!(out, r#"<polygon points="{}" fill="steelblue" fill-opacity="0.25" stroke="none"/>"#, band.join(" ")).unwrap();
        writeln!(out, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, line.join(" ")).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Writes the requested formats under `dir` and returns the files written.
pub fn emit_report(report: &AggregateReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>, ExperimentError> {
    create_dir(dir)?;
    let mut files = Vec::new();
    let mut put = |name: String, text: String| -> Result<(), ExperimentError> {
        let path = dir.join(name);
        write(&path, &text)?;
        files.push(path);
        Ok(())
    };
    for f in formats {
        match f {
            ReportFormat::Csv => {
                for m in Metric::ALL {
                    put(format!("series_{}.csv", m.name()), series_csv(report, m))?;
                }
                put("finals.csv".into(), finals_csv(report))?;
                put("outcomes.csv".into(), outcomes_csv(report))?;
                put("comparisons.csv".into(), comparisons_csv(report))?;
            }
            ReportFormat::Text => put("summary.txt".into(), summary_text(report))?,
            ReportFormat::Svg => {
                for p in &report.policies {
                    for m in Metric::ALL {
                        put(format!("plot_{}_{}.svg", p.policy, m.name()), svg_plot(p, m))?;
                    }
                }
            }
        }
    }
    Ok(files)
}

fn run_path(policy: &str, seed: u64) -> String {
    format!("{RUNS_DIR}/{policy}/seed_{seed}.csv")
}

/// Writes one episode CSV per run as `runs/<policy>/seed_<n>.csv`.
pub fn write_runs<'a>(
    dir: &Path,
    logs: impl IntoIterator<Item = (&'a str, &'a EpisodeLog)>,
) -> Result<Vec<String>, ExperimentError> {
    let mut names = Vec::new();
    for (policy, log) in logs {
        let rel = run_path(policy, log.seed);
        let path = dir.join(&rel);
        create_dir(path.parent().expect("run file has a parent"))?;
        write(&path, &log.to_csv_string())?;
        names.push(rel);
    }
    Ok(names)
}

/// Writes raw runs, the manifest and every report format.
pub fn write_campaign(result: &CampaignResult, dir: &Path) -> Result<Manifest, ExperimentError> {
    create_dir(dir)?;
    let runs = write_runs(dir, result.logs.iter().map(|(p, l)| (p.name(), l)))?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: result.config.clone(),
        config_hash: result.config.hash(),
        seeds: result.config.seeds(),
        runs,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&path, &(json + "\n"))?;
    emit_report(&result.report, dir, &ReportFormat::ALL)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, ExperimentError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(ExperimentError::io(&path))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Report(format!("{}: {e}", path.display())))
}

/// Reads back the raw runs listed in the manifest.
pub fn read_runs(dir: &Path, manifest: &Manifest) -> Result<Vec<RunSeries>, ExperimentError> {
    let horizon = manifest.config.timeline.horizon;
    manifest
        .runs
        .iter()
        .map(|rel| {
            let parsed = rel
                .strip_prefix(&format!("{RUNS_DIR}/"))
                .and_then(|r| r.split_once('/'))
                .and_then(|(policy, file)| {
                    let seed = file.strip_prefix("seed_")?.strip_suffix(".csv")?.parse().ok()?;
                    Some((policy, seed))
                });
            let (policy, seed) = parsed.ok_or_else(|| ExperimentError::Report(format!("bad run path `{rel}`")))?;
            let path = dir.join(rel);
            let text = fs::read_to_string(&path).map_err(ExperimentError::io(&path))?;
            RunSeries::from_csv(policy, seed, &text, horizon)
        })
        .collect()
}
