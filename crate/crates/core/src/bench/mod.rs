//! Seeded benchmark suites, metrics, paired policy comparison and export.
//!
//! Reported statistics, per case and policy:
//! - Average Success: successes / runs.
//! - Average Step: mean motions over all runs.
//! - Average Success Step: mean motions over successful runs only; absent
//!   (`null`, "NA") when nothing succeeded.

mod files;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{run_episode, EpisodeConfig, EpisodeResult};
use crate::scene::{generate_scene, GoalSpec, SceneConfig};

pub use files::{load_scene, save_scene, scene_from_json, scene_to_json};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid suite: {0}")]
    InvalidSuite(String),
    #[error("mismatched runs: {0}")]
    Mismatch(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// One family of generated scenes with an instruction and explicit seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSpec {
    pub id: String,
    pub scene: SceneConfig,
    /// Defaults to "grasp the <goal category>".
    #[serde(default)]
    pub instruction: Option<String>,
    pub seeds: Vec<u64>,
}

impl CaseSpec {
    pub fn instruction(&self) -> String {
        self.instruction.clone().unwrap_or_else(|| format!("grasp the {}", self.scene.goal_category))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub cases: Vec<CaseSpec>,
    pub policies: Vec<EpisodeConfig>,
}

impl Suite {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidSuite(m));
        if self.policies.is_empty() {
            return bad("at least one policy is required".into());
        }
        let mut ids: Vec<&str> = self.policies.iter().map(|p| p.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.policies.len() {
            return bad("policy ids must be unique".into());
        }
        for p in &self.policies {
            p.validate().map_err(|e| BenchError::InvalidSuite(format!("policy {}: {e}", p.id)))?;
        }
        for c in &self.cases {
            if c.seeds.is_empty() {
                return bad(format!("case {} has no seeds", c.id));
            }
            GoalSpec::from_instruction(&c.instruction())
                .map_err(|e| BenchError::InvalidSuite(format!("case {}: {e}", c.id)))?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Suite, BenchError> {
        let suite: Suite = serde_json::from_str(text).map_err(|e| BenchError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        suite.validate()?;
        Ok(suite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetrics {
    pub task_success_rate: f64,
    pub motion_number: Option<f64>,
    pub mean_steps_all: f64,
}

impl SuiteMetrics {
    pub fn from_episodes(episodes: &[EpisodeResult]) -> SuiteMetrics {
        let n = episodes.len();
        let wins: Vec<f64> = episodes.iter().filter(|e| e.success).map(|e| e.motions as f64).collect();
        let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let all: Vec<f64> = episodes.iter().map(|e| e.motions as f64).collect();
        SuiteMetrics {
            task_success_rate: if n == 0 { 0.0 } else { wins.len() as f64 / n as f64 },
            motion_number: mean(&wins),
            mean_steps_all: mean(&all).unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    /// "<case id>/<policy id>".
    pub config_id: String,
    pub episodes: Vec<EpisodeResult>,
    pub metrics: SuiteMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResults {
    pub schema_version: u32,
    pub cases: Vec<CaseResult>,
}

fn one_episode(case: &CaseSpec, policy: &EpisodeConfig, seed: u64) -> EpisodeResult {
    let config_id = format!("{}/{}", case.id, policy.id);
    let goal = GoalSpec::from_instruction(&case.instruction());
    match (generate_scene(&case.scene, seed), goal) {
        (Ok(scene), Ok(goal)) => EpisodeResult { config_id, ..run_episode(&scene, &goal, policy, seed) },
        _ => EpisodeResult { success: false, motions: 0, trace: vec![], seed, config_id },
    }
}

/// Every (case, policy, seed) episode, run in parallel and folded back in
/// suite order.
pub fn run_benchmark(suite: &Suite) -> Result<BenchResults, BenchError> {
    suite.validate()?;
    let jobs: Vec<(usize, usize, u64)> = suite
        .cases
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| (0..suite.policies.len()).flat_map(move |pi| c.seeds.iter().map(move |s| (ci, pi, *s))))
        .collect();
    let episodes: Vec<EpisodeResult> = jobs
        .par_iter()
        .map(|&(ci, pi, seed)| one_episode(&suite.cases[ci], &suite.policies[pi], seed))
        .collect();
    let mut it = episodes.into_iter();
    let mut cases = Vec::new();
    for c in &suite.cases {
        for p in &suite.policies {
            let eps: Vec<EpisodeResult> = it.by_ref().take(c.seeds.len()).collect();
            cases.push(CaseResult {
                config_id: format!("{}/{}", c.id, p.id),
                metrics: SuiteMetrics::from_episodes(&eps),
                episodes: eps,
            });
        }
    }
    Ok(BenchResults { schema_version: SCHEMA_VERSION, cases })
}

/// Per-seed motion differences `a − b` over paired episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDiff {
    pub a: String,
    pub b: String,
    pub diffs: Vec<i64>,
    pub mean: f64,
    /// Seeds where `a` used strictly fewer motions.
    pub a_fewer: usize,
    pub b_fewer: usize,
    pub ties: usize,
}

pub fn paired_differences(a: &[EpisodeResult], b: &[EpisodeResult]) -> Result<PairedDiff, BenchError> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.seed != y.seed) {
        return Err(BenchError::Mismatch("episode lists differ in length or seeds".into()));
    }
    let diffs: Vec<i64> = a.iter().zip(b).map(|(x, y)| x.motions as i64 - y.motions as i64).collect();
    let n = diffs.len().max(1) as f64;
    Ok(PairedDiff {
        a: a.first().map(|e| e.config_id.clone()).unwrap_or_default(),
        b: b.first().map(|e| e.config_id.clone()).unwrap_or_default(),
        mean: diffs.iter().sum::<i64>() as f64 / n,
        a_fewer: diffs.iter().filter(|d| **d < 0).count(),
        b_fewer: diffs.iter().filter(|d| **d > 0).count(),
        ties: diffs.iter().filter(|d| **d == 0).count(),
        diffs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub metrics: SuiteMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub results: BenchResults,
    /// Each policy pooled over all cases.
    pub policies: Vec<PolicySummary>,
    /// First policy against every other, pooled over all cases.
    pub pairs: Vec<PairedDiff>,
}

/// Run every policy on the same scenes and seeds and pair the outcomes.
pub fn compare_policies(cases: &[CaseSpec], policies: &[EpisodeConfig]) -> Result<PairedReport, BenchError> {
    let suite = Suite { cases: cases.to_vec(), policies: policies.to_vec() };
    let results = run_benchmark(&suite)?;
    let np = policies.len();
    let pooled: Vec<Vec<EpisodeResult>> = (0..np)
        .map(|pi| {
            results
                .cases
                .iter()
                .skip(pi)
                .step_by(np)
                .flat_map(|c| c.episodes.iter().cloned())
                .map(|e| EpisodeResult { config_id: policies[pi].id.clone(), ..e })
                .collect()
        })
        .collect();
    let summaries = policies
        .iter()
        .zip(&pooled)
        .map(|(p, eps)| PolicySummary { policy: p.id.clone(), metrics: SuiteMetrics::from_episodes(eps) })
        .collect();
    let pairs = (1..np)
        .map(|pi| paired_differences(&pooled[0], &pooled[pi]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PairedReport { results, policies: summaries, pairs })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("NA".into(), |v| format!("{v:.3}"))
}

const DEFINITIONS: &str = "\nAverage Success: successful runs / runs.\n\
Average Step: mean motions over all runs.\n\
Average Success Step: mean motions over successful runs (NA when none succeeded).\n";

/// Plain-text table: one column per entry, rows Average Success, Average
/// Step, Average Success Step, followed by their definitions.
pub fn metrics_table(columns: &[(String, SuiteMetrics)]) -> String {
    let w = columns.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(8);
    let mut out = format!("{:<22}", "");
    for (name, _) in columns {
        let _ = write!(out, " {name:>w$}");
    }
    out.push('\n');
    let rows: [(&str, fn(&SuiteMetrics) -> String); 3] = [
        ("Average Success", |m| format!("{:.3}", m.task_success_rate)),
        ("Average Step", |m| format!("{:.3}", m.mean_steps_all)),
        ("Average Success Step", |m| fmt_opt(m.motion_number)),
    ];
    for (label, f) in rows {
        let _ = write!(out, "{label:<22}");
        for (_, m) in columns {
            let _ = write!(out, " {:>w$}", f(m));
        }
        out.push('\n');
    }
    out.push_str(DEFINITIONS);
    out
}

fn write(path: &Path, text: &str) -> Result<(), BenchError> {
    std::fs::write(path, text).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

/// Write `results.json` and `table.txt` into `dir` (created if missing).
/// Output is byte-identical for identical results.
pub fn export_results(results: &BenchResults, dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
    let mut json = serde_json::to_string_pretty(results).expect("results serialize");
    json.push('\n');
    write(&dir.join("results.json"), &json)?;
    let columns: Vec<(String, SuiteMetrics)> =
        results.cases.iter().map(|c| (c.config_id.clone(), c.metrics.clone())).collect();
    write(&dir.join("table.txt"), &metrics_table(&columns))
}

/// [`export_results`] plus `comparison.txt` with pooled per-policy
/// statistics and the paired motion differences.
pub fn export_report(report: &PairedReport, dir: &Path) -> Result<(), BenchError> {
    export_results(&report.results, dir)?;
    let columns: Vec<(String, SuiteMetrics)> =
        report.policies.iter().map(|p| (p.policy.clone(), p.metrics.clone())).collect();
    let mut text = metrics_table(&columns);
    for p in &report.pairs {
        let _ = writeln!(
            text,
            "{} - {}: mean motion difference {:.3} ({} fewer, {} more, {} equal over {} seeds)",
            p.a,
            p.b,
            p.mean,
            p.a_fewer,
            p.b_fewer,
            p.ties,
            p.diffs.len()
        );
    }
    write(&dir.join("comparison.txt"), &text)
}
