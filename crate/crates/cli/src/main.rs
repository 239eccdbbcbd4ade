use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use grasploop_core::bench::{compare_policies, export_report, load_scene, save_scene, Suite, SCHEMA_VERSION};
use grasploop_core::grasp::{estimate_normals, force_closure_score, misalignment, Contacts, DEFAULT_NEIGHBORS};
use grasploop_core::planner::{run_episode, Ablations, SelectorKind};
use grasploop_core::scene::generate_scene;
use grasploop_core::{EpisodeConfig, GoalSpec, PointCloud, SceneConfig, Vec3};

#[derive(Parser)]
#[command(name = "grasploop", version, about = "Closed-loop language-conditioned grasp planning in simulated clutter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorArg {
    Scripted,
    Remote,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scene from a scene config
    GenScene {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one episode on a scene file
    Run {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        goal: String,
        #[arg(long, value_enum, default_value = "scripted")]
        selector: SelectorArg,
        #[arg(long, env = "THINKGRASP_ENDPOINT")]
        endpoint: Option<String>,
        #[arg(long, default_value_t = 15)]
        max_steps: u32,
        #[arg(long, value_parser = ["no_grid", "crop_only", "no_selector"])]
        ablation: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a suite file and write results.json, table.txt and comparison.txt
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one contact pair of a stored point cloud
    Score {
        #[arg(long)]
        cloud: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen_scene(config: &Path, seed: u64, out: &Path) -> Result<()> {
    let cfg: SceneConfig =
        serde_json::from_str(&read(config)?).with_context(|| format!("parsing {}", config.display()))?;
    let scene = generate_scene(&cfg, seed)?;
    save_scene(&scene, out)?;
    println!("wrote {} objects to {}", scene.objects.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    scene: &Path,
    goal: &str,
    selector: SelectorArg,
    endpoint: Option<String>,
    max_steps: u32,
    ablation: &[String],
    seed: u64,
    out: &Path,
) -> Result<()> {
    let scene = load_scene(scene)?;
    let goal = GoalSpec::from_instruction(goal)?;
    let selector = match selector {
        SelectorArg::Scripted => SelectorKind::Scripted,
        SelectorArg::Remote => {
            let Some(endpoint) = endpoint else {
                bail!("--selector remote needs --endpoint or THINKGRASP_ENDPOINT");
            };
            SelectorKind::Remote { endpoint, timeout_s: 30.0, max_retries: 2 }
        }
    };
    let ablation = ablation
        .iter()
        .filter_map(|a| Ablations::parse(a))
        .fold(Ablations::default(), Ablations::merge);
    let config = EpisodeConfig { id: ablation.label(), max_steps, selector, ablation, ..Default::default() };
    config.validate().map_err(anyhow::Error::msg)?;
    let result = run_episode(&scene, &goal, &config, seed);
    let mut value = serde_json::to_value(&result)?;
    value["schema_version"] = SCHEMA_VERSION.into();
    write_json(out, &value)?;
    println!(
        "{} after {} motion(s)",
        if result.success { "success" } else { "failure" },
        result.motions
    );
    Ok(())
}

fn bench(suite: &Path, out: &Path) -> Result<()> {
    let suite = Suite::from_json(&read(suite)?).with_context(|| format!("loading {}", suite.display()))?;
    let report = compare_policies(&suite.cases, &suite.policies)?;
    export_report(&report, out)?;
    print!("{}", read(&out.join("comparison.txt"))?);
    Ok(())
}

/// A stored cloud and the indices of the two contacts. Normals are estimated
/// from `viewpoint` when absent.
#[derive(Deserialize)]
struct CloudFile {
    points: Vec<[f64; 3]>,
    #[serde(default)]
    normals: Option<Vec<[f64; 3]>>,
    contacts: [usize; 2],
    #[serde(default)]
    viewpoint: Option<[f64; 3]>,
}

fn score(path: &Path) -> Result<()> {
    let file: CloudFile =
        serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    let [i, j] = file.contacts;
    let n = file.points.len();
    if i >= n || j >= n {
        bail!("contact index out of range for {n} points");
    }
    let points: Vec<Vec3> = file.points.iter().map(|p| Vec3::from(*p)).collect();
    let normals: Vec<Vec3> = match file.normals {
        Some(ns) => {
            if ns.len() != n {
                bail!("{} normals for {n} points", ns.len());
            }
            ns.iter().map(|v| Vec3::from(*v)).collect()
        }
        None => {
            let view = Vec3::from(file.viewpoint.unwrap_or([0.0, 0.0, 1.0]));
            let cloud = estimate_normals(&PointCloud::from_points(points.clone()), DEFAULT_NEIGHBORS, &view)?;
            let get = |k: usize| cloud.normal(k).with_context(|| format!("no normal at point {k}"));
            let (ni, nj) = (get(i)?, get(j)?);
            let mut v = vec![Vec3::zeros(); n];
            v[i] = ni;
            v[j] = nj;
            v
        }
    };
    let c = Contacts { p1: points[i], n1: normals[i], p2: points[j], n2: normals[j] };
    let (t1, t2) = misalignment(&c)?;
    let out = match force_closure_score(&c) {
        Ok(s) => serde_json::json!({
            "score": s.value(),
            "mu_min": s.mu_min_tenths() as f64 / 10.0,
            "theta1_deg": t1.to_degrees(),
            "theta2_deg": t2.to_degrees(),
        }),
        Err(e) => serde_json::json!({
            "score": null,
            "reason": e.to_string(),
            "theta1_deg": t1.to_degrees(),
            "theta2_deg": t2.to_degrees(),
        }),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenScene { config, seed, out } => gen_scene(&config, seed, &out),
        Command::Run { scene, goal, selector, endpoint, max_steps, ablation, seed, out } => {
            run(&scene, &goal, selector, endpoint, max_steps, &ablation, seed, &out)
        }
        Command::Bench { suite, out } => bench(&suite, &out),
        Command::Score { cloud } => score(&cloud),
    }
}
