//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use grasploop_core::bench::{compare_policies, export_report, paired_differences, CaseSpec};
use grasploop_core::grasp::{candidate_from_contacts, force_closure_score, antipodal, Contacts};
use grasploop_core::perception::{visible_fractions, BBox};
use grasploop_core::planner::{
    cell_center, cell_of, run_episode, select_grasp, Ablations, GridCell, SelectorKind,
};
use grasploop_core::scene::{
    generate_scene, ClutterLevel, GoalVisibility, ObjectInstance, Pose, Shape, Workspace,
};
use grasploop_core::selector::{format_response, parse_response};
use grasploop_core::{
    CameraModel, EpisodeConfig, EpisodeResult, GoalSpec, GraspCandidate, GraspScore, Provenance, Scene,
    SceneConfig, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- grasp quality -------------------------------------------------------

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// `axis` tilted by `deg` degrees in a random direction.
fn tilt(rng: &mut ChaCha8Rng, axis: &Vec3, deg: f64) -> Vec3 {
    let perp = axis.cross(&unit(rng)).normalize();
    let t = deg.to_radians();
    (axis * t.cos() + perp * t.sin()).normalize()
}

fn random_contacts(rng: &mut ChaCha8Rng) -> Contacts {
    let p1 = Vec3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(0.0..0.1));
    let u = unit(rng);
    let p2 = p1 + u * rng.gen_range(0.005..0.08);
    let (a1, a2) = (rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0));
    let n1 = tilt(rng, &-u, a1);
    let n2 = tilt(rng, &u, a2);
    Contacts { p1, n1, p2, n2 }
}

/// Score in tenths from the tangent of the worse cone angle, or None when
/// the contacts are not antipodal even at mu = 1.
fn closed_form_tenths(c: &Contacts) -> Option<u8> {
    let u = (c.p2 - c.p1).normalize();
    let cos1 = u.dot(&-c.n1) / c.n1.norm();
    let cos2 = (-u).dot(&-c.n2) / c.n2.norm();
    let tan = |cos: f64| {
        let cos = cos.clamp(-1.0, 1.0);
        (cos > 0.0).then(|| (1.0 - cos * cos).sqrt() / cos)
    };
    let m = tan(cos1)?.max(tan(cos2)?);
    if m > 1.0 {
        return None;
    }
    let mu_tenths = ((10.0 * m).ceil() as u8).clamp(1, 10);
    Some(11 - mu_tenths)
}

fn ac1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<Contacts> = (0..10_000).map(|_| random_contacts(&mut rng)).collect();
    let t0 = Instant::now();
    let mut mismatches = 0;
    let mut scored = 0;
    for c in &pairs {
        let sweep = force_closure_score(c).ok().map(GraspScore::tenths);
        scored += sweep.is_some() as usize;
        mismatches += (sweep != closed_form_tenths(c)) as usize;
    }
    let dt = t0.elapsed();
    check(
        mismatches == 0 && dt < Duration::from_secs(5) && scored > 1000,
        format!("10000 pairs, {scored} antipodal, {mismatches} mismatches, {:.3} s", dt.as_secs_f64()),
    )
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cone = 0;
    let mut swap = 0;
    let mut scale = 0;
    for _ in 0..10_000 {
        let c = random_contacts(&mut rng);
        let holds: Vec<bool> = (1..=20).map(|t| antipodal(&c, t as f64 / 10.0).unwrap()).collect();
        cone += holds.windows(2).filter(|w| w[0] && !w[1]).count();
        let s = force_closure_score(&c).ok();
        swap += (force_closure_score(&c.swapped()).ok() != s) as usize;
        let about = (c.p1 + c.p2) / 2.0;
        for f in [0.1, 0.25, 0.5, 2.0, 4.0, 10.0, rng.gen_range(0.1..10.0)] {
            scale += (force_closure_score(&c.scaled(&about, f)).ok() != s) as usize;
        }
    }
    check(
        cone + swap + scale == 0,
        format!("cone violations {cone}, swap violations {swap}, scale violations {scale}"),
    )
}

// ---- grid and selection --------------------------------------------------

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = 0;
    for _ in 0..1000 {
        let x1 = rng.gen_range(0..600);
        let y1 = rng.gen_range(0..600);
        let b = BBox::new(x1, y1, x1 + rng.gen_range(1..400), y1 + rng.gen_range(1..400)).unwrap();
        for cell in GridCell::all() {
            let c = cell_center(&b, cell).unwrap();
            bad += (cell_of(&b, c).unwrap() != cell) as usize;
        }
    }
    let b = BBox::new(0, 0, 90, 90).unwrap();
    let c1 = cell_center(&b, GridCell::new(1).unwrap()).unwrap();
    let c5 = cell_center(&b, GridCell::new(5).unwrap()).unwrap();
    let worked = c1 == (15.0, 15.0) && c5 == (45.0, 45.0);
    check(bad == 0 && worked, format!("1000 boxes x 9 cells, {bad} mismatches; worked examples {worked}"))
}

fn candidate(center: Vec3, tenths: u8) -> GraspCandidate {
    let mut c = candidate_from_contacts(Contacts {
        p1: center - Vec3::x() * 0.01,
        n1: -Vec3::x(),
        p2: center + Vec3::x() * 0.01,
        n2: Vec3::x(),
    })
    .unwrap();
    c.score = GraspScore::from_tenths(tenths);
    c
}

/// Keep candidates with fewer than k others strictly ahead in (distance,
/// index) order, then take the lexicographic best of (score desc, distance
/// asc, index asc).
fn selection_oracle(cands: &[GraspCandidate], target: &Vec3, k: usize) -> usize {
    let d: Vec<f64> = cands.iter().map(|c| (c.center - target).norm()).collect();
    let kept: Vec<usize> = (0..cands.len())
        .filter(|&i| (0..cands.len()).filter(|&j| d[j] < d[i] || (d[j] == d[i] && j < i)).count() < k)
        .collect();
    let mut best = kept[0];
    for &i in &kept[1..] {
        let (si, sb) = (cands[i].score.unwrap(), cands[best].score.unwrap());
        if si > sb || (si == sb && (d[i] < d[best] || (d[i] == d[best] && i < best))) {
            best = i;
        }
    }
    best
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for trial in 0..1000 {
        let n = rng.gen_range(1..=200);
        let k = [1, 5, 10][trial % 3];
        // coarse lattice so distance and score ties are common
        let q = |rng: &mut ChaCha8Rng| rng.gen_range(-3..=3) as f64 * 0.01;
        let cands: Vec<GraspCandidate> =
            (0..n).map(|_| candidate(Vec3::new(q(&mut rng), q(&mut rng), 0.0), rng.gen_range(1..=10))).collect();
        let target = Vec3::new(q(&mut rng), q(&mut rng), 0.0);
        bad += (select_grasp(&cands, &target, k).unwrap() != selection_oracle(&cands, &target, k)) as usize;
    }
    check(bad == 0, format!("1000 sets, {bad} mismatches"))
}

// ---- selector protocol ---------------------------------------------------

const EXAMPLE: &str = "Selected Object/Object Part: [object:blue ball]
Cropping Box Coordinates: (50, 50, 200, 200)
Objects and Their Properties:
Object: Blue Ball
Grasping Score: 90
Preferred Grasping Location: middle
Object: Yellow Bottle
Grasping Score: 75
Preferred Grasping Location: top-right
";

fn corrupted() -> Vec<String> {
    let r = |a: &str, b: &str| EXAMPLE.replace(a, b);
    vec![
        r("[object:blue ball]", "blue ball"),
        r("[object:blue ball]", "[thing:blue ball]"),
        r("[object:blue ball]", "[object:]"),
        r("[object:blue ball]", "[object:green ball]"),
        r("(50, 50, 200, 200)", "(50, 50, 200)"),
        r("(50, 50, 200, 200)", "(50, 50, 200, 200, 7)"),
        r("(50, 50, 200, 200)", "(200, 50, 50, 200)"),
        r("(50, 50, 200, 200)", "(50, 50, 300, 200)"),
        r("(50, 50, 200, 200)", "(a, 50, 200, 200)"),
        r("(50, 50, 200, 200)", "(-5, 50, 200, 200)"),
        r("Grasping Score: 90", "Grasping Score: 150"),
        r("Grasping Score: 90", "Grasping Score: high"),
        r("Grasping Score: 75", "Grasping Score: -3"),
        r("Preferred Grasping Location: middle", "Preferred Grasping Location: 10"),
        r("Preferred Grasping Location: top-right", "Preferred Grasping Location: sideways"),
        r("Cropping Box Coordinates: (50, 50, 200, 200)\n", ""),
        r("Selected Object/Object Part: [object:blue ball]\n", ""),
        r("Grasping Score: 90\n", ""),
        format!("{EXAMPLE}Cropping Box Coordinates: (0, 0, 10, 10)\n"),
        r("Object: Blue Ball\nGrasping Score: 90\nPreferred Grasping Location: middle\n", ""),
    ]
}

fn ac5() -> Outcome {
    let r = parse_response(EXAMPLE).map_err(|e| format!("example failed: {e}"))?;
    let p = &r.properties;
    let example_ok = r.selected == "blue ball"
        && r.crop_box.as_array() == [50, 50, 200, 200]
        && p.len() == 2
        && (p[0].name.as_str(), p[0].grasping_score, p[0].preferred_location) == ("blue ball", 90, 5)
        && (p[1].name.as_str(), p[1].grasping_score, p[1].preferred_location) == ("yellow bottle", 75, 3);
    let once = format_response(&r);
    let round_trip = parse_response(&once).map(|again| format_response(&again) == once && again == r) == Ok(true);
    let variants = corrupted();
    let accepted: Vec<usize> =
        variants.iter().enumerate().filter(|(_, v)| parse_response(v).is_ok()).map(|(i, _)| i).collect();
    check(
        example_ok && round_trip && variants.len() == 20 && accepted.is_empty(),
        format!(
            "example {example_ok}, round trip {round_trip}, {} of {} corrupted variants rejected{}",
            variants.len() - accepted.len(),
            variants.len(),
            if accepted.is_empty() { String::new() } else { format!(" (accepted: {accepted:?})") }
        ),
    )
}

// ---- occlusion -----------------------------------------------------------

const GOALS: [&str; 6] = ["apple", "orange", "pear", "mango", "lemon", "ball"];

fn heavy_config(seed: u64, visibility: GoalVisibility) -> SceneConfig {
    SceneConfig {
        n_objects: 8 + (seed % 5) as usize,
        clutter_level: ClutterLevel::Heavy,
        goal_category: GOALS[(seed % 6) as usize].into(),
        goal_visibility: visibility,
    }
}

fn ac6() -> Outcome {
    let results: Vec<Result<usize, String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let vis = [GoalVisibility::Visible, GoalVisibility::Occluded, GoalVisibility::Buried][(seed % 3) as usize];
            let scene = generate_scene(&heavy_config(seed, vis), seed).map_err(|e| format!("seed {seed}: {e}"))?;
            let cam = CameraModel::default_for(&scene.workspace);
            let before = visible_fractions(&scene, &cam);
            let mut violations = 0;
            for id in scene.ids() {
                let after = visible_fractions(&scene.remove_object(id).unwrap(), &cam);
                for (other, f) in &after {
                    violations += (*f < before[other] - 1e-12) as usize;
                }
            }
            Ok(violations)
        })
        .collect();
    let mut total = 0;
    for r in results {
        total += r?;
    }
    check(total == 0, format!("100 heavy scenes, exhaustive single removals, {total} decreases"))
}

// ---- end to end ----------------------------------------------------------

fn goal_for(category: &str) -> GoalSpec {
    GoalSpec::from_instruction(&format!("grasp the {category}")).unwrap()
}

fn run_many(configs: &[(SceneConfig, u64)], policy: &EpisodeConfig) -> Result<Vec<EpisodeResult>, String> {
    configs
        .par_iter()
        .map(|(cfg, seed)| {
            let scene = generate_scene(cfg, *seed).map_err(|e| format!("seed {seed}: {e}"))?;
            Ok(run_episode(&scene, &goal_for(&cfg.goal_category), policy, *seed))
        })
        .collect()
}

fn rate(eps: &[EpisodeResult]) -> f64 {
    eps.iter().filter(|e| e.success).count() as f64 / eps.len() as f64
}

fn ac7() -> Outcome {
    let t0 = Instant::now();
    let configs: Vec<(SceneConfig, u64)> = (0..50u64)
        .map(|seed| {
            let cfg = SceneConfig {
                n_objects: 5 + (seed % 6) as usize,
                clutter_level: ClutterLevel::Light,
                goal_category: GOALS[(seed % 6) as usize].into(),
                goal_visibility: GoalVisibility::Visible,
            };
            (cfg, 1000 + seed)
        })
        .collect();
    let policy = EpisodeConfig { max_steps: 15, ..Default::default() };
    let eps = run_many(&configs, &policy)?;
    let dt = t0.elapsed();
    let r = rate(&eps);
    check(
        r >= 0.90 && dt < Duration::from_secs(120),
        format!("success {r:.2} over 50 light scenes (need >= 0.90), {:.1} s", dt.as_secs_f64()),
    )
}

fn ac8() -> Outcome {
    let configs: Vec<(SceneConfig, u64)> =
        (0..50u64).map(|seed| (heavy_config(seed, GoalVisibility::Buried), 2000 + seed)).collect();
    let full = EpisodeConfig { id: "full".into(), max_steps: 50, ..Default::default() };
    let random = EpisodeConfig { id: "random".into(), selector: SelectorKind::RandomOccluder, ..full.clone() };
    let a = run_many(&configs, &full)?;
    let b = run_many(&configs, &random)?;
    let d = paired_differences(&a, &b).map_err(|e| e.to_string())?;
    let r = rate(&a);
    let fewer = d.a_fewer as f64 / d.diffs.len() as f64;
    check(
        r >= 0.70 && d.mean < 0.0 && fewer >= 0.60,
        format!(
            "success {r:.2} (need >= 0.70, baseline {:.2}); mean motion difference {:.2}, strictly fewer on {:.0}% of seeds",
            rate(&b),
            d.mean,
            fewer * 100.0
        ),
    )
}

fn ac9() -> Outcome {
    let cases = vec![
        CaseSpec {
            id: "light".into(),
            scene: SceneConfig {
                n_objects: 6,
                clutter_level: ClutterLevel::Light,
                goal_category: "apple".into(),
                goal_visibility: GoalVisibility::Visible,
            },
            instruction: None,
            seeds: (0..4).collect(),
        },
        CaseSpec { id: "heavy".into(), scene: heavy_config(3, GoalVisibility::Buried), instruction: None, seeds: (0..4).collect() },
    ];
    let policies: Vec<EpisodeConfig> = ["full", "no_grid", "crop_only", "no_selector"]
        .iter()
        .map(|name| EpisodeConfig {
            id: name.to_string(),
            ablation: Ablations::parse(name).unwrap_or_default(),
            max_steps: 10,
            ..Default::default()
        })
        .collect();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let report = compare_policies(&cases, &policies).map_err(|e| e.to_string())?;
        export_report(&report, dir.path()).map_err(|e| e.to_string())?;
    }
    let mut identical = true;
    for f in ["results.json", "table.txt", "comparison.txt"] {
        identical &= std::fs::read(dirs[0].path().join(f)).ok() == std::fs::read(dirs[1].path().join(f)).ok();
    }
    let table = std::fs::read_to_string(dirs[0].path().join("comparison.txt")).unwrap_or_default();
    let rows = ["Average Success", "Average Step", "Average Success Step"].iter().all(|r| table.contains(r));
    let columns = policies.iter().all(|p| table.lines().next().is_some_and(|h| h.contains(p.id.as_str())));
    check(identical && rows && columns, format!("4 policies, statistics rows {rows}, columns {columns}, byte-identical {identical}"))
}

// ---- remote resilience ---------------------------------------------------

const VALID_REPLY: &str = "Selected Object/Object Part: [object:red apple]
Cropping Box Coordinates: (60, 60, 170, 170)
Objects and Their Properties:
Object: Red Apple
Grasping Score: 90
Preferred Grasping Location: middle
";

/// Serves /v1/select, rotating valid reply, garbage, and a reply that never
/// comes before the client timeout. Returns the endpoint.
fn stub_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let counter = Arc::new(AtomicUsize::new(0));
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let n = counter.fetch_add(1, Ordering::SeqCst);
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0; len];
                let _ = reader.read_exact(&mut body);
                let raw = match n % 3 {
                    0 => VALID_REPLY.to_string(),
                    1 => "I think you should grab the shiny one!!".to_string(),
                    _ => {
                        std::thread::sleep(Duration::from_millis(1500));
                        return;
                    }
                };
                let json = serde_json::json!({ "raw_text": raw }).to_string();
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{json}",
                    json.len()
                );
            });
        }
    });
    format!("http://{addr}")
}

fn apple_scene() -> Scene {
    let obj = |id: u32, cat: &str, color: &str, shape: Shape, x: f64, y: f64| ObjectInstance {
        id,
        category: cat.into(),
        color: color.into(),
        pose: Pose { pos: [x, y, shape.half_height()], yaw: 0.0 },
        shape,
        parts: vec![],
    };
    Scene {
        workspace: Workspace::default(),
        seed: 0,
        objects: vec![
            obj(1, "apple", "red", Shape::Sphere { radius: 0.032 }, 0.0, 0.0),
            obj(2, "can", "blue", Shape::Cylinder { radius: 0.03, height: 0.11 }, 0.15, 0.1),
        ],
    }
}

fn ac10() -> Outcome {
    let remote = |retries: u32| EpisodeConfig {
        id: "remote".into(),
        max_steps: 8,
        selector: SelectorKind::Remote { endpoint: stub_server(), timeout_s: 0.4, max_retries: retries },
        ..Default::default()
    };
    let goal = GoalSpec::from_instruction("grasp the red apple").unwrap();
    let mut crashes = 0;
    let mut incomplete = 0;

    // one request per step: the rotation fixes which steps fall back
    let strict = remote(0);
    let mut tags = Vec::new();
    for seed in 0..6 {
        match catch_unwind(AssertUnwindSafe(|| run_episode(&apple_scene(), &goal, &strict, seed))) {
            Ok(r) => {
                incomplete += (r.motions == 0) as usize;
                tags.push(r.trace.first().and_then(|s| s.provenance));
            }
            Err(_) => crashes += 1,
        }
    }
    let fb = Some(Provenance::ScriptedFallback);
    let direct = Some(Provenance::ObjectSegmenterFallback);
    let tagged = tags == vec![direct, fb, fb, direct, fb, fb];

    // with retries every step reaches a valid reply; heavy scenes add
    // multi-step episodes where the canned reply names nothing visible
    let patient = remote(2);
    let mut finished = 0;
    for seed in 0..4u64 {
        let cfg = heavy_config(seed, GoalVisibility::Buried);
        let scene = generate_scene(&cfg, seed).map_err(|e| e.to_string())?;
        let goal = goal_for(&cfg.goal_category);
        match catch_unwind(AssertUnwindSafe(|| run_episode(&scene, &goal, &patient, seed))) {
            Ok(r) => {
                incomplete += (r.motions == 0) as usize;
                finished += 1;
            }
            Err(_) => crashes += 1,
        }
    }
    check(
        crashes == 0 && incomplete == 0 && tagged && finished == 4,
        format!("10 episodes, {crashes} crashes, {incomplete} incomplete; first-step provenance {tags:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1 force-closure sweep equals closed form", ac1),
        ("AC2 cone monotonicity, swap and scale invariance", ac2),
        ("AC3 grid bijection and worked examples", ac3),
        ("AC4 select_grasp matches exhaustive oracle", ac4),
        ("AC5 selector protocol parser", ac5),
        ("AC6 occlusion monotonicity", ac6),
        ("AC7 light clutter end to end", ac7),
        ("AC8 heavy clutter end to end vs random occluder", ac8),
        ("AC9 ablation harness parity and determinism", ac9),
        ("AC10 remote selector resilience", ac10),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, f) in criteria {
        if filter.as_ref().is_some_and(|p| !name.contains(p.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let result = catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
