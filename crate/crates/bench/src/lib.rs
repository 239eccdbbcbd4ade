//! Fixtures shared by the pipeline benchmarks.

use grasploop_core::bench::{CaseSpec, Suite};
use grasploop_core::grasp::{estimate_normals, DEFAULT_NEIGHBORS};
use grasploop_core::perception::{crop_cloud, render, CropRegion};
use grasploop_core::scene::{generate_scene, ClutterLevel, GoalVisibility};
use grasploop_core::{CameraModel, EpisodeConfig, Observation, PointCloud, Scene, SceneConfig};

pub fn heavy_config() -> SceneConfig {
    SceneConfig {
        n_objects: 10,
        clutter_level: ClutterLevel::Heavy,
        goal_category: "pear".into(),
        goal_visibility: GoalVisibility::Buried,
    }
}

pub fn heavy_scene(seed: u64) -> Scene {
    generate_scene(&heavy_config(), seed).expect("fixture scene generates")
}

pub fn observe(scene: &Scene) -> Observation {
    render(scene, &CameraModel::default_for(&scene.workspace))
}

/// The whole observed cloud with normals.
pub fn cloud_with_normals(obs: &Observation) -> PointCloud {
    let all = crop_cloud(obs, CropRegion::Box(obs.image_box())).expect("image box crops");
    estimate_normals(&all, DEFAULT_NEIGHBORS, &obs.camera.origin()).expect("enough points")
}

pub fn small_suite(seeds: u64) -> Suite {
    Suite {
        cases: vec![CaseSpec { id: "heavy".into(), scene: heavy_config(), instruction: None, seeds: (0..seeds).collect() }],
        policies: vec![EpisodeConfig { max_steps: 20, ..Default::default() }],
    }
}
