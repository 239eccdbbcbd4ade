//! Scene files: the scene JSON plus a `schema_version` field, validated on
//! both save and load.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{BenchError, SCHEMA_VERSION};
use crate::scene::Scene;

#[derive(Serialize)]
struct SceneFileOut<'a> {
    schema_version: u32,
    #[serde(flatten)]
    scene: &'a Scene,
}

pub fn scene_to_json(scene: &Scene) -> Result<String, BenchError> {
    scene.validate().map_err(|e| BenchError::InvalidScene(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&SceneFileOut { schema_version: SCHEMA_VERSION, scene })
        .expect("scene serializes");
    s.push('\n');
    Ok(s)
}

/// Parse and validate scene JSON. Syntax and type errors carry line and
/// column; invariant violations name the offending object.
pub fn scene_from_json(text: &str) -> Result<Scene, BenchError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| BenchError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| BenchError::Schema("top level must be an object".into()))?;
    match obj.remove("schema_version") {
        None => return Err(BenchError::Schema("missing field `schema_version`".into())),
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(other) => return Err(BenchError::Schema(format!("unsupported schema_version {other}"))),
    }
    // re-parse the original text so positions in errors match the file
    #[derive(serde::Deserialize)]
    struct SceneFileIn {
        #[allow(dead_code)]
        schema_version: Value,
        #[serde(flatten)]
        scene: Scene,
    }
    let parsed: SceneFileIn = serde_json::from_str(text).map_err(|e| BenchError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    parsed.scene.validate().map_err(|e| BenchError::InvalidScene(e.to_string()))?;
    Ok(parsed.scene)
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, scene_to_json(scene)?).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))
}

pub fn load_scene(path: &Path) -> Result<Scene, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
    scene_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{render, CameraModel};
    use crate::scene::{generate_scene, ClutterLevel, GoalVisibility, SceneConfig};

    const MINIMAL: &str = r#"{
  "schema_version": 1,
  "workspace": {"min": [-0.3, -0.3, 0.0], "max": [0.3, 0.3, 0.5]},
  "seed": 0,
  "objects": [
    {"id": 1, "category": "ball", "color": "red",
     "shape": {"kind": "sphere", "dims": [0.03]},
     "pose": {"pos": [0.0, 0.0, 0.03], "yaw": 0.0}, "parts": []}
  ]
}"#;

    #[test]
    fn minimal_file_loads_and_renders() {
        let s = scene_from_json(MINIMAL).unwrap();
        let obs = render(&s, &CameraModel::default_for(&s.workspace));
        assert!(obs.pixel_count(1) > 0);
    }

    #[test]
    fn round_trip_generated() {
        let cfg = SceneConfig {
            n_objects: 8,
            clutter_level: ClutterLevel::Heavy,
            goal_category: "apple".into(),
            goal_visibility: GoalVisibility::Buried,
        };
        let s = generate_scene(&cfg, 5).unwrap();
        let text = scene_to_json(&s).unwrap();
        let back = scene_from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(scene_to_json(&back).unwrap(), text);
    }

    #[test]
    fn overlap_is_rejected() {
        let text = MINIMAL.replace(
            r#""parts": []}"#,
            r#""parts": []},
    {"id": 2, "category": "ball", "color": "blue",
     "shape": {"kind": "sphere", "dims": [0.03]},
     "pose": {"pos": [0.01, 0.0, 0.03], "yaw": 0.0}}"#,
        );
        assert!(matches!(scene_from_json(&text), Err(BenchError::InvalidScene(_))));
    }

    #[test]
    fn diagnostics() {
        let bad_version = MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 7");
        assert!(matches!(scene_from_json(&bad_version), Err(BenchError::Schema(_))));
        let no_version = MINIMAL.replace("\"schema_version\": 1,", "");
        assert!(matches!(scene_from_json(&no_version), Err(BenchError::Schema(_))));
        let bad_kind = MINIMAL.replace("sphere", "torus");
        match scene_from_json(&bad_kind) {
            Err(BenchError::Parse { line, .. }) => assert!(line >= 7, "line {line}"),
            other => panic!("{other:?}"),
        }
        let truncated = &MINIMAL[..40];
        assert!(matches!(scene_from_json(truncated), Err(BenchError::Parse { .. })));
    }
}
