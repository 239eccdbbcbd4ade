//! Object vocabulary: the fixed color palette, category templates, and the
//! instruction-to-category mapping used to build goals.

use std::collections::BTreeSet;

use rand::Rng;

use super::shape::{Part, Shape, ShapeKind};
use super::SceneError;

/// Twelve named colors; names are single lowercase words so that
/// "color name" labels parse unambiguously.
pub const PALETTE: [(&str, [u8; 3]); 12] = [
    ("red", [200, 35, 35]),
    ("green", [40, 160, 60]),
    ("blue", [40, 70, 200]),
    ("yellow", [230, 210, 40]),
    ("orange", [240, 140, 30]),
    ("purple", [130, 50, 160]),
    ("pink", [240, 130, 180]),
    ("brown", [130, 85, 40]),
    ("black", [25, 25, 25]),
    ("white", [240, 240, 240]),
    ("gray", [128, 128, 128]),
    ("cyan", [40, 200, 210]),
];

pub fn color_rgb(name: &str) -> Option<[u8; 3]> {
    PALETTE.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

pub fn is_color(name: &str) -> bool {
    color_rgb(name).is_some()
}

#[derive(Debug, Clone, Copy)]
pub struct PartTemplate {
    pub name: &'static str,
    /// Fraction of the object's x extent covered by the part, anchored at -x.
    pub length_fraction: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Category {
    pub name: &'static str,
    pub kind: ShapeKind,
    /// Sphere: [r]; cylinder: [r, h]; box: [sx, sy, sz].
    pub dims_min: [f64; 3],
    pub dims_max: [f64; 3],
    pub part: Option<PartTemplate>,
    pub groups: &'static [&'static str],
}

pub const CATEGORIES: &[Category] = &[
    Category { name: "ball", kind: ShapeKind::Sphere, dims_min: [0.025, 0.0, 0.0], dims_max: [0.035, 0.0, 0.0], part: None, groups: &["round", "toy"] },
    Category { name: "apple", kind: ShapeKind::Sphere, dims_min: [0.030, 0.0, 0.0], dims_max: [0.037, 0.0, 0.0], part: None, groups: &["fruit", "round", "food"] },
    Category { name: "orange", kind: ShapeKind::Sphere, dims_min: [0.030, 0.0, 0.0], dims_max: [0.036, 0.0, 0.0], part: None, groups: &["fruit", "round", "food"] },
    Category { name: "pear", kind: ShapeKind::Sphere, dims_min: [0.028, 0.0, 0.0], dims_max: [0.034, 0.0, 0.0], part: None, groups: &["fruit", "food"] },
    Category { name: "mango", kind: ShapeKind::Sphere, dims_min: [0.030, 0.0, 0.0], dims_max: [0.036, 0.0, 0.0], part: None, groups: &["fruit", "food"] },
    Category { name: "lemon", kind: ShapeKind::Sphere, dims_min: [0.025, 0.0, 0.0], dims_max: [0.030, 0.0, 0.0], part: None, groups: &["fruit", "food"] },
    Category { name: "cup", kind: ShapeKind::Cylinder, dims_min: [0.030, 0.070, 0.0], dims_max: [0.037, 0.090, 0.0], part: None, groups: &["container"] },
    Category { name: "mug", kind: ShapeKind::Cylinder, dims_min: [0.034, 0.080, 0.0], dims_max: [0.040, 0.100, 0.0], part: None, groups: &["container"] },
    Category { name: "bottle", kind: ShapeKind::Cylinder, dims_min: [0.026, 0.160, 0.0], dims_max: [0.034, 0.200, 0.0], part: None, groups: &["drink"] },
    Category { name: "can", kind: ShapeKind::Cylinder, dims_min: [0.030, 0.100, 0.0], dims_max: [0.033, 0.120, 0.0], part: None, groups: &["drink"] },
    Category { name: "block", kind: ShapeKind::Box, dims_min: [0.040, 0.040, 0.040], dims_max: [0.060, 0.060, 0.060], part: None, groups: &["toy"] },
    Category {
        name: "knife",
        kind: ShapeKind::Box,
        dims_min: [0.180, 0.025, 0.015],
        dims_max: [0.220, 0.030, 0.020],
        part: Some(PartTemplate { name: "handle", length_fraction: 0.4 }),
        groups: &["tool", "cut"],
    },
];

pub fn category(name: &str) -> Option<&'static Category> {
    CATEGORIES.iter().find(|c| c.name == name)
}

impl Category {
    pub fn sample_shape<R: Rng>(&self, rng: &mut R) -> Shape {
        let mut d = [0.0; 3];
        for i in 0..3 {
            d[i] = if self.dims_max[i] > self.dims_min[i] {
                rng.gen_range(self.dims_min[i]..self.dims_max[i])
            } else {
                self.dims_min[i]
            };
        }
        match self.kind {
            ShapeKind::Sphere => Shape::Sphere { radius: d[0] },
            ShapeKind::Cylinder => Shape::Cylinder { radius: d[0], height: d[1] },
            ShapeKind::Box => Shape::Box { size: d },
        }
    }

    pub fn parts_for(&self, shape: &Shape) -> Vec<Part> {
        let (Some(t), Shape::Box { size }) = (self.part, shape) else {
            return Vec::new();
        };
        let len = size[0] * t.length_fraction;
        vec![Part {
            name: t.name.to_string(),
            bounds: [-size[0] / 2.0 + len / 2.0, 0.0, 0.0, len, size[1], size[2]],
        }]
    }
}

/// Free-text instruction plus the categories that satisfy it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalSpec {
    pub instruction: String,
    pub goal_categories: BTreeSet<String>,
}

const KEYWORDS: &[(&str, &str)] = &[
    ("fruit", "fruit"),
    ("eat", "food"),
    ("food", "food"),
    ("round", "round"),
    ("drink", "drink"),
    ("hold other things", "container"),
    ("container", "container"),
    ("cut", "cut"),
    ("toy", "toy"),
];

impl GoalSpec {
    pub fn new(
        instruction: impl Into<String>,
        goal_categories: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Self, SceneError> {
        let instruction = instruction.into();
        let goal_categories: BTreeSet<String> = goal_categories.into_iter().map(Into::into).collect();
        if instruction.trim().is_empty() {
            return Err(SceneError::InvalidGoal("instruction is empty".into()));
        }
        if goal_categories.is_empty() {
            return Err(SceneError::InvalidGoal("no goal categories".into()));
        }
        Ok(GoalSpec { instruction, goal_categories })
    }

    /// Map an instruction onto the category vocabulary: explicit category
    /// names win; otherwise keywords expand to category groups.
    pub fn from_instruction(instruction: &str) -> Result<Self, SceneError> {
        let text = instruction.to_lowercase();
        let words: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect();
        let mut cats = BTreeSet::new();
        for c in CATEGORIES {
            let plural = format!("{}s", c.name);
            if words.iter().any(|w| w == c.name || *w == plural) {
                cats.insert(c.name.to_string());
            }
        }
        if cats.is_empty() {
            for (kw, group) in KEYWORDS {
                let hit = if kw.contains(' ') {
                    text.contains(kw)
                } else {
                    words.iter().any(|w| w == kw)
                };
                if hit {
                    cats.extend(
                        CATEGORIES
                            .iter()
                            .filter(|c| c.groups.contains(group))
                            .map(|c| c.name.to_string()),
                    );
                }
            }
        }
        if cats.is_empty() {
            return Err(SceneError::InvalidGoal(format!(
                "instruction {instruction:?} names no known category"
            )));
        }
        Self::new(instruction, cats)
    }

    pub fn matches(&self, category: &str) -> bool {
        self.goal_categories.contains(category)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fruit_instruction_expands_group() {
        let g = GoalSpec::from_instruction("I need a fruit").unwrap();
        assert!(g.matches("pear") && g.matches("mango"));
        assert!(!g.matches("bottle"));
    }

    #[test]
    fn explicit_category_wins() {
        let g = GoalSpec::from_instruction("Give me the cup").unwrap();
        assert_eq!(g.goal_categories.len(), 1);
        assert!(g.matches("cup"));
        let g = GoalSpec::from_instruction("I want to cut something").unwrap();
        assert!(g.matches("knife"));
    }

    #[test]
    fn unknown_or_empty_instruction_rejected() {
        assert!(GoalSpec::from_instruction("dance for me").is_err());
        assert!(GoalSpec::new("", ["pear"]).is_err());
        assert!(GoalSpec::new("x", Vec::<String>::new()).is_err());
    }

    #[test]
    fn palette_has_twelve_unique_single_word_colors() {
        let names: BTreeSet<_> = PALETTE.iter().map(|(n, _)| *n).collect();
        assert_eq!(names.len(), 12);
        assert!(names.iter().all(|n| !n.contains(' ')));
    }

    #[test]
    fn categories_fit_the_gripper_except_by_design() {
        // every round or cylindrical category is narrower than the 85 mm opening
        for c in CATEGORIES.iter().filter(|c| c.kind != ShapeKind::Box) {
            assert!(2.0 * c.dims_max[0] < 0.085, "{}", c.name);
        }
    }
}
