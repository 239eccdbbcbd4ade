//! Target selection: which object (or object part) to act on next, where to
//! crop, and which 3×3 cell of the target to aim for.
//!
//! Two backends produce the same [`SelectorResponse`]: a deterministic
//! scripted oracle that reads ground truth, and a client for a remote
//! vision-language service that answers in the text format of
//! [`protocol`].

mod prompt;
pub mod protocol;
mod remote;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{encode_rgb_png, BBox, Observation};

pub use prompt::build_prompt;
pub use protocol::{format_response, parse_response};
pub use remote::{remote_select, RemotePolicy, WIRE_PROTOCOL};
pub use scripted::{goal_only_select, random_occluder_select, scripted_select, ScriptedParams};

/// Side length of the square image the selector protocol is defined over.
pub const PROTOCOL_IMAGE_SIZE: u32 = 224;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectorError {
    #[error("instruction must not be empty")]
    EmptyInstruction,
    #[error("malformed selector output: {0}")]
    Parse(String),
    #[error("no object is visible")]
    NothingVisible,
    #[error("remote selector unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub selected: String,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorRequest {
    /// PNG-encoded color image.
    pub image_png: Vec<u8>,
    pub instruction: String,
    pub step_index: u32,
    pub history: Vec<HistoryEntry>,
}

impl SelectorRequest {
    pub fn new(
        obs: &Observation,
        instruction: &str,
        step_index: u32,
        history: Vec<HistoryEntry>,
    ) -> Result<Self, SelectorError> {
        if instruction.trim().is_empty() {
            return Err(SelectorError::EmptyInstruction);
        }
        Ok(SelectorRequest {
            image_png: encode_rgb_png(obs),
            instruction: instruction.to_string(),
            step_index,
            history,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionKind {
    Object,
    Part,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectProperty {
    /// Lowercase "color name" label.
    pub name: String,
    /// 0 (extremely hard) to 100 (extremely easy).
    pub grasping_score: u8,
    /// Preferred 3×3 cell, 1 (top-left) to 9 (bottom-right).
    pub preferred_location: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorResponse {
    pub kind: SelectionKind,
    pub selected: String,
    pub crop_box: BBox,
    pub properties: Vec<ObjectProperty>,
}

impl SelectorResponse {
    /// The property entry for the selected target.
    pub fn selected_property(&self) -> Option<&ObjectProperty> {
        self.properties.iter().find(|p| p.name == self.selected)
    }

    /// Checks the response invariants against an image of the given size.
    pub fn validate(&self, width: u32, height: u32) -> Result<(), SelectorError> {
        let b = &self.crop_box;
        if b.x1 >= b.x2 || b.y1 >= b.y2 || b.x2 > width || b.y2 > height {
            return Err(SelectorError::Parse(format!(
                "crop box {:?} outside a {width}x{height} image",
                b.as_array()
            )));
        }
        if self.selected.trim().is_empty() {
            return Err(SelectorError::Parse("empty selection".into()));
        }
        for p in &self.properties {
            if p.grasping_score > 100 || !(1..=9).contains(&p.preferred_location) {
                return Err(SelectorError::Parse(format!("property out of range for {:?}", p.name)));
            }
        }
        if self.selected_property().is_none() {
            return Err(SelectorError::Parse(format!(
                "selected {:?} has no property entry",
                self.selected
            )));
        }
        Ok(())
    }
}
