//! Line-oriented selector output format.
//!
//! ```text
//! Selected Object/Object Part: [object:blue ball]
//! Cropping Box Coordinates: (50, 50, 200, 200)
//! Objects and Their Properties:
//! Object: Blue Ball
//! Grasping Score: 90
//! Preferred Grasping Location: middle
//! ```
//!
//! Keys match case-insensitively, unknown lines are skipped, names are
//! lowercased. Locations are a digit 1–9 or one of the nine position words.
//! Anything ambiguous or out of range is an error rather than a guess.

use super::{ObjectProperty, SelectionKind, SelectorError, SelectorResponse, PROTOCOL_IMAGE_SIZE};
use crate::perception::BBox;

const KEY_SELECTED: &str = "selected object/object part";
const KEY_CROP: &str = "cropping box coordinates";
const KEY_HEADER: &str = "objects and their properties";
const KEY_OBJECT: &str = "object";
const KEY_SCORE: &str = "grasping score";
const KEY_LOCATION: &str = "preferred grasping location";

pub const LOCATION_WORDS: [&str; 9] = [
    "top-left",
    "top",
    "top-right",
    "left",
    "middle",
    "right",
    "bottom-left",
    "bottom",
    "bottom-right",
];

fn err(msg: impl Into<String>) -> SelectorError {
    SelectorError::Parse(msg.into())
}

fn normalize_name(s: &str) -> String {
    s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

fn parse_selected(v: &str) -> Result<(SelectionKind, String), SelectorError> {
    let inner = v
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| err(format!("selection {v:?} is not bracketed")))?;
    let (kind, name) = inner.split_once(':').ok_or_else(|| err(format!("selection {v:?} has no kind")))?;
    let kind = match normalize_name(kind).as_str() {
        "object" => SelectionKind::Object,
        "object part" => SelectionKind::Part,
        other => return Err(err(format!("unknown selection kind {other:?}"))),
    };
    let name = normalize_name(name);
    if name.is_empty() || name.contains(['[', ']', ':']) {
        return Err(err(format!("bad selection name in {v:?}")));
    }
    Ok((kind, name))
}

fn parse_crop(v: &str) -> Result<BBox, SelectorError> {
    let inner = v
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| err(format!("crop box {v:?} is not parenthesized")))?;
    let nums = inner
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| err(format!("crop box {v:?}: {e}")))?;
    let [x1, y1, x2, y2] = nums[..] else {
        return Err(err(format!("crop box {v:?} needs four coordinates")));
    };
    let b = BBox::new(x1, y1, x2, y2).ok_or_else(|| err(format!("crop box {v:?} is degenerate")))?;
    if x2 > PROTOCOL_IMAGE_SIZE || y2 > PROTOCOL_IMAGE_SIZE {
        return Err(err(format!("crop box {v:?} leaves the image")));
    }
    Ok(b)
}

fn parse_score(v: &str) -> Result<u8, SelectorError> {
    match v.trim().parse::<u32>() {
        Ok(n) if n <= 100 => Ok(n as u8),
        _ => Err(err(format!("grasping score {v:?} is not an integer in 0..=100"))),
    }
}

fn parse_location(v: &str) -> Result<u8, SelectorError> {
    let v = normalize_name(v);
    if let Ok(n) = v.parse::<u32>() {
        return match n {
            1..=9 => Ok(n as u8),
            _ => Err(err(format!("location {n} outside 1..=9"))),
        };
    }
    let word = v.replace(' ', "-");
    LOCATION_WORDS
        .iter()
        .position(|w| *w == word)
        .map(|i| i as u8 + 1)
        .ok_or_else(|| err(format!("unknown location {v:?}")))
}

#[derive(Default)]
struct Pending {
    name: String,
    score: Option<u8>,
    location: Option<u8>,
}

impl Pending {
    fn finish(self) -> Result<ObjectProperty, SelectorError> {
        match (self.score, self.location) {
            (Some(grasping_score), Some(preferred_location)) => {
                Ok(ObjectProperty { name: self.name, grasping_score, preferred_location })
            }
            _ => Err(err(format!("object {:?} is missing a score or location", self.name))),
        }
    }
}

/// Parse selector output text.
pub fn parse_response(text: &str) -> Result<SelectorResponse, SelectorError> {
    let mut selected = None;
    let mut crop = None;
    let mut properties = Vec::new();
    let mut pending: Option<Pending> = None;
    for raw in text.lines() {
        let line = raw.trim().trim_start_matches(['-', '*', ' ']);
        let Some((key, value)) = line.split_once(':') else { continue };
        let key = normalize_name(&key.replace('*', ""));
        let value = value.trim().trim_matches('*').trim();
        match key.as_str() {
            KEY_SELECTED => {
                if selected.is_some() {
                    return Err(err("selection given twice"));
                }
                selected = Some(parse_selected(value)?);
            }
            KEY_CROP => {
                if crop.is_some() {
                    return Err(err("crop box given twice"));
                }
                crop = Some(parse_crop(value)?);
            }
            KEY_HEADER => {}
            KEY_OBJECT => {
                if let Some(p) = pending.take() {
                    properties.push(p.finish()?);
                }
                let name = normalize_name(value.trim_start_matches('[').trim_end_matches(']'));
                if name.is_empty() {
                    return Err(err("object entry without a name"));
                }
                pending = Some(Pending { name, ..Default::default() });
            }
            KEY_SCORE | KEY_LOCATION => {
                let p = pending.as_mut().ok_or_else(|| err(format!("{key:?} before any object")))?;
                let slot = if key == KEY_SCORE { &mut p.score } else { &mut p.location };
                if slot.is_some() {
                    return Err(err(format!("{key:?} given twice for {:?}", p.name)));
                }
                *slot = Some(if key == KEY_SCORE { parse_score(value)? } else { parse_location(value)? });
            }
            _ => {}
        }
    }
    if let Some(p) = pending.take() {
        properties.push(p.finish()?);
    }
    let (kind, selected) = selected.ok_or_else(|| err("missing \"Selected Object/Object Part\" line"))?;
    let crop_box = crop.ok_or_else(|| err("missing \"Cropping Box Coordinates\" line"))?;
    let response = SelectorResponse { kind, selected, crop_box, properties };
    response.validate(PROTOCOL_IMAGE_SIZE, PROTOCOL_IMAGE_SIZE)?;
    Ok(response)
}

/// Canonical text for a response: lowercase names, digit locations.
pub fn format_response(r: &SelectorResponse) -> String {
    let kind = match r.kind {
        SelectionKind::Object => "object",
        SelectionKind::Part => "object part",
    };
    let b = r.crop_box;
    let mut out = format!(
        "Selected Object/Object Part: [{kind}:{}]\nCropping Box Coordinates: ({}, {}, {}, {})\nObjects and Their Properties:\n",
        r.selected, b.x1, b.y1, b.x2, b.y2
    );
    for p in &r.properties {
        out.push_str(&format!(
            "Object: {}\nGrasping Score: {}\nPreferred Grasping Location: {}\n",
            p.name, p.grasping_score, p.preferred_location
        ));
    }
    out
}
