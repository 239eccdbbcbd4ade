//! HTTP client for a remote selector.
//!
//! `POST {endpoint}/v1/select` with
//! `{"image_png_b64", "instruction", "step", "protocol": "thinkgrasp-v1"}`;
//! the reply is `{"raw_text"}` in the [`protocol`](super::protocol) format.

use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{parse_response, SelectorError, SelectorRequest, SelectorResponse, PROTOCOL_IMAGE_SIZE};

pub const WIRE_PROTOCOL: &str = "thinkgrasp-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RemotePolicy {
    pub timeout: Duration,
    /// Extra attempts after the first one.
    pub max_retries: u32,
}

impl Default for RemotePolicy {
    fn default() -> Self {
        RemotePolicy { timeout: Duration::from_secs(30), max_retries: 2 }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    image_png_b64: String,
    instruction: &'a str,
    step: u32,
    protocol: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    raw_text: String,
}

fn select_url(endpoint: &str) -> String {
    let base = endpoint.trim_end_matches('/');
    if base.ends_with("/v1/select") {
        base.to_string()
    } else {
        format!("{base}/v1/select")
    }
}

fn attempt(agent: &ureq::Agent, url: &str, body: &str) -> Result<SelectorResponse, String> {
    let mut resp = agent
        .post(url)
        .header("Content-Type", "application/json")
        .send(body)
        .map_err(|e| e.to_string())?;
    let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
    let wire: WireResponse = serde_json::from_str(&text).map_err(|e| format!("bad reply body: {e}"))?;
    let parsed = parse_response(&wire.raw_text).map_err(|e| e.to_string())?;
    parsed
        .validate(PROTOCOL_IMAGE_SIZE, PROTOCOL_IMAGE_SIZE)
        .map_err(|e| e.to_string())?;
    Ok(parsed)
}

/// Ask the remote selector, retrying on transport errors, timeouts and
/// unparsable replies. After `1 + max_retries` failed attempts returns
/// [`SelectorError::Unavailable`] carrying the last failure.
pub fn remote_select(
    request: &SelectorRequest,
    endpoint: &str,
    policy: &RemotePolicy,
) -> Result<SelectorResponse, SelectorError> {
    if request.instruction.trim().is_empty() {
        return Err(SelectorError::EmptyInstruction);
    }
    let body = serde_json::to_string(&WireRequest {
        image_png_b64: base64::engine::general_purpose::STANDARD.encode(&request.image_png),
        instruction: &request.instruction,
        step: request.step_index,
        protocol: WIRE_PROTOCOL,
    })
    .expect("plain struct serializes");
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(policy.timeout))
        .build()
        .into();
    let url = select_url(endpoint);
    let mut last = String::new();
    for _ in 0..=policy.max_retries {
        match attempt(&agent, &url, &body) {
            Ok(r) => return Ok(r),
            Err(e) => last = e,
        }
    }
    Err(SelectorError::Unavailable(format!(
        "{} attempts to {url} failed; last: {last}",
        policy.max_retries + 1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_joining() {
        assert_eq!(select_url("http://h:1"), "http://h:1/v1/select");
        assert_eq!(select_url("http://h:1/"), "http://h:1/v1/select");
        assert_eq!(select_url("http://h:1/v1/select"), "http://h:1/v1/select");
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        let req = SelectorRequest { image_png: vec![1, 2], instruction: "a ball".into(), step_index: 0, history: vec![] };
        let policy = RemotePolicy { timeout: Duration::from_millis(300), max_retries: 1 };
        // port 9 on localhost is normally closed
        let r = remote_select(&req, "http://127.0.0.1:9", &policy);
        assert!(matches!(r, Err(SelectorError::Unavailable(_))));
    }
}
