use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChatClient, ChatError, ChatMessage, ChatRequest, ImageAttachment};
use crate::action::{Action, ActionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgement {
    pub verdict: Verdict,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeStep {
    pub action: Action,
    /// Natural-language description of the step, when one exists.
    pub description: Option<String>,
    pub screenshot_ref: String,
}

/// Everything a judge sees: the goal and the step-wise trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeRequest {
    pub goal: String,
    pub steps: Vec<JudgeStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JudgeError {
    #[error("judge unavailable: {0}")]
    Unavailable(#[from] ChatError),
    #[error("judge reply has no verdict token: {0}")]
    MalformedResponse(String),
}

impl JudgeError {
    pub fn name(&self) -> &'static str {
        match self {
            JudgeError::Unavailable(_) => "JudgeUnavailable",
            JudgeError::MalformedResponse(_) => "JudgeMalformedResponse",
        }
    }
}

/// Decides whether a trajectory fulfills its goal.
pub trait TaskCompletionJudge: Send + Sync {
    fn judge(&self, request: &JudgeRequest) -> Result<Judgement, JudgeError>;
}

impl<J: TaskCompletionJudge + ?Sized> TaskCompletionJudge for &J {
    fn judge(&self, request: &JudgeRequest) -> Result<Judgement, JudgeError> {
        (**self).judge(request)
    }
}

impl<J: TaskCompletionJudge + ?Sized> TaskCompletionJudge for Box<J> {
    fn judge(&self, request: &JudgeRequest) -> Result<Judgement, JudgeError> {
        (**self).judge(request)
    }
}

const AUDIT_SYSTEM: &str = "You audit GUI agent trajectories. Judge only from the goal, \
the step descriptions and the screenshots provided.";

/// Audit prompt: goal, then one line per step pairing the action with its
/// description and screenshot, then the verdict instruction.
pub fn build_audit_prompt(request: &JudgeRequest) -> String {
    let mut out = format!("Goal: {}\n\nExecution trace:\n", request.goal);
    if request.steps.is_empty() {
        out.push_str("(no steps)\n");
    }
    for (i, step) in request.steps.iter().enumerate() {
        out.push_str(&format!("{}. {}", i + 1, step.action));
        if let Some(d) = &step.description {
            out.push_str(&format!(" | {d}"));
        }
        out.push_str(&format!(" | screenshot: {}\n", step.screenshot_ref));
    }
    out.push_str(
        "\nDoes this sequence of operations successfully fulfill the goal? \
Incomplete or logically inconsistent traces fail. Answer with a line \
`VERDICT: PASS` or `VERDICT: FAIL`, followed by a one-sentence rationale.",
    );
    out
}

/// Finds the first `VERDICT: PASS|FAIL` token (case-insensitive).
pub fn parse_verdict(reply: &str) -> Result<Judgement, JudgeError> {
    let upper = reply.to_ascii_uppercase();
    let mut search = 0;
    while let Some(found) = upper[search..].find("VERDICT") {
        let start = search + found;
        let rest = &upper[start + "VERDICT".len()..];
        let after_colon = rest.trim_start().strip_prefix(':').map(str::trim_start);
        if let Some(tail) = after_colon {
            let verdict = if tail.starts_with("PASS") {
                Some(Verdict::Pass)
            } else if tail.starts_with("FAIL") {
                Some(Verdict::Fail)
            } else {
                None
            };
            if let Some(verdict) = verdict {
                let consumed = upper.len() - tail.len() + 4;
                let rationale = reply[consumed..]
                    .trim_start_matches(|c: char| {
                        c.is_whitespace() || matches!(c, '-' | '—' | '–' | ':' | '.' | ',')
                    })
                    .trim()
                    .to_string();
                return Ok(Judgement { verdict, rationale });
            }
        }
        search = start + "VERDICT".len();
    }
    Err(JudgeError::MalformedResponse(
        reply.chars().take(200).collect(),
    ))
}

fn image_mime(path: &Path) -> Option<&'static str> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "png" => Some("image/png"),
        "jpg" | "jpeg" => Some("image/jpeg"),
        "webp" => Some("image/webp"),
        _ => None,
    }
}

/// Judge backed by a chat endpoint.
pub struct ChatJudge<C> {
    client: C,
    /// Attach screenshots that exist on disk as base64 images.
    pub attach_screenshots: bool,
}

impl<C: ChatClient> ChatJudge<C> {
    pub fn new(client: C) -> Self {
        Self {
            client,
            attach_screenshots: true,
        }
    }

    pub fn request_for(&self, request: &JudgeRequest) -> ChatRequest {
        let mut user = ChatMessage::user(build_audit_prompt(request));
        if self.attach_screenshots {
            for step in &request.steps {
                let path = Path::new(&step.screenshot_ref);
                if let (Some(mime), Ok(bytes)) = (image_mime(path), std::fs::read(path)) {
                    user.images.push(ImageAttachment::from_bytes(mime, &bytes));
                }
            }
        }
        ChatRequest::new(
            self.client.model(),
            vec![ChatMessage::system(AUDIT_SYSTEM), user],
        )
    }
}

impl<C: ChatClient> TaskCompletionJudge for ChatJudge<C> {
    fn judge(&self, request: &JudgeRequest) -> Result<Judgement, JudgeError> {
        let reply = self.client.chat(&self.request_for(request))?;
        parse_verdict(&reply)
    }
}

/// Deterministic offline judges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleJudge {
    AlwaysPass,
    AlwaysFail,
    /// Passes iff the trace is non-empty and ends with `Finished`.
    RequireFinished,
}

impl TaskCompletionJudge for RuleJudge {
    fn judge(&self, request: &JudgeRequest) -> Result<Judgement, JudgeError> {
        let (verdict, rationale) = match self {
            RuleJudge::AlwaysPass => (Verdict::Pass, "accepted by always-pass stub".to_string()),
            RuleJudge::AlwaysFail => (Verdict::Fail, "rejected by always-fail stub".to_string()),
            RuleJudge::RequireFinished => {
                let finished = request
                    .steps
                    .last()
                    .is_some_and(|s| s.action.kind() == ActionKind::Finished);
                if finished {
                    (Verdict::Pass, "trace ends with Finished".to_string())
                } else {
                    (Verdict::Fail, "trace does not end with Finished".to_string())
                }
            }
        };
        Ok(Judgement { verdict, rationale })
    }
}
