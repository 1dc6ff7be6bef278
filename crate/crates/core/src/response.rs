//! Structured observation → thought → action responses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{parse_action, Action, ActionError, Platform};

/// Tag names delimiting the three response sections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TagConfig {
    pub observation: String,
    pub thought: String,
    pub action: String,
}

impl Default for TagConfig {
    fn default() -> Self {
        Self {
            observation: "observation".into(),
            thought: "think".into(),
            action: "action".into(),
        }
    }
}

impl TagConfig {
    /// Renders a well-formed response with these tags.
    pub fn render(&self, observation: &str, thought: &str, action: &Action) -> String {
        format!(
            "<{o}>{observation}</{o}><{t}>{thought}</{t}><{a}>{action}</{a}>",
            o = self.observation,
            t = self.thought,
            a = self.action,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentResponse {
    pub observation: String,
    pub thought: String,
    pub action_text: String,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResponseError {
    #[error("missing <{0}> section")]
    MissingSection(String),
    #[error("<{0}> section appears more than once")]
    DuplicateSection(String),
    #[error("sections are not in observation, thought, action order")]
    OutOfOrderSections,
    #[error("action does not parse: {0}")]
    ActionParseError(#[from] ActionError),
}

impl ResponseError {
    pub fn name(&self) -> &'static str {
        match self {
            ResponseError::MissingSection(_) => "MissingSection",
            ResponseError::DuplicateSection(_) => "DuplicateSection",
            ResponseError::OutOfOrderSections => "OutOfOrderSections",
            ResponseError::ActionParseError(_) => "ActionParseError",
        }
    }
}

struct Span {
    open: usize,
    body_start: usize,
    body_end: usize,
    close_end: usize,
}

fn locate(raw: &str, tag: &str) -> Result<Span, ResponseError> {
    let open_tag = format!("<{tag}>");
    let close_tag = format!("</{tag}>");
    let opens: Vec<usize> = raw.match_indices(&open_tag).map(|(i, _)| i).collect();
    let closes: Vec<usize> = raw.match_indices(&close_tag).map(|(i, _)| i).collect();
    if opens.is_empty() || closes.is_empty() {
        return Err(ResponseError::MissingSection(tag.to_string()));
    }
    if opens.len() > 1 || closes.len() > 1 {
        return Err(ResponseError::DuplicateSection(tag.to_string()));
    }
    let (open, close) = (opens[0], closes[0]);
    if close < open + open_tag.len() {
        return Err(ResponseError::OutOfOrderSections);
    }
    Ok(Span {
        open,
        body_start: open + open_tag.len(),
        body_end: close,
        close_end: close + close_tag.len(),
    })
}

/// Splits a raw response into its three sections and parses the action body.
///
/// Succeeds iff each tag pair appears exactly once and the pairs occur in
/// observation, thought, action order without overlapping. Section bodies are
/// trimmed.
pub fn extract_response_sections(
    raw: &str,
    tags: &TagConfig,
    platform: Platform,
) -> Result<AgentResponse, ResponseError> {
    let obs = locate(raw, &tags.observation)?;
    let thought = locate(raw, &tags.thought)?;
    let act = locate(raw, &tags.action)?;
    if !(obs.close_end <= thought.open && thought.close_end <= act.open) {
        return Err(ResponseError::OutOfOrderSections);
    }
    let body = |s: &Span| raw[s.body_start..s.body_end].trim().to_string();
    let action_text = body(&act);
    let action = parse_action(&action_text, platform)?;
    Ok(AgentResponse {
        observation: body(&obs),
        thought: body(&thought),
        action_text,
        action,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn extract(raw: &str) -> Result<AgentResponse, ResponseError> {
        extract_response_sections(raw, &TagConfig::default(), Platform::Mobile)
    }

    #[test]
    fn well_formed() {
        let r = extract("<observation>o</observation><think>t</think><action>Wait()</action>")
            .unwrap();
        assert_eq!(r.observation, "o");
        assert_eq!(r.thought, "t");
        assert_eq!(r.action, Action::Wait);
    }

    #[test]
    fn missing_action() {
        assert_eq!(
            extract("<observation>o</observation><think>t</think>").unwrap_err(),
            ResponseError::MissingSection("action".into())
        );
    }

    #[test]
    fn action_parse_error() {
        let err = extract("<observation>o</observation><think>t</think><action>Clickk()</action>")
            .unwrap_err();
        assert_eq!(
            err,
            ResponseError::ActionParseError(ActionError::UnknownAction("Clickk".into()))
        );
    }

    #[test]
    fn order_and_duplicates() {
        assert_eq!(
            extract("<think>t</think><observation>o</observation><action>Wait()</action>")
                .unwrap_err(),
            ResponseError::OutOfOrderSections
        );
        assert_eq!(
            extract("<observation>o<think>t</think></observation><action>Wait()</action>")
                .unwrap_err(),
            ResponseError::OutOfOrderSections
        );
        assert_eq!(
            extract("<observation>o</observation><think>t</think><action>Wait()</action><action>Wait()</action>")
                .unwrap_err(),
            ResponseError::DuplicateSection("action".into())
        );
        assert_eq!(
            extract("<observation>o</observation></think>t<think><action>Wait()</action>")
                .unwrap_err(),
            ResponseError::OutOfOrderSections
        );
    }

    #[test]
    fn custom_tags_and_platform_gate() {
        let tags = TagConfig {
            observation: "obs".into(),
            thought: "reason".into(),
            action: "act".into(),
        };
        let raw = tags.render("screen", "go back", &Action::PressBack);
        assert!(extract_response_sections(&raw, &tags, Platform::Mobile).is_ok());
        assert!(matches!(
            extract_response_sections(&raw, &tags, Platform::Desktop),
            Err(ResponseError::ActionParseError(ActionError::PlatformViolation { .. }))
        ));
    }
}
