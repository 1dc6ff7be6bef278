use serde::Deserialize;
use thiserror::Error;

use super::graph::TransitionGraph;
use super::paths::Path;
use super::UIState;
use crate::action::{Action, BBox};
use crate::mllm::{ChatClient, ChatError, ChatMessage, ChatRequest};
use crate::trajectory::{Provenance, Step, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnricherFault {
    #[error("enricher unavailable: {0}")]
    Unavailable(#[from] ChatError),
    #[error("enricher reply malformed: {0}")]
    Malformed(String),
    #[error("path references unknown node {0}")]
    UnknownNode(String),
}

impl EnricherFault {
    pub fn name(&self) -> &'static str {
        "EnricherFault"
    }
}

/// One edge of a path with the screens around it.
#[derive(Debug, Clone, Copy)]
pub struct EnrichStep<'a> {
    pub state: &'a UIState,
    pub action: &'a Action,
    pub next: &'a UIState,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Enrichment {
    /// One per step.
    pub descriptions: Vec<String>,
    pub goal: String,
}

pub trait SemanticEnricher: Send + Sync {
    fn enrich(&self, steps: &[EnrichStep<'_>]) -> Result<Enrichment, EnricherFault>;
}

impl<E: SemanticEnricher + ?Sized> SemanticEnricher for &E {
    fn enrich(&self, steps: &[EnrichStep<'_>]) -> Result<Enrichment, EnricherFault> {
        (**self).enrich(steps)
    }
}

fn target_box(state: &UIState, action: &Action) -> Option<BBox> {
    action
        .point()
        .and_then(|p| state.root.hit_test(p))
        .map(|e| e.bounds)
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Deterministic descriptions, e.g. "Click the 'Wi-Fi' button".
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateEnricher;

impl TemplateEnricher {
    pub fn describe(state: &UIState, action: &Action) -> String {
        let verb = match action {
            Action::Click { .. } => "Click",
            Action::LeftDouble { .. } => "Double-click",
            Action::RightSingle { .. } => "Right-click",
            Action::Hover { .. } => "Hover over",
            Action::LongPress { .. } => "Long-press",
            Action::Drag { start, end } => {
                return format!(
                    "Drag from ({}, {}) to ({}, {})",
                    start.x, start.y, end.x, end.y
                )
            }
            Action::Scroll { dir, .. } => return format!("Scroll {}", dir.as_str()),
            Action::Type { content } => return format!("Type '{content}'"),
            Action::Wait => return "Wait for the screen to settle".into(),
            Action::Finished { .. } => return "Finish the task".into(),
            Action::Hotkey { keys } => return format!("Press {}", keys.join("+")),
            Action::BrowserStop => return "Stop loading the page".into(),
            Action::PressBack => return "Press Back".into(),
            Action::PressHome => return "Press Home".into(),
            Action::PressEnter => return "Press Enter".into(),
        };
        let p = action.point().expect("point action");
        match state.root.hit_test(p) {
            Some(e) if !e.label.trim().is_empty() => {
                format!("{verb} the '{}' {}", e.label.trim(), e.role)
            }
            Some(e) => {
                let b = e.bounds;
                format!(
                    "{verb} the {} at [{}, {}, {}, {}]",
                    e.role, b.x_min, b.y_min, b.x_max, b.y_max
                )
            }
            None => format!("{verb} at ({}, {})", p.x, p.y),
        }
    }
}

impl SemanticEnricher for TemplateEnricher {
    fn enrich(&self, steps: &[EnrichStep<'_>]) -> Result<Enrichment, EnricherFault> {
        let descriptions: Vec<String> = steps
            .iter()
            .map(|s| Self::describe(s.state, s.action))
            .collect();
        let joined = descriptions
            .iter()
            .enumerate()
            .map(|(i, d)| if i == 0 { d.clone() } else { lower_first(d) })
            .collect::<Vec<_>>()
            .join(", then ");
        let goal = match steps.last() {
            Some(last) => format!("{joined}, reaching the '{}' screen", last.next.title()),
            None => String::new(),
        };
        Ok(Enrichment { descriptions, goal })
    }
}

/// Asks a chat model for step descriptions and a goal, as JSON.
pub struct ChatEnricher<C> {
    client: C,
}

impl<C: ChatClient> ChatEnricher<C> {
    pub fn new(client: C) -> Self {
        Self { client }
    }

    pub fn prompt(steps: &[EnrichStep<'_>]) -> String {
        let mut out = String::from(
            "Below is a sequence of GUI operations. For each step write a short imperative \
             description of what the user does, then write one task goal the whole sequence \
             accomplishes.\n\n",
        );
        for (i, s) in steps.iter().enumerate() {
            out.push_str(&format!(
                "{}. on '{}': {} (hint: {}) -> '{}'\n",
                i + 1,
                s.state.title(),
                s.action,
                TemplateEnricher::describe(s.state, s.action),
                s.next.title()
            ));
        }
        out.push_str(
            "\nReply with JSON only: {\"descriptions\": [one string per step], \"goal\": string}",
        );
        out
    }
}

impl<C: ChatClient> SemanticEnricher for ChatEnricher<C> {
    fn enrich(&self, steps: &[EnrichStep<'_>]) -> Result<Enrichment, EnricherFault> {
        let reply = self.client.chat(&ChatRequest::new(
            self.client.model(),
            vec![ChatMessage::user(Self::prompt(steps))],
        ))?;
        let body = match (reply.find('{'), reply.rfind('}')) {
            (Some(a), Some(b)) if a < b => &reply[a..=b],
            _ => return Err(EnricherFault::Malformed("no JSON object in reply".into())),
        };
        let e: Enrichment =
            serde_json::from_str(body).map_err(|e| EnricherFault::Malformed(e.to_string()))?;
        if e.descriptions.len() != steps.len() {
            return Err(EnricherFault::Malformed(format!(
                "{} descriptions for {} steps",
                e.descriptions.len(),
                steps.len()
            )));
        }
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnrichOptions {
    /// Append a final `Finished()` step.
    pub append_finished: bool,
    pub id_prefix: String,
}

impl Default for EnrichOptions {
    fn default() -> Self {
        Self {
            append_finished: false,
            id_prefix: "syn-".into(),
        }
    }
}

/// Turns a graph path into a described trajectory.
pub fn enrich_path(
    g: &TransitionGraph,
    path: &Path,
    enricher: &dyn SemanticEnricher,
    opts: &EnrichOptions,
) -> Result<Trajectory, EnricherFault> {
    let state = |id: &super::StateId| {
        g.nodes
            .get(id)
            .map(|n| &n.state)
            .ok_or_else(|| EnricherFault::UnknownNode(id.to_string()))
    };
    let mut steps = Vec::with_capacity(path.len());
    for (i, action) in path.actions.iter().enumerate() {
        steps.push(EnrichStep {
            state: state(&path.nodes[i])?,
            action,
            next: state(&path.nodes[i + 1])?,
        });
    }
    let start = state(&g.start)?;
    let e = enricher.enrich(&steps)?;
    let digest = path.digest();
    let mut t = Trajectory::new(
        format!("{}{}", opts.id_prefix, &digest[..16]),
        start.platform,
        e.goal,
    );
    t.provenance = Provenance::SynthesizedBottomUp;
    t.metadata.insert("path_digest".into(), digest);
    if let Some(last) = path.nodes.last() {
        t.metadata.insert("end_state".into(), last.to_string());
    }
    for (i, (s, d)) in steps.iter().zip(e.descriptions).enumerate() {
        t.steps.push(Step {
            index: i,
            screenshot_ref: s.state.screenshot_ref.clone(),
            dims: s.state.dims,
            observation: format!("'{}' screen", s.state.title()),
            thought: String::new(),
            action: s.action.clone(),
            target_box: target_box(s.state, s.action),
            description: Some(d),
        });
    }
    if opts.append_finished {
        let end = state(path.nodes.last().unwrap_or(&g.start))?;
        t.steps.push(Step {
            index: t.steps.len(),
            screenshot_ref: end.screenshot_ref.clone(),
            dims: end.dims,
            observation: format!("'{}' screen", end.title()),
            thought: String::new(),
            action: Action::Finished {
                content: String::new(),
            },
            target_box: None,
            description: Some("Finish the task".into()),
        });
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::super::env::fixtures::SETTINGS_YAML;
    use super::super::fixtures::{el, state};
    use super::super::{build_graph, explore, extract_paths, FsmEnvironment};
    use super::*;
    use crate::action::Point;
    use crate::mllm::{CannedChat, ScriptedChat};

    fn settings_graph() -> TransitionGraph {
        let mut env = FsmEnvironment::from_yaml_str(SETTINGS_YAML).unwrap();
        let ex = explore(&mut env, 100).unwrap();
        build_graph(&ex.states, &ex.triples, &ex.start).unwrap()
    }

    #[test]
    fn two_edge_path_with_templates() {
        let g = settings_graph();
        let paths = extract_paths(&g, 12, 100);
        let two = paths.iter().find(|p| p.len() == 2).unwrap();
        let t = enrich_path(&g, two, &TemplateEnricher, &EnrichOptions::default()).unwrap();
        assert_eq!(t.provenance, Provenance::SynthesizedBottomUp);
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.steps[0].description.as_deref(), Some("Click the 'Settings' button"));
        assert_eq!(t.steps[1].description.as_deref(), Some("Click the 'Wi-Fi' item"));
        assert_eq!(
            t.goal,
            "Click the 'Settings' button, then click the 'Wi-Fi' item, reaching the 'wifi' screen"
        );
        assert_eq!(t.steps[0].target_box, Some(BBox::new(0, 0, 49, 49).unwrap()));
        assert!(t.violations().is_empty());
        assert!(t.id.starts_with("syn-"));
    }

    #[test]
    fn finished_is_opt_in() {
        let g = settings_graph();
        let p = &extract_paths(&g, 12, 100)[0];
        let opts = EnrichOptions {
            append_finished: true,
            ..EnrichOptions::default()
        };
        let t = enrich_path(&g, p, &TemplateEnricher, &opts).unwrap();
        assert_eq!(t.steps.len(), p.len() + 1);
        assert!(t.ends_with_finished());
        assert!(t.violations().is_empty());
    }

    #[test]
    fn empty_label_falls_back_to_role_and_bounds() {
        let s = state("p", vec![el("icon", "", [5, 5, 15, 15], true)]);
        let d = TemplateEnricher::describe(&s, &Action::Click { at: Point::new(10, 10) });
        assert_eq!(d, "Click the icon at [5, 5, 15, 15]");
        let d = TemplateEnricher::describe(&s, &Action::Click { at: Point::new(50, 50) });
        assert_eq!(d, "Click at (50, 50)");
    }

    #[test]
    fn chat_enricher() {
        let g = settings_graph();
        let p = &extract_paths(&g, 12, 100)[0];
        let ok = ChatEnricher::new(CannedChat(
            "Sure: {\"descriptions\": [\"Open settings\"], \"goal\": \"Open settings\"}".into(),
        ));
        let t = enrich_path(&g, p, &ok, &EnrichOptions::default()).unwrap();
        assert_eq!(t.goal, "Open settings");

        let short = ChatEnricher::new(CannedChat("{\"descriptions\": [], \"goal\": \"x\"}".into()));
        assert!(matches!(
            enrich_path(&g, p, &short, &EnrichOptions::default()),
            Err(EnricherFault::Malformed(_))
        ));

        let down = ChatEnricher::new(ScriptedChat::new([Err(ChatError::Transport(
            "timed out".into(),
        ))]));
        let err = enrich_path(&g, p, &down, &EnrichOptions::default()).unwrap_err();
        assert_eq!(err.name(), "EnricherFault");
        assert!(matches!(err, EnricherFault::Unavailable(_)));
    }
}
