use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::action::{Action, Platform};
use crate::explorer::{hash_state, TemplateEnricher, UIState};
use crate::mllm::{ChatClient, ChatError, ChatMessage, ChatRequest};
use crate::response::TagConfig;

/// Prior steps shown to the policy.
pub const HISTORY_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyFault {
    #[error("policy unavailable: {0}")]
    Unavailable(#[from] ChatError),
    #[error("policy fault: {0}")]
    Other(String),
}

/// One observation / thought / action triplet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry {
    pub observation: String,
    pub thought: String,
    pub action: String,
}

/// What a policy sees for one decision.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub goal: &'a str,
    /// At most [`HISTORY_WINDOW`] entries, oldest first.
    pub history: &'a [HistoryEntry],
    /// Index of the step being decided.
    pub step: usize,
    pub state: &'a UIState,
    pub affordances: &'a [Action],
    pub platform: Platform,
    pub tags: &'a TagConfig,
}

/// Produces the raw tagged response for the next step.
pub trait PolicyClient: Send + Sync {
    fn respond(&self, ctx: &PolicyContext<'_>) -> Result<String, PolicyFault>;
}

impl<P: PolicyClient + ?Sized> PolicyClient for &P {
    fn respond(&self, ctx: &PolicyContext<'_>) -> Result<String, PolicyFault> {
        (**self).respond(ctx)
    }
}

/// Replies with `responses[step]`, then `Finished()` once the script ends.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    pub responses: Vec<String>,
    /// Responses are bare action texts to wrap in the configured tags.
    pub bare: bool,
}

impl ScriptedPolicy {
    pub fn new(responses: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            responses: responses.into_iter().map(Into::into).collect(),
            bare: false,
        }
    }

    pub fn from_actions(actions: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            bare: true,
            ..Self::new(actions)
        }
    }
}

impl PolicyClient for ScriptedPolicy {
    fn respond(&self, ctx: &PolicyContext<'_>) -> Result<String, PolicyFault> {
        let t = ctx.tags;
        Ok(match self.responses.get(ctx.step) {
            Some(r) if self.bare => format!(
                "<{o}>'{title}' screen</{o}><{th}>Step {n}.</{th}><{a}>{r}</{a}>",
                o = t.observation,
                th = t.thought,
                a = t.action,
                title = ctx.state.title(),
                n = ctx.step + 1
            ),
            Some(r) => r.clone(),
            None => t.render(
                "script finished",
                "done",
                &Action::Finished {
                    content: String::new(),
                },
            ),
        })
    }
}

/// Seeded random walk over the declared affordances. The choice depends on
/// (seed, goal, step, state) only, so rollouts are reproducible.
#[derive(Debug, Clone)]
pub struct WalkPolicy {
    pub seed: u64,
    /// Emit `Finished()` at this step index.
    pub finish_at: Option<usize>,
}

impl PolicyClient for WalkPolicy {
    fn respond(&self, ctx: &PolicyContext<'_>) -> Result<String, PolicyFault> {
        let observation = format!("'{}' screen", ctx.state.title());
        if self.finish_at.is_some_and(|f| ctx.step >= f) {
            let done = Action::Finished {
                content: String::new(),
            };
            return Ok(ctx.tags.render(&observation, "The goal is reached.", &done));
        }
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(ctx.goal.as_bytes());
        h.update((ctx.step as u64).to_le_bytes());
        h.update(hash_state(ctx.state).as_str().as_bytes());
        let digest = h.finalize();
        let mut rng = ChaCha8Rng::from_seed(digest.into());
        let action = if ctx.affordances.is_empty() {
            Action::Wait
        } else {
            ctx.affordances[rng.random_range(0..ctx.affordances.len())].clone()
        };
        let thought = format!("{}.", TemplateEnricher::describe(ctx.state, &action));
        Ok(ctx.tags.render(&observation, &thought, &action))
    }
}

/// Chat-endpoint policy. Every prompt is kept for inspection.
pub struct ChatPolicy<C> {
    client: C,
    prompts: Mutex<Vec<String>>,
}

impl<C: ChatClient> ChatPolicy<C> {
    pub fn new(client: C) -> Self {
        Self {
            client,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn prompt(ctx: &PolicyContext<'_>) -> String {
        let mut out = format!("Goal: {}\nPlatform: {}\n\nHistory:\n", ctx.goal, ctx.platform);
        if ctx.history.is_empty() {
            out.push_str("(none)\n");
        }
        for h in ctx.history {
            out.push_str(&format!(
                "- Observation: {} | Thought: {} | Action: {}\n",
                h.observation, h.thought, h.action
            ));
        }
        out.push_str(&format!("\nCurrent screen: '{}'\n", ctx.state.title()));
        let mut stack = vec![(&ctx.state.root, 0usize)];
        while let Some((e, depth)) = stack.pop() {
            if e.interactable {
                let b = e.bounds;
                out.push_str(&format!(
                    "{}{} '{}' [{}, {}, {}, {}]\n",
                    "  ".repeat(depth),
                    e.role,
                    e.label,
                    b.x_min,
                    b.y_min,
                    b.x_max,
                    b.y_max
                ));
            }
            for c in e.children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out.push_str(&format!(
            "\nRespond as <{o}>...</{o}><{t}>...</{t}><{a}>...</{a}> with one action.",
            o = ctx.tags.observation,
            t = ctx.tags.thought,
            a = ctx.tags.action
        ));
        out
    }
}

impl<C: ChatClient> PolicyClient for ChatPolicy<C> {
    fn respond(&self, ctx: &PolicyContext<'_>) -> Result<String, PolicyFault> {
        let prompt = Self::prompt(ctx);
        self.prompts
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(prompt.clone());
        Ok(self.client.chat(&ChatRequest::new(
            self.client.model(),
            vec![ChatMessage::user(prompt)],
        ))?)
    }
}
