//! Top-down, taxonomy-guided task generation: instructions are synthesized
//! per taxonomy leaf, rolled out by a policy in a simulated environment and
//! self-assessed by a judge.

mod policy;
mod rollout;

use std::collections::HashSet;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::EnvFault;
use crate::mllm::{ChatClient, ChatError, ChatMessage, ChatRequest, JudgeError};
use crate::parallel::bounded_map;

pub use policy::{
    ChatPolicy, HistoryEntry, PolicyClient, PolicyContext, PolicyFault, ScriptedPolicy,
    WalkPolicy, HISTORY_WINDOW,
};
pub use rollout::{rollout, run_taskgen, self_assess, RolloutOptions, TaskgenOutput};

/// Generated tasks must need at least this many steps.
pub const MIN_TASK_STEPS: u32 = 5;
pub const DEFAULT_RETRIES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub name: String,
    pub sub_scenarios: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Taxonomy {
    pub domains: Vec<Domain>,
}

/// One (domain, sub-scenario) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub domain: String,
    pub sub_scenario: String,
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("taxonomy schema error: {0}")]
    SchemaError(String),
    #[error("duplicate {level} name '{name}'")]
    DuplicateName { level: &'static str, name: String },
}

impl TaxonomyError {
    pub fn name(&self) -> &'static str {
        match self {
            TaxonomyError::Io(_) => "IoError",
            TaxonomyError::SchemaError(_) => "SchemaError",
            TaxonomyError::DuplicateName { .. } => "DuplicateName",
        }
    }
}

impl Taxonomy {
    pub fn from_yaml_str(text: &str) -> Result<Self, TaxonomyError> {
        if text.trim().is_empty() {
            return Err(TaxonomyError::SchemaError("empty taxonomy file".into()));
        }
        let tax: Taxonomy =
            serde_yaml::from_str(text).map_err(|e| TaxonomyError::SchemaError(e.to_string()))?;
        tax.validate()?;
        Ok(tax)
    }

    pub fn validate(&self) -> Result<(), TaxonomyError> {
        if self.domains.is_empty() {
            return Err(TaxonomyError::SchemaError("taxonomy has no domains".into()));
        }
        let mut names = HashSet::new();
        for d in &self.domains {
            if d.name.trim().is_empty() {
                return Err(TaxonomyError::SchemaError("empty domain name".into()));
            }
            if !names.insert(d.name.as_str()) {
                return Err(TaxonomyError::DuplicateName {
                    level: "domain",
                    name: d.name.clone(),
                });
            }
            if d.sub_scenarios.is_empty() {
                return Err(TaxonomyError::SchemaError(format!(
                    "domain '{}' has no sub-scenarios",
                    d.name
                )));
            }
            let mut subs = HashSet::new();
            for s in &d.sub_scenarios {
                if s.trim().is_empty() {
                    return Err(TaxonomyError::SchemaError(format!(
                        "empty sub-scenario in '{}'",
                        d.name
                    )));
                }
                if !subs.insert(s.as_str()) {
                    return Err(TaxonomyError::DuplicateName {
                        level: "sub-scenario",
                        name: s.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Leaves in declaration order.
    pub fn leaves(&self) -> Vec<Leaf> {
        self.domains
            .iter()
            .flat_map(|d| {
                d.sub_scenarios.iter().map(|s| Leaf {
                    domain: d.name.clone(),
                    sub_scenario: s.clone(),
                })
            })
            .collect()
    }
}

pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<Taxonomy, TaxonomyError> {
    Taxonomy::from_yaml_str(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstruction {
    pub text: String,
    pub domain: String,
    pub sub_scenario: String,
    pub min_step_estimate: u32,
}

/// A generator's proposal before the step-count gate.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct Draft {
    pub instruction: String,
    pub steps: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskgenError {
    #[error("instruction generator fault: {0}")]
    GeneratorFault(String),
    #[error("no instruction with >= {MIN_TASK_STEPS} steps for {domain} / {sub_scenario} after {attempts} attempts")]
    RetriesExhausted {
        domain: String,
        sub_scenario: String,
        attempts: u32,
    },
    #[error(transparent)]
    Policy(#[from] PolicyFault),
    #[error(transparent)]
    Env(#[from] EnvFault),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl TaskgenError {
    pub fn name(&self) -> &'static str {
        match self {
            TaskgenError::GeneratorFault(_) => "GeneratorFault",
            TaskgenError::RetriesExhausted { .. } => "RetriesExhausted",
            TaskgenError::Policy(_) => "PolicyFault",
            TaskgenError::Env(e) => e.name(),
            TaskgenError::Judge(e) => e.name(),
            TaskgenError::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

impl From<ChatError> for TaskgenError {
    fn from(e: ChatError) -> Self {
        TaskgenError::GeneratorFault(e.to_string())
    }
}

pub trait InstructionGenerator: Send + Sync {
    /// Proposes a task for `leaf`. `index` is the global instruction slot and
    /// `attempt` counts retries for that slot.
    fn draft(&self, leaf: &Leaf, index: usize, attempt: u32) -> Result<Draft, TaskgenError>;
}

/// Seeded template generator. Output depends only on (seed, index, attempt).
#[derive(Debug, Clone)]
pub struct TemplateGenerator {
    pub seed: u64,
    /// Inclusive range of step estimates to draw from.
    pub steps: (u32, u32),
}

impl TemplateGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            steps: (MIN_TASK_STEPS, MIN_TASK_STEPS + 4),
        }
    }
}

const TEMPLATES: [&str; 4] = [
    "In {domain}, complete a {sub} task: open the relevant app, locate the setting, change it and confirm the result",
    "Using {domain} tools, perform a multi-step {sub} workflow and save the outcome",
    "Carry out a {sub} job in {domain}: navigate to the right panel, adjust two options and verify",
    "Finish a typical {sub} routine under {domain}, checking each screen before moving on",
];

impl InstructionGenerator for TemplateGenerator {
    fn draft(&self, leaf: &Leaf, index: usize, attempt: u32) -> Result<Draft, TaskgenError> {
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ u64::from(attempt) << 48,
        );
        let template = TEMPLATES.choose(&mut rng).expect("non-empty");
        let (lo, hi) = self.steps;
        Ok(Draft {
            instruction: template
                .replace("{domain}", &leaf.domain)
                .replace("{sub}", &leaf.sub_scenario.to_lowercase()),
            steps: rng.random_range(lo..=hi.max(lo)),
        })
    }
}

/// Asks a chat model for an instruction and its step estimate, as JSON.
pub struct ChatGenerator<C> {
    client: C,
}

impl<C: ChatClient> ChatGenerator<C> {
    pub fn new(client: C) -> Self {
        Self { client }
    }

    pub fn prompt(leaf: &Leaf) -> String {
        format!(
            "Domain: {}\nSub-scenario: {}\n\nPropose one realistic desktop GUI task in this \
             sub-scenario that needs at least {MIN_TASK_STEPS} operations. Reply with JSON only: \
             {{\"instruction\": string, \"steps\": estimated number of operations}}",
            leaf.domain, leaf.sub_scenario
        )
    }
}

impl<C: ChatClient> InstructionGenerator for ChatGenerator<C> {
    fn draft(&self, leaf: &Leaf, _index: usize, _attempt: u32) -> Result<Draft, TaskgenError> {
        let mut req = ChatRequest::new(
            self.client.model(),
            vec![ChatMessage::user(Self::prompt(leaf))],
        );
        req.temperature = 0.7;
        let reply = self.client.chat(&req)?;
        let body = match (reply.find('{'), reply.rfind('}')) {
            (Some(a), Some(b)) if a < b => &reply[a..=b],
            _ => return Err(TaskgenError::GeneratorFault("no JSON object in reply".into())),
        };
        serde_json::from_str(body).map_err(|e| TaskgenError::GeneratorFault(e.to_string()))
    }
}

/// `n` instructions, round-robin over the taxonomy leaves. Drafts below the
/// step minimum are regenerated up to `retries` times.
pub fn generate_instructions(
    tax: &Taxonomy,
    generator: &dyn InstructionGenerator,
    n: usize,
    retries: u32,
    jobs: usize,
) -> Result<Vec<TaskInstruction>, TaskgenError> {
    let leaves = tax.leaves();
    if leaves.is_empty() {
        return Ok(Vec::new());
    }
    let slots: Vec<usize> = (0..n).collect();
    let results = bounded_map(&slots, jobs, |&i| {
        let leaf = &leaves[i % leaves.len()];
        for attempt in 0..=retries {
            let d = generator.draft(leaf, i, attempt)?;
            if d.steps >= MIN_TASK_STEPS && !d.instruction.trim().is_empty() {
                return Ok(TaskInstruction {
                    text: d.instruction.trim().to_string(),
                    domain: leaf.domain.clone(),
                    sub_scenario: leaf.sub_scenario.clone(),
                    min_step_estimate: d.steps,
                });
            }
            log::debug!("slot {i}: draft estimates {} steps, retrying", d.steps);
        }
        Err(TaskgenError::RetriesExhausted {
            domain: leaf.domain.clone(),
            sub_scenario: leaf.sub_scenario.clone(),
            attempts: retries + 1,
        })
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mllm::CannedChat;

    const TWO_LEAVES: &str = "domains:\n  - name: Office\n    sub_scenarios: [Docs, Sheets]\n";

    #[test]
    fn taxonomy_errors() {
        assert_eq!(Taxonomy::from_yaml_str("").unwrap_err().name(), "SchemaError");
        let dup = "domains:\n  - {name: A, sub_scenarios: [x]}\n  - {name: A, sub_scenarios: [y]}\n";
        assert_eq!(Taxonomy::from_yaml_str(dup).unwrap_err().name(), "DuplicateName");
        let dup_sub = "domains:\n  - {name: A, sub_scenarios: [x, x]}\n";
        assert_eq!(Taxonomy::from_yaml_str(dup_sub).unwrap_err().name(), "DuplicateName");
        assert_eq!(
            Taxonomy::from_yaml_str("domains: []").unwrap_err().name(),
            "SchemaError"
        );
        assert_eq!(
            load_taxonomy("/nonexistent/tax.yaml").unwrap_err().name(),
            "IoError"
        );
    }

    #[test]
    fn round_robin_over_leaves() {
        let tax = Taxonomy::from_yaml_str(TWO_LEAVES).unwrap();
        let out = generate_instructions(&tax, &TemplateGenerator::new(7), 4, 3, 2).unwrap();
        let subs: Vec<_> = out.iter().map(|t| t.sub_scenario.as_str()).collect();
        assert_eq!(subs, vec!["Docs", "Sheets", "Docs", "Sheets"]);
        assert!(out.iter().all(|t| t.min_step_estimate >= MIN_TASK_STEPS));
    }

    #[test]
    fn single_instruction_is_tagged() {
        let tax = Taxonomy::from_yaml_str(TWO_LEAVES).unwrap();
        let out = generate_instructions(&tax, &TemplateGenerator::new(1), 1, 3, 1).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].domain.as_str(), out[0].sub_scenario.as_str()), ("Office", "Docs"));
    }

    #[test]
    fn short_tasks_exhaust_retries() {
        let tax = Taxonomy::from_yaml_str(TWO_LEAVES).unwrap();
        let generator = TemplateGenerator {
            seed: 1,
            steps: (3, 3),
        };
        let err = generate_instructions(&tax, &generator, 2, 2, 1).unwrap_err();
        assert!(matches!(err, TaskgenError::RetriesExhausted { attempts: 3, .. }));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let tax = Taxonomy::from_yaml_str(TWO_LEAVES).unwrap();
        let a = generate_instructions(&tax, &TemplateGenerator::new(42), 6, 3, 3).unwrap();
        let b = generate_instructions(&tax, &TemplateGenerator::new(42), 6, 3, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chat_generator() {
        let tax = Taxonomy::from_yaml_str(TWO_LEAVES).unwrap();
        let ok = ChatGenerator::new(CannedChat(
            "```json\n{\"instruction\": \"Merge two documents\", \"steps\": 7}\n```".into(),
        ));
        let out = generate_instructions(&tax, &ok, 1, 0, 1).unwrap();
        assert_eq!(out[0].text, "Merge two documents");
        let short = ChatGenerator::new(CannedChat("{\"instruction\": \"x\", \"steps\": 2}".into()));
        assert_eq!(
            generate_instructions(&tax, &short, 1, 1, 1).unwrap_err().name(),
            "RetriesExhausted"
        );
        let junk = ChatGenerator::new(CannedChat("no".into()));
        assert_eq!(
            generate_instructions(&tax, &junk, 1, 1, 1).unwrap_err().name(),
            "GeneratorFault"
        );
    }
}
