//! Trajectory data model and two-stage quality control.
//!
//! On disk a trajectory is one JSON object per line (JSONL). Actions are
//! stored in their canonical call syntax:
//!
//! ```json
//! {"schema_version":1,"id":"t-001","platform":"mobile","goal":"Open Wi-Fi settings",
//!  "provenance":"open_source","verdict":"unreviewed",
//!  "steps":[{"index":0,"screenshot_ref":"shots/t-001/0.png",
//!            "dims":{"width":1080,"height":2400},
//!            "observation":"Home screen","thought":"Open settings",
//!            "action":"Click(box=(540, 1200))","target_box":[480,1150,600,1250]}]}
//! ```
//!
//! Required: `schema_version`, `id`, `platform`, `goal`, `steps`, and per step
//! `index`, `screenshot_ref`, `dims`, `action`. Optional: `provenance`
//! (default `open_source`), `verdict` (default `unreviewed`), `rationale`,
//! `metadata`, and per step `observation`, `thought`, `target_box`,
//! `description`.

mod audit;
mod filter;
mod io;
mod stats;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::action::{validate_action, Action, ActionKind, BBox, Platform, ScreenDims};

pub use audit::{audit_all, audit_trajectory, judge_request};
pub use filter::{
    apply_filters, filter_min_length, filter_repetitive, longest_run, FilterConfig,
    FilterDecision, FilterReport, Filtered, DEFAULT_MIN_STEPS, DEFAULT_REPEAT_LIMIT,
    RULE_MIN_LENGTH, RULE_REPETITIVE,
};
pub use io::{
    load_trajectories, read_trajectories, read_trajectories_lenient, save_trajectories,
    to_jsonl, DataError, Diagnostic, DiagnosticKind, LoadOutcome,
};
pub use stats::{dataset_stats, DatasetStats};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    OpenSource,
    SynthesizedBottomUp,
    SynthesizedTopDown,
    Expert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditVerdict {
    Unreviewed,
    AutoPass,
    AutoFail,
    HumanPass,
    HumanFail,
}

fn default_provenance() -> Provenance {
    Provenance::OpenSource
}

fn default_verdict() -> AuditVerdict {
    AuditVerdict::Unreviewed
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub index: usize,
    pub screenshot_ref: String,
    pub dims: ScreenDims,
    #[serde(default)]
    pub observation: String,
    #[serde(default)]
    pub thought: String,
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_box: Option<BBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub schema_version: u32,
    pub id: String,
    pub platform: Platform,
    pub goal: String,
    #[serde(default = "default_provenance")]
    pub provenance: Provenance,
    #[serde(default = "default_verdict")]
    pub verdict: AuditVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub metadata: BTreeMap<String, String>,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, platform: Platform, goal: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            platform,
            goal: goal.into(),
            provenance: Provenance::OpenSource,
            verdict: AuditVerdict::Unreviewed,
            rationale: None,
            metadata: BTreeMap::new(),
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn ends_with_finished(&self) -> bool {
        self.steps
            .last()
            .is_some_and(|s| s.action.kind() == ActionKind::Finished)
    }

    /// Every invariant violation, as human-readable descriptions.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            out.push(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.id.trim().is_empty() {
            out.push("id is empty".into());
        }
        let last = self.steps.len().saturating_sub(1);
        for (pos, step) in self.steps.iter().enumerate() {
            if step.index != pos {
                out.push(format!(
                    "step indices must be contiguous from 0: position {pos} has index {}",
                    step.index
                ));
            }
            for v in validate_action(&step.action, self.platform, Some(step.dims)) {
                out.push(format!("step {}: {v}", step.index));
            }
            if let Some(b) = step.target_box {
                if !b.within(step.dims) {
                    out.push(format!(
                        "step {}: target_box lies outside the {}x{} screen",
                        step.index, step.dims.width, step.dims.height
                    ));
                }
            }
            if step.action.kind() == ActionKind::Finished && pos != last {
                out.push(format!(
                    "step {}: Finished may only appear as the final step",
                    step.index
                ));
            }
        }
        out
    }
}

/// Rejects duplicate trajectory ids, returning the repeated ids in order.
pub fn duplicate_ids(trajs: &[Trajectory]) -> Vec<String> {
    let mut seen = HashSet::new();
    trajs
        .iter()
        .filter(|t| !seen.insert(t.id.as_str()))
        .map(|t| t.id.clone())
        .collect()
}
