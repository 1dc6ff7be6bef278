//! Training-infrastructure toolkit for GUI agents.
//!
//! - [`action`]: the unified cross-platform action space (parse, serialize, validate)
//! - [`response`]: observation / thought / action response sections
//! - [`reward`]: grounding and navigation rewards
//! - [`grpo`]: group-relative advantage and objective arithmetic
//! - [`trajectory`]: trajectory data model, JSONL I/O, rule filters, auditing, stats
//! - [`explorer`]: bottom-up synthesis by exploring simulated environments
//! - [`taskgen`]: top-down taxonomy-guided task generation and rollout
//! - [`eval`]: offline grounding and navigation benchmark metrics
//! - [`mllm`]: chat-completion transport, judges and offline stubs

pub mod action;
pub mod eval;
pub mod explorer;
pub mod grpo;
pub mod mllm;
pub mod parallel;
pub mod response;
pub mod taskgen;
pub mod trajectory;
pub mod reward;

pub use action::{
    parse_action, parse_action_unchecked, validate_action, Action, ActionError, ActionKind, BBox,
    Direction, Platform, Point, ScreenDims, Violation,
};
pub use response::{extract_response_sections, AgentResponse, ResponseError, TagConfig};
pub use reward::{RewardBreakdown, RewardConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
