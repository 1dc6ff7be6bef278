use serde::Serialize;

use super::policy::{HistoryEntry, PolicyClient, PolicyContext, HISTORY_WINDOW};
use super::{TaskInstruction, TaskgenError, MIN_TASK_STEPS};
use crate::action::{validate_action, ActionKind};
use crate::explorer::{EnvFault, SimEnvironment};
use crate::mllm::TaskCompletionJudge;
use crate::parallel::bounded_map;
use crate::response::{extract_response_sections, TagConfig};
use crate::trajectory::{audit_trajectory, AuditVerdict, Provenance, Step, Trajectory};

#[derive(Debug, Clone)]
pub struct RolloutOptions {
    pub max_steps: usize,
    pub history_window: usize,
    pub tags: TagConfig,
    /// Fewer steps than this fail self-assessment without asking the judge.
    pub min_steps: usize,
}

impl Default for RolloutOptions {
    fn default() -> Self {
        Self {
            max_steps: 15,
            history_window: HISTORY_WINDOW,
            tags: TagConfig::default(),
            min_steps: MIN_TASK_STEPS as usize,
        }
    }
}

fn reject(t: &mut Trajectory, step: usize, kind: &str, detail: String, raw: &str) {
    t.metadata.insert("invalid_action_step".into(), step.to_string());
    t.metadata.insert("invalid_action_error".into(), kind.to_string());
    t.metadata.insert("invalid_action_response".into(), raw.to_string());
    t.verdict = AuditVerdict::AutoFail;
    t.rationale = Some(format!("step {step}: invalid action ({detail})"));
}

/// Runs `policy` on `env` for one instruction. Stops on `Finished`, at
/// `max_steps`, or at the first response that does not yield a valid
/// action; the latter is recorded in metadata and marks the trajectory
/// `auto_fail`.
pub fn rollout<E: SimEnvironment + ?Sized>(
    id: &str,
    instr: &TaskInstruction,
    env: &mut E,
    policy: &dyn PolicyClient,
    opts: &RolloutOptions,
) -> Result<Trajectory, TaskgenError> {
    if opts.max_steps == 0 {
        return Err(TaskgenError::InvalidParameter("max_steps must be >= 1".into()));
    }
    let platform = env.platform();
    let mut t = Trajectory::new(id, platform, instr.text.clone());
    t.provenance = Provenance::SynthesizedTopDown;
    t.metadata.insert("domain".into(), instr.domain.clone());
    t.metadata.insert("sub_scenario".into(), instr.sub_scenario.clone());
    t.metadata
        .insert("min_step_estimate".into(), instr.min_step_estimate.to_string());

    let mut state = env.reset()?;
    let mut history: Vec<HistoryEntry> = Vec::new();
    for i in 0..opts.max_steps {
        let affordances = env.affordances()?;
        let window = &history[history.len().saturating_sub(opts.history_window)..];
        let raw = policy.respond(&PolicyContext {
            goal: &instr.text,
            history: window,
            step: i,
            state: &state,
            affordances: &affordances,
            platform,
            tags: &opts.tags,
        })?;
        let resp = match extract_response_sections(&raw, &opts.tags, platform) {
            Ok(r) => r,
            Err(e) => {
                reject(&mut t, i, e.name(), e.to_string(), &raw);
                break;
            }
        };
        if let Some(v) = validate_action(&resp.action, platform, Some(state.dims)).first() {
            reject(&mut t, i, "InvalidAction", v.to_string(), &raw);
            break;
        }
        t.steps.push(Step {
            index: i,
            screenshot_ref: state.screenshot_ref.clone(),
            dims: state.dims,
            observation: resp.observation.clone(),
            thought: resp.thought.clone(),
            action: resp.action.clone(),
            target_box: resp
                .action
                .point()
                .and_then(|p| state.root.hit_test(p))
                .map(|e| e.bounds),
            description: None,
        });
        if resp.action.kind() == ActionKind::Finished {
            break;
        }
        history.push(HistoryEntry {
            observation: resp.observation,
            thought: resp.thought,
            action: resp.action.serialize(),
        });
        state = env.act(&resp.action)?;
    }
    Ok(t)
}

/// Attaches `auto_pass`/`auto_fail`. Rollouts already failed by an invalid
/// action, or shorter than `min_steps`, fail without consulting the judge.
pub fn self_assess(
    t: &mut Trajectory,
    judge: &dyn TaskCompletionJudge,
    min_steps: usize,
) -> Result<AuditVerdict, TaskgenError> {
    if t.verdict == AuditVerdict::AutoFail {
        return Ok(t.verdict);
    }
    if t.len() < min_steps {
        t.verdict = AuditVerdict::AutoFail;
        t.rationale = Some(format!("{} steps < required {min_steps}", t.len()));
        return Ok(t.verdict);
    }
    audit_trajectory(t, judge)?;
    Ok(t.verdict)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct TaskgenOutput {
    /// `auto_pass` rollouts, plus failures when they are kept.
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
    pub attempted: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Rolls out and self-assesses every instruction, each on a fresh
/// environment from `make_env`, at most `jobs` at a time. Output order
/// follows the instructions.
#[allow(clippy::too_many_arguments)]
pub fn run_taskgen<E, F>(
    instrs: &[TaskInstruction],
    make_env: F,
    policy: &dyn PolicyClient,
    judge: &dyn TaskCompletionJudge,
    opts: &RolloutOptions,
    keep_failures: bool,
    jobs: usize,
) -> Result<TaskgenOutput, TaskgenError>
where
    E: SimEnvironment,
    F: Fn() -> Result<E, EnvFault> + Sync,
{
    let slots: Vec<(usize, &TaskInstruction)> = instrs.iter().enumerate().collect();
    let results = bounded_map(&slots, jobs, |(i, instr)| {
        let mut env = make_env()?;
        let mut t = rollout(&format!("td-{i:05}"), instr, &mut env, policy, opts)?;
        self_assess(&mut t, judge, opts.min_steps)?;
        Ok::<_, TaskgenError>(t)
    });
    let mut out = TaskgenOutput {
        attempted: instrs.len(),
        ..TaskgenOutput::default()
    };
    for r in results {
        let t = r?;
        if t.verdict == AuditVerdict::AutoPass {
            out.passed += 1;
            out.trajectories.push(t);
        } else {
            out.failed += 1;
            if keep_failures {
                out.trajectories.push(t);
            }
        }
    }
    Ok(out)
}
