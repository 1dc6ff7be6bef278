use super::{AuditVerdict, Trajectory};
use crate::mllm::{JudgeError, JudgeRequest, JudgeStep, Judgement, TaskCompletionJudge, Verdict};
use crate::parallel::bounded_map;

/// Goal plus step-wise actions, descriptions and screenshot references.
pub fn judge_request(traj: &Trajectory) -> JudgeRequest {
    JudgeRequest {
        goal: traj.goal.clone(),
        steps: traj
            .steps
            .iter()
            .map(|s| JudgeStep {
                action: s.action.clone(),
                description: s
                    .description
                    .clone()
                    .or_else(|| (!s.thought.is_empty()).then(|| s.thought.clone())),
                screenshot_ref: s.screenshot_ref.clone(),
            })
            .collect(),
    }
}

/// Asks the judge and records `auto_pass`/`auto_fail` plus the rationale.
/// On error the trajectory is left untouched.
pub fn audit_trajectory(
    traj: &mut Trajectory,
    judge: &dyn TaskCompletionJudge,
) -> Result<Judgement, JudgeError> {
    let judgement = judge.judge(&judge_request(traj))?;
    apply(traj, &judgement);
    Ok(judgement)
}

/// Audits every trajectory exactly once with at most `jobs` judge calls in
/// flight. Results are in input order.
pub fn audit_all(
    trajs: &mut [Trajectory],
    judge: &dyn TaskCompletionJudge,
    jobs: usize,
) -> Vec<Result<Judgement, JudgeError>> {
    let requests: Vec<JudgeRequest> = trajs.iter().map(judge_request).collect();
    let results = bounded_map(&requests, jobs, |r| judge.judge(r));
    for (t, r) in trajs.iter_mut().zip(&results) {
        if let Ok(j) = r {
            apply(t, j);
        }
    }
    results
}

fn apply(traj: &mut Trajectory, judgement: &Judgement) {
    traj.verdict = match judgement.verdict {
        Verdict::Pass => AuditVerdict::AutoPass,
        Verdict::Fail => AuditVerdict::AutoFail,
    };
    traj.rationale = Some(judgement.rationale.clone());
}
