//! Group-relative policy optimization objective arithmetic.
//!
//! Advantages are rewards normalized within their rollout group (population
//! standard deviation). The objective averages, over the group, the
//! token-mean clipped surrogate minus `beta` times the token-mean KL
//! estimate against the reference policy. Nothing here computes gradients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard deviations below this are treated as a degenerate group.
pub const STD_EPS: f64 = 1e-8;
pub const DEFAULT_CLIP_EPSILON: f64 = 0.2;
pub const DEFAULT_KL_COEF: f64 = 0.04;
pub const DEFAULT_GROUP_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrpoError {
    #[error("group needs at least 2 rollouts, got {0}")]
    GroupTooSmall(usize),
    #[error("rollout {index}: {message}")]
    InvalidRollout { index: usize, message: String },
    #[error("invalid group parameter: {0}")]
    InvalidParameter(String),
}

impl GrpoError {
    pub fn name(&self) -> &'static str {
        match self {
            GrpoError::GroupTooSmall(_) => "GroupTooSmall",
            GrpoError::InvalidRollout { .. } => "InvalidRollout",
            GrpoError::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

/// Within-group normalized advantages. Degenerate groups yield all zeros.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, GrpoError> {
    let g = rewards.len();
    if g < 2 {
        return Err(GrpoError::GroupTooSmall(g));
    }
    let n = g as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < STD_EPS {
        return Ok(vec![0.0; g]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// `min(rho * A, clip(rho, 1 - eps, 1 + eps) * A)` with
/// `rho = exp(logp_new - logp_old)`.
pub fn clipped_surrogate(logp_new: f64, logp_old: f64, advantage: f64, epsilon: f64) -> f64 {
    let ratio = (logp_new - logp_old).exp();
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// Per-token KL estimate `exp(d) - d - 1` with `d = logp_ref - logp_new`.
pub fn kl_penalty(logp_new: f64, logp_ref: f64) -> f64 {
    let d = logp_ref - logp_new;
    // exp_m1 keeps precision for small |d|; clamp absorbs rounding below zero
    (d.exp_m1() - d).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub logp_new: Vec<f64>,
    pub logp_old: Vec<f64>,
    pub logp_ref: Vec<f64>,
    pub reward: f64,
}

impl Rollout {
    pub fn token_count(&self) -> usize {
        self.logp_new.len()
    }

    fn validate(&self, index: usize) -> Result<(), GrpoError> {
        let invalid = |message: String| GrpoError::InvalidRollout { index, message };
        let n = self.logp_new.len();
        if n == 0 {
            return Err(invalid("rollout has no tokens".into()));
        }
        if self.logp_old.len() != n || self.logp_ref.len() != n {
            return Err(invalid(format!(
                "log-probability lengths differ: new {n}, old {}, ref {}",
                self.logp_old.len(),
                self.logp_ref.len()
            )));
        }
        let all = self.logp_new.iter().chain(&self.logp_old).chain(&self.logp_ref);
        if let Some(bad) = all.copied().find(|v| v.is_nan() || *v > 0.0) {
            return Err(invalid(format!("log-probability {bad} is not <= 0")));
        }
        if !self.reward.is_finite() {
            return Err(invalid("reward is not finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub rollouts: Vec<Rollout>,
    pub epsilon: f64,
    pub beta: f64,
}

impl RolloutGroup {
    pub fn new(rollouts: Vec<Rollout>) -> Self {
        Self {
            rollouts,
            epsilon: DEFAULT_CLIP_EPSILON,
            beta: DEFAULT_KL_COEF,
        }
    }

    pub fn group_size(&self) -> usize {
        self.rollouts.len()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.rollouts.iter().map(|r| r.reward).collect()
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.rollouts.len() < 2 {
            return Err(GrpoError::GroupTooSmall(self.rollouts.len()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(GrpoError::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(GrpoError::InvalidParameter(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        for (i, r) in self.rollouts.iter().enumerate() {
            r.validate(i)?;
        }
        Ok(())
    }
}

/// Per-rollout contributions to the objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectiveTerms {
    pub advantages: Vec<f64>,
    pub surrogate: Vec<f64>,
    pub kl: Vec<f64>,
    pub objective: f64,
}

pub fn grpo_objective_terms(group: &RolloutGroup) -> Result<ObjectiveTerms, GrpoError> {
    group.validate()?;
    let advantages = group_advantages(&group.rewards())?;
    let mut surrogate = Vec::with_capacity(group.group_size());
    let mut kl = Vec::with_capacity(group.group_size());
    for (rollout, &adv) in group.rollouts.iter().zip(&advantages) {
        let n = rollout.token_count() as f64;
        let s: f64 = rollout
            .logp_new
            .iter()
            .zip(&rollout.logp_old)
            .map(|(&new, &old)| clipped_surrogate(new, old, adv, group.epsilon))
            .sum();
        let k: f64 = rollout
            .logp_new
            .iter()
            .zip(&rollout.logp_ref)
            .map(|(&new, &reference)| kl_penalty(new, reference))
            .sum();
        surrogate.push(s / n);
        kl.push(k / n);
    }
    let objective = surrogate
        .iter()
        .zip(&kl)
        .map(|(s, k)| s - group.beta * k)
        .sum::<f64>()
        / group.group_size() as f64;
    Ok(ObjectiveTerms {
        advantages,
        surrogate,
        kl,
        objective,
    })
}

pub fn grpo_objective(group: &RolloutGroup) -> Result<f64, GrpoError> {
    grpo_objective_terms(group).map(|t| t.objective)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_token(logp_new: f64, logp_old: f64, logp_ref: f64, reward: f64) -> Rollout {
        Rollout {
            logp_new: vec![logp_new],
            logp_old: vec![logp_old],
            logp_ref: vec![logp_ref],
            reward,
        }
    }

    #[test]
    fn advantages_examples() {
        assert_eq!(
            group_advantages(&[1.0, 0.0, 1.0, 0.0]).unwrap(),
            vec![1.0, -1.0, 1.0, -1.0]
        );
        assert_eq!(group_advantages(&[3.5; 4]).unwrap(), vec![0.0; 4]);
        // (r - 0.5) / sqrt(0.06), 0.06 = population variance of {0.2, 0.5, 0.8}
        let a = group_advantages(&[0.2, 0.5, 0.8]).unwrap();
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (got, want) in a.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(group_advantages(&[1.0]), Err(GrpoError::GroupTooSmall(1)));
        assert_eq!(group_advantages(&[]), Err(GrpoError::GroupTooSmall(0)));
    }

    #[test]
    fn surrogate_examples() {
        assert_eq!(clipped_surrogate(-1.0, -1.0, 0.7, 0.2), 0.7);
        let ln2 = std::f64::consts::LN_2;
        // rho = 2, positive advantage: clip binds at 1.2
        assert!((clipped_surrogate(-1.0 + ln2, -1.0, 1.0, 0.2) - 1.2).abs() < 1e-15);
        // rho = 0.5, A = -1: min(0.5 * A, 0.8 * A) = min(-0.5, -0.8), the
        // clipped branch is the pessimistic one
        let got = clipped_surrogate(-1.0 - ln2, -1.0, -1.0, 0.2);
        assert!((got - (-0.8)).abs() < 1e-15, "{got}");
    }

    #[test]
    fn kl_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert_eq!(kl_penalty(-1.0, -1.0), 0.0);
        assert!((kl_penalty(-1.0, -1.0 + ln2) - (1.0 - ln2)).abs() < 1e-15);
        assert!((kl_penalty(-1.0, -1.0 - ln2) - (ln2 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn objective_hand_example() {
        let mut group = RolloutGroup::new(vec![
            single_token(-1.0 + 1.5f64.ln(), -1.0, -1.0, 1.0),
            single_token(-1.0, -1.0, -1.0, 0.0),
        ]);
        group.beta = 0.0;
        let obj = grpo_objective(&group).unwrap();
        assert!((obj - 0.1).abs() < 1e-15, "{obj}");
    }

    #[test]
    fn objective_with_equal_rewards_is_minus_beta_kl() {
        let group = RolloutGroup::new(vec![
            single_token(-0.5, -0.7, -0.9, 2.0),
            Rollout {
                logp_new: vec![-0.1, -2.0],
                logp_old: vec![-0.2, -1.0],
                logp_ref: vec![-0.3, -1.5],
                reward: 2.0,
            },
        ]);
        let terms = grpo_objective_terms(&group).unwrap();
        let mean_kl = terms.kl.iter().sum::<f64>() / 2.0;
        assert!((terms.objective + group.beta * mean_kl).abs() < 1e-15);
    }

    #[test]
    fn identical_policies_give_zero() {
        let group = RolloutGroup::new(vec![
            single_token(-0.3, -0.3, -0.3, 1.0),
            single_token(-0.3, -0.3, -0.3, 0.0),
        ]);
        assert_eq!(grpo_objective(&group).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_groups() {
        let g = RolloutGroup::new(vec![single_token(-0.1, -0.1, -0.1, 1.0)]);
        assert_eq!(grpo_objective(&g), Err(GrpoError::GroupTooSmall(1)));
        let g = RolloutGroup::new(vec![
            single_token(0.1, -0.1, -0.1, 1.0),
            single_token(-0.1, -0.1, -0.1, 0.0),
        ]);
        assert!(matches!(grpo_objective(&g), Err(GrpoError::InvalidRollout { index: 0, .. })));
        let mut g = RolloutGroup::new(vec![
            single_token(-0.1, -0.1, -0.1, 1.0),
            Rollout {
                logp_new: vec![-0.1, -0.1],
                logp_old: vec![-0.1],
                logp_ref: vec![-0.1, -0.1],
                reward: 0.0,
            },
        ]);
        assert!(matches!(grpo_objective(&g), Err(GrpoError::InvalidRollout { index: 1, .. })));
        g.rollouts[1].logp_old.push(-0.1);
        g.epsilon = 0.0;
        assert!(matches!(grpo_objective(&g), Err(GrpoError::InvalidParameter(_))));
    }
}
