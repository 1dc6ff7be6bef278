use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use guinav::grpo::{group_advantages, grpo_objective, Rollout, RolloutGroup};
use guinav::reward::action_reward;
use guinav::{Action, Direction, Point, ScreenDims};

use crate::config::GlobalConfig;
use crate::{usage, write_out, Status};

#[derive(Debug, Args)]
pub struct GrpoDemoArgs {
    /// Policy updates to run
    #[arg(long, default_value_t = 20)]
    pub iterations: usize,
    /// Rollouts per group
    #[arg(long, default_value_t = 8)]
    pub group_size: usize,
    /// Step size of the softmax policy update
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    /// JSONL destination for per-iteration records (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct IterationRecord {
    iteration: usize,
    mean_reward: f64,
    objective: f64,
    best_arm_probability: f64,
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z = logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln() + m;
    logits.iter().map(|l| (l - z).min(0.0)).collect()
}

/// A one-step bandit whose arms are candidate actions for a fixed click,
/// scored by the navigation reward. The policy is a softmax over arms
/// updated with the group-normalized advantages.
pub fn grpo_demo(a: &GrpoDemoArgs, g: &GlobalConfig) -> anyhow::Result<Status> {
    if a.group_size < 2 {
        return Err(usage("--group-size must be >= 2"));
    }
    let dims = ScreenDims::new(1000, 1000)?;
    let gt = Action::Click {
        at: Point::new(500, 500),
    };
    let arms = [
        Action::Click {
            at: Point::new(505, 495),
        },
        Action::Click {
            at: Point::new(540, 500),
        },
        Action::Click {
            at: Point::new(900, 100),
        },
        Action::Scroll {
            start: Point::new(500, 800),
            end: Point::new(500, 200),
            dir: Direction::Up,
        },
        Action::Type {
            content: "hello".into(),
        },
        Action::Wait,
    ];
    let rewards: Vec<f64> = arms
        .iter()
        .map(|arm| action_reward(arm, &gt, dims, &g.reward).total)
        .collect();
    let mut logits = vec![0.0; arms.len()];
    let reference = log_softmax(&logits);
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut out = String::new();
    for iteration in 0..a.iterations {
        let logp = log_softmax(&logits);
        let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let picks: Vec<usize> = (0..a.group_size)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i;
                    }
                }
                probs.len() - 1
            })
            .collect();
        let mut group = RolloutGroup::new(
            picks
                .iter()
                .map(|&i| Rollout {
                    logp_new: vec![logp[i]],
                    logp_old: vec![logp[i]],
                    logp_ref: vec![reference[i]],
                    reward: rewards[i],
                })
                .collect(),
        );
        let adv = group_advantages(&group.rewards())?;
        let mut grad = vec![0.0; arms.len()];
        for (&i, a_i) in picks.iter().zip(&adv) {
            for (j, gj) in grad.iter_mut().enumerate() {
                let indicator = if i == j { 1.0 } else { 0.0 };
                *gj += a_i * (indicator - probs[j]) / a.group_size as f64;
            }
        }
        for (l, d) in logits.iter_mut().zip(&grad) {
            *l += a.lr * d;
        }
        // Objective of the updated policy on the sampled group.
        let updated = log_softmax(&logits);
        for (r, &i) in group.rollouts.iter_mut().zip(&picks) {
            r.logp_new = vec![updated[i]];
        }
        let record = IterationRecord {
            iteration,
            mean_reward: group.rewards().iter().sum::<f64>() / a.group_size as f64,
            objective: grpo_objective(&group)?,
            best_arm_probability: updated[0].exp(),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    write_out(a.out.as_deref(), &out)?;
    Ok(Status::Ok)
}
