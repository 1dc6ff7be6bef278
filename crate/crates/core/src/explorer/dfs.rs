use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::env::{EnvFault, SimEnvironment};
use super::{hash_state, StateId, Triple, UIState};
use crate::action::Action;

/// Everything one exploration run observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exploration {
    pub start: StateId,
    /// Distinct states in discovery order.
    pub states: IndexMap<StateId, UIState>,
    /// Every executed transition, in execution order.
    pub triples: Vec<Triple>,
    /// Actions charged against the budget. Replays are free.
    pub actions_executed: usize,
    pub replays: usize,
    /// True when untried (state, action) pairs remained at the budget.
    pub budget_exhausted: bool,
}

struct Frame {
    id: StateId,
    access: Vec<Action>,
    affordances: Vec<Action>,
    next: usize,
}

fn replay<E: SimEnvironment>(env: &mut E, frame: &Frame) -> Result<(), EnvFault> {
    let mut s = env.reset()?;
    for a in &frame.access {
        s = env.act(a)?;
    }
    let got = hash_state(&s);
    if got != frame.id {
        return Err(EnvFault::Nondeterministic(format!(
            "replaying {} actions reached {} instead of {}",
            frame.access.len(),
            got.short(),
            frame.id.short()
        )));
    }
    Ok(())
}

/// Depth-first exploration. Each reachable state's affordances are tried in
/// declared order; states seen before are recorded as triple targets but not
/// expanded again. Returning to a state mid-search replays its access path
/// from `reset`.
pub fn explore<E: SimEnvironment>(env: &mut E, budget: usize) -> Result<Exploration, EnvFault> {
    if budget == 0 {
        return Err(EnvFault::Other("exploration budget must be >= 1".into()));
    }
    let s0 = env.reset()?;
    let start = hash_state(&s0);
    let mut out = Exploration {
        start: start.clone(),
        states: IndexMap::new(),
        triples: Vec::new(),
        actions_executed: 0,
        replays: 0,
        budget_exhausted: false,
    };
    out.states.insert(start.clone(), s0);
    let mut stack = vec![Frame {
        id: start.clone(),
        access: Vec::new(),
        affordances: env.affordances()?,
        next: 0,
    }];
    let mut current = start;

    while let Some(top) = stack.last_mut() {
        if top.next == top.affordances.len() {
            stack.pop();
            continue;
        }
        if out.actions_executed == budget {
            out.budget_exhausted = true;
            break;
        }
        let action = top.affordances[top.next].clone();
        top.next += 1;
        if current != top.id {
            replay(env, top)?;
            out.replays += 1;
        }
        let post = env.act(&action)?;
        out.actions_executed += 1;
        let post_id = hash_state(&post);
        log::trace!("{} --{action}--> {}", top.id.short(), post_id.short());
        out.triples.push(Triple {
            pre: top.id.clone(),
            action: action.clone(),
            post: post_id.clone(),
        });
        current = post_id.clone();
        if !out.states.contains_key(&post_id) {
            let mut access = top.access.clone();
            access.push(action);
            out.states.insert(post_id.clone(), post);
            stack.push(Frame {
                id: post_id,
                access,
                affordances: env.affordances()?,
                next: 0,
            });
        }
    }
    Ok(out)
}
