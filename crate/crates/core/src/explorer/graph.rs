use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{StateId, Triple, UIState};
use crate::action::Action;
use crate::mllm::{ChatClient, ChatError, ChatMessage, ChatRequest};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("dangling reference to unknown state {0}")]
    DanglingReference(StateId),
}

impl GraphError {
    pub fn name(&self) -> &'static str {
        "DanglingReference"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivalenceFault {
    #[error("equivalence oracle unavailable: {0}")]
    Unavailable(#[from] ChatError),
    #[error("equivalence oracle reply has no SAME/DIFFERENT token: {0}")]
    Malformed(String),
}

impl EquivalenceFault {
    pub fn name(&self) -> &'static str {
        "EquivalenceOracleFault"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    /// Representative state.
    pub state: UIState,
    /// Every merged state id; just the node's own id before clustering.
    pub members: Vec<StateId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: StateId,
    pub action: Action,
    pub to: StateId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionGraph {
    pub start: StateId,
    pub nodes: IndexMap<StateId, GraphNode>,
    /// Distinct edges in first-seen order.
    pub edges: Vec<Edge>,
}

impl TransitionGraph {
    /// Outgoing edges of `id` in insertion order.
    pub fn out_edges<'a>(&'a self, id: &'a StateId) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| &e.from == id)
    }

    /// Node whose members include `id`.
    pub fn class_of(&self, id: &StateId) -> Option<&StateId> {
        if self.nodes.contains_key(id) {
            return self.nodes.get_key_value(id).map(|(k, _)| k);
        }
        self.nodes
            .iter()
            .find(|(_, n)| n.members.contains(id))
            .map(|(k, _)| k)
    }
}

fn dedup_edges(edges: impl IntoIterator<Item = Edge>) -> Vec<Edge> {
    let mut seen = HashSet::new();
    edges.into_iter().filter(|e| seen.insert(e.clone())).collect()
}

pub fn build_graph(
    states: &IndexMap<StateId, UIState>,
    triples: &[Triple],
    start: &StateId,
) -> Result<TransitionGraph, GraphError> {
    for id in std::iter::once(start).chain(triples.iter().flat_map(|t| [&t.pre, &t.post])) {
        if !states.contains_key(id) {
            return Err(GraphError::DanglingReference(id.clone()));
        }
    }
    Ok(TransitionGraph {
        start: start.clone(),
        nodes: states
            .iter()
            .map(|(id, s)| {
                (
                    id.clone(),
                    GraphNode {
                        state: s.clone(),
                        members: vec![id.clone()],
                    },
                )
            })
            .collect(),
        edges: dedup_edges(triples.iter().map(|t| Edge {
            from: t.pre.clone(),
            action: t.action.clone(),
            to: t.post.clone(),
        })),
    })
}

/// Decides whether two graph nodes are the same functional page.
pub trait StateEquivalence {
    fn equivalent(
        &self,
        a: (&StateId, &UIState),
        b: (&StateId, &UIState),
    ) -> Result<bool, EquivalenceFault>;
}

/// Every node is its own class.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityEquivalence;

impl StateEquivalence for IdentityEquivalence {
    fn equivalent(
        &self,
        a: (&StateId, &UIState),
        b: (&StateId, &UIState),
    ) -> Result<bool, EquivalenceFault> {
        Ok(a.0 == b.0)
    }
}

/// Explicit groups of state ids; ids outside every group stay alone.
#[derive(Debug, Clone, Default)]
pub struct GroupEquivalence {
    group_of: HashMap<StateId, usize>,
}

impl GroupEquivalence {
    pub fn new(groups: impl IntoIterator<Item = Vec<StateId>>) -> Self {
        let mut group_of = HashMap::new();
        for (i, g) in groups.into_iter().enumerate() {
            for id in g {
                group_of.insert(id, i);
            }
        }
        Self { group_of }
    }
}

impl StateEquivalence for GroupEquivalence {
    fn equivalent(
        &self,
        a: (&StateId, &UIState),
        b: (&StateId, &UIState),
    ) -> Result<bool, EquivalenceFault> {
        Ok(a.0 == b.0
            || matches!(
                (self.group_of.get(a.0), self.group_of.get(b.0)),
                (Some(x), Some(y)) if x == y
            ))
    }
}

/// Pages with the same title are the same page.
#[derive(Debug, Clone, Copy, Default)]
pub struct TitleEquivalence;

impl StateEquivalence for TitleEquivalence {
    fn equivalent(
        &self,
        a: (&StateId, &UIState),
        b: (&StateId, &UIState),
    ) -> Result<bool, EquivalenceFault> {
        Ok(a.0 == b.0 || (a.1.platform == b.1.platform && a.1.title() == b.1.title()))
    }
}

/// Asks a chat model whether two element trees are the same functional page.
pub struct ChatEquivalence<C> {
    client: C,
}

impl<C: ChatClient> ChatEquivalence<C> {
    pub fn new(client: C) -> Self {
        Self { client }
    }
}

fn summarize(s: &UIState) -> String {
    fn walk(e: &super::Element, depth: usize, out: &mut String) {
        out.push_str(&format!(
            "{}{} '{}'{}\n",
            "  ".repeat(depth),
            e.role,
            e.label,
            if e.interactable { " *" } else { "" }
        ));
        for c in &e.children {
            walk(c, depth + 1, out);
        }
    }
    let mut out = String::new();
    walk(&s.root, 0, &mut out);
    out
}

impl<C: ChatClient> StateEquivalence for ChatEquivalence<C> {
    fn equivalent(
        &self,
        a: (&StateId, &UIState),
        b: (&StateId, &UIState),
    ) -> Result<bool, EquivalenceFault> {
        if a.0 == b.0 {
            return Ok(true);
        }
        let prompt = format!(
            "Screen A:\n{}\nScreen B:\n{}\nAre A and B the same functional page \
             (same purpose, differing only in transient content)? Answer SAME or DIFFERENT.",
            summarize(a.1),
            summarize(b.1)
        );
        let reply = self.client.chat(&ChatRequest::new(
            self.client.model(),
            vec![ChatMessage::user(prompt)],
        ))?;
        let upper = reply.to_ascii_uppercase();
        match (upper.find("DIFFERENT"), upper.find("SAME")) {
            (Some(d), Some(s)) => Ok(s < d),
            (None, Some(_)) => Ok(true),
            (Some(_), None) => Ok(false),
            (None, None) => Err(EquivalenceFault::Malformed(reply.chars().take(200).collect())),
        }
    }
}

/// Quotient graph. Nodes are visited in order and each joins the first class
/// whose representative it is equivalent to; the first member represents the
/// class. Edges are re-targeted to representatives and deduplicated, keeping
/// self-loops created by merging.
pub fn cluster_states(
    g: &TransitionGraph,
    eq: &dyn StateEquivalence,
) -> Result<TransitionGraph, EquivalenceFault> {
    let mut reps: Vec<StateId> = Vec::new();
    let mut rep_of: HashMap<&StateId, StateId> = HashMap::new();
    let mut nodes: IndexMap<StateId, GraphNode> = IndexMap::new();
    for (id, node) in &g.nodes {
        let mut class = None;
        for r in &reps {
            if eq.equivalent((r, &g.nodes[r].state), (id, &node.state))? {
                class = Some(r.clone());
                break;
            }
        }
        let rep = match class {
            Some(r) => r,
            None => {
                reps.push(id.clone());
                nodes.insert(
                    id.clone(),
                    GraphNode {
                        state: node.state.clone(),
                        members: Vec::new(),
                    },
                );
                id.clone()
            }
        };
        nodes[&rep].members.extend(node.members.iter().cloned());
        rep_of.insert(id, rep);
    }
    let retarget = |id: &StateId| rep_of[id].clone();
    Ok(TransitionGraph {
        start: retarget(&g.start),
        nodes,
        edges: dedup_edges(g.edges.iter().map(|e| Edge {
            from: retarget(&e.from),
            action: e.action.clone(),
            to: retarget(&e.to),
        })),
    })
}
