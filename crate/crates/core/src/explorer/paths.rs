use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::graph::{Edge, TransitionGraph};
use super::StateId;
use crate::action::Action;

pub const DEFAULT_MAX_DEPTH: usize = 12;
pub const DEFAULT_MAX_PATHS: usize = 1000;

/// A cycle-free walk from the graph's start node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Path {
    /// `actions.len() + 1` nodes, no repeats.
    pub nodes: Vec<StateId>,
    pub actions: Vec<Action>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Hex SHA-256 of the canonical action sequence.
    pub fn digest(&self) -> String {
        action_digest(&self.actions)
    }
}

fn action_digest(actions: &[Action]) -> String {
    let mut h = Sha256::new();
    for a in actions {
        h.update(a.serialize().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

struct Walker<'a> {
    g: &'a TransitionGraph,
    max_depth: usize,
    max_paths: usize,
    nodes: Vec<StateId>,
    actions: Vec<Action>,
    on_path: HashSet<StateId>,
    seen: HashSet<String>,
    out: Vec<Path>,
}

impl Walker<'_> {
    fn full(&self) -> bool {
        self.out.len() >= self.max_paths
    }

    fn visit(&mut self, at: &StateId) {
        let edges: Vec<&Edge> = self.g.out_edges(at).collect();
        for e in edges {
            if self.full() {
                return;
            }
            if self.on_path.contains(&e.to) {
                continue;
            }
            self.nodes.push(e.to.clone());
            self.actions.push(e.action.clone());
            self.on_path.insert(e.to.clone());
            if self.seen.insert(action_digest(&self.actions)) {
                self.out.push(Path {
                    nodes: self.nodes.clone(),
                    actions: self.actions.clone(),
                });
            }
            if self.actions.len() < self.max_depth {
                self.visit(&e.to);
            }
            self.on_path.remove(&e.to);
            self.nodes.pop();
            self.actions.pop();
        }
    }
}

/// Every non-empty simple path from `g.start` with at most `max_depth`
/// edges, in DFS preorder over edge insertion order. An edge into a node
/// already on the current path is skipped. Paths with an action sequence
/// already emitted are dropped. Stops after `max_paths` paths.
pub fn extract_paths(g: &TransitionGraph, max_depth: usize, max_paths: usize) -> Vec<Path> {
    if max_depth == 0 || max_paths == 0 {
        return Vec::new();
    }
    let mut w = Walker {
        g,
        max_depth,
        max_paths,
        nodes: vec![g.start.clone()],
        actions: Vec::new(),
        on_path: HashSet::from([g.start.clone()]),
        seen: HashSet::new(),
        out: Vec::new(),
    };
    w.visit(&g.start);
    w.out
}

#[cfg(test)]
mod tests {
    use indexmap::IndexMap;

    use super::super::graph::GraphNode;
    use super::super::{fixtures::state, hash_state};
    use super::*;

    fn graph(names: &[&str], edges: &[(usize, Action, usize)]) -> (Vec<StateId>, TransitionGraph) {
        let mut nodes = IndexMap::new();
        let mut ids = Vec::new();
        for n in names {
            let s = state(n, vec![]);
            let id = hash_state(&s);
            ids.push(id.clone());
            nodes.insert(
                id.clone(),
                GraphNode {
                    state: s,
                    members: vec![id],
                },
            );
        }
        let edges = edges
            .iter()
            .map(|(a, act, b)| Edge {
                from: ids[*a].clone(),
                action: act.clone(),
                to: ids[*b].clone(),
            })
            .collect();
        (
            ids.clone(),
            TransitionGraph {
                start: ids[0].clone(),
                nodes,
                edges,
            },
        )
    }

    fn by_index(ids: &[StateId], paths: &[Path]) -> Vec<Vec<usize>> {
        paths
            .iter()
            .map(|p| {
                p.nodes
                    .iter()
                    .map(|n| ids.iter().position(|i| i == n).unwrap())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn triangle() {
        let (ids, g) = graph(
            &["A", "B", "C"],
            &[
                (0, Action::PressEnter, 1),
                (0, Action::PressHome, 2),
                (1, Action::PressEnter, 2),
            ],
        );
        let paths = extract_paths(&g, 3, 100);
        assert_eq!(by_index(&ids, &paths), vec![vec![0, 1], vec![0, 1, 2], vec![0, 2]]);
    }

    #[test]
    fn back_edge_to_start_is_skipped() {
        let (ids, g) = graph(
            &["A", "B", "C"],
            &[
                (0, Action::PressEnter, 1),
                (0, Action::PressHome, 2),
                (1, Action::PressEnter, 2),
                (1, Action::PressBack, 0),
            ],
        );
        let paths = by_index(&ids, &extract_paths(&g, 3, 100));
        assert_eq!(paths.len(), 3);
        assert!(!paths.contains(&vec![0, 1, 0]));
    }

    #[test]
    fn limits() {
        let (_, g) = graph(
            &["A", "B", "C"],
            &[(0, Action::PressEnter, 1), (1, Action::PressEnter, 2)],
        );
        assert_eq!(extract_paths(&g, 1, 100).len(), 1);
        let first = extract_paths(&g, 3, 1);
        assert_eq!(first.len(), 1);
        assert_eq!(first[0], extract_paths(&g, 3, 100)[0]);
    }

    #[test]
    fn identical_action_sequences_are_deduplicated() {
        // Two Enter edges out of A (possible after merging) yield one path.
        let (_, g) = graph(
            &["A", "B", "C"],
            &[(0, Action::PressEnter, 1), (0, Action::PressEnter, 2)],
        );
        assert_eq!(extract_paths(&g, 3, 100).len(), 1);
    }

    #[test]
    fn self_loops_never_extend_a_path() {
        let (_, g) = graph(&["A"], &[(0, Action::Wait, 0)]);
        assert!(extract_paths(&g, 5, 100).is_empty());
    }
}
