//! Bottom-up trajectory synthesis: explore a simulated environment with DFS,
//! build the state-transition graph, merge equivalent states into virtual
//! nodes, enumerate cycle-free paths and describe them in natural language.

mod dfs;
mod enrich;
mod env;
mod graph;
pub mod mock;
mod paths;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::action::{Action, BBox, Platform, Point, ScreenDims};

pub use dfs::{explore, Exploration};
pub use enrich::{
    enrich_path, ChatEnricher, EnrichOptions, EnrichStep, Enrichment, EnricherFault,
    SemanticEnricher, TemplateEnricher,
};
pub use env::{EnvConfig, EnvFault, FsmEnvironment, SimEnvironment, StateSpec, TransitionSpec};
pub use graph::{
    build_graph, cluster_states, ChatEquivalence, Edge, EquivalenceFault, GraphError, GraphNode,
    GroupEquivalence, IdentityEquivalence, StateEquivalence, TitleEquivalence, TransitionGraph,
};
pub use paths::{extract_paths, Path, DEFAULT_MAX_DEPTH, DEFAULT_MAX_PATHS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Element {
    pub role: String,
    #[serde(default)]
    pub label: String,
    pub bounds: BBox,
    #[serde(default)]
    pub interactable: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Element>,
}

impl Element {
    /// Deepest interactable element whose bounds contain `p`. Later siblings
    /// win ties, as they are drawn on top.
    pub fn hit_test(&self, p: Point) -> Option<&Element> {
        if !self.bounds.contains(p) {
            return None;
        }
        for child in self.children.iter().rev() {
            if let Some(hit) = child.hit_test(p) {
                return Some(hit);
            }
        }
        self.interactable.then_some(self)
    }

    fn check_within(&self, dims: ScreenDims, path: &str, out: &mut Vec<String>) {
        if !self.bounds.within(dims) {
            out.push(format!("element {path} ({}) lies outside the screen", self.role));
        }
        for (i, c) in self.children.iter().enumerate() {
            c.check_within(dims, &format!("{path}.{i}"), out);
        }
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(Element::count).sum::<usize>()
    }
}

/// One observed screen: the element tree plus an opaque screenshot reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UIState {
    pub platform: Platform,
    pub dims: ScreenDims,
    pub screenshot_ref: String,
    pub root: Element,
}

impl UIState {
    /// Page title: the root element's label.
    pub fn title(&self) -> &str {
        &self.root.label
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.root.check_within(self.dims, "0", &mut out);
        out
    }
}

/// Hex SHA-256 of a canonical state serialization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub String);

impl StateId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn short(&self) -> &str {
        &self.0[..self.0.len().min(12)]
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub pre: StateId,
    pub action: Action,
    pub post: StateId,
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn write_canonical(e: &Element, depth: usize, out: &mut String) {
    let b = e.bounds;
    out.push_str(&format!(
        "{depth}|{}|{:?}|{},{},{},{}|{}",
        normalize_ws(&e.role),
        normalize_ws(&e.label),
        b.x_min,
        b.y_min,
        b.x_max,
        b.y_max,
        u8::from(e.interactable)
    ));
    for (k, v) in &e.attributes {
        out.push_str(&format!("|{:?}={:?}", normalize_ws(k), normalize_ws(v)));
    }
    out.push('\n');
    for c in &e.children {
        write_canonical(c, depth + 1, out);
    }
}

/// Canonical text the state id is computed from. The screenshot reference
/// is not part of it: two visits to the same screen hash equal.
pub fn canonical_state(s: &UIState) -> String {
    let mut out = format!("{}|{}x{}\n", s.platform, s.dims.width, s.dims.height);
    write_canonical(&s.root, 0, &mut out);
    out
}

pub fn hash_state(s: &UIState) -> StateId {
    StateId(hex::encode(Sha256::digest(canonical_state(s).as_bytes())))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Env(#[from] EnvFault),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Equivalence(#[from] EquivalenceFault),
    #[error(transparent)]
    Enricher(#[from] EnricherFault),
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn hashing_is_deterministic() {
        let s = state("home", vec![el("button", "Wi-Fi", [0, 0, 10, 10], true)]);
        assert_eq!(hash_state(&s), hash_state(&s.clone()));
        assert_eq!(hash_state(&s).0.len(), 64);
    }

    #[test]
    fn one_label_changes_the_id() {
        let a = state("home", vec![el("button", "Wi-Fi", [0, 0, 10, 10], true)]);
        let b = state("home", vec![el("button", "Bluetooth", [0, 0, 10, 10], true)]);
        assert_ne!(hash_state(&a), hash_state(&b));
        let mut c = a.clone();
        c.root.children[0].bounds = BBox::new(0, 0, 10, 11).unwrap();
        assert_ne!(hash_state(&a), hash_state(&c));
    }

    #[test]
    fn attribute_order_and_whitespace_do_not_matter() {
        let a: Element = serde_json::from_str(
            r#"{"role":"button","label":"Save  changes","bounds":[0,0,5,5],
                "attributes":{"id":"save","enabled":"true"}}"#,
        )
        .unwrap();
        let b: Element = serde_json::from_str(
            r#"{"role":"button","label":" Save changes ","bounds":[0,0,5,5],
                "attributes":{"enabled":"true","id":"save"}}"#,
        )
        .unwrap();
        assert_eq!(hash_state(&state("p", vec![a])), hash_state(&state("p", vec![b])));
    }

    #[test]
    fn screenshot_ref_is_not_hashed() {
        let a = state("home", vec![]);
        let mut b = a.clone();
        b.screenshot_ref = "other.png".into();
        assert_eq!(hash_state(&a), hash_state(&b));
    }

    #[test]
    fn hit_test_picks_deepest_interactable() {
        let mut list = el("list", "", [0, 0, 50, 50], true);
        list.children.push(el("item", "A", [0, 0, 20, 20], true));
        list.children.push(el("text", "caption", [30, 30, 40, 40], false));
        let s = state("p", vec![list]);
        assert_eq!(s.root.hit_test(Point::new(5, 5)).unwrap().label, "A");
        assert_eq!(s.root.hit_test(Point::new(35, 35)).unwrap().role, "list");
        assert!(s.root.hit_test(Point::new(80, 80)).is_none());
    }

    #[test]
    fn out_of_screen_elements_are_flagged() {
        let s = state("p", vec![el("button", "x", [90, 90, 120, 95], true)]);
        assert_eq!(s.violations().len(), 1);
    }
}
