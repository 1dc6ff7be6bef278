//! Deterministic finite-state environments.
//!
//! Config format (YAML):
//!
//! ```yaml
//! name: settings
//! platform: mobile
//! dims: {width: 1080, height: 2400}
//! start: home
//! states:
//!   - id: home
//!     title: Home            # optional, defaults to id; becomes the root label
//!     screenshot: shots/home.png   # optional, defaults to <name>/<id>.png
//!     elements:
//!       - {role: button, label: Settings, bounds: [0, 0, 200, 200], interactable: true}
//!     transitions:           # declared order is the exploration order
//!       - {action: "Click(box=(100, 100))", target: settings}
//!       - {action: "PressBack()", target: home}
//! ```
//!
//! `act` resolves an action against the current state's transitions: an
//! exact canonical match first, then any transition of the same kind whose
//! point hits the same interactable element. Anything else leaves the state
//! unchanged.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{hash_state, Element, StateId, UIState};
use crate::action::{parse_action, validate_action, Action, BBox, Platform, ScreenDims};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvFault {
    #[error("environment config: {0}")]
    Config(String),
    #[error("environment used before reset")]
    NotReset,
    #[error("invalid action for this environment: {0}")]
    InvalidAction(String),
    #[error("environment is not deterministic: {0}")]
    Nondeterministic(String),
    #[error("environment fault: {0}")]
    Other(String),
}

impl EnvFault {
    pub fn name(&self) -> &'static str {
        "EnvFault"
    }
}

/// A simulated app the explorer and policies can drive.
///
/// Implementations must be deterministic: identical action sequences from
/// `reset` yield identical state sequences.
pub trait SimEnvironment {
    fn platform(&self) -> Platform;
    fn reset(&mut self) -> Result<UIState, EnvFault>;
    fn observe(&self) -> Result<UIState, EnvFault>;
    fn act(&mut self, action: &Action) -> Result<UIState, EnvFault>;
    /// Actions worth trying in the current state, in exploration order.
    fn affordances(&self) -> Result<Vec<Action>, EnvFault>;
}

impl<E: SimEnvironment + ?Sized> SimEnvironment for &mut E {
    fn platform(&self) -> Platform {
        (**self).platform()
    }
    fn reset(&mut self) -> Result<UIState, EnvFault> {
        (**self).reset()
    }
    fn observe(&self) -> Result<UIState, EnvFault> {
        (**self).observe()
    }
    fn act(&mut self, action: &Action) -> Result<UIState, EnvFault> {
        (**self).act(action)
    }
    fn affordances(&self) -> Result<Vec<Action>, EnvFault> {
        (**self).affordances()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub action: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screenshot: Option<String>,
    #[serde(default)]
    pub elements: Vec<Element>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub name: String,
    pub platform: Platform,
    pub dims: ScreenDims,
    pub start: String,
    pub states: Vec<StateSpec>,
}

impl EnvConfig {
    pub fn from_yaml_str(text: &str) -> Result<Self, EnvFault> {
        serde_yaml::from_str(text).map_err(|e| EnvFault::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnvFault> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvFault::Config(format!("{}: {e}", path.display())))?;
        Self::from_yaml_str(&text)
    }
}

#[derive(Debug, Clone)]
struct BuiltState {
    name: String,
    ui: UIState,
    id: StateId,
    transitions: Vec<(Action, usize)>,
}

#[derive(Debug, Clone)]
pub struct FsmEnvironment {
    name: String,
    platform: Platform,
    states: Vec<BuiltState>,
    start: usize,
    current: Option<usize>,
}

impl FsmEnvironment {
    pub fn from_config(cfg: &EnvConfig) -> Result<Self, EnvFault> {
        let bad = |m: String| Err(EnvFault::Config(m));
        let mut index = HashMap::new();
        for (i, s) in cfg.states.iter().enumerate() {
            if index.insert(s.id.as_str(), i).is_some() {
                return bad(format!("duplicate state id '{}'", s.id));
            }
        }
        let Some(&start) = index.get(cfg.start.as_str()) else {
            return bad(format!("start state '{}' is not defined", cfg.start));
        };
        let full = BBox::new(0, 0, cfg.dims.width - 1, cfg.dims.height - 1)
            .map_err(|e| EnvFault::Config(e.to_string()))?;
        let mut states = Vec::with_capacity(cfg.states.len());
        let mut ids: HashMap<StateId, &str> = HashMap::new();
        for spec in &cfg.states {
            let ui = UIState {
                platform: cfg.platform,
                dims: cfg.dims,
                screenshot_ref: spec
                    .screenshot
                    .clone()
                    .unwrap_or_else(|| format!("{}/{}.png", cfg.name, spec.id)),
                root: Element {
                    role: "window".into(),
                    label: spec.title.clone().unwrap_or_else(|| spec.id.clone()),
                    bounds: full,
                    interactable: false,
                    attributes: Default::default(),
                    children: spec.elements.clone(),
                },
            };
            if let Some(v) = ui.violations().first() {
                return bad(format!("state '{}': {v}", spec.id));
            }
            let id = hash_state(&ui);
            if let Some(other) = ids.insert(id.clone(), &spec.id) {
                return bad(format!(
                    "states '{other}' and '{}' are indistinguishable",
                    spec.id
                ));
            }
            let mut seen = HashSet::new();
            let mut transitions = Vec::new();
            for t in &spec.transitions {
                let action = parse_action(&t.action, cfg.platform)
                    .map_err(|e| EnvFault::Config(format!("state '{}': {e}", spec.id)))?;
                if let Some(v) = validate_action(&action, cfg.platform, Some(cfg.dims)).first() {
                    return bad(format!("state '{}': {v}", spec.id));
                }
                if !seen.insert(action.serialize()) {
                    return bad(format!(
                        "state '{}' declares {} twice",
                        spec.id, action
                    ));
                }
                let Some(&target) = index.get(t.target.as_str()) else {
                    return bad(format!(
                        "state '{}': unknown transition target '{}'",
                        spec.id, t.target
                    ));
                };
                transitions.push((action, target));
            }
            states.push(BuiltState {
                name: spec.id.clone(),
                ui,
                id,
                transitions,
            });
        }
        Ok(Self {
            name: cfg.name.clone(),
            platform: cfg.platform,
            states,
            start,
            current: None,
        })
    }

    pub fn from_yaml_str(text: &str) -> Result<Self, EnvFault> {
        Self::from_config(&EnvConfig::from_yaml_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnvFault> {
        Self::from_config(&EnvConfig::load(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Config name of the state with this id.
    pub fn state_name(&self, id: &StateId) -> Option<&str> {
        self.states
            .iter()
            .find(|s| &s.id == id)
            .map(|s| s.name.as_str())
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.id.clone())
    }

    /// Current state's config name.
    pub fn current_name(&self) -> Option<&str> {
        self.current.map(|i| self.states[i].name.as_str())
    }

    fn resolve(&self, from: usize, action: &Action) -> usize {
        let state = &self.states[from];
        if let Some((_, to)) = state.transitions.iter().find(|(a, _)| a == action) {
            return *to;
        }
        if let Some(p) = action.point() {
            if let Some(hit) = state.ui.root.hit_test(p) {
                for (a, to) in &state.transitions {
                    let same_target = a.kind() == action.kind()
                        && a.point()
                            .and_then(|q| state.ui.root.hit_test(q))
                            .is_some_and(|e| std::ptr::eq(e, hit));
                    if same_target {
                        return *to;
                    }
                }
            }
        }
        from
    }
}

impl SimEnvironment for FsmEnvironment {
    fn platform(&self) -> Platform {
        self.platform
    }

    fn reset(&mut self) -> Result<UIState, EnvFault> {
        self.current = Some(self.start);
        Ok(self.states[self.start].ui.clone())
    }

    fn observe(&self) -> Result<UIState, EnvFault> {
        let i = self.current.ok_or(EnvFault::NotReset)?;
        Ok(self.states[i].ui.clone())
    }

    fn act(&mut self, action: &Action) -> Result<UIState, EnvFault> {
        let from = self.current.ok_or(EnvFault::NotReset)?;
        let ui = &self.states[from].ui;
        if let Some(v) = validate_action(action, self.platform, Some(ui.dims)).first() {
            return Err(EnvFault::InvalidAction(format!("{action}: {v}")));
        }
        let to = self.resolve(from, action);
        self.current = Some(to);
        Ok(self.states[to].ui.clone())
    }

    fn affordances(&self) -> Result<Vec<Action>, EnvFault> {
        let i = self.current.ok_or(EnvFault::NotReset)?;
        Ok(self.states[i]
            .transitions
            .iter()
            .map(|(a, _)| a.clone())
            .collect())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::SETTINGS_YAML;
    use super::*;
    use crate::action::Point;

    fn env() -> FsmEnvironment {
        FsmEnvironment::from_yaml_str(SETTINGS_YAML).unwrap()
    }

    #[test]
    fn requires_reset() {
        let mut e = env();
        assert_eq!(e.observe().unwrap_err(), EnvFault::NotReset);
        assert_eq!(e.act(&Action::Wait).unwrap_err(), EnvFault::NotReset);
    }

    #[test]
    fn exact_and_element_level_matching() {
        let mut e = env();
        let home = e.reset().unwrap();
        assert_eq!(home.title(), "home");
        let s = e.act(&Action::Click { at: Point::new(40, 40) }).unwrap();
        assert_eq!(s.title(), "settings");
        assert_eq!(e.act(&Action::PressBack).unwrap().title(), "home");
        // Inside the non-interactable "About" text: no-op.
        assert_eq!(
            e.act(&Action::Click { at: Point::new(60, 10) }).unwrap().title(),
            "home"
        );
        // Long-press on Settings is a different kind: no-op.
        assert_eq!(
            e.act(&Action::LongPress { at: Point::new(10, 10) }).unwrap().title(),
            "home"
        );
    }

    #[test]
    fn invalid_actions_fault() {
        let mut e = env();
        e.reset().unwrap();
        assert!(matches!(
            e.act(&Action::Click { at: Point::new(500, 10) }),
            Err(EnvFault::InvalidAction(_))
        ));
        assert!(matches!(
            e.act(&Action::BrowserStop),
            Err(EnvFault::InvalidAction(_))
        ));
    }

    #[test]
    fn affordances_follow_declaration_order() {
        let mut e = env();
        e.reset().unwrap();
        e.act(&Action::Click { at: Point::new(10, 10) }).unwrap();
        let affs: Vec<String> = e.affordances().unwrap().iter().map(|a| a.to_string()).collect();
        assert_eq!(affs, vec!["Click(box=(50, 75))", "PressBack()"]);
    }

    #[test]
    fn config_errors() {
        let cases = [
            ("start: home", "start: nowhere", "start state"),
            ("target: wifi", "target: mars", "unknown transition target"),
            ("PressBack()\", target: home", "Hover(box=(1, 1))\", target: home", "Hover"),
            ("[0, 50, 99, 99]", "[0, 50, 99, 299]", "outside"),
            ("  - id: wifi\n", "  - id: wifi\n    title: settings\n    elements:\n      - {role: item, label: Wi-Fi, bounds: [0, 50, 99, 99], interactable: true}\n", "indistinguishable"),
        ];
        for (from, to, needle) in cases {
            let yaml = SETTINGS_YAML.replacen(from, to, 1);
            let err = FsmEnvironment::from_yaml_str(&yaml).unwrap_err();
            assert!(err.to_string().contains(needle), "{needle}: {err}");
        }
        let dup = SETTINGS_YAML.replace(
            "      - {action: \"PressBack()\", target: settings}",
            "      - {action: \"PressBack()\", target: settings}\n      - {action: \"PressBack()\", target: wifi}",
        );
        assert!(FsmEnvironment::from_yaml_str(&dup)
            .unwrap_err()
            .to_string()
            .contains("twice"));
    }

    #[test]
    fn name_lookup() {
        let e = env();
        let id = e.state_id("wifi").unwrap();
        assert_eq!(e.state_name(&id), Some("wifi"));
        assert_eq!(e.state_id("nope"), None);
    }
}
