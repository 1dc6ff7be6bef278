use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Rate;
use crate::action::{parse_action, Action, ActionKind, Platform};
use crate::response::{extract_response_sections, TagConfig};
use crate::reward::{
    content_reward, coord_reward, drag_reward, hotkey_reward, inside_bbox_reward,
    scroll_reward, token_f1, RewardConfig,
};
use crate::trajectory::{Step, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavPrediction {
    pub trajectory_id: String,
    pub step_index: usize,
    pub response_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub type_match: bool,
    /// Implies `type_match`.
    pub full_match: bool,
    pub matched_rule: String,
    pub diagnostics: BTreeMap<String, f64>,
}

impl StepOutcome {
    fn failed(rule: &str) -> Self {
        Self {
            type_match: false,
            full_match: false,
            matched_rule: rule.into(),
            diagnostics: BTreeMap::new(),
        }
    }
}

/// Coordinate actions for the coord / non-coord split: every primitive that
/// carries a screen position.
pub fn is_coord_kind(kind: ActionKind) -> bool {
    kind.is_spatial()
}

/// Parses a tagged response when it contains the action tag, otherwise a
/// bare action.
pub fn parse_prediction(text: &str, tags: &TagConfig, platform: Platform) -> Result<Action, String> {
    if text.contains(&format!("<{}>", tags.action)) {
        extract_response_sections(text, tags, platform)
            .map(|r| r.action)
            .map_err(|e| e.to_string())
    } else {
        parse_action(text.trim(), platform).map_err(|e| e.to_string())
    }
}

/// Step correctness. Types must match; then click-like actions need the
/// point inside the annotated target box (or within the tight coordinate
/// band when there is none), drags and scrolls need full reward, text
/// needs the F1 threshold, hotkeys an exact match. Parameterless actions
/// pass on type alone.
pub fn match_step(pred: &Action, gt: &Step, cfg: &RewardConfig) -> StepOutcome {
    use Action as A;
    let g = &gt.action;
    if pred.kind() != g.kind() {
        let mut o = StepOutcome::failed("type_mismatch");
        o.diagnostics.insert("type".into(), 0.0);
        return o;
    }
    let mut d = BTreeMap::new();
    let (rule, ok) = match (pred, g) {
        (A::Drag { start: ps, end: pe }, A::Drag { start: gs, end: ge }) => {
            let r = drag_reward((*ps, *pe), (*gs, *ge), gt.dims, cfg);
            d.insert("drag".into(), r);
            ("drag_band", r == 1.0)
        }
        (A::Scroll { .. }, A::Scroll { .. }) => {
            let r = scroll_reward(pred, g, gt.dims, cfg);
            d.insert("scroll".into(), r);
            ("scroll_band", r == 1.0)
        }
        (A::Type { content: p }, A::Type { content: c })
        | (A::Finished { content: p }, A::Finished { content: c }) => {
            d.insert("f1".into(), token_f1(p, c));
            ("content_f1", content_reward(p, c, cfg) == 1.0)
        }
        (A::Hotkey { keys: p }, A::Hotkey { keys: k }) => {
            ("hotkey_exact", hotkey_reward(p, k) == 1.0)
        }
        _ => match (pred.point(), g.point()) {
            (Some(p), Some(q)) => match gt.target_box {
                Some(b) => {
                    let r = inside_bbox_reward(p, &b);
                    d.insert("inside_box".into(), r);
                    ("target_box", r == 1.0)
                }
                None => {
                    let r = coord_reward(p, q, gt.dims, cfg);
                    d.insert("coord".into(), r);
                    ("coord_band", r == 1.0)
                }
            },
            _ => ("type_only", true),
        },
    };
    d.insert("type".into(), 1.0);
    StepOutcome {
        type_match: true,
        full_match: ok,
        matched_rule: rule.into(),
        diagnostics: d,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredStep {
    pub trajectory_id: String,
    pub step_index: usize,
    pub platform: Platform,
    pub gt_kind: ActionKind,
    pub outcome: StepOutcome,
}

/// One outcome per benchmark step, in benchmark order, plus key-mismatch
/// warnings. Missing and unparseable predictions fail.
pub fn score_steps(
    bench: &[Trajectory],
    preds: &[NavPrediction],
    cfg: &RewardConfig,
    tags: &TagConfig,
) -> (Vec<ScoredStep>, Vec<String>) {
    let mut warnings = Vec::new();
    let mut by_key: HashMap<(&str, usize), &str> = HashMap::new();
    for p in preds {
        let key = (p.trajectory_id.as_str(), p.step_index);
        match by_key.entry(key) {
            Entry::Occupied(_) => warnings.push(format!(
                "duplicate prediction for {} step {}; keeping the first",
                p.trajectory_id, p.step_index
            )),
            Entry::Vacant(v) => {
                v.insert(p.response_text.as_str());
            }
        }
    }
    let gt_keys: HashSet<(&str, usize)> = bench
        .iter()
        .flat_map(|t| t.steps.iter().map(move |s| (t.id.as_str(), s.index)))
        .collect();
    for p in preds {
        if !gt_keys.contains(&(p.trajectory_id.as_str(), p.step_index)) {
            warnings.push(format!(
                "KeyMismatch: prediction for {} step {} has no benchmark step",
                p.trajectory_id, p.step_index
            ));
        }
    }
    let mut out = Vec::new();
    for t in bench {
        for s in &t.steps {
            let outcome = match by_key.get(&(t.id.as_str(), s.index)) {
                None => StepOutcome::failed("missing"),
                Some(text) => match parse_prediction(text, tags, t.platform) {
                    Ok(a) => match_step(&a, s, cfg),
                    Err(_) => StepOutcome::failed("unparseable"),
                },
            };
            out.push(ScoredStep {
                trajectory_id: t.id.clone(),
                step_index: s.index,
                platform: t.platform,
                gt_kind: s.action.kind(),
                outcome,
            });
        }
    }
    (out, warnings)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub type_accuracy: Rate,
    pub step_success_rate: Rate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NavReport {
    pub trajectories: usize,
    pub steps: usize,
    pub missing: usize,
    pub unparseable: usize,
    pub type_accuracy: Rate,
    pub step_success_rate: Rate,
    pub coord_action_rate: Rate,
    pub non_coord_action_rate: Rate,
    pub average: Rate,
    pub per_platform: BTreeMap<String, Breakdown>,
    pub per_action: BTreeMap<String, Breakdown>,
    pub warnings: Vec<String>,
}

#[derive(Default)]
struct Tally {
    steps: usize,
    types: usize,
    full: usize,
}

impl Tally {
    fn add(&mut self, o: &StepOutcome) {
        self.steps += 1;
        self.types += usize::from(o.type_match);
        self.full += usize::from(o.full_match);
    }

    fn breakdown(&self) -> Breakdown {
        Breakdown {
            type_accuracy: Rate::new(self.types, self.steps),
            step_success_rate: Rate::new(self.full, self.steps),
        }
    }
}

impl NavReport {
    pub fn from_scored(trajectories: usize, scored: &[ScoredStep], warnings: Vec<String>) -> Self {
        let mut all = Tally::default();
        let mut coord = Tally::default();
        let mut non_coord = Tally::default();
        let mut platforms: BTreeMap<String, Tally> = BTreeMap::new();
        let mut actions: BTreeMap<String, Tally> = BTreeMap::new();
        let mut missing = 0;
        let mut unparseable = 0;
        for s in scored {
            all.add(&s.outcome);
            if is_coord_kind(s.gt_kind) {
                coord.add(&s.outcome)
            } else {
                non_coord.add(&s.outcome)
            }
            platforms.entry(s.platform.to_string()).or_default().add(&s.outcome);
            actions
                .entry(s.gt_kind.name().to_string())
                .or_default()
                .add(&s.outcome);
            match s.outcome.matched_rule.as_str() {
                "missing" => missing += 1,
                "unparseable" => unparseable += 1,
                _ => {}
            }
        }
        NavReport {
            trajectories,
            steps: all.steps,
            missing,
            unparseable,
            type_accuracy: Rate::new(all.types, all.steps),
            step_success_rate: Rate::new(all.full, all.steps),
            coord_action_rate: Rate::new(coord.full, coord.steps),
            non_coord_action_rate: Rate::new(non_coord.full, non_coord.steps),
            average: Rate::new(all.full, all.steps),
            per_platform: platforms.iter().map(|(k, t)| (k.clone(), t.breakdown())).collect(),
            per_action: actions.iter().map(|(k, t)| (k.clone(), t.breakdown())).collect(),
            warnings,
        }
    }
}

pub fn evaluate_navigation(
    bench: &[Trajectory],
    preds: &[NavPrediction],
    cfg: &RewardConfig,
    tags: &TagConfig,
) -> NavReport {
    let (scored, warnings) = score_steps(bench, preds, cfg, tags);
    for w in &warnings {
        log::warn!("{w}");
    }
    NavReport::from_scored(bench.len(), &scored, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{BBox, ScreenDims};

    fn step(action: &str, target_box: Option<BBox>) -> Step {
        Step {
            index: 0,
            screenshot_ref: "s.png".into(),
            dims: ScreenDims::new(1000, 1000).unwrap(),
            observation: String::new(),
            thought: String::new(),
            action: action.parse().unwrap(),
            target_box,
            description: None,
        }
    }

    fn m(pred: &str, gt: &Step) -> StepOutcome {
        match_step(&pred.parse().unwrap(), gt, &RewardConfig::default())
    }

    #[test]
    fn click_against_target_box() {
        let gt = step("Click(box=(50, 50))", Some(BBox::new(40, 40, 60, 60).unwrap()));
        let o = m("Click(box=(60, 41))", &gt);
        assert!(o.full_match);
        assert_eq!(o.matched_rule, "target_box");
        let o = m("Click(box=(61, 50))", &gt);
        assert!(o.type_match && !o.full_match);
    }

    #[test]
    fn click_falls_back_to_coord_band() {
        // theta1 = 0.025 of 1000 px: deltas below 25 px pass.
        let gt = step("Click(box=(500, 500))", None);
        assert!(m("Click(box=(524, 476))", &gt).full_match);
        assert!(!m("Click(box=(525, 500))", &gt).full_match);
        assert_eq!(m("Click(box=(525, 500))", &gt).matched_rule, "coord_band");
    }

    #[test]
    fn type_content_threshold() {
        // gt tokens {a b c d e}, pred {a b x y z}: P = R = 2/5, F1 = 0.4.
        let gt = step("Type(content='a b c d e')", None);
        let o = m("Type(content='a b x y z')", &gt);
        assert!(o.type_match && !o.full_match);
        assert!((o.diagnostics["f1"] - 0.4).abs() < 1e-12);
        assert!(m("Type(content='a b c x y')", &gt).full_match);
    }

    #[test]
    fn other_rules() {
        let gt = step("Scroll(start=(500, 800), end=(500, 200), dir='up')", None);
        assert!(m("Scroll(start=(501, 800), end=(500, 201), dir='up')", &gt).full_match);
        assert!(!m("Scroll(start=(500, 800), end=(500, 200), dir='down')", &gt).full_match);
        let gt = step("Hotkey(key=['ctrl', 'c'])", None);
        assert!(m("Hotkey(key=['control', 'c'])", &gt).full_match);
        assert!(!m("Hotkey(key=['ctrl', 'v'])", &gt).full_match);
        let gt = step("PressBack()", None);
        assert_eq!(m("PressBack()", &gt).matched_rule, "type_only");
        let o = m("PressHome()", &gt);
        assert!(!o.type_match && !o.full_match);
        let gt = step("Finished(content='')", None);
        assert!(m("Finished(content='')", &gt).full_match);
        let gt = step("Drag(start=(0, 0), end=(100, 100))", None);
        assert!(m("Drag(start=(1, 1), end=(100, 99))", &gt).full_match);
    }

    #[test]
    fn prediction_forms() {
        let tags = TagConfig::default();
        let bare = parse_prediction(" PressBack() ", &tags, Platform::Mobile).unwrap();
        assert_eq!(bare, Action::PressBack);
        let tagged = parse_prediction(
            "<observation>o</observation><think>t</think><action>Wait()</action>",
            &tags,
            Platform::Mobile,
        )
        .unwrap();
        assert_eq!(tagged, Action::Wait);
        assert!(parse_prediction("<action>Wait()</action>", &tags, Platform::Mobile).is_err());
        assert!(parse_prediction("Hotkey(key=['a'])", &tags, Platform::Mobile).is_err());
    }
}
