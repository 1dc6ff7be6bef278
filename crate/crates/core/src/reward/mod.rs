//! Grounding and navigation rewards.
//!
//! Grounding: `R = w1 * R_fmt + w2 * R_pos`, where `R_pos` is the
//! inclusive point-in-box test. Navigation: `R = w3 * R_fmt + w4 * R_act`,
//! where `R_act = R_type * R_param` and the parameter reward is routed by
//! action primitive (coordinate band, drag/scroll band, content F1, hotkey
//! match).
//!
//! Distance thresholds are fractions of the screen dimension on the
//! matching axis.

mod tokenize;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{canonicalize_keys, Action, BBox, Platform, Point, ScreenDims};
use crate::response::{extract_response_sections, TagConfig};

pub use tokenize::{is_cjk, token_f1, tokenize};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Weights and thresholds for every reward, plus the GRPO clip range and KL
/// coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub f1_threshold: f64,
    pub clip_epsilon: f64,
    pub kl_coef: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w1: 0.1,
            w2: 0.9,
            w3: 0.1,
            w4: 0.9,
            theta1: 0.025,
            theta2: 0.05,
            alpha1: 0.025,
            alpha2: 0.05,
            beta1: 0.025,
            beta2: 0.05,
            f1_threshold: 0.5,
            clip_epsilon: 0.2,
            kl_coef: 0.04,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        for (name, w) in [("w1", self.w1), ("w2", self.w2), ("w3", self.w3), ("w4", self.w4)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be a finite value >= 0")));
            }
        }
        if self.w1 + self.w2 <= 0.0 {
            return bad("w1 + w2 must be positive");
        }
        if self.w3 + self.w4 <= 0.0 {
            return bad("w3 + w4 must be positive");
        }
        for (name, lo, hi) in [
            ("theta", self.theta1, self.theta2),
            ("alpha", self.alpha1, self.alpha2),
            ("beta", self.beta1, self.beta2),
        ] {
            if !(lo >= 0.0 && lo < hi && hi.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "{name}1 must be >= 0 and strictly below {name}2"
                )));
            }
        }
        if !(self.f1_threshold > 0.0 && self.f1_threshold <= 1.0) {
            return bad("f1_threshold must lie in (0, 1]");
        }
        if self.clip_epsilon.is_nan() || self.clip_epsilon <= 0.0 {
            return bad("clip_epsilon must be positive");
        }
        if self.kl_coef.is_nan() || self.kl_coef < 0.0 {
            return bad("kl_coef must be >= 0");
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RewardConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

/// Component scores of one navigation reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format: f64,
    pub action_type: f64,
    pub parameter: f64,
    /// `action_type * parameter`
    pub action: f64,
    pub total: f64,
    pub trace: BTreeMap<String, f64>,
}

/// A parsed grounding answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundingAnswer {
    Point(Point),
    Box(BBox),
}

impl GroundingAnswer {
    /// The point scored by the inside-box test: the point itself, or a box's
    /// center.
    pub fn target(&self) -> Point {
        match self {
            GroundingAnswer::Point(p) => *p,
            GroundingAnswer::Box(b) => b.center(),
        }
    }
}

fn parse_uints(body: &str) -> Option<Vec<u32>> {
    body.split(',')
        .map(|s| s.trim().parse::<u32>().ok())
        .collect()
}

/// Parses `(x, y)` or `[x1, y1, x2, y2]`, optionally wrapped in
/// `<answer>...</answer>`.
pub fn parse_grounding_answer(raw: &str) -> Option<GroundingAnswer> {
    let mut text = raw.trim();
    if let Some(rest) = text.strip_prefix("<answer>") {
        text = rest.strip_suffix("</answer>")?.trim();
    }
    if let Some(body) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        match parse_uints(body)?.as_slice() {
            [x, y] => Some(GroundingAnswer::Point(Point::new(*x, *y))),
            _ => None,
        }
    } else if let Some(body) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        match parse_uints(body)?.as_slice() {
            [a, b, c, d] => BBox::new(*a, *b, *c, *d).ok().map(GroundingAnswer::Box),
            _ => None,
        }
    } else {
        None
    }
}

pub fn grounding_format_reward(raw: &str) -> f64 {
    if parse_grounding_answer(raw).is_some() {
        1.0
    } else {
        0.0
    }
}

pub fn inside_bbox_reward(p: Point, gt: &BBox) -> f64 {
    if gt.contains(p) {
        1.0
    } else {
        0.0
    }
}

pub fn grounding_total_reward(raw: &str, gt: &BBox, cfg: &RewardConfig) -> f64 {
    match parse_grounding_answer(raw) {
        Some(answer) => cfg.w1 + cfg.w2 * inside_bbox_reward(answer.target(), gt),
        None => 0.0,
    }
}

pub fn type_reward(pred: &Action, gt: &Action) -> f64 {
    if pred.kind() == gt.kind() {
        1.0
    } else {
        0.0
    }
}

fn delta(a: u32, b: u32) -> f64 {
    f64::from(a.abs_diff(b))
}

/// Full credit when both axis deltas sit under the first threshold, half
/// credit when both sit under the second.
pub fn coord_reward(pred: Point, gt: Point, dims: ScreenDims, cfg: &RewardConfig) -> f64 {
    let dx = delta(pred.x, gt.x);
    let dy = delta(pred.y, gt.y);
    let (w, h) = (f64::from(dims.width), f64::from(dims.height));
    if dx < cfg.theta1 * w && dy < cfg.theta1 * h {
        1.0
    } else if dx < cfg.theta2 * w && dy < cfg.theta2 * h {
        0.5
    } else {
        0.0
    }
}

/// Largest normalized endpoint deviation of a two-point gesture.
pub fn max_endpoint_deviation(
    pred: (Point, Point),
    gt: (Point, Point),
    dims: ScreenDims,
) -> f64 {
    let (w, h) = (f64::from(dims.width), f64::from(dims.height));
    [
        delta(pred.0.x, gt.0.x) / w,
        delta(pred.0.y, gt.0.y) / h,
        delta(pred.1.x, gt.1.x) / w,
        delta(pred.1.y, gt.1.y) / h,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn band(m: f64, lo: f64, hi: f64) -> f64 {
    if m <= lo {
        1.0
    } else if m <= hi {
        0.5
    } else {
        0.0
    }
}

pub fn drag_reward(
    pred: (Point, Point),
    gt: (Point, Point),
    dims: ScreenDims,
    cfg: &RewardConfig,
) -> f64 {
    band(max_endpoint_deviation(pred, gt, dims), cfg.alpha1, cfg.alpha2)
}

/// Zero on any direction mismatch, otherwise banded like a drag on the
/// scroll thresholds. Non-scroll actions score zero.
pub fn scroll_reward(pred: &Action, gt: &Action, dims: ScreenDims, cfg: &RewardConfig) -> f64 {
    match (pred, gt) {
        (
            Action::Scroll {
                start: ps,
                end: pe,
                dir: pd,
            },
            Action::Scroll {
                start: gs,
                end: ge,
                dir: gd,
            },
        ) => {
            if pd != gd {
                return 0.0;
            }
            band(
                max_endpoint_deviation((*ps, *pe), (*gs, *ge), dims),
                cfg.beta1,
                cfg.beta2,
            )
        }
        _ => 0.0,
    }
}

pub fn content_reward(pred: &str, gt: &str, cfg: &RewardConfig) -> f64 {
    if token_f1(pred, gt) >= cfg.f1_threshold {
        1.0
    } else {
        0.0
    }
}

/// Exact match after canonicalization. Chords that fail to canonicalize
/// score zero.
pub fn hotkey_reward<S: AsRef<str>>(pred: &[S], gt: &[S]) -> f64 {
    match (canonicalize_keys(pred), canonicalize_keys(gt)) {
        (Ok(p), Ok(g)) if p == g => 1.0,
        _ => 0.0,
    }
}

/// Parameter score for two actions of the same primitive, with a trace of
/// the intermediate quantities. Returns 0 for mismatched primitives.
pub fn parameter_reward(
    pred: &Action,
    gt: &Action,
    dims: ScreenDims,
    cfg: &RewardConfig,
    trace: &mut BTreeMap<String, f64>,
) -> f64 {
    use Action as A;
    match (pred, gt) {
        (A::Click { at: p }, A::Click { at: g })
        | (A::LeftDouble { at: p }, A::LeftDouble { at: g })
        | (A::RightSingle { at: p }, A::RightSingle { at: g })
        | (A::Hover { at: p }, A::Hover { at: g })
        | (A::LongPress { at: p }, A::LongPress { at: g }) => {
            trace.insert("dx".into(), delta(p.x, g.x));
            trace.insert("dy".into(), delta(p.y, g.y));
            let r = coord_reward(*p, *g, dims, cfg);
            trace.insert("coord".into(), r);
            r
        }
        (A::Drag { start: ps, end: pe }, A::Drag { start: gs, end: ge }) => {
            let m = max_endpoint_deviation((*ps, *pe), (*gs, *ge), dims);
            trace.insert("max_deviation".into(), m);
            let r = drag_reward((*ps, *pe), (*gs, *ge), dims, cfg);
            trace.insert("drag".into(), r);
            r
        }
        (A::Scroll { start: ps, end: pe, dir: pd }, A::Scroll { start: gs, end: ge, dir: gd }) => {
            trace.insert(
                "max_deviation".into(),
                max_endpoint_deviation((*ps, *pe), (*gs, *ge), dims),
            );
            trace.insert("dir_match".into(), if pd == gd { 1.0 } else { 0.0 });
            let r = scroll_reward(pred, gt, dims, cfg);
            trace.insert("scroll".into(), r);
            r
        }
        (A::Type { content: p }, A::Type { content: g })
        | (A::Finished { content: p }, A::Finished { content: g }) => {
            trace.insert("f1".into(), token_f1(p, g));
            let r = content_reward(p, g, cfg);
            trace.insert("content".into(), r);
            r
        }
        (A::Hotkey { keys: p }, A::Hotkey { keys: g }) => {
            let r = hotkey_reward(p, g);
            trace.insert("hotkey".into(), r);
            r
        }
        _ if pred.kind() == gt.kind() && gt.kind().is_parameterless() => 1.0,
        _ => 0.0,
    }
}

/// Scores an already-parsed prediction as if it came from a well-formed
/// response: `format` is 1 and `total = w3 + w4 * action`.
pub fn action_reward(
    pred: &Action,
    gt: &Action,
    dims: ScreenDims,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let mut trace = BTreeMap::new();
    let action_type = type_reward(pred, gt);
    let parameter = if action_type > 0.0 {
        parameter_reward(pred, gt, dims, cfg, &mut trace)
    } else {
        0.0
    };
    let action = action_type * parameter;
    RewardBreakdown {
        format: 1.0,
        action_type,
        parameter,
        action,
        total: cfg.w3 + cfg.w4 * action,
        trace,
    }
}

/// Full navigation reward for a raw tagged response.
pub fn nav_total_reward(
    raw: &str,
    gt: &Action,
    dims: ScreenDims,
    cfg: &RewardConfig,
    tags: &TagConfig,
    platform: Platform,
) -> RewardBreakdown {
    match extract_response_sections(raw, tags, platform) {
        Ok(resp) => action_reward(&resp.action, gt, dims, cfg),
        Err(_) => RewardBreakdown {
            format: 0.0,
            action_type: 0.0,
            parameter: 0.0,
            action: 0.0,
            total: 0.0,
            trace: BTreeMap::new(),
        },
    }
}
