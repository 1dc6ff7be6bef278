//! The unified cross-platform action space.
//!
//! Actions are written as single call expressions such as
//! `Click(box=(512, 384))` or `Hotkey(key=['ctrl', 'c'])`. The grammar is
//! keyword-argument only and whitespace-insensitive between tokens:
//!
//! ```text
//! call      := name '(' [arg {',' arg}] ')'
//! arg       := key '=' value
//! value     := point | string | keylist | direction
//! point     := '(' int ',' int ')'
//! string    := "'" chars "'" | '"' chars '"'      escapes: \' \" \\ \n
//! keylist   := '[' string {',' string} ']'
//! direction := up | down | left | right          (bare or quoted)
//! ```
//!
//! [`Action`]'s `Display` impl produces the canonical text: exact schema
//! spelling, a single space after commas, single-quoted strings.

mod keys;
mod parse;
pub mod sample;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use keys::{canonicalize_keys, is_known_key, is_modifier, MODIFIERS, NAMED_KEYS};
pub use parse::{parse_action, parse_action_unchecked};

/// A pixel position in screenshot space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: u32,
    pub y: u32,
}

impl Point {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn within(&self, dims: ScreenDims) -> bool {
        self.x < dims.width && self.y < dims.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims")]
pub struct ScreenDims {
    pub width: u32,
    pub height: u32,
}

impl ScreenDims {
    pub fn new(width: u32, height: u32) -> Result<Self, ActionError> {
        if width == 0 || height == 0 {
            return Err(ActionError::MalformedArguments(format!(
                "screen dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }
}

#[derive(Deserialize)]
struct RawDims {
    width: u32,
    height: u32,
}

impl TryFrom<RawDims> for ScreenDims {
    type Error = ActionError;

    fn try_from(r: RawDims) -> Result<Self, Self::Error> {
        ScreenDims::new(r.width, r.height)
    }
}

/// Axis-aligned box `[x_min, y_min, x_max, y_max]`, boundaries inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self, ActionError> {
        if x_min > x_max || y_min > y_max {
            return Err(ActionError::MalformedArguments(format!(
                "inverted box [{x_min}, {y_min}, {x_max}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn contains(&self, p: Point) -> bool {
        self.x_min <= p.x && p.x <= self.x_max && self.y_min <= p.y && p.y <= self.y_max
    }

    /// Integer center, rounding toward the top-left.
    pub fn center(&self) -> Point {
        Point::new(
            self.x_min + (self.x_max - self.x_min) / 2,
            self.y_min + (self.y_max - self.y_min) / 2,
        )
    }

    pub fn within(&self, dims: ScreenDims) -> bool {
        self.x_max < dims.width && self.y_max < dims.height
    }

    pub fn area(&self) -> u64 {
        u64::from(self.x_max - self.x_min + 1) * u64::from(self.y_max - self.y_min + 1)
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x_min, self.y_min, self.x_max, self.y_max].serialize(s)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [a, b, c, e] = <[u32; 4]>::deserialize(d)?;
        BBox::new(a, b, c, e).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

impl FromStr for Direction {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            other => Err(ActionError::MalformedArguments(format!(
                "unknown scroll direction '{other}'"
            ))),
        }
    }
}

/// Target platform. Each one allows the shared primitives plus its own row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Mobile,
    Desktop,
    Web,
}

impl Platform {
    pub const ALL: [Platform; 3] = [Platform::Mobile, Platform::Desktop, Platform::Web];

    pub fn as_str(&self) -> &'static str {
        match self {
            Platform::Mobile => "mobile",
            Platform::Desktop => "desktop",
            Platform::Web => "web",
        }
    }

    pub fn allows(&self, kind: ActionKind) -> bool {
        match kind.scope() {
            None => true,
            Some(p) => p == *self,
        }
    }

    /// Every action kind parseable under this platform, in schema order.
    pub fn allowed_kinds(&self) -> Vec<ActionKind> {
        ActionKind::ALL
            .iter()
            .copied()
            .filter(|k| self.allows(*k))
            .collect()
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Platform {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mobile" => Ok(Platform::Mobile),
            "desktop" => Ok(Platform::Desktop),
            "web" => Ok(Platform::Web),
            other => Err(ActionError::MalformedArguments(format!(
                "unknown platform '{other}'"
            ))),
        }
    }
}

/// Variant tag of an [`Action`], without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Click,
    Drag,
    Scroll,
    Type,
    Wait,
    Finished,
    Hotkey,
    LeftDouble,
    RightSingle,
    Hover,
    BrowserStop,
    LongPress,
    PressBack,
    PressHome,
    PressEnter,
}

impl ActionKind {
    pub const ALL: [ActionKind; 15] = [
        ActionKind::Click,
        ActionKind::Drag,
        ActionKind::Scroll,
        ActionKind::Type,
        ActionKind::Wait,
        ActionKind::Finished,
        ActionKind::Hotkey,
        ActionKind::LeftDouble,
        ActionKind::RightSingle,
        ActionKind::Hover,
        ActionKind::BrowserStop,
        ActionKind::LongPress,
        ActionKind::PressBack,
        ActionKind::PressHome,
        ActionKind::PressEnter,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ActionKind::Click => "Click",
            ActionKind::Drag => "Drag",
            ActionKind::Scroll => "Scroll",
            ActionKind::Type => "Type",
            ActionKind::Wait => "Wait",
            ActionKind::Finished => "Finished",
            ActionKind::Hotkey => "Hotkey",
            ActionKind::LeftDouble => "LeftDouble",
            ActionKind::RightSingle => "RightSingle",
            ActionKind::Hover => "Hover",
            ActionKind::BrowserStop => "BrowserStop",
            ActionKind::LongPress => "LongPress",
            ActionKind::PressBack => "PressBack",
            ActionKind::PressHome => "PressHome",
            ActionKind::PressEnter => "PressEnter",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ActionKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// `None` for shared primitives, otherwise the single platform owning it.
    pub fn scope(&self) -> Option<Platform> {
        match self {
            ActionKind::Click
            | ActionKind::Drag
            | ActionKind::Scroll
            | ActionKind::Type
            | ActionKind::Wait
            | ActionKind::Finished => None,
            ActionKind::Hotkey | ActionKind::LeftDouble | ActionKind::RightSingle => {
                Some(Platform::Desktop)
            }
            ActionKind::Hover | ActionKind::BrowserStop => Some(Platform::Web),
            ActionKind::LongPress
            | ActionKind::PressBack
            | ActionKind::PressHome
            | ActionKind::PressEnter => Some(Platform::Mobile),
        }
    }

    /// Whether the action carries screen coordinates.
    pub fn is_spatial(&self) -> bool {
        matches!(
            self,
            ActionKind::Click
                | ActionKind::Drag
                | ActionKind::Scroll
                | ActionKind::LeftDouble
                | ActionKind::RightSingle
                | ActionKind::Hover
                | ActionKind::LongPress
        )
    }

    pub fn is_parameterless(&self) -> bool {
        matches!(
            self,
            ActionKind::Wait
                | ActionKind::BrowserStop
                | ActionKind::PressBack
                | ActionKind::PressHome
                | ActionKind::PressEnter
        )
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One interaction primitive with its parameters bound.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Click { at: Point },
    Drag { start: Point, end: Point },
    Scroll { start: Point, end: Point, dir: Direction },
    Type { content: String },
    Wait,
    Finished { content: String },
    /// Keys are canonical: lowercase, sorted modifiers first, then the rest in
    /// the order given.
    Hotkey { keys: Vec<String> },
    LeftDouble { at: Point },
    RightSingle { at: Point },
    Hover { at: Point },
    BrowserStop,
    LongPress { at: Point },
    PressBack,
    PressHome,
    PressEnter,
}

impl Action {
    /// Builds a hotkey chord from arbitrary key names, canonicalizing them.
    pub fn hotkey<S: AsRef<str>>(keys: &[S]) -> Result<Self, ActionError> {
        Ok(Action::Hotkey {
            keys: canonicalize_keys(keys)?,
        })
    }

    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Click { .. } => ActionKind::Click,
            Action::Drag { .. } => ActionKind::Drag,
            Action::Scroll { .. } => ActionKind::Scroll,
            Action::Type { .. } => ActionKind::Type,
            Action::Wait => ActionKind::Wait,
            Action::Finished { .. } => ActionKind::Finished,
            Action::Hotkey { .. } => ActionKind::Hotkey,
            Action::LeftDouble { .. } => ActionKind::LeftDouble,
            Action::RightSingle { .. } => ActionKind::RightSingle,
            Action::Hover { .. } => ActionKind::Hover,
            Action::BrowserStop => ActionKind::BrowserStop,
            Action::LongPress { .. } => ActionKind::LongPress,
            Action::PressBack => ActionKind::PressBack,
            Action::PressHome => ActionKind::PressHome,
            Action::PressEnter => ActionKind::PressEnter,
        }
    }

    /// The single target point of click-like actions.
    pub fn point(&self) -> Option<Point> {
        match self {
            Action::Click { at }
            | Action::LeftDouble { at }
            | Action::RightSingle { at }
            | Action::Hover { at }
            | Action::LongPress { at } => Some(*at),
            _ => None,
        }
    }

    /// Every coordinate the action references.
    pub fn points(&self) -> Vec<Point> {
        match self {
            Action::Drag { start, end } | Action::Scroll { start, end, .. } => vec![*start, *end],
            other => other.point().into_iter().collect(),
        }
    }

    /// Canonical text form; same as `to_string()`.
    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("'")?;
    for c in s.chars() {
        match c {
            '\\' => f.write_str("\\\\")?,
            '\'' => f.write_str("\\'")?,
            '\n' => f.write_str("\\n")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("'")
}

fn write_point(f: &mut fmt::Formatter<'_>, p: Point) -> fmt::Result {
    write!(f, "({}, {})", p.x, p.y)
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind().name())?;
        match self {
            Action::Click { at }
            | Action::LeftDouble { at }
            | Action::RightSingle { at }
            | Action::Hover { at }
            | Action::LongPress { at } => {
                f.write_str("box=")?;
                write_point(f, *at)?;
            }
            Action::Drag { start, end } => {
                f.write_str("start=")?;
                write_point(f, *start)?;
                f.write_str(", end=")?;
                write_point(f, *end)?;
            }
            Action::Scroll { start, end, dir } => {
                f.write_str("start=")?;
                write_point(f, *start)?;
                f.write_str(", end=")?;
                write_point(f, *end)?;
                write!(f, ", dir='{}'", dir.as_str())?;
            }
            Action::Type { content } | Action::Finished { content } => {
                f.write_str("content=")?;
                write_quoted(f, content)?;
            }
            Action::Hotkey { keys } => {
                f.write_str("key=[")?;
                for (i, k) in keys.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_quoted(f, k)?;
                }
                f.write_str("]")?;
            }
            Action::Wait
            | Action::BrowserStop
            | Action::PressBack
            | Action::PressHome
            | Action::PressEnter => {}
        }
        f.write_str(")")
    }
}

impl FromStr for Action {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_action_unchecked(s)
    }
}

// Actions travel through JSON files in their canonical text form.
impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_action_unchecked(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    #[error("unknown action '{0}'")]
    UnknownAction(String),
    #[error("action {action} is not available on {platform}")]
    PlatformViolation {
        action: ActionKind,
        platform: Platform,
    },
    #[error("malformed arguments: {0}")]
    MalformedArguments(String),
    #[error("syntax error at offset {offset}: {message}")]
    SyntaxError { offset: usize, message: String },
}

impl ActionError {
    /// Stable error name, used across language boundaries and in reports.
    pub fn name(&self) -> &'static str {
        match self {
            ActionError::UnknownAction(_) => "UnknownAction",
            ActionError::PlatformViolation { .. } => "PlatformViolation",
            ActionError::MalformedArguments(_) => "MalformedArguments",
            ActionError::SyntaxError { .. } => "SyntaxError",
        }
    }
}

/// A validation finding. Violations are data, not faults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    PlatformViolation { action: ActionKind, platform: Platform },
    CoordinateOutOfRange { x: u32, y: u32, width: u32, height: u32 },
    EmptyHotkey,
    UnknownKey { key: String },
    NonCanonicalKeys,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PlatformViolation { action, platform } => {
                write!(f, "{action} is not available on {platform}")
            }
            Violation::CoordinateOutOfRange {
                x,
                y,
                width,
                height,
            } => write!(f, "({x}, {y}) lies outside a {width}x{height} screen"),
            Violation::EmptyHotkey => f.write_str("hotkey has no keys"),
            Violation::UnknownKey { key } => write!(f, "unknown key name '{key}'"),
            Violation::NonCanonicalKeys => f.write_str("hotkey keys are not in canonical order"),
        }
    }
}

/// Checks platform membership, hotkey well-formedness and, when `dims` is
/// given, that every coordinate lies on screen.
pub fn validate_action(
    action: &Action,
    platform: Platform,
    dims: Option<ScreenDims>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let kind = action.kind();
    if !platform.allows(kind) {
        out.push(Violation::PlatformViolation {
            action: kind,
            platform,
        });
    }
    if let Some(dims) = dims {
        for p in action.points() {
            if !p.within(dims) {
                out.push(Violation::CoordinateOutOfRange {
                    x: p.x,
                    y: p.y,
                    width: dims.width,
                    height: dims.height,
                });
            }
        }
    }
    if let Action::Hotkey { keys } = action {
        if keys.is_empty() {
            out.push(Violation::EmptyHotkey);
        }
        let mut all_known = true;
        for k in keys {
            if !is_known_key(k) {
                all_known = false;
                out.push(Violation::UnknownKey { key: k.clone() });
            }
        }
        if all_known && !keys.is_empty() {
            match canonicalize_keys(keys) {
                Ok(canon) if &canon == keys => {}
                _ => out.push(Violation::NonCanonicalKeys),
            }
        }
    }
    out
}
