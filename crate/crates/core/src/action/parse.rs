use super::{canonicalize_keys, Action, ActionError, ActionKind, Direction, Platform, Point};

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Point(i64, i64),
    Str(String),
    KeyList(Vec<String>),
    Bare(String),
    Int(i64),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Point(..) => "point",
            Value::Str(_) => "string",
            Value::KeyList(_) => "key list",
            Value::Bare(_) => "identifier",
            Value::Int(_) => "integer",
        }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn error(&self, message: impl Into<String>) -> ActionError {
        ActionError::SyntaxError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ActionError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected '{want}', found '{c}'"))),
            None => Err(self.error(format!("expected '{want}', found end of input"))),
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                self.bump();
            }
            _ => return None,
        }
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.bump();
        }
        Some(&self.src[start..self.pos])
    }

    fn int(&mut self) -> Result<i64, ActionError> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some('-') {
            self.bump();
        }
        let digits_start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
        if self.pos == digits_start {
            return Err(self.error("expected integer"));
        }
        self.src[start..self.pos]
            .parse::<i64>()
            .map_err(|_| ActionError::MalformedArguments(format!(
                "integer '{}' out of range",
                &self.src[start..self.pos]
            )))
    }

    fn string(&mut self) -> Result<String, ActionError> {
        self.skip_ws();
        let quote = match self.bump() {
            Some(q @ ('\'' | '"')) => q,
            _ => return Err(self.error("expected quoted string")),
        };
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error("unterminated string")),
                Some(c) if c == quote => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('\'') => out.push('\''),
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some(c) => return Err(self.error(format!("unsupported escape '\\{c}'"))),
                    None => return Err(self.error("unterminated string")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn value(&mut self) -> Result<Value, ActionError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.bump();
                let x = self.int()?;
                self.expect(',')?;
                let y = self.int()?;
                self.expect(')')?;
                Ok(Value::Point(x, y))
            }
            Some('[') => {
                self.bump();
                let mut keys = Vec::new();
                self.skip_ws();
                if self.peek() == Some(']') {
                    self.bump();
                    return Ok(Value::KeyList(keys));
                }
                loop {
                    keys.push(self.string()?);
                    self.skip_ws();
                    match self.bump() {
                        Some(',') => continue,
                        Some(']') => break,
                        _ => return Err(self.error("expected ',' or ']' in key list")),
                    }
                }
                Ok(Value::KeyList(keys))
            }
            Some('\'' | '"') => Ok(Value::Str(self.string()?)),
            Some(c) if c.is_ascii_digit() || c == '-' => Ok(Value::Int(self.int()?)),
            Some(_) => match self.ident() {
                Some(word) => Ok(Value::Bare(word.to_string())),
                None => Err(self.error("expected a value")),
            },
            None => Err(self.error("expected a value, found end of input")),
        }
    }
}

/// Parses the argument list after the opening parenthesis.
fn arguments(cur: &mut Cursor<'_>) -> Result<Vec<(String, Value)>, ActionError> {
    let mut args = Vec::new();
    cur.skip_ws();
    if cur.peek() == Some(')') {
        cur.bump();
        return Ok(args);
    }
    loop {
        let save = cur.pos;
        let key = match cur.ident() {
            Some(k) => {
                cur.skip_ws();
                if cur.peek() == Some('=') {
                    cur.bump();
                    Some(k.to_string())
                } else {
                    cur.pos = save;
                    None
                }
            }
            None => None,
        };
        let value = cur.value()?;
        match key {
            Some(k) => args.push((k, value)),
            None => {
                return Err(ActionError::MalformedArguments(format!(
                    "positional {} argument; arguments must be written as key=value",
                    value.type_name()
                )))
            }
        }
        cur.skip_ws();
        match cur.bump() {
            Some(',') => continue,
            Some(')') => return Ok(args),
            Some(c) => return Err(cur.error(format!("expected ',' or ')', found '{c}'"))),
            None => return Err(cur.error("unclosed argument list")),
        }
    }
}

struct Args {
    kind: ActionKind,
    items: Vec<(String, Value)>,
}

impl Args {
    fn new(kind: ActionKind, items: Vec<(String, Value)>, allowed: &[&str]) -> Result<Self, ActionError> {
        for (i, (k, _)) in items.iter().enumerate() {
            if !allowed.contains(&k.as_str()) {
                return Err(ActionError::MalformedArguments(format!(
                    "{kind} does not take argument '{k}'"
                )));
            }
            if items[..i].iter().any(|(prev, _)| prev == k) {
                return Err(ActionError::MalformedArguments(format!(
                    "duplicate argument '{k}'"
                )));
            }
        }
        Ok(Self { kind, items })
    }

    fn take(&mut self, key: &str) -> Result<Value, ActionError> {
        let idx = self
            .items
            .iter()
            .position(|(k, _)| k == key)
            .ok_or_else(|| {
                ActionError::MalformedArguments(format!(
                    "{} is missing argument '{key}'",
                    self.kind
                ))
            })?;
        Ok(self.items.remove(idx).1)
    }

    fn point(&mut self, key: &str) -> Result<Point, ActionError> {
        match self.take(key)? {
            Value::Point(x, y) => {
                let cx = u32::try_from(x);
                let cy = u32::try_from(y);
                match (cx, cy) {
                    (Ok(x), Ok(y)) => Ok(Point::new(x, y)),
                    _ => Err(ActionError::MalformedArguments(format!(
                        "coordinates ({x}, {y}) must be non-negative 32-bit integers"
                    ))),
                }
            }
            other => Err(self.ill_typed(key, "point", &other)),
        }
    }

    fn string(&mut self, key: &str) -> Result<String, ActionError> {
        match self.take(key)? {
            Value::Str(s) => Ok(s),
            other => Err(self.ill_typed(key, "string", &other)),
        }
    }

    fn direction(&mut self, key: &str) -> Result<Direction, ActionError> {
        match self.take(key)? {
            Value::Str(s) | Value::Bare(s) => s.parse(),
            other => Err(self.ill_typed(key, "direction", &other)),
        }
    }

    fn keys(&mut self, key: &str) -> Result<Vec<String>, ActionError> {
        match self.take(key)? {
            Value::KeyList(keys) => canonicalize_keys(&keys),
            other => Err(self.ill_typed(key, "key list", &other)),
        }
    }

    fn ill_typed(&self, key: &str, want: &str, got: &Value) -> ActionError {
        ActionError::MalformedArguments(format!(
            "{}: argument '{key}' must be a {want}, got {}",
            self.kind,
            got.type_name()
        ))
    }
}

fn bind(kind: ActionKind, items: Vec<(String, Value)>) -> Result<Action, ActionError> {
    use ActionKind as K;
    let allowed: &[&str] = match kind {
        K::Click | K::LeftDouble | K::RightSingle | K::Hover | K::LongPress => &["box"],
        K::Drag => &["start", "end"],
        K::Scroll => &["start", "end", "dir"],
        K::Type | K::Finished => &["content"],
        K::Hotkey => &["key"],
        K::Wait | K::BrowserStop | K::PressBack | K::PressHome | K::PressEnter => &[],
    };
    let mut args = Args::new(kind, items, allowed)?;
    let action = match kind {
        K::Click => Action::Click { at: args.point("box")? },
        K::LeftDouble => Action::LeftDouble { at: args.point("box")? },
        K::RightSingle => Action::RightSingle { at: args.point("box")? },
        K::Hover => Action::Hover { at: args.point("box")? },
        K::LongPress => Action::LongPress { at: args.point("box")? },
        K::Drag => Action::Drag {
            start: args.point("start")?,
            end: args.point("end")?,
        },
        K::Scroll => Action::Scroll {
            start: args.point("start")?,
            end: args.point("end")?,
            dir: args.direction("dir")?,
        },
        K::Type => Action::Type {
            content: args.string("content")?,
        },
        K::Finished => Action::Finished {
            content: args.string("content")?,
        },
        K::Hotkey => Action::Hotkey {
            keys: args.keys("key")?,
        },
        K::Wait => Action::Wait,
        K::BrowserStop => Action::BrowserStop,
        K::PressBack => Action::PressBack,
        K::PressHome => Action::PressHome,
        K::PressEnter => Action::PressEnter,
    };
    Ok(action)
}

/// Parses one action call without checking platform membership.
pub fn parse_action_unchecked(text: &str) -> Result<Action, ActionError> {
    let mut cur = Cursor::new(text);
    let name = cur
        .ident()
        .ok_or_else(|| cur.error("expected an action name"))?;
    let kind = ActionKind::from_name(name)
        .ok_or_else(|| ActionError::UnknownAction(name.to_string()))?;
    cur.expect('(')?;
    let items = arguments(&mut cur)?;
    cur.skip_ws();
    if cur.peek().is_some() {
        return Err(cur.error("trailing input after action"));
    }
    bind(kind, items)
}

/// Parses one action call and rejects primitives the platform does not offer.
pub fn parse_action(text: &str, platform: Platform) -> Result<Action, ActionError> {
    let action = parse_action_unchecked(text)?;
    let kind = action.kind();
    if !platform.allows(kind) {
        return Err(ActionError::PlatformViolation {
            action: kind,
            platform,
        });
    }
    Ok(action)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn click_on_desktop() {
        assert_eq!(
            parse_action("Click(box=(512, 384))", Platform::Desktop).unwrap(),
            Action::Click {
                at: Point::new(512, 384)
            }
        );
    }

    #[test]
    fn hotkey_on_mobile_is_platform_violation() {
        assert_eq!(
            parse_action("Hotkey(key=['ctrl','c'])", Platform::Mobile),
            Err(ActionError::PlatformViolation {
                action: ActionKind::Hotkey,
                platform: Platform::Mobile
            })
        );
    }

    #[test]
    fn positional_argument_is_malformed() {
        assert!(matches!(
            parse_action("Click(512)", Platform::Desktop),
            Err(ActionError::MalformedArguments(_))
        ));
        assert!(matches!(
            parse_action("Scroll(up)", Platform::Desktop),
            Err(ActionError::MalformedArguments(_))
        ));
    }

    #[test]
    fn scroll_on_mobile() {
        assert_eq!(
            parse_action("Scroll(start=(100,800), end=(100,200), dir='up')", Platform::Mobile)
                .unwrap(),
            Action::Scroll {
                start: Point::new(100, 800),
                end: Point::new(100, 200),
                dir: Direction::Up
            }
        );
    }

    #[test]
    fn whitespace_quotes_and_bare_direction() {
        let a = parse_action_unchecked("  Scroll ( dir = down , end=( 1 ,2 ),start=(3,4) ) ").unwrap();
        assert_eq!(
            a,
            Action::Scroll {
                start: Point::new(3, 4),
                end: Point::new(1, 2),
                dir: Direction::Down
            }
        );
        assert_eq!(
            parse_action_unchecked(r#"Type(content="say \"hi\"\n")"#).unwrap(),
            Action::Type {
                content: "say \"hi\"\n".into()
            }
        );
    }

    #[test]
    fn hotkey_is_canonicalized() {
        assert_eq!(
            parse_action_unchecked("Hotkey(key=['C', 'CTRL'])").unwrap(),
            Action::Hotkey {
                keys: vec!["ctrl".into(), "c".into()]
            }
        );
        assert!(matches!(
            parse_action_unchecked("Hotkey(key=[])"),
            Err(ActionError::MalformedArguments(_))
        ));
    }

    #[test]
    fn error_classes() {
        assert_eq!(
            parse_action_unchecked("Clickk()"),
            Err(ActionError::UnknownAction("Clickk".into()))
        );
        for bad in [
            "Click(box=(1,2)",
            "Click box=(1,2)",
            "Type(content='abc)",
            "Click(box=(1,2)) extra",
            "",
            "Type(content='\\q')",
        ] {
            assert!(
                matches!(parse_action_unchecked(bad), Err(ActionError::SyntaxError { .. })),
                "{bad}"
            );
        }
        for bad in [
            "Click()",
            "Click(box=(1,2), extra=(1,1))",
            "Click(box=(1,2), box=(1,2))",
            "Click(box='x')",
            "Click(box=(-1,2))",
            "Click(box=(99999999999,2))",
            "Wait(content='x')",
            "Scroll(start=(1,1), end=(1,1), dir='sideways')",
            "Hotkey(key=['ctrl', 'warp'])",
        ] {
            assert!(
                matches!(
                    parse_action_unchecked(bad),
                    Err(ActionError::MalformedArguments(_))
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn every_name_parses_under_its_platforms_only() {
        let samples = [
            "Click(box=(1, 1))",
            "Drag(start=(1, 1), end=(2, 2))",
            "Scroll(start=(1, 1), end=(2, 2), dir='left')",
            "Type(content='x')",
            "Wait()",
            "Finished(content='')",
            "Hotkey(key=['enter'])",
            "LeftDouble(box=(1, 1))",
            "RightSingle(box=(1, 1))",
            "Hover(box=(1, 1))",
            "BrowserStop()",
            "LongPress(box=(1, 1))",
            "PressBack()",
            "PressHome()",
            "PressEnter()",
        ];
        for p in Platform::ALL {
            let ok: Vec<ActionKind> = samples
                .iter()
                .filter_map(|s| parse_action(s, p).ok())
                .map(|a| a.kind())
                .collect();
            assert_eq!(ok, p.allowed_kinds(), "{p}");
        }
    }
}
