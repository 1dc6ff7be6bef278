//! Random valid actions, for fuzzing and property checks.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{canonicalize_keys, Action, ActionKind, Direction, Platform, Point, ScreenDims, MODIFIERS, NAMED_KEYS};

const TEXT_POOL: &[&str] = &[
    "a", "Z", "7", " ", "'", "\"", "\\", "\n", "\t", ",", "(", ")", "=", "é", "ß", "中", "文",
    "検索", "한", "😀", "hello", "Wi-Fi", "set alarm", "\\n",
];

/// A random string mixing ASCII, quotes, escapes, whitespace and CJK.
pub fn random_text<R: Rng + ?Sized>(rng: &mut R, max_parts: usize) -> String {
    let n = rng.random_range(0..=max_parts);
    (0..n)
        .map(|_| *TEXT_POOL.choose(rng).expect("non-empty"))
        .collect()
}

fn random_point<R: Rng + ?Sized>(rng: &mut R, dims: ScreenDims) -> Point {
    Point::new(
        rng.random_range(0..dims.width),
        rng.random_range(0..dims.height),
    )
}

fn random_chord<R: Rng + ?Sized>(rng: &mut R) -> Vec<String> {
    loop {
        let n = rng.random_range(1..=3);
        let mut keys: Vec<String> = Vec::new();
        for _ in 0..n {
            let k = match rng.random_range(0..3) {
                0 => (*MODIFIERS.choose(rng).expect("non-empty")).to_string(),
                1 => (*NAMED_KEYS.choose(rng).expect("non-empty")).to_string(),
                _ => char::from(rng.random_range(b'a'..=b'z')).to_string(),
            };
            keys.push(k);
        }
        if let Ok(canon) = canonicalize_keys(&keys) {
            return canon;
        }
    }
}

/// A random action of `kind` whose coordinates lie on a `dims` screen.
pub fn random_action_of<R: Rng + ?Sized>(rng: &mut R, kind: ActionKind, dims: ScreenDims) -> Action {
    match kind {
        ActionKind::Click => Action::Click { at: random_point(rng, dims) },
        ActionKind::LeftDouble => Action::LeftDouble { at: random_point(rng, dims) },
        ActionKind::RightSingle => Action::RightSingle { at: random_point(rng, dims) },
        ActionKind::Hover => Action::Hover { at: random_point(rng, dims) },
        ActionKind::LongPress => Action::LongPress { at: random_point(rng, dims) },
        ActionKind::Drag => Action::Drag {
            start: random_point(rng, dims),
            end: random_point(rng, dims),
        },
        ActionKind::Scroll => Action::Scroll {
            start: random_point(rng, dims),
            end: random_point(rng, dims),
            dir: *Direction::ALL.choose(rng).expect("non-empty"),
        },
        ActionKind::Type => Action::Type { content: random_text(rng, 6) },
        ActionKind::Finished => Action::Finished { content: random_text(rng, 4) },
        ActionKind::Hotkey => Action::Hotkey { keys: random_chord(rng) },
        ActionKind::Wait => Action::Wait,
        ActionKind::BrowserStop => Action::BrowserStop,
        ActionKind::PressBack => Action::PressBack,
        ActionKind::PressHome => Action::PressHome,
        ActionKind::PressEnter => Action::PressEnter,
    }
}

/// A random action valid on `platform` with coordinates on a `dims` screen.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R, platform: Platform, dims: ScreenDims) -> Action {
    let kinds = platform.allowed_kinds();
    let kind = *kinds.choose(rng).expect("every platform has actions");
    random_action_of(rng, kind, dims)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::action::{parse_action, validate_action};

    #[test]
    fn samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dims = ScreenDims::new(640, 480).unwrap();
        for p in Platform::ALL {
            for _ in 0..300 {
                let a = random_action(&mut rng, p, dims);
                assert!(validate_action(&a, p, Some(dims)).is_empty(), "{a}");
                assert_eq!(parse_action(&a.serialize(), p).unwrap(), a);
            }
        }
    }
}
