//! Hotkey key-name whitelist and chord canonicalization.

use super::ActionError;

/// Modifier keys in canonical (alphabetical) order.
pub const MODIFIERS: [&str; 6] = ["alt", "cmd", "ctrl", "meta", "shift", "win"];

pub const NAMED_KEYS: [&str; 32] = [
    "enter",
    "tab",
    "esc",
    "space",
    "backspace",
    "delete",
    "insert",
    "home",
    "end",
    "pageup",
    "pagedown",
    "up",
    "down",
    "left",
    "right",
    "capslock",
    "printscreen",
    "f1",
    "f2",
    "f3",
    "f4",
    "f5",
    "f6",
    "f7",
    "f8",
    "f9",
    "f10",
    "f11",
    "f12",
    "menu",
    "volumeup",
    "volumedown",
];

const ALIASES: [(&str, &str); 7] = [
    ("control", "ctrl"),
    ("command", "cmd"),
    ("option", "alt"),
    ("escape", "esc"),
    ("return", "enter"),
    ("del", "delete"),
    ("super", "win"),
];

pub fn is_modifier(key: &str) -> bool {
    MODIFIERS.contains(&key)
}

/// True for modifiers, named keys and single printable ASCII characters.
/// Expects an already lowercased name.
pub fn is_known_key(key: &str) -> bool {
    if is_modifier(key) || NAMED_KEYS.contains(&key) {
        return true;
    }
    let mut chars = key.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => c.is_ascii_graphic() && !c.is_ascii_uppercase(),
        _ => false,
    }
}

fn normalize(key: &str) -> String {
    let lower = key.trim().to_lowercase();
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == lower)
        .map(|(_, canon)| (*canon).to_string())
        .unwrap_or(lower)
}

/// Lowercases, resolves aliases, then orders the chord as sorted modifiers
/// followed by the remaining keys in their given order.
pub fn canonicalize_keys<S: AsRef<str>>(keys: &[S]) -> Result<Vec<String>, ActionError> {
    if keys.is_empty() {
        return Err(ActionError::MalformedArguments(
            "Hotkey requires at least one key".into(),
        ));
    }
    let mut modifiers = Vec::new();
    let mut rest = Vec::new();
    for raw in keys {
        let key = normalize(raw.as_ref());
        if !is_known_key(&key) {
            return Err(ActionError::MalformedArguments(format!(
                "unknown key name '{}'",
                raw.as_ref()
            )));
        }
        if modifiers.contains(&key) || rest.contains(&key) {
            return Err(ActionError::MalformedArguments(format!(
                "duplicate key '{key}' in chord"
            )));
        }
        if is_modifier(&key) {
            modifiers.push(key);
        } else {
            rest.push(key);
        }
    }
    modifiers.sort_by_key(|m| MODIFIERS.iter().position(|x| x == m));
    modifiers.extend(rest);
    Ok(modifiers)
}
