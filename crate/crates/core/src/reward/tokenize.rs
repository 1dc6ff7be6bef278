//! Tokenization and multiset token F1 for content rewards.

use std::collections::HashMap;

use unicode_normalization::UnicodeNormalization;

/// Han ideographs, kana and Hangul. Each such codepoint is its own token.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF        // hiragana, katakana
        | 0x3400..=0x4DBF      // CJK extension A
        | 0x4E00..=0x9FFF      // CJK unified ideographs
        | 0xAC00..=0xD7AF      // Hangul syllables
        | 0xF900..=0xFAFF      // compatibility ideographs
        | 0x20000..=0x2EBEF    // extensions B..F
        | 0x2F800..=0x2FA1F)
}

/// NFC-normalizes and lowercases, splits on anything that is not
/// alphanumeric, then breaks CJK runs into single codepoints.
pub fn tokenize(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect::<String>().to_lowercase();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in normalized.chars() {
        if is_cjk(c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else if c.is_alphanumeric() {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Multiset token F1 between a prediction and a reference. Two empty token
/// lists count as an exact match.
pub fn token_f1(pred: &str, gt: &str) -> f64 {
    let pred = tokenize(pred);
    let gt = tokenize(gt);
    if pred.is_empty() && gt.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || gt.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gt {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &pred {
        if let Some(n) = counts.get_mut(t.as_str()) {
            if *n > 0 {
                *n -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / gt.len() as f64;
    2.0 * precision * recall / (precision + recall)
}
