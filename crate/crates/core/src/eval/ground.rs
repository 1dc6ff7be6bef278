use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::Rate;
use crate::action::{BBox, Platform};
use crate::reward::parse_grounding_answer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundRecord {
    pub id: String,
    pub instruction: String,
    pub screenshot_ref: String,
    pub bbox: BBox,
    pub platform: Platform,
    /// "text" or "icon" on the standard benchmarks; free-form otherwise.
    pub element_kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundPrediction {
    pub id: String,
    pub response_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundingOutcome {
    Correct,
    Outside,
    Unparseable,
    Missing,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundReport {
    pub records: usize,
    pub missing: usize,
    pub unparseable: usize,
    pub accuracy: Rate,
    /// platform -> element kind -> accuracy.
    pub cells: BTreeMap<String, BTreeMap<String, Rate>>,
    pub per_platform: BTreeMap<String, Rate>,
    pub warnings: Vec<String>,
}

pub fn grounding_outcome(record: &GroundRecord, pred: Option<&str>) -> GroundingOutcome {
    match pred {
        None => GroundingOutcome::Missing,
        Some(text) => match parse_grounding_answer(text) {
            None => GroundingOutcome::Unparseable,
            Some(a) if record.bbox.contains(a.target()) => GroundingOutcome::Correct,
            Some(_) => GroundingOutcome::Outside,
        },
    }
}

/// Point-in-box accuracy. A predicted box counts through its center.
/// Missing and unparseable predictions are wrong.
pub fn evaluate_grounding(records: &[GroundRecord], preds: &[GroundPrediction]) -> GroundReport {
    let mut warnings = Vec::new();
    let mut by_id: HashMap<&str, &str> = HashMap::new();
    for p in preds {
        if by_id.contains_key(p.id.as_str()) {
            warnings.push(format!("duplicate prediction for {}; keeping the first", p.id));
        } else {
            by_id.insert(&p.id, &p.response_text);
        }
    }
    let known: HashSet<&str> = records.iter().map(|r| r.id.as_str()).collect();
    for p in preds {
        if !known.contains(p.id.as_str()) {
            warnings.push(format!("KeyMismatch: prediction {} has no benchmark record", p.id));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let mut correct = 0;
    let mut missing = 0;
    let mut unparseable = 0;
    let mut cells: BTreeMap<String, BTreeMap<String, (usize, usize)>> = BTreeMap::new();
    let mut platforms: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in records {
        let o = grounding_outcome(r, by_id.get(r.id.as_str()).copied());
        let hit = usize::from(o == GroundingOutcome::Correct);
        correct += hit;
        missing += usize::from(o == GroundingOutcome::Missing);
        unparseable += usize::from(o == GroundingOutcome::Unparseable);
        let c = cells
            .entry(r.platform.to_string())
            .or_default()
            .entry(r.element_kind.clone())
            .or_default();
        c.0 += hit;
        c.1 += 1;
        let p = platforms.entry(r.platform.to_string()).or_default();
        p.0 += hit;
        p.1 += 1;
    }
    GroundReport {
        records: records.len(),
        missing,
        unparseable,
        accuracy: Rate::new(correct, records.len()),
        cells: cells
            .into_iter()
            .map(|(p, kinds)| {
                let kinds = kinds
                    .into_iter()
                    .map(|(k, (n, d))| (k, Rate::new(n, d)))
                    .collect();
                (p, kinds)
            })
            .collect(),
        per_platform: platforms
            .into_iter()
            .map(|(p, (n, d))| (p, Rate::new(n, d)))
            .collect(),
        warnings,
    }
}
