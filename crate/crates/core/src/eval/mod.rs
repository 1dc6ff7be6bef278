//! Offline benchmark metrics: navigation Type Accuracy / Step SR with the
//! coordinate / non-coordinate split, and point-in-box grounding accuracy.
//!
//! Prediction files are JSONL. Navigation:
//! `{"trajectory_id": "t-001", "step_index": 0, "response_text": "<observation>..."}`
//! where `response_text` is a tagged response or a bare action.
//! Grounding benchmark: `{"id", "instruction", "screenshot_ref", "bbox": [x1, y1, x2, y2],
//! "platform", "element_kind"}`; grounding predictions: `{"id", "response_text"}`.

mod ground;
mod nav;
mod report;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ground::{
    evaluate_grounding, grounding_outcome, GroundPrediction, GroundRecord, GroundReport, GroundingOutcome,
};
pub use nav::{
    evaluate_navigation, is_coord_kind, match_step, parse_prediction, score_steps, Breakdown,
    NavPrediction, NavReport, ScoredStep, StepOutcome,
};
pub use report::{emit_report, render_report, Report, ReportFormat};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: schema error: {detail}")]
    SchemaError {
        path: PathBuf,
        line: usize,
        detail: String,
    },
}

impl EvalError {
    pub fn name(&self) -> &'static str {
        match self {
            EvalError::Io { .. } => "IoError",
            EvalError::SchemaError { .. } => "SchemaError",
        }
    }
}

/// `num / den`, or 0 when nothing was counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub num: usize,
    pub den: usize,
    pub value: f64,
}

impl Rate {
    pub fn new(num: usize, den: usize) -> Self {
        let value = if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        };
        Self { num, den, value }
    }

    pub fn percent(&self) -> f64 {
        self.value * 100.0
    }
}

/// Reads a JSONL file of `T`, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, EvalError> {
    let path = path.as_ref();
    let io = |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| EvalError::SchemaError {
                path: path.to_path_buf(),
                line: i + 1,
                detail: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_arithmetic() {
        assert_eq!(Rate::new(3, 4).value, 0.75);
        assert_eq!(Rate::new(0, 0).value, 0.0);
        assert_eq!(Rate::new(1, 2).percent(), 50.0);
    }

    #[test]
    fn jsonl_errors_carry_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.jsonl");
        std::fs::write(&p, "{\"id\":\"a\",\"response_text\":\"x\"}\n\n{oops}\n").unwrap();
        let err = read_jsonl::<GroundPrediction>(&p).unwrap_err();
        assert!(matches!(err, EvalError::SchemaError { line: 3, .. }));
        assert_eq!(
            read_jsonl::<GroundPrediction>(dir.path().join("none")).unwrap_err().name(),
            "IoError"
        );
    }
}
