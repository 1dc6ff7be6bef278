use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::Trajectory;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: schema error: {detail}")]
    SchemaError { line: usize, detail: String },
    #[error("line {line}: invariant violation in '{id}': {description}")]
    InvariantViolation {
        line: usize,
        id: String,
        description: String,
    },
}

impl DataError {
    pub fn name(&self) -> &'static str {
        match self {
            DataError::Io { .. } => "Io",
            DataError::SchemaError { .. } => "SchemaError",
            DataError::InvariantViolation { .. } => "InvariantViolation",
        }
    }

    /// 1-based line number, when the error is tied to one.
    pub fn line(&self) -> Option<usize> {
        match self {
            DataError::Io { .. } => None,
            DataError::SchemaError { line, .. } | DataError::InvariantViolation { line, .. } => {
                Some(*line)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    SchemaError,
    InvariantViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl From<&DataError> for Option<Diagnostic> {
    fn from(e: &DataError) -> Self {
        match e {
            DataError::Io { .. } => None,
            DataError::SchemaError { line, detail } => Some(Diagnostic {
                line: *line,
                kind: DiagnosticKind::SchemaError,
                message: detail.clone(),
            }),
            DataError::InvariantViolation {
                line,
                id,
                description,
            } => Some(Diagnostic {
                line: *line,
                kind: DiagnosticKind::InvariantViolation,
                message: format!("{id}: {description}"),
            }),
        }
    }
}

/// Result of a lenient read: the valid records plus one diagnostic per
/// problem found.
#[derive(Debug, Default)]
pub struct LoadOutcome {
    pub trajectories: Vec<Trajectory>,
    pub diagnostics: Vec<Diagnostic>,
}

fn check_line(
    line_no: usize,
    text: &str,
    seen: &mut HashSet<String>,
) -> Result<Trajectory, Vec<DataError>> {
    let traj: Trajectory = serde_json::from_str(text).map_err(|e| {
        vec![DataError::SchemaError {
            line: line_no,
            detail: e.to_string(),
        }]
    })?;
    let mut errors: Vec<DataError> = traj
        .violations()
        .into_iter()
        .map(|description| DataError::InvariantViolation {
            line: line_no,
            id: traj.id.clone(),
            description,
        })
        .collect();
    if !seen.insert(traj.id.clone()) {
        errors.push(DataError::InvariantViolation {
            line: line_no,
            id: traj.id.clone(),
            description: "duplicate trajectory id".into(),
        });
    }
    if errors.is_empty() {
        Ok(traj)
    } else {
        Err(errors)
    }
}

fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String), DataError>> {
    reader
        .lines()
        .enumerate()
        .map(move |(i, l)| {
            l.map(|s| (i + 1, s)).map_err(|source| DataError::Io {
                path: PathBuf::from("<reader>"),
                source,
            })
        })
        .filter(|r| !matches!(r, Ok((_, s)) if s.trim().is_empty()))
}

/// Strict read: stops at the first schema error or invariant violation.
pub fn read_trajectories<R: BufRead>(reader: R) -> Result<Vec<Trajectory>, DataError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in lines(reader) {
        let (line_no, text) = item?;
        match check_line(line_no, &text, &mut seen) {
            Ok(t) => out.push(t),
            Err(mut errs) => return Err(errs.remove(0)),
        }
    }
    Ok(out)
}

/// Lenient read: keeps every valid record and reports the rest.
pub fn read_trajectories_lenient<R: BufRead>(reader: R) -> Result<LoadOutcome, DataError> {
    let mut seen = HashSet::new();
    let mut out = LoadOutcome::default();
    for item in lines(reader) {
        let (line_no, text) = item?;
        match check_line(line_no, &text, &mut seen) {
            Ok(t) => out.trajectories.push(t),
            Err(errs) => out
                .diagnostics
                .extend(errs.iter().filter_map(Option::<Diagnostic>::from)),
        }
    }
    Ok(out)
}

pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Vec<Trajectory>, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_trajectories(BufReader::new(file)).map_err(|e| match e {
        DataError::Io { source, .. } => DataError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// One compact JSON object per line, in input order.
pub fn to_jsonl(trajs: &[Trajectory]) -> String {
    let mut out = String::new();
    for t in trajs {
        out.push_str(&serde_json::to_string(t).expect("trajectory serializes"));
        out.push('\n');
    }
    out
}

pub fn save_trajectories(path: impl AsRef<Path>, trajs: &[Trajectory]) -> Result<(), DataError> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(to_jsonl(trajs).as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)
}
