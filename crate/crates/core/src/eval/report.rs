use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::{EvalError, GroundReport, NavReport, Rate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Table,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "table" => Ok(ReportFormat::Table),
            other => Err(format!("unknown report format '{other}' (json, table)")),
        }
    }
}

pub trait Report: Serialize {
    fn table(&self) -> String;
}

fn row(out: &mut String, label: &str, r: &Rate) {
    let _ = writeln!(
        out,
        "{label:<28} {:>7.2}%  ({}/{})",
        r.percent(),
        r.num,
        r.den
    );
}

fn footer(out: &mut String, warnings: &[String]) {
    if !warnings.is_empty() {
        let _ = writeln!(out, "warnings:");
        for w in warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
}

impl Report for NavReport {
    fn table(&self) -> String {
        let mut out = format!(
            "trajectories {}  steps {}  missing {}  unparseable {}\n",
            self.trajectories, self.steps, self.missing, self.unparseable
        );
        row(&mut out, "type accuracy", &self.type_accuracy);
        row(&mut out, "step success rate", &self.step_success_rate);
        row(&mut out, "coord actions", &self.coord_action_rate);
        row(&mut out, "non-coord actions", &self.non_coord_action_rate);
        row(&mut out, "average", &self.average);
        for (name, b) in &self.per_platform {
            row(&mut out, &format!("{name} type"), &b.type_accuracy);
            row(&mut out, &format!("{name} sr"), &b.step_success_rate);
        }
        for (name, b) in &self.per_action {
            row(&mut out, &format!("{name} type"), &b.type_accuracy);
            row(&mut out, &format!("{name} sr"), &b.step_success_rate);
        }
        footer(&mut out, &self.warnings);
        out
    }
}

impl Report for GroundReport {
    fn table(&self) -> String {
        let mut out = format!(
            "records {}  missing {}  unparseable {}\n",
            self.records, self.missing, self.unparseable
        );
        row(&mut out, "accuracy", &self.accuracy);
        for (platform, kinds) in &self.cells {
            for (kind, r) in kinds {
                row(&mut out, &format!("{platform}/{kind}"), r);
            }
            row(&mut out, &format!("{platform} overall"), &self.per_platform[platform]);
        }
        footer(&mut out, &self.warnings);
        out
    }
}

pub fn render_report<R: Report>(report: &R, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Table => report.table(),
    }
}

/// Writes the rendered report to `path`, or stdout when `None`.
pub fn emit_report<R: Report>(
    report: &R,
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<(), EvalError> {
    let text = render_report(report, format);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| EvalError::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
