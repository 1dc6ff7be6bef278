use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;

use guinav::mllm::{ChatJudge, RuleJudge, TaskCompletionJudge};
use guinav::trajectory::{
    apply_filters, audit_all, dataset_stats, load_trajectories, read_trajectories_lenient,
    save_trajectories, AuditVerdict, Diagnostic,
};

use crate::config::GlobalConfig;
use crate::{http_client, to_json, usage, write_out, Status};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Trajectory JSONL file
    pub input: PathBuf,
    /// Write the validation record as JSON here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ValidationRecord<'a> {
    valid_trajectories: usize,
    diagnostics: &'a [Diagnostic],
}

pub fn validate(a: &ValidateArgs) -> anyhow::Result<Status> {
    let f = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let outcome = read_trajectories_lenient(BufReader::new(f))?;
    for d in &outcome.diagnostics {
        eprintln!("{}:{}: {:?}: {}", a.input.display(), d.line, d.kind, d.message);
    }
    let record = ValidationRecord {
        valid_trajectories: outcome.trajectories.len(),
        diagnostics: &outcome.diagnostics,
    };
    if let Some(p) = &a.out {
        write_out(Some(p), &to_json(&record))?;
    }
    eprintln!(
        "{} valid trajectories, {} diagnostics",
        record.valid_trajectories,
        outcome.diagnostics.len()
    );
    Ok(if outcome.diagnostics.is_empty() {
        Status::Ok
    } else {
        Status::Failed
    })
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Trajectory JSONL file
    pub input: PathBuf,
    /// Kept trajectories, as JSONL
    #[arg(long)]
    pub out: PathBuf,
    /// Filter report as JSON (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Drop trajectories with fewer steps than this (default 4)
    #[arg(long)]
    pub min_steps: Option<usize>,
    /// Drop trajectories repeating one action this many times in a row; scroll and wait get twice the allowance (default 3)
    #[arg(long)]
    pub repeat_limit: Option<usize>,
}

pub fn filter(a: &FilterArgs, g: &GlobalConfig) -> anyhow::Result<Status> {
    let mut cfg = g.filter;
    if let Some(n) = a.min_steps {
        cfg.min_steps = n;
    }
    if let Some(n) = a.repeat_limit {
        cfg.repeat_limit = n;
    }
    cfg.validate().map_err(usage)?;
    let trajs = load_trajectories(&a.input)?;
    let filtered = apply_filters(&trajs, &cfg);
    save_trajectories(&a.out, &filtered.kept)?;
    write_out(a.report.as_deref(), &to_json(&filtered.report))?;
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum JudgeChoice {
    AlwaysPass,
    AlwaysFail,
    RequireFinished,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Trajectory JSONL file
    pub input: PathBuf,
    /// Audited trajectories (verdict and rationale filled in), as JSONL
    #[arg(long)]
    pub out: PathBuf,
    /// Audit summary as JSON (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Offline judge stub; implies offline judging
    #[arg(long, value_enum)]
    pub judge: Option<JudgeChoice>,
    /// Do not attach screenshot files to chat judge requests
    #[arg(long)]
    pub no_images: bool,
}

#[derive(Serialize)]
struct AuditSummary {
    audited: usize,
    passed: usize,
    failed: usize,
    errors: Vec<String>,
}

pub fn audit(a: &AuditArgs, g: &GlobalConfig) -> anyhow::Result<Status> {
    let mut trajs = load_trajectories(&a.input)?;
    let judge: Box<dyn TaskCompletionJudge> = match (a.judge, g.offline) {
        (Some(JudgeChoice::AlwaysPass), _) => Box::new(RuleJudge::AlwaysPass),
        (Some(JudgeChoice::AlwaysFail), _) => Box::new(RuleJudge::AlwaysFail),
        (Some(JudgeChoice::RequireFinished), _) | (None, true) => {
            Box::new(RuleJudge::RequireFinished)
        }
        (None, false) => {
            let mut j = ChatJudge::new(http_client(g)?);
            j.attach_screenshots = !a.no_images;
            Box::new(j)
        }
    };
    let results = audit_all(&mut trajs, judge.as_ref(), g.jobs);
    let errors: Vec<String> = trajs
        .iter()
        .zip(&results)
        .filter_map(|(t, r)| r.as_ref().err().map(|e| format!("{}: {}: {e}", t.id, e.name())))
        .collect();
    let count = |v: AuditVerdict| trajs.iter().filter(|t| t.verdict == v).count();
    let summary = AuditSummary {
        audited: results.len() - errors.len(),
        passed: count(AuditVerdict::AutoPass),
        failed: count(AuditVerdict::AutoFail),
        errors,
    };
    for e in &summary.errors {
        eprintln!("{e}");
    }
    save_trajectories(&a.out, &trajs)?;
    write_out(a.report.as_deref(), &to_json(&summary))?;
    Ok(if summary.errors.is_empty() {
        Status::Ok
    } else {
        Status::Failed
    })
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Trajectory JSONL file
    pub input: PathBuf,
    /// Write the statistics record here (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn stats(a: &StatsArgs) -> anyhow::Result<Status> {
    let trajs = load_trajectories(&a.input)?;
    write_out(a.out.as_deref(), &to_json(&dataset_stats(&trajs)))?;
    Ok(Status::Ok)
}
