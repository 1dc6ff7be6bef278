use std::path::PathBuf;

use clap::{Args, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use guinav::eval::{
    emit_report, evaluate_grounding, evaluate_navigation, read_jsonl, GroundRecord,
    NavPrediction, ReportFormat,
};
use guinav::reward::{
    grounding_format_reward, inside_bbox_reward, nav_total_reward, parse_grounding_answer,
};
use guinav::trajectory::{load_trajectories, Step};
use guinav::{parse_action, Action, BBox, Platform, Point, ScreenDims, TagConfig};

use crate::config::GlobalConfig;
use crate::{to_json, usage, write_out, Status};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Benchmark file
    #[arg(long)]
    pub gt: PathBuf,
    /// Prediction JSONL file
    #[arg(long)]
    pub pred: PathBuf,
    /// Report destination (stdout when omitted)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Report format: json or table
    #[arg(long, default_value = "json")]
    pub format: ReportFormat,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Navigation: Type Accuracy, Step SR and the coord / non-coord split over trajectory steps
    Nav(EvalArgs),
    /// Grounding: point-in-box accuracy per platform and element kind
    Ground(EvalArgs),
}

pub fn eval(c: &EvalCommand, g: &GlobalConfig) -> anyhow::Result<Status> {
    match c {
        EvalCommand::Nav(a) => {
            let bench = load_trajectories(&a.gt)?;
            let preds: Vec<NavPrediction> = read_jsonl(&a.pred)?;
            let report = evaluate_navigation(&bench, &preds, &g.reward, &TagConfig::default());
            emit_report(&report, a.format, a.report.as_deref())?;
        }
        EvalCommand::Ground(a) => {
            let records: Vec<GroundRecord> = read_jsonl(&a.gt)?;
            let preds = read_jsonl(&a.pred)?;
            let report = evaluate_grounding(&records, &preds);
            emit_report(&report, a.format, a.report.as_deref())?;
        }
    }
    Ok(Status::Ok)
}

#[derive(Debug, Subcommand)]
pub enum RewardCommand {
    /// Navigation reward of a tagged response against a ground-truth action
    Nav {
        /// Raw model response with observation, thought and action sections
        #[arg(long)]
        response: String,
        /// Ground-truth action, e.g. "Click(box=(120, 640))"
        #[arg(long)]
        gt: String,
        /// Screen width in pixels
        #[arg(long)]
        width: u32,
        /// Screen height in pixels
        #[arg(long)]
        height: u32,
        /// mobile, desktop or web
        #[arg(long, default_value = "mobile")]
        platform: Platform,
    },
    /// Grounding reward of an answer against a target box
    Ground {
        /// Raw answer: "(x, y)" or "[x1, y1, x2, y2]", optionally in <answer> tags
        #[arg(long)]
        response: String,
        /// Target box as x1,y1,x2,y2
        #[arg(long)]
        bbox: String,
    },
}

#[derive(Serialize)]
struct GroundingRewardRecord {
    format: f64,
    position: f64,
    total: f64,
}

fn parse_bbox(s: &str) -> anyhow::Result<BBox> {
    let v: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("--bbox '{s}': {e}")))?;
    match v.as_slice() {
        [a, b, c, d] => BBox::new(*a, *b, *c, *d).map_err(|e| usage(format!("--bbox: {e}"))),
        _ => Err(usage(format!("--bbox '{s}' needs four numbers"))),
    }
}

pub fn reward(c: &RewardCommand, g: &GlobalConfig) -> anyhow::Result<Status> {
    let cfg = &g.reward;
    let text = match c {
        RewardCommand::Nav {
            response,
            gt,
            width,
            height,
            platform,
        } => {
            let dims = ScreenDims::new(*width, *height).map_err(|e| usage(e.to_string()))?;
            let gt = match parse_action(gt, *platform) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: ground truth: {}: {e}", e.name());
                    return Ok(Status::Failed);
                }
            };
            let b = nav_total_reward(response, &gt, dims, cfg, &TagConfig::default(), *platform);
            to_json(&b)
        }
        RewardCommand::Ground { response, bbox } => {
            let bbox = parse_bbox(bbox)?;
            let format = grounding_format_reward(response);
            let position = parse_grounding_answer(response)
                .map_or(0.0, |a| inside_bbox_reward(a.target(), &bbox));
            to_json(&GroundingRewardRecord {
                format,
                position,
                total: cfg.w1 * format + cfg.w2 * position,
            })
        }
    };
    write_out(None, &text)?;
    Ok(Status::Ok)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Benchmark trajectory file
    #[arg(long)]
    pub gt: PathBuf,
    /// Prediction JSONL destination
    #[arg(long)]
    pub out: PathBuf,
    /// Probability of corrupting each step
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
    /// Emit bare action text instead of tagged responses
    #[arg(long)]
    pub bare: bool,
}

/// A wrong answer for `step`: half the time the wrong primitive, otherwise
/// the right primitive with bad parameters where it has any.
fn corrupt(step: &Step, rng: &mut ChaCha8Rng) -> Action {
    let gt = &step.action;
    let wrong_type = || {
        if matches!(gt, Action::Wait) {
            Action::Finished {
                content: String::new(),
            }
        } else {
            Action::Wait
        }
    };
    if rng.random_bool(0.5) {
        return wrong_type();
    }
    let far = |p: Point| {
        Point::new(
            (p.x + step.dims.width / 2) % step.dims.width,
            (p.y + step.dims.height / 2) % step.dims.height,
        )
    };
    match gt {
        Action::Click { at } => Action::Click { at: far(*at) },
        Action::LeftDouble { at } => Action::LeftDouble { at: far(*at) },
        Action::RightSingle { at } => Action::RightSingle { at: far(*at) },
        Action::Hover { at } => Action::Hover { at: far(*at) },
        Action::LongPress { at } => Action::LongPress { at: far(*at) },
        Action::Drag { start, end } => Action::Drag {
            start: far(*start),
            end: far(*end),
        },
        Action::Scroll { start, end, dir } => Action::Scroll {
            start: *start,
            end: *end,
            dir: match dir {
                guinav::Direction::Up => guinav::Direction::Down,
                guinav::Direction::Down => guinav::Direction::Up,
                guinav::Direction::Left => guinav::Direction::Right,
                guinav::Direction::Right => guinav::Direction::Left,
            },
        },
        Action::Type { .. } => Action::Type {
            content: "unrelated words".into(),
        },
        Action::Finished { content } if content.is_empty() => wrong_type(),
        Action::Finished { .. } => Action::Finished {
            content: "unrelated words".into(),
        },
        _ => wrong_type(),
    }
}

pub fn predict(a: &PredictArgs, g: &GlobalConfig) -> anyhow::Result<Status> {
    if !(0.0..=1.0).contains(&a.noise) {
        return Err(usage("--noise must lie in [0, 1]"));
    }
    let bench = load_trajectories(&a.gt)?;
    let tags = TagConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut out = String::new();
    for t in &bench {
        for s in &t.steps {
            let action = if rng.random_bool(a.noise) {
                corrupt(s, &mut rng)
            } else {
                s.action.clone()
            };
            let response_text = if a.bare {
                action.serialize()
            } else {
                tags.render(&s.observation, &s.thought, &action)
            };
            let p = NavPrediction {
                trajectory_id: t.id.clone(),
                step_index: s.index,
                response_text,
            };
            out.push_str(&serde_json::to_string(&p)?);
            out.push('\n');
        }
    }
    write_out(Some(&a.out), &out)?;
    Ok(Status::Ok)
}
