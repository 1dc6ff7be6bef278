use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::action::ActionKind;

pub const DEFAULT_MIN_STEPS: usize = 4;
pub const DEFAULT_REPEAT_LIMIT: usize = 3;

pub const RULE_MIN_LENGTH: &str = "min_length";
pub const RULE_REPETITIVE: &str = "repetitive";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub min_steps: usize,
    pub repeat_limit: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_steps: DEFAULT_MIN_STEPS,
            repeat_limit: DEFAULT_REPEAT_LIMIT,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_steps < 1 {
            return Err("min_steps must be >= 1".into());
        }
        if self.repeat_limit < 2 {
            return Err("repeat_limit must be >= 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub id: String,
    pub kept: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub dropped_by_rule: BTreeMap<String, usize>,
    pub decisions: Vec<FilterDecision>,
}

impl FilterReport {
    pub fn dropped(&self) -> usize {
        self.dropped_by_rule.values().sum()
    }
}

/// Kept trajectories, untouched and in input order, plus the report.
#[derive(Debug, Clone, Default)]
pub struct Filtered {
    pub kept: Vec<Trajectory>,
    pub report: FilterReport,
}

fn run_filter(
    trajs: &[Trajectory],
    rule: &str,
    reject: impl Fn(&Trajectory) -> Option<String>,
) -> Filtered {
    let mut out = Filtered::default();
    out.report.input = trajs.len();
    out.report.dropped_by_rule.insert(rule.to_string(), 0);
    for t in trajs {
        match reject(t) {
            None => {
                out.kept.push(t.clone());
                out.report.decisions.push(FilterDecision {
                    id: t.id.clone(),
                    kept: true,
                    rule: None,
                    detail: None,
                });
            }
            Some(detail) => {
                *out.report.dropped_by_rule.get_mut(rule).unwrap() += 1;
                out.report.decisions.push(FilterDecision {
                    id: t.id.clone(),
                    kept: false,
                    rule: Some(rule.to_string()),
                    detail: Some(detail),
                });
            }
        }
    }
    out.report.kept = out.kept.len();
    out
}

/// Drops trajectories with fewer than `min_steps` steps.
pub fn filter_min_length(trajs: &[Trajectory], min_steps: usize) -> Filtered {
    run_filter(trajs, RULE_MIN_LENGTH, |t| {
        (t.len() < min_steps).then(|| format!("{} steps < {min_steps}", t.len()))
    })
}

/// Longest run of consecutive identical canonical actions, with the action
/// text. `None` for an empty trajectory.
pub fn longest_run(t: &Trajectory) -> Option<(usize, String)> {
    let mut best: Option<(usize, String)> = None;
    let mut i = 0;
    while i < t.steps.len() {
        let text = t.steps[i].action.serialize();
        let mut j = i + 1;
        while j < t.steps.len() && t.steps[j].action.serialize() == text {
            j += 1;
        }
        if best.as_ref().is_none_or(|(n, _)| j - i > *n) {
            best = Some((j - i, text));
        }
        i = j;
    }
    best
}

fn run_limit(kind: ActionKind, repeat_limit: usize) -> usize {
    match kind {
        ActionKind::Scroll | ActionKind::Wait => repeat_limit * 2,
        _ => repeat_limit,
    }
}

/// Drops a trajectory when some action repeats `repeat_limit` times in a row
/// (`2 * repeat_limit` for Scroll and Wait).
pub fn filter_repetitive(trajs: &[Trajectory], repeat_limit: usize) -> Filtered {
    run_filter(trajs, RULE_REPETITIVE, |t| {
        let mut i = 0;
        while i < t.steps.len() {
            let action = &t.steps[i].action;
            let mut j = i + 1;
            while j < t.steps.len() && t.steps[j].action == *action {
                j += 1;
            }
            let limit = run_limit(action.kind(), repeat_limit);
            if j - i >= limit {
                return Some(format!(
                    "{} repeated {} times from step {i} (limit {limit})",
                    action,
                    j - i
                ));
            }
            i = j;
        }
        None
    })
}

/// Min-length then repetitive. Each dropped trajectory is attributed to the
/// first rule that rejects it.
pub fn apply_filters(trajs: &[Trajectory], cfg: &FilterConfig) -> Filtered {
    let first = filter_min_length(trajs, cfg.min_steps);
    let second = filter_repetitive(&first.kept, cfg.repeat_limit);
    let mut second_decisions: BTreeMap<&str, &FilterDecision> = second
        .report
        .decisions
        .iter()
        .map(|d| (d.id.as_str(), d))
        .collect();
    let decisions = first
        .report
        .decisions
        .iter()
        .map(|d| {
            if d.kept {
                (*second_decisions.remove(d.id.as_str()).unwrap_or(d)).clone()
            } else {
                d.clone()
            }
        })
        .collect();
    let mut dropped_by_rule = first.report.dropped_by_rule.clone();
    dropped_by_rule.extend(second.report.dropped_by_rule.clone());
    Filtered {
        report: FilterReport {
            input: trajs.len(),
            kept: second.kept.len(),
            dropped_by_rule,
            decisions,
        },
        kept: second.kept,
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::to_jsonl;
    use super::*;
    use crate::action::Action;

    #[test]
    fn min_length_boundary() {
        let ts = vec![clicks("three", 3), clicks("four", 4)];
        let f = filter_min_length(&ts, DEFAULT_MIN_STEPS);
        assert_eq!(f.kept.len(), 1);
        assert_eq!(f.kept[0].id, "four");
        assert_eq!(f.report.dropped_by_rule[RULE_MIN_LENGTH], 1);
        assert_eq!(filter_min_length(&ts, 1).kept.len(), 2);
    }

    #[test]
    fn repetition_rule() {
        let triple = traj("triple", vec![click(1, 1), click(1, 1), click(1, 1), Action::Wait]);
        let scrolls = traj("scrolls", vec![scroll(), scroll(), scroll(), scroll()]);
        let alternating = traj(
            "alt",
            (0..5)
                .flat_map(|_| [click(1, 1), click(2, 2)])
                .collect(),
        );
        let f = filter_repetitive(&[triple, scrolls, alternating], DEFAULT_REPEAT_LIMIT);
        let kept: Vec<_> = f.kept.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(kept, vec!["scrolls", "alt"]);
        assert!(f.report.decisions[0].detail.as_ref().unwrap().contains("repeated 3 times"));
    }

    #[test]
    fn scroll_and_wait_limit_is_doubled() {
        let five = traj("five", vec![Action::Wait; 5]);
        let six = traj("six", vec![Action::Wait; 6]);
        let f = filter_repetitive(&[five, six], 3);
        assert_eq!(f.kept.len(), 1);
        assert_eq!(f.kept[0].id, "five");
    }

    #[test]
    fn report_counts_add_up() {
        let ts = vec![
            clicks("short", 2),
            traj("rep", vec![click(1, 1); 4]),
            clicks("good", 5),
        ];
        let f = apply_filters(&ts, &FilterConfig::default());
        assert_eq!(f.report.input, 3);
        assert_eq!(f.report.kept, 1);
        assert_eq!(f.report.kept + f.report.dropped(), f.report.input);
        assert_eq!(f.report.dropped_by_rule[RULE_MIN_LENGTH], 1);
        assert_eq!(f.report.dropped_by_rule[RULE_REPETITIVE], 1);
        let rules: Vec<_> = f.report.decisions.iter().map(|d| d.rule.clone()).collect();
        assert_eq!(
            rules,
            vec![Some(RULE_MIN_LENGTH.into()), Some(RULE_REPETITIVE.into()), None]
        );
    }

    #[test]
    fn kept_records_are_byte_identical() {
        let ts = vec![clicks("a", 5), clicks("b", 6)];
        let f = apply_filters(&ts, &FilterConfig::default());
        assert_eq!(to_jsonl(&f.kept), to_jsonl(&ts));
    }

    #[test]
    fn longest_run_reports_text() {
        let t = traj("r", vec![click(1, 1), Action::Wait, Action::Wait]);
        assert_eq!(longest_run(&t), Some((2, "Wait()".to_string())));
        assert_eq!(longest_run(&traj("e", vec![])), None);
    }

    #[test]
    fn config_validation() {
        assert!(FilterConfig::default().validate().is_ok());
        assert!(FilterConfig { min_steps: 0, repeat_limit: 3 }.validate().is_err());
        assert!(FilterConfig { min_steps: 4, repeat_limit: 1 }.validate().is_err());
    }
}
