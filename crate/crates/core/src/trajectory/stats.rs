use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Trajectory;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub trajectories: usize,
    pub total_steps: usize,
    /// Absent for an empty dataset.
    pub mean_steps: Option<f64>,
    pub min_steps: Option<usize>,
    pub max_steps: Option<usize>,
    pub per_platform: BTreeMap<String, usize>,
    pub per_action: BTreeMap<String, usize>,
    pub per_verdict: BTreeMap<String, usize>,
}

fn label<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

pub fn dataset_stats(trajs: &[Trajectory]) -> DatasetStats {
    let mut s = DatasetStats {
        trajectories: trajs.len(),
        ..DatasetStats::default()
    };
    for t in trajs {
        s.total_steps += t.len();
        s.min_steps = Some(s.min_steps.map_or(t.len(), |m| m.min(t.len())));
        s.max_steps = Some(s.max_steps.map_or(t.len(), |m| m.max(t.len())));
        *s.per_platform.entry(t.platform.to_string()).or_default() += 1;
        *s.per_verdict.entry(label(&t.verdict)).or_default() += 1;
        for step in &t.steps {
            *s.per_action
                .entry(step.action.kind().name().to_string())
                .or_default() += 1;
        }
    }
    if !trajs.is_empty() {
        s.mean_steps = Some(s.total_steps as f64 / trajs.len() as f64);
    }
    s
}
