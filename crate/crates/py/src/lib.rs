//! Python bindings over `guinav`: action parsing, rewards and GRPO math.
//! Conversion only; every computation happens in the core crate.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use guinav::grpo::{self, GrpoError, Rollout, RolloutGroup};
use guinav::reward::{self, token_f1 as core_token_f1};
use guinav::{parse_action as core_parse, BBox, Platform, RewardConfig, ScreenDims, TagConfig};

create_exception!(guinav_py, GuinavError, PyException);
create_exception!(guinav_py, ActionParseError, GuinavError);
create_exception!(guinav_py, ConfigError, GuinavError);
create_exception!(guinav_py, GroupTooSmall, GuinavError);
create_exception!(guinav_py, InvalidRollout, GuinavError);
create_exception!(guinav_py, InvalidParameter, GuinavError);

fn platform(name: &str) -> PyResult<Platform> {
    name.parse()
        .map_err(|e: guinav::ActionError| ConfigError::new_err(e.to_string()))
}

fn dims(width: u32, height: u32) -> PyResult<ScreenDims> {
    ScreenDims::new(width, height).map_err(|e| ConfigError::new_err(e.to_string()))
}

fn grpo_err(e: GrpoError) -> PyErr {
    match e {
        GrpoError::GroupTooSmall(_) => GroupTooSmall::new_err(e.to_string()),
        GrpoError::InvalidRollout { .. } => InvalidRollout::new_err(e.to_string()),
        GrpoError::InvalidParameter(_) => InvalidParameter::new_err(e.to_string()),
    }
}

/// Builds a RewardConfig from a dict of overrides via its serde form.
fn reward_config(config: Option<&Bound<'_, PyDict>>) -> PyResult<RewardConfig> {
    let Some(d) = config else {
        return Ok(RewardConfig::default());
    };
    let mut map = serde_json::Map::new();
    for (k, v) in d.iter() {
        let key: String = k.extract()?;
        let value: f64 = v.extract()?;
        map.insert(key, serde_json::json!(value));
    }
    let cfg: RewardConfig = serde_json::from_value(serde_json::Value::Object(map))
        .map_err(|e| ConfigError::new_err(e.to_string()))?;
    cfg.validate()
        .map_err(|e| ConfigError::new_err(e.to_string()))?;
    Ok(cfg)
}

/// Canonical text of an action string.
#[pyfunction]
#[pyo3(signature = (text, platform_name = "desktop"))]
fn parse_action(text: &str, platform_name: &str) -> PyResult<String> {
    core_parse(text, platform(platform_name)?)
        .map(|a| a.serialize())
        .map_err(|e| ActionParseError::new_err(format!("{}: {e}", e.name())))
}

/// Navigation reward breakdown of a raw tagged response.
#[pyfunction]
#[pyo3(signature = (raw_text, gt_action_text, screen_w, screen_h, config = None, platform_name = "mobile"))]
fn nav_reward<'py>(
    py: Python<'py>,
    raw_text: &str,
    gt_action_text: &str,
    screen_w: u32,
    screen_h: u32,
    config: Option<&Bound<'py, PyDict>>,
    platform_name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let p = platform(platform_name)?;
    let gt = core_parse(gt_action_text, p)
        .map_err(|e| ActionParseError::new_err(format!("{}: {e}", e.name())))?;
    let cfg = reward_config(config)?;
    let b = reward::nav_total_reward(
        raw_text,
        &gt,
        dims(screen_w, screen_h)?,
        &cfg,
        &TagConfig::default(),
        p,
    );
    let out = PyDict::new(py);
    out.set_item("format", b.format)?;
    out.set_item("action_type", b.action_type)?;
    out.set_item("parameter", b.parameter)?;
    out.set_item("action", b.action)?;
    out.set_item("total", b.total)?;
    let trace = PyDict::new(py);
    for (k, v) in &b.trace {
        trace.set_item(k, v)?;
    }
    out.set_item("trace", trace)?;
    Ok(out)
}

/// Grounding reward of an answer against `(x1, y1, x2, y2)`.
#[pyfunction]
#[pyo3(signature = (raw_text, bbox, config = None))]
fn grounding_reward(
    raw_text: &str,
    bbox: (u32, u32, u32, u32),
    config: Option<&Bound<'_, PyDict>>,
) -> PyResult<f64> {
    let b = BBox::new(bbox.0, bbox.1, bbox.2, bbox.3)
        .map_err(|e| ConfigError::new_err(e.to_string()))?;
    Ok(reward::grounding_total_reward(raw_text, &b, &reward_config(config)?))
}

#[pyfunction]
fn token_f1(pred: &str, gt: &str) -> f64 {
    core_token_f1(pred, gt)
}

#[pyfunction]
fn group_advantages(rewards: Vec<f64>) -> PyResult<Vec<f64>> {
    grpo::group_advantages(&rewards).map_err(grpo_err)
}

/// GRPO objective of a group given as `(logp_new, logp_old, logp_ref, reward)` tuples.
#[pyfunction]
#[pyo3(signature = (rollouts, epsilon = grpo::DEFAULT_CLIP_EPSILON, beta = grpo::DEFAULT_KL_COEF))]
#[allow(clippy::type_complexity)]
fn grpo_objective(
    rollouts: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64)>,
    epsilon: f64,
    beta: f64,
) -> PyResult<f64> {
    let group = RolloutGroup {
        rollouts: rollouts
            .into_iter()
            .map(|(logp_new, logp_old, logp_ref, reward)| Rollout {
                logp_new,
                logp_old,
                logp_ref,
                reward,
            })
            .collect(),
        epsilon,
        beta,
    };
    grpo::grpo_objective(&group).map_err(grpo_err)
}

#[pymodule]
fn guinav_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", guinav::VERSION)?;
    m.add("GuinavError", py.get_type::<GuinavError>())?;
    m.add("ActionParseError", py.get_type::<ActionParseError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("GroupTooSmall", py.get_type::<GroupTooSmall>())?;
    m.add("InvalidRollout", py.get_type::<InvalidRollout>())?;
    m.add("InvalidParameter", py.get_type::<InvalidParameter>())?;
    m.add_function(wrap_pyfunction!(parse_action, m)?)?;
    m.add_function(wrap_pyfunction!(nav_reward, m)?)?;
    m.add_function(wrap_pyfunction!(grounding_reward, m)?)?;
    m.add_function(wrap_pyfunction!(token_f1, m)?)?;
    m.add_function(wrap_pyfunction!(group_advantages, m)?)?;
    m.add_function(wrap_pyfunction!(grpo_objective, m)?)?;
    Ok(())
}
