use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

use guinav::mllm::EndpointConfig;
use guinav::trajectory::FilterConfig;
use guinav::RewardConfig;

/// Optional TOML file passed with `--config`. Flags win over file values.
///
/// ```toml
/// seed = 7
/// jobs = 4
/// offline = true
///
/// [reward]
/// theta1 = 0.025
///
/// [endpoint]
/// base_url = "http://localhost:8000"
/// model = "my-model"
/// token_env = "GUINAV_API_KEY"
///
/// [filter]
/// min_steps = 4
/// repeat_limit = 3
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub offline: Option<bool>,
    pub reward: RewardConfig,
    pub endpoint: EndpointConfig,
    pub filter: FilterConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.reward
            .validate()
            .with_context(|| format!("reward section of {}", path.display()))?;
        cfg.filter
            .validate()
            .map_err(anyhow::Error::msg)
            .with_context(|| format!("filter section of {}", path.display()))?;
        Ok(cfg)
    }
}

/// Resolved settings shared by every subcommand.
#[derive(Debug, Clone)]
pub struct GlobalConfig {
    pub seed: u64,
    pub jobs: usize,
    pub offline: bool,
    pub reward: RewardConfig,
    pub endpoint: EndpointConfig,
    pub filter: FilterConfig,
}

impl GlobalConfig {
    pub fn resolve(
        file: Option<FileConfig>,
        seed: Option<u64>,
        jobs: Option<usize>,
        offline: bool,
    ) -> Self {
        let file = file.unwrap_or_default();
        GlobalConfig {
            seed: seed.or(file.seed).unwrap_or(0),
            jobs: jobs.or(file.jobs).unwrap_or(4).max(1),
            offline: offline || file.offline.unwrap_or(false),
            reward: file.reward,
            endpoint: file.endpoint,
            filter: file.filter,
        }
    }
}
