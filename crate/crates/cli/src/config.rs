//! Scenario configuration files. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;

use rulesynth::oracle::LlmConfig;
use rulesynth::verification::{ComparisonMode, DEFAULT_DOMAIN_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Det,
    Llm,
    Replay,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalConfig {
    pub id: String,
    pub text: String,
}

/// `mode` picks the active oracle; only the section it needs must be set.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub mode: OracleMode,
    #[serde(default)]
    pub spec: Option<PathBuf>,
    #[serde(default)]
    pub transcript: Option<PathBuf>,
    #[serde(default)]
    pub llm: Option<LlmConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundingSettings {
    #[serde(default = "default_domain_size")]
    pub domain_size: usize,
    #[serde(default)]
    pub comparison_mode: ComparisonMode,
}

impl Default for GroundingSettings {
    fn default() -> Self {
        GroundingSettings {
            domain_size: DEFAULT_DOMAIN_SIZE,
            comparison_mode: ComparisonMode::default(),
        }
    }
}

fn default_domain_size() -> usize {
    DEFAULT_DOMAIN_SIZE
}

fn default_count_hint() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub goal: GoalConfig,
    pub store: PathBuf,
    pub ontology: PathBuf,
    pub oracle: OracleConfig,
    #[serde(default)]
    pub grounding: GroundingSettings,
    pub output_dir: PathBuf,
    #[serde(default = "default_count_hint")]
    pub count_hint: usize,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn must_exist(path: &Path, what: &str) -> Result<(), ConfigError> {
    if path.exists() {
        Ok(())
    } else {
        Err(ConfigError(format!("{what} not found: {}", path.display())))
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| *p = base.join(&*p);
        resolve(&mut config.store);
        resolve(&mut config.ontology);
        resolve(&mut config.output_dir);
        config.oracle.spec.as_mut().map(resolve);
        config.oracle.transcript.as_mut().map(resolve);
        if config.goal.id.trim().is_empty() || config.goal.text.trim().is_empty() {
            return Err(ConfigError("goal id and text must not be empty".into()));
        }
        if config.count_hint == 0 {
            return Err(ConfigError("count_hint must be positive".into()));
        }
        Ok(config)
    }

    /// Checks that the store, the ontology and the input of the active
    /// oracle mode exist.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        must_exist(&self.store, "store")?;
        must_exist(&self.ontology, "ontology")?;
        match self.oracle.mode {
            OracleMode::Det => {
                let spec = self.oracle.spec.as_ref().ok_or_else(|| {
                    ConfigError("oracle mode det needs `oracle.spec`".into())
                })?;
                must_exist(spec, "oracle spec")
            }
            OracleMode::Replay => {
                let t = self.oracle.transcript.as_ref().ok_or_else(|| {
                    ConfigError("oracle mode replay needs `oracle.transcript`".into())
                })?;
                must_exist(t, "transcript")
            }
            OracleMode::Llm => match &self.oracle.llm {
                Some(llm) => llm.check().map_err(|e| ConfigError(format!("oracle.llm: {e}"))),
                None => Err(ConfigError("oracle mode llm needs `oracle.llm`".into())),
            },
        }
    }
}
