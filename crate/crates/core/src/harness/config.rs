//! Experiment configuration files.
//!
//! ```toml
//! domain = "doorkey"
//! method = "lgts"
//! seeds = [0, 1, 2]
//! out_dir = "runs/doorkey"
//! oracle = "../graphs/doorkey_oracle.edges"
//!
//! [env]
//! layout = "../layouts/doorkey_8x8.layout"
//!
//! [symbols]
//! entities = ["Key_1", "Key_2", "Door", "OutsideRoom", "Green_Goal", "Lava"]
//! predicates = ["Holding/1", "At/1", "Unlocked/1"]
//! initial = "At(OutsideRoom)"
//! goal = "At(Green_Goal)"
//!
//! [llm]
//! provider = "fixture"
//! fixture = "../fixtures/doorkey.toml"
//! scenario = "four_paths"
//!
//! [teacher]
//! budget = 5000000
//! ```
//!
//! Relative paths are resolved against the directory holding the config
//! file. `[teacher]`, `[student]` and `[baseline]` take the fields of
//! [`TeacherConfig`], [`StudentConfig`] and [`BaselineConfig`]; missing
//! fields keep their defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::BaselineConfig;
use crate::env::{EnvError, GridEnv, GridLayout, LayoutError};
use crate::graph::{parse_edge_list, GraphError, SubgoalDag};
use crate::llm::{FixtureProvider, HttpChatProvider, HttpSettings, LlmError, LlmProvider, PromptTemplate};
use crate::student::StudentConfig;
use crate::symbolic::{Entity, Predicate, SymbolicError, SymbolicInfo};
use crate::teacher::TeacherConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config syntax: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unknown method `{0}` (expected lgts, agts, lfs, tscl, agrs or lgrs)")]
    UnknownMethod(String),
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error("oracle graph: {0}")]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lgts,
    Agts,
    Lfs,
    Tscl,
    Agrs,
    Lgrs,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Lgts,
        Method::Agts,
        Method::Lfs,
        Method::Tscl,
        Method::Agrs,
        Method::Lgrs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lgts => "lgts",
            Method::Agts => "agts",
            Method::Lfs => "lfs",
            Method::Tscl => "tscl",
            Method::Agrs => "agrs",
            Method::Lgrs => "lgrs",
        }
    }

    /// Whether the method's graph comes from the language model.
    pub fn uses_llm(self) -> bool {
        matches!(self, Method::Lgts | Method::Lgrs)
    }

    pub fn uses_oracle(self) -> bool {
        matches!(self, Method::Agts | Method::Agrs | Method::Tscl)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| ConfigError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub layout: PathBuf,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    /// Extra object names placed on the layout's distractor cells.
    #[serde(default)]
    pub distractors: Vec<String>,
}

fn default_horizon() -> u32 {
    crate::baselines::FULL_TASK_HORIZON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolsSection {
    pub entities: Vec<String>,
    /// `name/arity` entries.
    pub predicates: Vec<String>,
    pub initial: String,
    pub goal: String,
}

impl SymbolsSection {
    pub fn info(&self) -> Result<SymbolicInfo, ConfigError> {
        let entities = self
            .entities
            .iter()
            .map(|e| Entity::new(e.as_str()))
            .collect::<Result<Vec<_>, _>>()?;
        let mut predicates = Vec::new();
        for p in &self.predicates {
            let (name, arity) = p
                .split_once('/')
                .ok_or_else(|| ConfigError::Invalid(format!("predicate `{p}` is not `name/arity`")))?;
            let arity = arity
                .trim()
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("predicate `{p}` has a bad arity")))?;
            predicates.push(Predicate::new(name.trim(), arity)?);
        }
        Ok(SymbolicInfo::new(entities, predicates, &self.initial, &self.goal)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Fixture,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    pub provider: ProviderKind,
    pub fixture: Option<PathBuf>,
    pub scenario: Option<String>,
    pub http: Option<HttpSettings>,
    /// Number of paths requested.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    #[serde(default = "default_template")]
    pub template: String,
    /// Words swapped in everything the model sees, such as `Key = "Code"`.
    #[serde(default)]
    pub synonyms: BTreeMap<String, String>,
}

fn default_n() -> usize {
    4
}

fn default_retries() -> usize {
    crate::llm::DEFAULT_MAX_RETRIES
}

fn default_template() -> String {
    "default".into()
}

impl LlmSection {
    pub fn template(&self) -> Result<PromptTemplate, ConfigError> {
        Ok(self.template.parse()?)
    }

    /// A fresh provider; fixtures restart from their first response.
    pub fn provider(&self) -> Result<Box<dyn LlmProvider>, ConfigError> {
        match self.provider {
            ProviderKind::Fixture => {
                let (Some(path), Some(scenario)) = (&self.fixture, &self.scenario) else {
                    return Err(ConfigError::Invalid(
                        "fixture provider needs `fixture` and `scenario`".into(),
                    ));
                };
                Ok(Box::new(FixtureProvider::load(path, scenario)?))
            }
            ProviderKind::Http => {
                let settings = self
                    .http
                    .clone()
                    .ok_or_else(|| ConfigError::Invalid("http provider needs an [llm.http] table".into()))?;
                Ok(Box::new(HttpChatProvider::new(settings)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form label copied into outputs.
    pub domain: String,
    pub method: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub oracle: Option<PathBuf>,
    /// Reference edit distance `[mean, sd]` to print next to ours.
    pub ged_reference: Option<[f64; 2]>,
    pub env: EnvSection,
    pub symbols: SymbolsSection,
    pub llm: Option<LlmSection>,
    #[serde(default)]
    pub teacher: TeacherConfig,
    #[serde(default)]
    pub student: StudentConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Read `path` and resolve relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut config = Self::from_toml(&read(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.env.layout);
        fix(&mut self.out_dir);
        if let Some(o) = &mut self.oracle {
            fix(o);
        }
        if let Some(f) = self.llm.as_mut().and_then(|l| l.fixture.as_mut()) {
            fix(f);
        }
    }

    pub fn method(&self) -> Result<Method, ConfigError> {
        self.method.parse()
    }
}

/// A validated configuration with its files loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub method: Method,
    pub info: SymbolicInfo,
    pub env: GridEnv,
    pub oracle: Option<SubgoalDag>,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self, ConfigError> {
        let method = config.method()?;
        if config.seeds.is_empty() {
            return Err(ConfigError::Invalid("`seeds` is empty".into()));
        }
        if config.teacher.budget == 0 {
            return Err(ConfigError::Invalid("teacher.budget must be positive".into()));
        }
        if config.teacher.x == 0 || config.teacher.allocated == 0 || config.teacher.eval_episodes == 0 {
            return Err(ConfigError::Invalid(
                "teacher.x, teacher.allocated and teacher.eval_episodes must be positive".into(),
            ));
        }
        let info = config.symbols.info()?;
        let layout = GridLayout::parse(&read(&config.env.layout)?)?;
        let env = GridEnv::with_distractors(layout, config.env.horizon, &config.env.distractors)?;
        env.check_declared(&info)?;
        let oracle = match &config.oracle {
            Some(path) => Some(parse_edge_list(&read(path)?, &info)?),
            None => None,
        };
        if method.uses_oracle() && oracle.is_none() {
            return Err(ConfigError::Invalid(format!("method {method} needs an `oracle` graph")));
        }
        match &config.llm {
            Some(llm) => {
                llm.template()?;
                if llm.n == 0 || llm.max_retries == 0 {
                    return Err(ConfigError::Invalid("llm.n and llm.max_retries must be positive".into()));
                }
                if llm.provider == ProviderKind::Fixture {
                    llm.provider()?;
                }
            }
            None if method.uses_llm() => {
                return Err(ConfigError::Invalid(format!("method {method} needs an [llm] section")));
            }
            None => {}
        }
        Ok(Self {
            config,
            method,
            info,
            env,
            oracle,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::prepare(ExperimentConfig::load(path)?)
    }

    /// Same experiment with another method, re-validated.
    pub fn with_method(self, method: Method) -> Result<Self, ConfigError> {
        let mut config = self.config;
        config.method = method.as_str().into();
        Self::prepare(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("ppo".parse::<Method>(), Err(ConfigError::UnknownMethod(_))));
    }

    #[test]
    fn predicates_need_arity() {
        let s = SymbolsSection {
            entities: vec!["A".into(), "B".into()],
            predicates: vec!["At".into()],
            initial: "At(A)".into(),
            goal: "At(B)".into(),
        };
        assert!(matches!(s.info(), Err(ConfigError::Invalid(_))));
    }
}
