use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::data::DEFAULT_IMPUTE_K;
use crate::dk::{DkOptions, DEFAULT_DK_SOURCES};
use crate::llm::{FallbackPolicy, LlmConfig, MockSpec};
use crate::metrics::CostWeights;
use crate::models::{Family, DEFAULT_FOLDS, DEFAULT_N_ITER};
use crate::prompt::N_EX_GRID;

fn default_mock_model() -> String {
    "mock".into()
}

fn default_in_flight() -> usize {
    8
}

/// Where prompts are answered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum LlmChoice {
    Mock {
        mock: MockSpec,
        #[serde(default = "default_mock_model")]
        model_name: String,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
    Http(LlmConfig),
}

impl Default for LlmChoice {
    fn default() -> Self {
        LlmChoice::Mock { mock: MockSpec::Oracle, model_name: default_mock_model(), max_in_flight: default_in_flight() }
    }
}

impl LlmChoice {
    pub fn max_in_flight(&self) -> usize {
        match self {
            LlmChoice::Mock { max_in_flight, .. } => *max_in_flight,
            LlmChoice::Http(cfg) => cfg.max_in_flight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Directory with the four UCI site files, or one combined CSV.
    pub data_path: PathBuf,
    pub seed: u64,
    pub test_fraction: f64,
    pub impute_k: usize,
    pub weights: CostWeights,
    /// Families whose rankings feed MLFI / MLFI-ord prompts, in prompt order.
    pub dk_sources: Vec<String>,
    pub dk: DkOptions,
    pub n_ex_grid: Vec<usize>,
    pub n_iter: usize,
    pub folds: usize,
    /// Attach permutation importance to KNN and MLP models.
    pub permutation_importance: bool,
    pub llm: LlmChoice,
    pub fallback: FallbackPolicy,
    /// Defaults to `<output_dir>/cache.jsonl`.
    pub cache_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub paper_faithful: bool,
    /// Write every grid prompt to `<output_dir>/prompts/`.
    pub export_prompts: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data_path: PathBuf::from("data"),
            seed: 42,
            test_fraction: 0.2,
            impute_k: DEFAULT_IMPUTE_K,
            weights: CostWeights::default(),
            dk_sources: DEFAULT_DK_SOURCES.iter().map(|f| f.short_name().to_string()).collect(),
            dk: DkOptions::default(),
            n_ex_grid: N_EX_GRID.to_vec(),
            n_iter: DEFAULT_N_ITER,
            folds: DEFAULT_FOLDS,
            permutation_importance: false,
            llm: LlmChoice::default(),
            fallback: FallbackPolicy::default(),
            cache_path: None,
            output_dir: PathBuf::from("out"),
            paper_faithful: false,
            export_prompts: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ExperimentError> {
        toml::to_string_pretty(self).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!("test_fraction {} not in (0, 1)", self.test_fraction));
        }
        if self.impute_k == 0 {
            return bad("impute_k must be at least 1".into());
        }
        if self.n_iter == 0 || self.folds < 2 {
            return bad("n_iter must be at least 1 and folds at least 2".into());
        }
        if self.n_ex_grid.is_empty() {
            return bad("n_ex_grid is empty".into());
        }
        self.weights.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.dk_families()?;
        match &self.llm {
            LlmChoice::Http(cfg) => cfg.validate().map_err(|e| ExperimentError::Config(e.to_string()))?,
            LlmChoice::Mock { max_in_flight: 0, .. } => return bad("max_in_flight must be at least 1".into()),
            LlmChoice::Mock { .. } => {}
        }
        Ok(())
    }

    pub fn dk_families(&self) -> Result<Vec<Family>, ExperimentError> {
        let families = self
            .dk_sources
            .iter()
            .map(|s| s.parse::<Family>().map_err(|e| ExperimentError::Config(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut seen = families.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != families.len() {
            return Err(ExperimentError::Config("dk_sources lists a family twice".into()));
        }
        Ok(families)
    }

    pub fn cache_path(&self) -> PathBuf {
        self.cache_path.clone().unwrap_or_else(|| self.output_dir.join("cache.jsonl"))
    }
}
