use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::report::{build_report, ReportTable};
use super::{ExperimentConfig, ExperimentError, LlmChoice};
use crate::data::{
    binarize_target, knn_impute, load_path, split, standardize, stats, write_csv, Dataset, DatasetStats,
    FeatureSchema, Scaler,
};
use crate::dk::{dk_grid, render_dk, DkKind, DkSlot, DomainKnowledge};
use crate::llm::{
    block_on, classify_batch, BatchOptions, Gateway, PredictionRecord, ResponseCache,
};
use crate::metrics::{baseline_predict, confusion, Baseline, ConfusionMatrix, MetricsRow};
use crate::models::{feature_importance, randomized_search, Family, ImportanceRanking, ModelArtifact, ModelSpec};
use crate::prompt::{assemble_prompt, sample_examples, PromptSpec};
use crate::rng::derive_seed;

const STREAM_SPLIT: u64 = 1;
const STREAM_SEARCH: u64 = 2;
const STREAM_BASELINE: u64 = 3;
const STREAM_EXAMPLES: u64 = 4;

/// Output layout under the configured output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paths {
    pub root: PathBuf,
}

impl Paths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Paths { root: root.into() }
    }

    pub fn prepared_dir(&self) -> PathBuf {
        self.root.join("prepared")
    }

    pub fn prepared(&self) -> PathBuf {
        self.prepared_dir().join("prepared.json")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn model(&self, family: Family) -> PathBuf {
        self.models_dir().join(format!("{}.json", family.short_name().to_ascii_lowercase()))
    }

    pub fn ml_results(&self) -> PathBuf {
        self.models_dir().join("results.json")
    }

    pub fn dk_dir(&self) -> PathBuf {
        self.root.join("dk")
    }

    pub fn dk(&self) -> PathBuf {
        self.dk_dir().join("dk.json")
    }

    pub fn grid(&self) -> PathBuf {
        self.root.join("grid.json")
    }

    pub fn prompts_dir(&self) -> PathBuf {
        self.root.join("prompts")
    }

    pub fn report(&self, ext: &str) -> PathBuf {
        self.root.join(format!("report.{ext}"))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

fn ensure_dir(path: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| ExperimentError::Decode { path: path.to_path_buf(), message: e.to_string() })?;
    fs::write(path, text).map_err(io_err(path))
}

/// Reads a stage output, reporting which stage must run first if it is absent.
pub fn load_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<T, ExperimentError> {
    if !path.exists() {
        return Err(ExperimentError::MissingStage { stage, path: path.to_path_buf() });
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Decode { path: path.to_path_buf(), message: e.to_string() })
}

/// Imputed data split into train and test, in raw and standardized scale.
/// Models see the standardized copies; prompts show raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedData {
    pub stats: DatasetStats,
    pub imputed: Dataset,
    pub train_raw: Dataset,
    pub test_raw: Dataset,
    pub train_std: Dataset,
    pub test_std: Dataset,
    pub scaler: Scaler,
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData, ExperimentError> {
    let schema = FeatureSchema::heart_disease();
    let raw = binarize_target(load_path(&cfg.data_path, &schema)?)?;
    let stats = stats(&raw);
    info!("loaded {} rows, {} with missing values", stats.n_total, stats.n_with_missing);
    let imputed = knn_impute(&raw, cfg.impute_k)?;
    let (train_raw, test_raw) = split(&imputed, cfg.test_fraction, derive_seed(cfg.seed, &[STREAM_SPLIT]))?;
    let (train_std, test_std, scaler) = standardize(&train_raw, &test_raw)?;
    info!("split into {} training and {} test rows", train_raw.len(), test_raw.len());
    Ok(PreparedData { stats, imputed, train_raw, test_raw, train_std, test_std, scaler })
}

/// Test-set evaluation of one tuned model or trivial baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlRow {
    pub label: String,
    pub family: Option<Family>,
    pub baseline: Option<Baseline>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsRow,
    /// Mean fold accuracy of the selected trial.
    pub cv_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlResults {
    /// Families in canonical order, then the baselines.
    pub rows: Vec<MlRow>,
}

/// Tunes every family on the standardized training set and scores it, and
/// the trivial baselines, on the test set.
pub fn run_ml_baselines(
    cfg: &ExperimentConfig,
    data: &PreparedData,
) -> Result<(MlResults, Vec<ModelArtifact>), ExperimentError> {
    let truth = &data.test_std.labels;
    let mut rows = Vec::new();
    let mut artifacts = Vec::new();
    for (i, family) in Family::ALL.into_iter().enumerate() {
        let spec = ModelSpec { permutation_importance: cfg.permutation_importance, ..ModelSpec::new(family) };
        let seed = derive_seed(cfg.seed, &[STREAM_SEARCH, i as u64]);
        let (model, cv) = randomized_search(&spec, &data.train_std, cfg.n_iter, cfg.folds, seed)?;
        for w in &cv.warnings {
            warn!("{family}: {w}");
        }
        let preds = model.predict_all(&data.test_std)?;
        let cm = confusion(&preds, truth)?;
        info!("{family}: cv {:?}, test accuracy {:.4}", cv.best().mean_score, cm.correct() as f64 / cm.total() as f64);
        rows.push(MlRow {
            label: family.short_name().to_string(),
            family: Some(family),
            baseline: None,
            confusion: cm,
            metrics: MetricsRow::from_confusion(&cm, &cfg.weights),
            cv_score: cv.best().mean_score,
        });
        artifacts.push(ModelArtifact::new(model, Some(cv)));
    }
    for (i, kind) in Baseline::ALL.into_iter().enumerate() {
        let preds = baseline_predict(kind, truth.len(), derive_seed(cfg.seed, &[STREAM_BASELINE, i as u64]));
        let cm = confusion(&preds, truth)?;
        rows.push(MlRow {
            label: kind.label().to_string(),
            family: None,
            baseline: Some(kind),
            confusion: cm,
            metrics: MetricsRow::from_confusion(&cm, &cfg.weights),
            cv_score: None,
        });
    }
    Ok((MlResults { rows }, artifacts))
}

/// Rankings of the DK sources and the rendered text of every grid slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DkBundle {
    pub rankings: Vec<ImportanceRanking>,
    pub slots: Vec<DkSlot>,
    pub texts: Vec<DomainKnowledge>,
}

pub fn gen_dk(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    artifacts: &[ModelArtifact],
) -> Result<DkBundle, ExperimentError> {
    let sources = cfg.dk_families()?;
    let mut rankings = Vec::new();
    for family in &sources {
        let artifact = artifacts
            .iter()
            .find(|a| a.model.family == *family)
            .ok_or_else(|| ExperimentError::Config(format!("no trained {family} model for DK generation")))?;
        let ranking = feature_importance(&artifact.model, &data.train_std)?;
        if ranking.degenerate {
            warn!("{family} importance is degenerate; its DK uses canonical feature order");
        }
        rankings.push(ranking);
    }
    let schema = &data.train_raw.schema;
    let slots = dk_grid(&sources);
    let texts = slots
        .iter()
        .map(|slot| match slot.source {
            None => Ok(DomainKnowledge::none()),
            Some(f) => {
                let ranking = &rankings[sources.iter().position(|s| *s == f).expect("slot source is listed")];
                render_dk(ranking, slot.kind, schema, &cfg.dk)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DkBundle { rankings, slots, texts })
}

/// Outcome of one (N_ex, prompt variant) cell over the whole test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub n_ex: usize,
    pub prompt_index: usize,
    pub slot: DkSlot,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsRow,
    pub unparseable: usize,
    pub records: Vec<PredictionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResults {
    pub model_name: String,
    pub cells: Vec<GridCell>,
    /// Whether every cell finished.
    pub complete: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Allow network requests; otherwise HTTP backends answer from the cache only.
    pub live: bool,
    /// Write each cell's prompts as JSON lines under this directory.
    pub export_prompts: Option<PathBuf>,
}

fn build_gateway(cfg: &ExperimentConfig, data: &PreparedData, opts: &RunOptions) -> Result<Gateway, ExperimentError> {
    Ok(match &cfg.llm {
        LlmChoice::Mock { mock, model_name, .. } => Gateway::mock(mock.build(Some(&data.test_raw))?, model_name, None),
        LlmChoice::Http(llm) => {
            let cache = ResponseCache::open(cfg.cache_path())?;
            if cache.skipped_lines > 0 {
                warn!("skipped {} malformed cache lines", cache.skipped_lines);
            }
            Gateway::http(llm, Some(cache), opts.live)?
        }
    })
}

fn export_cell(dir: &Path, n_ex: usize, prompt_index: usize, texts: &[String]) -> Result<(), ExperimentError> {
    ensure_dir(dir)?;
    let path = dir.join(format!("nex{n_ex}_prompt-{prompt_index}.jsonl"));
    let mut out = String::new();
    for t in texts {
        out.push_str(&serde_json::to_string(t).expect("strings serialize"));
        out.push('\n');
    }
    fs::write(&path, out).map_err(io_err(&path))
}

/// Classifies the raw test set under every (N_ex, DK slot) combination.
/// Examples are drawn once per N_ex and shared by all DK variants. On a
/// gateway failure the finished cells are returned with the error.
pub fn run_prompt_grid(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    dk: &DkBundle,
    opts: &RunOptions,
) -> Result<(GridResults, Option<ExperimentError>), ExperimentError> {
    let gateway = build_gateway(cfg, data, opts)?;
    let batch = BatchOptions {
        max_in_flight: cfg.llm.max_in_flight(),
        fallback: cfg.fallback,
        majority_label: data.train_raw.majority_label(),
    };
    let schema = &data.test_raw.schema;
    let total = cfg.n_ex_grid.len() * dk.slots.len() * data.test_raw.len();
    let mut cells = Vec::new();
    let mut completed = 0;

    for &n_ex in &cfg.n_ex_grid {
        let examples = sample_examples(&data.train_raw, n_ex, derive_seed(cfg.seed, &[STREAM_EXAMPLES]))?;
        for (prompt_index, (slot, text)) in dk.slots.iter().zip(&dk.texts).enumerate() {
            let spec = PromptSpec { n_ex, dk: text.clone(), seed: cfg.seed, paper_faithful: cfg.paper_faithful };
            let prompts = data
                .test_raw
                .matrix
                .iter()
                .map(|x| assemble_prompt(schema, &spec, &examples, x))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(dir) = &opts.export_prompts {
                export_cell(dir, n_ex, prompt_index, &prompts.iter().map(|p| p.text()).collect::<Vec<_>>())?;
            }
            let outcome = block_on(classify_batch(&gateway, &prompts, &batch))?;
            completed += outcome.records.len();
            if let Some(source) = outcome.error {
                warn!("N_ex={n_ex} prompt-{prompt_index} stopped: {source}");
                let results = GridResults { model_name: gateway.model_name().to_string(), cells, complete: false };
                return Ok((results, Some(ExperimentError::Incomplete { completed, total, source })));
            }
            let preds = outcome.labels();
            let cm = confusion(&preds, &data.test_raw.labels)?;
            let unparseable = outcome.unparseable();
            if unparseable > 0 {
                warn!("N_ex={n_ex} prompt-{prompt_index}: {unparseable} unparseable replies");
            }
            info!(
                "N_ex={n_ex} prompt-{prompt_index} ({} {}): accuracy {:.4}",
                slot.kind,
                slot.source_label(),
                cm.correct() as f64 / cm.total().max(1) as f64
            );
            cells.push(GridCell {
                n_ex,
                prompt_index,
                slot: *slot,
                confusion: cm,
                metrics: MetricsRow::from_confusion(&cm, &cfg.weights),
                unparseable,
                records: outcome.records,
            });
        }
    }
    info!("grid finished with {} backend calls", gateway.backend_calls());
    Ok((GridResults { model_name: gateway.model_name().to_string(), cells, complete: true }, None))
}

/// Runs stages against the output directory, each reading its predecessor's files.
pub struct Runner {
    pub cfg: ExperimentConfig,
    pub paths: Paths,
    pub opts: RunOptions,
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, live: bool) -> Self {
        let paths = Paths::new(&cfg.output_dir);
        let export_prompts = cfg.export_prompts.then(|| paths.prompts_dir());
        Runner { cfg, paths, opts: RunOptions { live, export_prompts } }
    }

    pub fn prepare(&self) -> Result<PreparedData, ExperimentError> {
        let data = prepare_data(&self.cfg)?;
        let dir = self.paths.prepared_dir();
        ensure_dir(&dir)?;
        write_csv(&data.imputed, dir.join("imputed.csv"))?;
        write_csv(&data.train_raw, dir.join("train.csv"))?;
        write_csv(&data.test_raw, dir.join("test.csv"))?;
        save_json(&dir.join("stats.json"), &data.stats)?;
        save_json(&self.paths.prepared(), &data)?;
        Ok(data)
    }

    fn load_prepared(&self) -> Result<PreparedData, ExperimentError> {
        load_json(&self.paths.prepared(), "prepare-data")
    }

    pub fn train(&self) -> Result<MlResults, ExperimentError> {
        let data = self.load_prepared()?;
        let (results, artifacts) = run_ml_baselines(&self.cfg, &data)?;
        ensure_dir(&self.paths.models_dir())?;
        for a in &artifacts {
            a.save(self.paths.model(a.model.family))?;
        }
        save_json(&self.paths.ml_results(), &results)?;
        Ok(results)
    }

    pub fn dk(&self) -> Result<DkBundle, ExperimentError> {
        let data = self.load_prepared()?;
        let mut artifacts = Vec::new();
        for family in self.cfg.dk_families()? {
            let path = self.paths.model(family);
            if !path.exists() {
                return Err(ExperimentError::MissingStage { stage: "train-models", path });
            }
            artifacts.push(ModelArtifact::load(&path)?);
        }
        let bundle = gen_dk(&self.cfg, &data, &artifacts)?;
        save_json(&self.paths.dk(), &bundle)?;
        save_json(&self.paths.dk_dir().join("rankings.json"), &bundle.rankings)?;
        for (i, text) in bundle.texts.iter().enumerate() {
            let path = self.paths.dk_dir().join(format!("dk{i}.txt"));
            fs::write(&path, &text.text).map_err(io_err(&path))?;
        }
        Ok(bundle)
    }

    /// Saves whatever finished, then reports the failure if any.
    pub fn grid(&self) -> Result<GridResults, ExperimentError> {
        let data = self.load_prepared()?;
        let dk: DkBundle = load_json(&self.paths.dk(), "gen-dk")?;
        if dk.texts.iter().any(|t| t.kind != DkKind::None && t.text.is_empty()) {
            return Err(ExperimentError::Config("DK bundle has an empty text".into()));
        }
        let (results, error) = run_prompt_grid(&self.cfg, &data, &dk, &self.opts)?;
        save_json(&self.paths.grid(), &results)?;
        match error {
            Some(e) => Err(e),
            None => Ok(results),
        }
    }

    pub fn report(&self) -> Result<ReportTable, ExperimentError> {
        let ml: MlResults = load_json(&self.paths.ml_results(), "train-models")?;
        let grid: GridResults = load_json(&self.paths.grid(), "run-grid")?;
        if !grid.complete {
            warn!("grid is incomplete; the report covers finished cells only");
        }
        let table = build_report(&ml, &grid, &self.cfg.n_ex_grid);
        table.save(&self.paths)?;
        Ok(table)
    }

    pub fn all(&self) -> Result<ReportTable, ExperimentError> {
        self.prepare()?;
        self.train()?;
        self.dk()?;
        self.grid()?;
        self.report()
    }
}

/// Every stage in order, writing outputs under `cfg.output_dir`.
pub fn run_all(cfg: &ExperimentConfig, live: bool) -> Result<ReportTable, ExperimentError> {
    Runner::new(cfg.clone(), live).all()
}

