//! Explainable-ML guided prompt classification for heart-disease risk.
//!
//! The pipeline trains interpretable classifiers on the UCI heart-disease
//! data, turns their feature-importance rankings into domain-knowledge text,
//! assembles five-part few-shot prompts, sends them to a chat-completions
//! endpoint (or a deterministic mock) and scores the verdicts with a
//! cost-sensitive metric suite.
//!
//! Module map:
//!
//! - [`data`]: ingest, target binarization, KNN imputation, stratified split, scaling.
//! - [`models`]: the six classifier families, importance rankings, randomized search.
//! - [`dk`]: domain-knowledge text rendering from importance rankings.
//! - [`prompt`]: in-context example sampling and prompt assembly.
//! - [`llm`]: chat-completions gateway, response cache, mocks, verdict parsing.
//! - [`metrics`]: confusion matrices, classification and cost metrics, trivial baselines.
//! - [`experiment`]: configuration, end-to-end orchestration and report emission.

pub mod data;
pub mod dk;
pub mod experiment;
pub mod llm;
pub mod metrics;
pub mod models;
pub mod prompt;
pub mod rng;

pub use data::{Dataset, FeatureSchema, RawDataset};
pub use dk::{DkKind, DomainKnowledge};
pub use metrics::{ConfusionMatrix, CostWeights, MetricsRow};
pub use models::{Family, ImportanceRanking, ModelSpec, TrainedModel};
pub use prompt::{Prompt, PromptSpec};
