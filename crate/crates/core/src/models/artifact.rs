//! Versioned JSON serialization of trained models.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::search::CvReport;
use super::{ModelError, TrainedModel};

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: u32,
    pub model: TrainedModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvReport>,
}

impl ModelArtifact {
    pub fn new(model: TrainedModel, cv: Option<CvReport>) -> Self {
        ModelArtifact { version: ARTIFACT_VERSION, model, cv }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        serde_json::to_string_pretty(self).map_err(|e| ModelError::Artifact(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let artifact: ModelArtifact = serde_json::from_str(text).map_err(|e| ModelError::Artifact(e.to_string()))?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(ModelError::Artifact(format!(
                "artifact version {} is not supported (expected {ARTIFACT_VERSION})",
                artifact.version
            )));
        }
        Ok(artifact)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|source| ModelError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }
}
