//! Append-only JSON-lines response cache keyed by prompt hash.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmError;

/// One completed request as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub prompt_hash: String,
    pub model_name: String,
    pub raw_response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub attempt_count: u32,
}

/// Hex SHA-256 over the model name, a zero byte and the prompt bytes.
pub fn prompt_hash(model_name: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_name.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    writer: Option<File>,
    entries: HashMap<String, CompletionRecord>,
    /// Lines that failed to parse on load (e.g. a torn final write).
    pub skipped_lines: usize,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads an existing cache file (if any) and opens it for appending.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let io_err = |source| LlmError::Cache { path: path.clone(), source };
        let mut cache = ResponseCache { path: Some(path.clone()), ..Self::default() };
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(io_err)?);
            for line in reader.lines() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CompletionRecord>(&line) {
                    Ok(rec) => {
                        cache.entries.insert(rec.prompt_hash.clone(), rec);
                    }
                    Err(_) => cache.skipped_lines += 1,
                }
            }
        } else if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
        cache.writer = Some(OpenOptions::new().create(true).append(true).open(&path).map_err(io_err)?);
        Ok(cache)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, hash: &str) -> Option<&CompletionRecord> {
        self.entries.get(hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Records a completion in memory and appends it to the file, flushing immediately.
    pub fn insert(&mut self, record: CompletionRecord) -> Result<(), LlmError> {
        if let (Some(writer), Some(path)) = (self.writer.as_mut(), self.path.as_ref()) {
            let mut line = serde_json::to_string(&record).map_err(|e| LlmError::Protocol(e.to_string()))?;
            line.push('\n');
            writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.flush())
                .map_err(|source| LlmError::Cache { path: path.clone(), source })?;
        }
        self.entries.insert(record.prompt_hash.clone(), record);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(hash: &str, text: &str) -> CompletionRecord {
        CompletionRecord {
            prompt_hash: hash.into(),
            model_name: "m".into(),
            raw_response: text.into(),
            timestamp: 0,
            attempt_count: 1,
        }
    }

    #[test]
    fn hash_depends_on_model_and_prompt() {
        let a = prompt_hash("gpt-3.5-turbo", "hello");
        assert_eq!(a.len(), 64);
        assert_eq!(a, prompt_hash("gpt-3.5-turbo", "hello"));
        assert_ne!(a, prompt_hash("gpt-4", "hello"));
        assert_ne!(a, prompt_hash("gpt-3.5-turbo", "hello!"));
        assert_ne!(prompt_hash("ab", "c"), prompt_hash("a", "bc"));
    }

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("cache.jsonl");
        {
            let mut c = ResponseCache::open(&path).unwrap();
            c.insert(record("h1", "1")).unwrap();
            c.insert(record("h2", "0")).unwrap();
        }
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"prompt_ha").unwrap();
        let c = ResponseCache::open(&path).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get("h2").unwrap().raw_response, "0");
        assert_eq!(c.skipped_lines, 1);
    }
}
