//! Deterministic stand-ins for the chat-completions service.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::LlmError;
use crate::data::Dataset;
use crate::prompt::{format_value, query_line};

/// Parses the `name: value` pairs of an `<Inputs>: ...` line.
pub fn parse_inputs(line: &str) -> Result<Vec<(String, f64)>, LlmError> {
    let body = line
        .strip_prefix("<Inputs>:")
        .ok_or_else(|| LlmError::Mock(format!("not a query line: `{line}`")))?;
    body.split(',')
        .map(|pair| {
            let (name, value) =
                pair.split_once(':').ok_or_else(|| LlmError::Mock(format!("malformed pair `{}`", pair.trim())))?;
            let value: f64 =
                value.trim().parse().map_err(|_| LlmError::Mock(format!("malformed value in `{}`", pair.trim())))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

fn key_of(values: impl Iterator<Item = f64>) -> String {
    values.map(format_value).collect::<Vec<_>>().join(",")
}

/// Serializable description of a mock, as used in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MockSpec {
    /// Answers with the true label of the query row.
    Oracle,
    /// Replays the given replies in order.
    Scripted { responses: Vec<String> },
    /// Replies `reply` to every prompt.
    Constant { reply: String },
    /// Replies "1" iff `feature >= threshold` in the query.
    Rule { feature: String, threshold: f64 },
}

impl MockSpec {
    /// Instantiates the mock; the oracle needs the rows it will be asked about.
    pub fn build(&self, truth: Option<&Dataset>) -> Result<MockPolicy, LlmError> {
        Ok(match self {
            MockSpec::Oracle => {
                MockPolicy::oracle(truth.ok_or_else(|| LlmError::Config("oracle mock needs a labelled test set".into()))?)
            }
            MockSpec::Scripted { responses } => MockPolicy::scripted(responses.clone()),
            MockSpec::Constant { reply } => MockPolicy::Constant(reply.clone()),
            MockSpec::Rule { feature, threshold } => MockPolicy::Rule { feature: feature.clone(), threshold: *threshold },
        })
    }
}

#[derive(Debug)]
pub enum MockPolicy {
    /// Label per query vector; `None` marks identical vectors with conflicting labels.
    Oracle(HashMap<String, Option<u8>>),
    Scripted(Mutex<VecDeque<String>>),
    Constant(String),
    Rule { feature: String, threshold: f64 },
}

impl MockPolicy {
    pub fn oracle(truth: &Dataset) -> Self {
        let mut table: HashMap<String, Option<u8>> = HashMap::new();
        for (x, &y) in truth.matrix.iter().zip(&truth.labels) {
            table
                .entry(key_of(x.iter().copied()))
                .and_modify(|l| {
                    if *l != Some(y) {
                        *l = None;
                    }
                })
                .or_insert(Some(y));
        }
        MockPolicy::Oracle(table)
    }

    pub fn scripted<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        MockPolicy::Scripted(Mutex::new(responses.into_iter().map(Into::into).collect()))
    }

    /// Reply for a full prompt text.
    pub fn respond(&self, prompt: &str) -> Result<String, LlmError> {
        match self {
            MockPolicy::Scripted(queue) => {
                queue.lock().expect("script queue").pop_front().ok_or(LlmError::MockExhausted)
            }
            MockPolicy::Constant(reply) => Ok(reply.clone()),
            MockPolicy::Oracle(table) => {
                let values = query_values(prompt)?;
                match table.get(&key_of(values.iter().map(|(_, v)| *v))) {
                    Some(Some(label)) => Ok(label.to_string()),
                    Some(None) => Err(LlmError::Mock("query matches rows with conflicting labels".into())),
                    None => Err(LlmError::Mock("query row is not in the oracle table".into())),
                }
            }
            MockPolicy::Rule { feature, threshold } => {
                let values = query_values(prompt)?;
                let value = values
                    .iter()
                    .find(|(name, _)| name == feature)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| LlmError::Mock(format!("feature `{feature}` absent from query")))?;
                Ok(if value >= *threshold { "1" } else { "0" }.to_string())
            }
        }
    }
}

fn query_values(prompt: &str) -> Result<Vec<(String, f64)>, LlmError> {
    parse_inputs(query_line(prompt).ok_or_else(|| LlmError::Mock("prompt has no <Inputs> line".into()))?)
}
