//! In-context example sampling and five-part prompt assembly.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, FeatureSchema};
use crate::dk::DomainKnowledge;
use crate::rng::rng_from;

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("sampling error: {0}")]
    Sampling(String),
}

/// Example counts of the prompt grid.
pub const N_EX_GRID: [usize; 5] = [0, 2, 4, 8, 16];

const TASK_TEXT: &str = "Given the provided input attributes, evaluate the risk of heart disease for the individual.
The diagnosis of heart disease (angiographic disease status) is based on the degree of diameter narrowing in the blood vessels:
- 0: Less than 50% diameter narrowing, implying a lower risk.
- 1: More than 50% diameter narrowing, indicating a higher risk.
If the assessment determines a high risk, the output should be '1'. If the risk is determined to be low, the output should be '0'.";

/// Stray closing sentence of the published task box, kept only when `paper_faithful` is set.
const CREDIT_RISK_TEXT: &str =
    "Evaluate the credit risk based on given attributes. If good, respond with '1', if bad, respond with '0'.";

const ATTRIBUTES_HEADER: &str = "The explanation of each attribute is as follows:";
const DK_HEADER: &str = "Domain Knowledge:";
const QUESTION_TEXT: &str = "Now, given the following inputs, please evaluate the risk of heart disease:";
const PART_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub n_ex: usize,
    pub dk: DomainKnowledge,
    pub seed: u64,
    /// Reproduce the published prompt box, stray sentence and float style included.
    pub paper_faithful: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: u8,
}

/// Draws `ceil(n/2)` positives and `floor(n/2)` negatives without
/// replacement, interleaved starting with a positive.
pub fn sample_examples(train: &Dataset, n_ex: usize, seed: u64) -> Result<Vec<Example>, PromptError> {
    if n_ex == 0 {
        return Ok(Vec::new());
    }
    if n_ex > train.len() {
        return Err(PromptError::Sampling(format!("{n_ex} examples requested from {} rows", train.len())));
    }
    let mut rng = rng_from(seed, &[n_ex as u64]);
    let mut pick = |class: u8, count: usize| -> Result<Vec<usize>, PromptError> {
        let mut members: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == class).collect();
        if members.len() < count {
            return Err(PromptError::Sampling(format!(
                "class {class} has {} rows, {count} needed",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        members.truncate(count);
        Ok(members)
    };
    let positives = pick(1, n_ex.div_ceil(2))?;
    let negatives = pick(0, n_ex / 2)?;
    let mut order = Vec::with_capacity(n_ex);
    for k in 0..positives.len() {
        order.push(positives[k]);
        if let Some(&neg) = negatives.get(k) {
            order.push(neg);
        }
    }
    Ok(order
        .into_iter()
        .map(|i| Example { features: train.matrix[i].clone(), label: train.labels[i] })
        .collect())
}

/// Shortest round-trip decimal; negative zero prints as `0`.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Always shows a fractional part (`46.0`), as in the published query line.
fn format_value_float_style(v: f64) -> String {
    if v == 0.0 {
        "0.0".to_string()
    } else {
        format!("{v:?}")
    }
}

fn render_with(x: &[f64], schema: &FeatureSchema, fmt: fn(f64) -> String) -> String {
    schema.names().zip(x).map(|(name, &v)| format!("{name}: {}", fmt(v))).collect::<Vec<_>>().join(", ")
}

/// `name: value` pairs in schema order.
pub fn render_instance(x: &[f64], schema: &FeatureSchema) -> String {
    render_with(x, schema, format_value)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub part1_task: String,
    pub part2_attributes: String,
    pub part3_examples: Vec<String>,
    /// Absent when the DK variant is `None`.
    pub part4_dk: Option<String>,
    pub part5_question: String,
}

impl Prompt {
    /// Full prompt with parts in order 1..5 separated by blank lines.
    pub fn text(&self) -> String {
        let mut parts: Vec<&str> = vec![&self.part1_task, &self.part2_attributes];
        let examples = self.part3_examples.join(PART_SEPARATOR);
        if !self.part3_examples.is_empty() {
            parts.push(&examples);
        }
        if let Some(dk) = &self.part4_dk {
            parts.push(dk);
        }
        parts.push(&self.part5_question);
        parts.join(PART_SEPARATOR)
    }

    /// Everything after the task instruction, for the system-message layout.
    pub fn body_without_task(&self) -> String {
        let full = self.text();
        full[self.part1_task.len() + PART_SEPARATOR.len()..].to_string()
    }

    /// The `<Inputs>: ...` line of the final question.
    pub fn query_line(&self) -> &str {
        query_line(&self.part5_question).unwrap_or("")
    }
}

/// Finds the query `<Inputs>: ...` line in a prompt or question text.
pub fn query_line(text: &str) -> Option<&str> {
    text.lines().rev().find(|l| l.starts_with("<Inputs>: "))
}

fn attributes_text(schema: &FeatureSchema) -> String {
    let mut text = String::from(ATTRIBUTES_HEADER);
    for f in &schema.features {
        text.push_str(&format!("\n- {}: {}", f.label(), f.description));
    }
    text
}

fn example_block(i: usize, ex: &Example, schema: &FeatureSchema) -> String {
    format!("Example {i}:\n<Inputs {i}>: {}\n<Answer {i}>: {}", render_instance(&ex.features, schema), ex.label)
}

pub fn assemble_prompt(
    schema: &FeatureSchema,
    spec: &PromptSpec,
    examples: &[Example],
    query: &[f64],
) -> Result<Prompt, PromptError> {
    if examples.len() != spec.n_ex {
        return Err(PromptError::Validation(format!(
            "{} examples supplied, spec asks for {}",
            examples.len(),
            spec.n_ex
        )));
    }
    if query.len() != schema.len() {
        return Err(PromptError::Validation(format!(
            "query has {} values, schema has {}",
            query.len(),
            schema.len()
        )));
    }
    for (i, ex) in examples.iter().enumerate() {
        if ex.features.len() != schema.len() || ex.label > 1 {
            return Err(PromptError::Validation(format!("example {} is malformed", i + 1)));
        }
    }
    if spec.dk.is_none() != spec.dk.text.is_empty() {
        return Err(PromptError::Validation("DK text must be empty exactly for the None variant".into()));
    }

    let mut part1_task = TASK_TEXT.to_string();
    if spec.paper_faithful {
        part1_task.push('\n');
        part1_task.push_str(CREDIT_RISK_TEXT);
    }
    let (query_text, answer) = if spec.paper_faithful {
        (render_with(query, schema, format_value_float_style), "<Answer>: ?")
    } else {
        (render_instance(query, schema), "<Answer>:")
    };
    Ok(Prompt {
        part1_task,
        part2_attributes: attributes_text(schema),
        part3_examples: examples.iter().enumerate().map(|(i, ex)| example_block(i + 1, ex, schema)).collect(),
        part4_dk: (!spec.dk.is_none()).then(|| format!("{DK_HEADER}\n{}", spec.dk.text)),
        part5_question: format!("{QUESTION_TEXT}\n<Inputs>: {query_text}\n{answer}"),
    })
}
