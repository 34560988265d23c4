//! Domain-knowledge text rendered from importance rankings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::FeatureSchema;
use crate::models::{Family, ImportanceRanking};

#[derive(Debug, Error, PartialEq)]
pub enum DkError {
    #[error("validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DkKind {
    None,
    Mlfi,
    MlfiOrd,
}

impl DkKind {
    /// Report label for the DK type column.
    pub fn label(self) -> &'static str {
        match self {
            DkKind::None => "NO",
            DkKind::Mlfi => "MLFI",
            DkKind::MlfiOrd => "MLFI-ord",
        }
    }
}

impl fmt::Display for DkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DkKind {
    type Err = DkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "none" | "no" | "dk0" => Ok(DkKind::None),
            "mlfi" => Ok(DkKind::Mlfi),
            "mlfi-ord" => Ok(DkKind::MlfiOrd),
            _ => Err(DkError::Validation(format!("unknown DK kind `{s}`"))),
        }
    }
}

/// How many leading and trailing features the MLFI text names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DkOptions {
    pub top_n: usize,
    pub bottom_n: usize,
}

impl Default for DkOptions {
    fn default() -> Self {
        DkOptions { top_n: 6, bottom_n: 2 }
    }
}

/// Families used as DK sources unless configured otherwise.
pub const DEFAULT_DK_SOURCES: [Family; 3] = [Family::Rf, Family::Lr, Family::Gbt];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainKnowledge {
    pub kind: DkKind,
    pub source: Option<Family>,
    /// Lowercase classifier tag; empty for `None`.
    pub source_name: String,
    pub text: String,
}

impl DomainKnowledge {
    pub fn none() -> Self {
        DomainKnowledge { kind: DkKind::None, source: None, source_name: String::new(), text: String::new() }
    }

    pub fn is_none(&self) -> bool {
        self.kind == DkKind::None
    }
}

/// Joins items as `a, b, and c` (`a and b` for two).
fn english_list(items: &[&str]) -> String {
    match items {
        [] => String::new(),
        [one] => (*one).to_string(),
        [a, b] => format!("{a} and {b}"),
        [init @ .., last] => format!("{}, and {last}", init.join(", ")),
    }
}

fn order_text(names: &[&str]) -> String {
    let mut text = String::from(
        "The order of features is critically important when evaluating heart disease risk. \
         The sequence of features according to their importance starts with ",
    );
    match names {
        [] => {}
        [only] => text.push_str(only),
        [first, last] => text.push_str(&format!("{first}, and finally {last}")),
        [first, second, middle @ .., last] => {
            text.push_str(&format!("{first}, followed by {second}, then "));
            for name in middle {
                text.push_str(name);
                text.push_str(", ");
            }
            text.push_str(&format!("and finally {last}"));
        }
    }
    text
}

/// Renders one DK variant; the ranking must cover `schema` exactly.
pub fn render_dk(
    ranking: &ImportanceRanking,
    kind: DkKind,
    schema: &FeatureSchema,
    opts: &DkOptions,
) -> Result<DomainKnowledge, DkError> {
    if kind == DkKind::None {
        return Ok(DomainKnowledge::none());
    }
    ranking.validate(schema).map_err(|e| DkError::Validation(e.to_string()))?;
    let names = ranking.names();
    let source = ranking.source;
    let text = match kind {
        DkKind::Mlfi => {
            if opts.top_n == 0 || opts.top_n + opts.bottom_n > names.len() {
                return Err(DkError::Validation(format!(
                    "cannot name {} top and {} bottom features out of {}",
                    opts.top_n,
                    opts.bottom_n,
                    names.len()
                )));
            }
            let mut text = format!(
                "According to a {} classifier, the most important features in assessing heart disease risk include {}.",
                source.source_tag(),
                english_list(&names[..opts.top_n])
            );
            if opts.bottom_n > 0 {
                text.push_str(&format!(
                    " Features like {} have relatively lower importance",
                    english_list(&names[names.len() - opts.bottom_n..])
                ));
            }
            text
        }
        DkKind::MlfiOrd => order_text(&names),
        DkKind::None => unreachable!(),
    };
    Ok(DomainKnowledge { kind, source: Some(source), source_name: source.source_tag().to_string(), text })
}

/// One entry of the prompt grid: a DK kind and, except for `None`, its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DkSlot {
    pub kind: DkKind,
    pub source: Option<Family>,
}

impl DkSlot {
    pub fn source_label(&self) -> &'static str {
        self.source.map_or("-", Family::short_name)
    }
}

/// dk0 followed by MLFI / MLFI-ord for each source, giving prompt-0 .. prompt-(2n).
pub fn dk_grid(sources: &[Family]) -> Vec<DkSlot> {
    let mut grid = vec![DkSlot { kind: DkKind::None, source: None }];
    for &s in sources {
        grid.push(DkSlot { kind: DkKind::Mlfi, source: Some(s) });
        grid.push(DkSlot { kind: DkKind::MlfiOrd, source: Some(s) });
    }
    grid
}

/// Feature orders read off the published DK texts, used as fixtures.
pub mod fixtures {
    pub const RF_ORDER: [&str; 13] = [
        "cp", "ca", "chol", "oldpeak", "exang", "thalach", "thal", "age", "slope", "trestbps", "sex", "fbs", "restecg",
    ];
    pub const LR_ORDER: [&str; 13] = [
        "cp", "oldpeak", "ca", "exang", "sex", "thal", "chol", "thalach", "fbs", "age", "slope", "restecg", "trestbps",
    ];
    pub const XGB_ORDER: [&str; 13] = [
        "exang", "cp", "sex", "ca", "oldpeak", "fbs", "slope", "thal", "chol", "thalach", "age", "trestbps", "restecg",
    ];
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(order: &[&str], family: Family) -> ImportanceRanking {
        ImportanceRanking::from_order(&FeatureSchema::heart_disease(), order, family).unwrap()
    }

    #[test]
    fn none_is_empty() {
        let r = ranking(&fixtures::RF_ORDER, Family::Rf);
        let dk = render_dk(&r, DkKind::None, &FeatureSchema::heart_disease(), &DkOptions::default()).unwrap();
        assert!(dk.text.is_empty() && dk.source.is_none());
    }

    #[test]
    fn mlfi_names_top_and_bottom() {
        let schema = FeatureSchema::heart_disease();
        let r = ranking(&fixtures::LR_ORDER, Family::Lr);
        let dk = render_dk(&r, DkKind::Mlfi, &schema, &DkOptions::default()).unwrap();
        assert!(dk.text.contains("include cp, oldpeak, ca, exang, sex, and thal."));
        assert!(dk.text.ends_with("Features like restecg and trestbps have relatively lower importance"));
        assert_eq!(dk.source_name, "logisticregression");
    }

    #[test]
    fn ord_lists_every_feature_once() {
        let schema = FeatureSchema::heart_disease();
        let r = ranking(&fixtures::XGB_ORDER, Family::Gbt);
        let dk = render_dk(&r, DkKind::MlfiOrd, &schema, &DkOptions::default()).unwrap();
        let tail = dk.text.split("starts with ").nth(1).unwrap();
        let words: Vec<&str> = tail
            .split([',', ' '])
            .filter(|w| !w.is_empty() && !matches!(*w, "followed" | "by" | "then" | "and" | "finally"))
            .collect();
        assert_eq!(words, fixtures::XGB_ORDER);
    }

    #[test]
    fn english_lists() {
        assert_eq!(english_list(&["a"]), "a");
        assert_eq!(english_list(&["a", "b"]), "a and b");
        assert_eq!(english_list(&["a", "b", "c"]), "a, b, and c");
    }

    #[test]
    fn grid_layout() {
        let g = dk_grid(&DEFAULT_DK_SOURCES);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0].source_label(), "-");
        assert_eq!((g[5].kind, g[5].source_label()), (DkKind::Mlfi, "XGB"));
        assert_eq!((g[4].kind, g[4].source_label()), (DkKind::MlfiOrd, "LR"));
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("mlfi_ord".parse::<DkKind>().unwrap(), DkKind::MlfiOrd);
        assert_eq!("NONE".parse::<DkKind>().unwrap(), DkKind::None);
        assert!("x".parse::<DkKind>().is_err());
    }
}
