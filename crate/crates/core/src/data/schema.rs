use serde::{Deserialize, Serialize};

/// Name of the diagnosis column in the UCI files.
pub const TARGET_COLUMN: &str = "num";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Coded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub description: String,
    pub kind: FeatureKind,
}

impl FeatureDescriptor {
    /// Attribute label as shown in the prompt ("cp" -> "Cp").
    pub fn label(&self) -> String {
        let mut chars = self.name.chars();
        match chars.next() {
            Some(first) => first.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    }
}

/// Ordered feature descriptors for a tabular dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureDescriptor>,
}

const HEART_FEATURES: [(&str, &str, FeatureKind); 13] = [
    ("age", "Age of the individual", FeatureKind::Continuous),
    ("sex", "Sex of the individual (1 = Male, 0 = Female)", FeatureKind::Coded),
    (
        "cp",
        "Chest pain type (1 = typical angina, 2 = atypical angina, 3 = non-anginal pain, 4 = asymptomatic)",
        FeatureKind::Coded,
    ),
    ("trestbps", "Resting blood pressure (in mm Hg on admission to the hospital)", FeatureKind::Continuous),
    ("chol", "Serum cholesterol in mg/dl", FeatureKind::Continuous),
    ("fbs", "Fasting blood sugar > 120 mg/dl (1 = true, 0 = false)", FeatureKind::Coded),
    (
        "restecg",
        "Resting electrocardiographic results (0 = normal, 1 = having ST-T wave abnormality, 2 = showing probable or definite left ventricular hypertrophy)",
        FeatureKind::Coded,
    ),
    ("thalach", "Maximum heart rate achieved", FeatureKind::Continuous),
    ("exang", "Exercise-induced angina (1 = yes, 0 = no)", FeatureKind::Coded),
    ("oldpeak", "ST depression induced by exercise relative to rest", FeatureKind::Continuous),
    (
        "slope",
        "The slope of the peak exercise ST segment (1 = upsloping, 2 = flat, 3 = downsloping)",
        FeatureKind::Coded,
    ),
    ("ca", "Number of major vessels (0-3) colored by fluoroscopy", FeatureKind::Coded),
    ("thal", "Thalassemia (3 = normal, 6 = fixed defect, 7 = reversible defect)", FeatureKind::Coded),
];

pub const HEART_FEATURE_COUNT: usize = HEART_FEATURES.len();

impl FeatureSchema {
    /// The 13-attribute heart-disease schema in canonical column order.
    pub fn heart_disease() -> Self {
        FeatureSchema {
            features: HEART_FEATURES
                .iter()
                .map(|(name, description, kind)| FeatureDescriptor {
                    name: (*name).to_string(),
                    description: (*description).to_string(),
                    kind: *kind,
                })
                .collect(),
        }
    }

    /// Anonymous continuous features `f1..fn`, mostly for tests and toy data.
    pub fn generic(n: usize) -> Self {
        FeatureSchema {
            features: (1..=n)
                .map(|i| FeatureDescriptor {
                    name: format!("f{i}"),
                    description: format!("Feature {i}"),
                    kind: FeatureKind::Continuous,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn is_heart_disease(&self) -> bool {
        *self == Self::heart_disease()
    }
}
