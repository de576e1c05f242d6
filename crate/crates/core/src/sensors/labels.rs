use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NO_PROBLEM: &str = "no_problem_detected";
pub const OFF_PATH: &str = "foreign_object_off_path";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelSetError {
    #[error("safe label `{0}` is not in the label set")]
    SafeNotInSet(String),
    #[error("`{NO_PROBLEM}` must be a safe label")]
    NoProblemUnsafe,
    #[error("label set is empty")]
    Empty,
}

/// Hazard labels partitioned into safe (continue permitted) and unsafe
/// (consent required) classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLabels", into = "RawLabels")]
pub struct LabelSet {
    labels: Vec<String>,
    safe: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct RawLabels {
    labels: Vec<String>,
    safe: Vec<String>,
}

impl TryFrom<RawLabels> for LabelSet {
    type Error = LabelSetError;
    fn try_from(raw: RawLabels) -> Result<Self, Self::Error> {
        LabelSet::new(raw.labels, raw.safe)
    }
}

impl From<LabelSet> for RawLabels {
    fn from(set: LabelSet) -> Self {
        RawLabels {
            labels: set.labels,
            safe: set.safe.into_iter().collect(),
        }
    }
}

impl Default for LabelSet {
    fn default() -> Self {
        let labels = [
            NO_PROBLEM,
            OFF_PATH,
            "spillage",
            "capping_failure",
            "obstruction",
            "broken_glass",
            "contaminated_glove",
            "foreign_object",
        ];
        LabelSet::new(labels, [NO_PROBLEM, OFF_PATH]).expect("default labels are consistent")
    }
}

impl LabelSet {
    pub fn new<I, J, S, T>(labels: I, safe: J) -> Result<Self, LabelSetError>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut seen = BTreeSet::new();
        let labels: Vec<String> = labels
            .into_iter()
            .map(Into::into)
            .filter(|l: &String| seen.insert(l.clone()))
            .collect();
        if labels.is_empty() {
            return Err(LabelSetError::Empty);
        }
        let safe: BTreeSet<String> = safe.into_iter().map(Into::into).collect();
        if let Some(missing) = safe.iter().find(|s| !seen.contains(*s)) {
            return Err(LabelSetError::SafeNotInSet(missing.clone()));
        }
        if seen.contains(NO_PROBLEM) && !safe.contains(NO_PROBLEM) {
            return Err(LabelSetError::NoProblemUnsafe);
        }
        Ok(LabelSet { labels, safe })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }

    pub fn is_safe(&self, label: &str) -> bool {
        self.safe.contains(label)
    }

    pub fn is_unsafe(&self, label: &str) -> bool {
        self.contains(label) && !self.is_safe(label)
    }

    pub fn safe(&self) -> impl Iterator<Item = &str> {
        self.safe.iter().map(String::as_str)
    }

    pub fn unsafe_labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str).filter(|l| !self.is_safe(l))
    }
}
