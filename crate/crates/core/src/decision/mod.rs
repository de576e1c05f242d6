//! Hierarchical decision functions for navigation and manipulation.
//!
//! Primary modalities (binary vision `x1`, VOC index `x2`) gate whether the
//! label classifier (`x3`) is consulted at all. The label then selects
//! between an automatic resume and a consent request.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensors::LabelSet;

/// Ordered by severity: `Proceed < HaltAutoResume < HaltAwaitConsent`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    #[default]
    Proceed,
    HaltAutoResume,
    HaltAwaitConsent,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Proceed, Action::HaltAutoResume, Action::HaltAwaitConsent];

    pub fn code(self) -> &'static str {
        match self {
            Action::Proceed => "a1",
            Action::HaltAutoResume => "a2",
            Action::HaltAwaitConsent => "a3",
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Action::Proceed => "proceed",
            Action::HaltAutoResume => "halt_auto_resume",
            Action::HaltAwaitConsent => "halt_await_consent",
        })
    }
}

pub fn severity_max(a: Action, b: Action) -> Action {
    a.max(b)
}

/// Classifier output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: String,
    pub score: f64,
}

impl Classification {
    pub fn new(label: impl Into<String>, score: f64) -> Self {
        Classification {
            label: label.into(),
            score,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecisionInputs<'a> {
    pub x1: bool,
    pub x2: u32,
    pub x3: Option<&'a Classification>,
    pub t_safe: f64,
    pub labels: &'a LabelSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManipulationPhase {
    InitialVoc,
    PostVision,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecisionError {
    #[error("a primary modality triggered but no classification was supplied")]
    MissingSecondary,
    #[error("a classification was supplied without a primary trigger")]
    SpuriousSecondary,
    #[error("input not allowed in this phase: {0}")]
    PhaseViolation(&'static str),
    #[error("label `{0}` is not in the label set")]
    UnknownLabel(String),
    #[error("T_safe must be positive")]
    InvalidThreshold,
}

/// VOC trigger for navigation: strictly above the threshold.
pub fn voc_triggers_navigation(x2: u32, t_safe: f64) -> bool {
    f64::from(x2) > t_safe
}

/// Initial manipulation check passes only strictly below the threshold.
pub fn voc_clears_manipulation(x2: u32, t_safe: f64) -> bool {
    f64::from(x2) < t_safe
}

fn check_common(inputs: &DecisionInputs<'_>) -> Result<(), DecisionError> {
    if !(inputs.t_safe > 0.0) {
        return Err(DecisionError::InvalidThreshold);
    }
    if let Some(c) = inputs.x3 {
        if !inputs.labels.contains(&c.label) {
            return Err(DecisionError::UnknownLabel(c.label.clone()));
        }
    }
    Ok(())
}

fn by_label(inputs: &DecisionInputs<'_>) -> Result<Action, DecisionError> {
    let c = inputs.x3.ok_or(DecisionError::MissingSecondary)?;
    Ok(if inputs.labels.is_safe(&c.label) {
        Action::HaltAutoResume
    } else {
        Action::HaltAwaitConsent
    })
}

pub fn decide_navigation(inputs: &DecisionInputs<'_>) -> Result<Action, DecisionError> {
    check_common(inputs)?;
    let triggered = inputs.x1 || voc_triggers_navigation(inputs.x2, inputs.t_safe);
    if !triggered {
        return match inputs.x3 {
            Some(_) => Err(DecisionError::SpuriousSecondary),
            None => Ok(Action::Proceed),
        };
    }
    by_label(inputs)
}

/// `x1` is ignored in the initial phase and must be false; `x2` is ignored
/// after vision.
pub fn decide_manipulation(inputs: &DecisionInputs<'_>, phase: ManipulationPhase) -> Result<Action, DecisionError> {
    check_common(inputs)?;
    match phase {
        ManipulationPhase::InitialVoc => {
            if inputs.x3.is_some() {
                return Err(DecisionError::PhaseViolation("classification during initial VOC check"));
            }
            if inputs.x1 {
                return Err(DecisionError::PhaseViolation("vision flag during initial VOC check"));
            }
            Ok(if voc_clears_manipulation(inputs.x2, inputs.t_safe) {
                Action::Proceed
            } else {
                Action::HaltAwaitConsent
            })
        }
        ManipulationPhase::PostVision => {
            if !inputs.x1 {
                return match inputs.x3 {
                    Some(_) => Err(DecisionError::SpuriousSecondary),
                    None => Ok(Action::Proceed),
                };
            }
            by_label(inputs)
        }
    }
}
