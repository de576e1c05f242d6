use serde::{Deserialize, Serialize};

use super::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HazardKind {
    Spillage,
    Vial,
    ContaminatedGlove,
    BrokenGlass,
    Obstruction,
    UncappedVial,
    KnockedVial,
    Tool,
}

impl HazardKind {
    /// Whether hazards of this kind must, may or must not carry a chemical.
    pub fn chemical_rule(self) -> ChemicalRule {
        match self {
            HazardKind::Spillage | HazardKind::UncappedVial => ChemicalRule::Required,
            HazardKind::Vial | HazardKind::KnockedVial => ChemicalRule::Optional,
            _ => ChemicalRule::Forbidden,
        }
    }

    /// Label the classifier reports for this kind when the scenario does
    /// not author one.
    pub fn default_label(self) -> &'static str {
        match self {
            HazardKind::Spillage => "spillage",
            HazardKind::Vial | HazardKind::Tool => "foreign_object",
            HazardKind::ContaminatedGlove => "contaminated_glove",
            HazardKind::BrokenGlass => "broken_glass",
            HazardKind::Obstruction | HazardKind::KnockedVial => "obstruction",
            HazardKind::UncappedVial => "capping_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemicalRule {
    Required,
    Optional,
    Forbidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chemical {
    Acetone,
    Ethanol,
    Isopropanol,
}

impl Chemical {
    pub const ALL: [Chemical; 3] = [Chemical::Acetone, Chemical::Ethanol, Chemical::Isopropanol];

    pub fn name(self) -> &'static str {
        match self {
            Chemical::Acetone => "acetone",
            Chemical::Ethanol => "ethanol",
            Chemical::Isopropanol => "isopropanol",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Containment {
    #[default]
    Sealed,
    Unsealed,
    Spilled,
}

/// Where a hazard is placed. `Ahead` is resolved against the robot pose at
/// the moment the hazard materializes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    At(Point),
    Ahead(f64),
}

/// A hazard as authored in a scenario or injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardSpec {
    pub id: String,
    pub kind: HazardKind,
    #[serde(default)]
    pub position: Option<Point>,
    /// Distance ahead of the robot, alternative to `position`.
    #[serde(default)]
    pub ahead: Option<f64>,
    #[serde(default)]
    pub chemical: Option<Chemical>,
    #[serde(default)]
    pub containment: Containment,
    #[serde(default = "yes")]
    pub visible: bool,
    #[serde(default)]
    pub appears_at: f64,
    #[serde(default)]
    pub on_path: bool,
    #[serde(default)]
    pub in_interaction_zone: bool,
    #[serde(rename = "unsafe")]
    pub unsafe_ground_truth: bool,
    #[serde(default)]
    pub label: Option<String>,
    /// Hard-to-perceive instance (small, transparent, far slot).
    #[serde(default)]
    pub subtle: bool,
}

fn yes() -> bool {
    true
}

impl HazardSpec {
    pub fn new(id: impl Into<String>, kind: HazardKind, position: Point, unsafe_ground_truth: bool) -> Self {
        HazardSpec {
            id: id.into(),
            kind,
            position: Some(position),
            ahead: None,
            chemical: None,
            containment: Containment::Sealed,
            visible: true,
            appears_at: 0.0,
            on_path: false,
            in_interaction_zone: false,
            unsafe_ground_truth,
            label: None,
            subtle: false,
        }
    }

    pub fn placement(&self) -> Result<Placement, String> {
        match (self.position, self.ahead) {
            (Some(p), None) => Ok(Placement::At(p)),
            (None, Some(d)) if d >= 0.0 => Ok(Placement::Ahead(d)),
            (None, Some(_)) => Err(format!("hazard {}: ahead must be non-negative", self.id)),
            _ => Err(format!(
                "hazard {}: exactly one of position or ahead is required",
                self.id
            )),
        }
    }

    pub fn check(&self) -> Result<(), String> {
        self.placement()?;
        if !(self.appears_at >= 0.0) {
            return Err(format!("hazard {}: appears_at must be >= 0", self.id));
        }
        match (self.kind.chemical_rule(), self.chemical) {
            (ChemicalRule::Required, None) => Err(format!("hazard {}: {:?} needs a chemical", self.id, self.kind)),
            (ChemicalRule::Forbidden, Some(_)) => {
                Err(format!("hazard {}: {:?} cannot carry a chemical", self.id, self.kind))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(self.kind.default_label())
    }
}

/// A hazard present in (or scheduled into) the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardEntity {
    pub id: String,
    pub kind: HazardKind,
    /// Resolved position; `None` until an `Ahead` placement materializes.
    pub position: Option<Point>,
    pub chemical: Option<Chemical>,
    pub containment: Containment,
    pub visible: bool,
    pub appears_at: f64,
    pub on_path: bool,
    pub in_interaction_zone: bool,
    pub unsafe_ground_truth: bool,
    pub label: String,
    pub subtle: bool,
    /// Distance ahead of the robot for placements resolved on appearance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ahead: Option<f64>,
    #[serde(default)]
    pub appeared: bool,
    /// Time an operator removed the hazard, if any.
    pub cleared_at: Option<f64>,
}

impl HazardEntity {
    pub fn is_present(&self, clock: f64) -> bool {
        self.appeared && self.appears_at <= clock + 1e-9 && self.cleared_at.is_none()
    }

    pub fn emits(&self) -> bool {
        self.chemical.is_some()
    }
}
