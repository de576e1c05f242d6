use serde::{Deserialize, Serialize};

use super::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationId {
    Capping,
    Chemspeed,
    Dock,
}

impl StationId {
    pub fn name(self) -> &'static str {
        match self {
            StationId::Capping => "capping",
            StationId::Chemspeed => "chemspeed",
            StationId::Dock => "dock",
        }
    }

    pub fn parse(s: &str) -> Option<StationId> {
        match s {
            "capping" => Some(StationId::Capping),
            "chemspeed" => Some(StationId::Chemspeed),
            "dock" => Some(StationId::Dock),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotState {
    CappedVial,
    UncappedVial,
    Missing,
    Knocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrayState {
    Clean,
    BrokenGlass,
    Spillage,
}

pub const CAPPING_SLOTS: usize = 8;
/// Spacing between rack slots along the rack axis (meters).
pub const SLOT_PITCH: f64 = 0.1;

/// Station geometry as authored in a layout file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub id: StationId,
    pub node: String,
    pub grasp_frame: Point,
    pub check_pose: Point,
    pub interaction_radius: f64,
    pub view_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: StationId,
    /// Navigation node where the base parks.
    pub node: String,
    pub base: Point,
    pub grasp_frame: Point,
    pub check_pose: Point,
    pub interaction_radius: f64,
    pub view_radius: f64,
    /// Rack slots (capping only).
    pub slots: Vec<SlotState>,
    /// Rack holder tray (chemspeed only).
    pub tray: Option<TrayState>,
    /// A rack currently sits at this station.
    pub has_rack: bool,
}

impl Station {
    pub fn from_spec(spec: &StationSpec, base: Point) -> Station {
        let (slots, tray, has_rack) = match spec.id {
            StationId::Capping => (vec![SlotState::CappedVial; CAPPING_SLOTS], None, true),
            StationId::Chemspeed => (Vec::new(), Some(TrayState::Clean), false),
            StationId::Dock => (Vec::new(), None, false),
        };
        Station {
            id: spec.id,
            node: spec.node.clone(),
            base,
            grasp_frame: spec.grasp_frame,
            check_pose: spec.check_pose,
            interaction_radius: spec.interaction_radius,
            view_radius: spec.view_radius,
            slots,
            tray,
            has_rack,
        }
    }

    /// Position of rack slot `k`, laid out symmetrically about the grasp
    /// frame, perpendicular to the base-to-grasp direction.
    pub fn slot_position(&self, k: usize) -> Point {
        let heading = self.base.heading_to(self.grasp_frame) + std::f64::consts::FRAC_PI_2;
        let offset = (k as f64 - (CAPPING_SLOTS as f64 - 1.0) / 2.0) * SLOT_PITCH;
        self.grasp_frame.advance(heading, offset)
    }

    pub fn in_interaction_zone(&self, p: Point) -> bool {
        p.distance(self.grasp_frame) <= self.interaction_radius + 1e-9
    }
}
