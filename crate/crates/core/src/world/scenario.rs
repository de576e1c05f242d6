use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::{NavEdge, NavGraph, NavNode};
use super::hazard::HazardSpec;
use super::state::{ManipulationTask, World};
use super::station::{Station, StationId, StationSpec};
use super::WorldError;
use crate::decision::Action;

pub const SCENARIO_VERSION: &str = "scenario 1";
pub const LAYOUT_VERSION: &str = "layout 1";

/// Lab geometry: navigation graph plus station frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    pub version: String,
    pub id: String,
    #[serde(default)]
    pub note: String,
    pub nodes: Vec<NavNode>,
    pub edges: Vec<NavEdge>,
    pub stations: Vec<StationSpec>,
}

const BUILTIN_LAYOUTS: &[(&str, &str)] = &[("pxrd_lab", include_str!("../../data/layouts/pxrd_lab.toml"))];

impl Layout {
    pub fn parse(text: &str) -> Result<Layout, WorldError> {
        let layout: Layout = toml::from_str(text).map_err(|e| WorldError::ScenarioLoad(e.to_string()))?;
        if layout.version != LAYOUT_VERSION {
            return Err(WorldError::ScenarioLoad(format!(
                "unsupported layout version `{}`",
                layout.version
            )));
        }
        Ok(layout)
    }

    pub fn builtin(id: &str) -> Result<Layout, WorldError> {
        let (_, text) = BUILTIN_LAYOUTS
            .iter()
            .find(|(name, _)| *name == id)
            .ok_or_else(|| WorldError::ScenarioLoad(format!("unknown layout `{id}`")))?;
        Layout::parse(text)
    }

    pub fn build_world(&self, start_node: &str) -> Result<World, WorldError> {
        let graph = NavGraph::new(self.nodes.clone(), &self.edges)?;
        let mut stations = Vec::new();
        for spec in &self.stations {
            let idx = graph
                .index_of(&spec.node)
                .ok_or_else(|| WorldError::UnknownNode(spec.node.clone()))?;
            stations.push(Station::from_spec(spec, graph.node(idx).position));
        }
        World::new(graph, stations, start_node)
    }
}

/// The three evaluation tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskRef {
    /// Navigate from the dock to the capping station.
    T1,
    /// Pick up the rack at the capping station.
    T2,
    /// Place the rack at the Chemspeed station.
    T3,
}

impl TaskRef {
    pub const ALL: [TaskRef; 3] = [TaskRef::T1, TaskRef::T2, TaskRef::T3];

    pub fn name(self) -> &'static str {
        match self {
            TaskRef::T1 => "T1",
            TaskRef::T2 => "T2",
            TaskRef::T3 => "T3",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            TaskRef::T1 => "t1",
            TaskRef::T2 => "t2",
            TaskRef::T3 => "t3",
        }
    }

    pub fn is_navigation(self) -> bool {
        self == TaskRef::T1
    }

    pub fn start_node(self) -> &'static str {
        match self {
            TaskRef::T1 => "dock",
            TaskRef::T2 => "capping",
            TaskRef::T3 => "chemspeed",
        }
    }

    pub fn station(self) -> StationId {
        match self {
            TaskRef::T1 | TaskRef::T2 => StationId::Capping,
            TaskRef::T3 => StationId::Chemspeed,
        }
    }

    pub fn manipulation(self) -> Option<ManipulationTask> {
        match self {
            TaskRef::T1 => None,
            TaskRef::T2 => Some(ManipulationTask::PickupRack),
            TaskRef::T3 => Some(ManipulationTask::PlaceRack),
        }
    }
}

/// A staged test condition: world, hazards and the expected decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub version: String,
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub layout: String,
    pub task: TaskRef,
    pub expected_action: Action,
    /// Nominal ground-truth label of the scene.
    pub label: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hazards: Vec<HazardSpec>,
    /// Hazards that appear after the start (`appears_at > 0`).
    #[serde(default)]
    pub injections: Vec<HazardSpec>,
}

macro_rules! scenarios {
    ($($id:literal),* $(,)?) => {
        &[$(($id, include_str!(concat!("../../data/scenarios/", $id, ".toml")))),*]
    };
}

const BUILTIN_SCENARIOS: &[(&str, &str)] = scenarios!(
    "S1", "S2", "S3", "S4", "S5", "S6", "T1_NH", "T1_OH", "T1_LSH", "T2_NH", "T2_OH", "T2_LSH", "T3_NH", "T3_OH",
    "T3_LSH",
);

impl ScenarioSpec {
    pub fn parse(text: &str) -> Result<ScenarioSpec, WorldError> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| WorldError::ScenarioLoad(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<ScenarioSpec, WorldError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| WorldError::ScenarioLoad(format!("{}: {e}", path.display())))?;
        ScenarioSpec::parse(&text)
    }

    pub fn builtin(id: &str) -> Result<ScenarioSpec, WorldError> {
        let (_, text) = BUILTIN_SCENARIOS
            .iter()
            .find(|(name, _)| *name == id)
            .ok_or_else(|| WorldError::MissingScenario(id.to_string()))?;
        ScenarioSpec::parse(text)
    }

    pub fn builtin_ids() -> impl Iterator<Item = &'static str> {
        BUILTIN_SCENARIOS.iter().map(|(id, _)| *id)
    }

    /// Builtin id, or a path to a scenario file.
    pub fn resolve(name: &str) -> Result<ScenarioSpec, WorldError> {
        if BUILTIN_SCENARIOS.iter().any(|(id, _)| *id == name) {
            return ScenarioSpec::builtin(name);
        }
        let path = Path::new(name);
        if path.exists() {
            return ScenarioSpec::load(path);
        }
        Err(WorldError::MissingScenario(name.to_string()))
    }

    pub fn all_hazards(&self) -> impl Iterator<Item = &HazardSpec> {
        self.hazards.iter().chain(&self.injections)
    }

    /// Whether the scene contains a hazard the task must not proceed past.
    pub fn has_unsafe_hazard(&self) -> bool {
        self.all_hazards().any(|h| h.unsafe_ground_truth)
    }

    fn check(&self) -> Result<(), WorldError> {
        let fail = |m: String| Err(WorldError::ScenarioLoad(format!("{}: {m}", self.id)));
        if self.version != SCENARIO_VERSION {
            return fail(format!("unsupported version `{}`", self.version));
        }
        for h in self.all_hazards() {
            h.check().map_err(WorldError::ScenarioLoad)?;
        }
        if let Some(h) = self.injections.iter().find(|h| !(h.appears_at > 0.0)) {
            return fail(format!("injection {} must have appears_at > 0", h.id));
        }
        let consent_expected = self.expected_action == Action::HaltAwaitConsent;
        if consent_expected != self.has_unsafe_hazard() {
            return fail(format!(
                "expected_action {} disagrees with the unsafe ground truth",
                self.expected_action
            ));
        }
        Ok(())
    }

    pub fn build_world(&self) -> Result<World, WorldError> {
        let layout = Layout::builtin(&self.layout)?;
        let mut world = layout.build_world(self.task.start_node())?;
        world.scenario_id = self.id.clone();
        if self.task == TaskRef::T3 {
            world.robot_mut().carrying_rack = true;
        }
        for h in self.all_hazards() {
            world.add_hazard(h)?;
        }
        Ok(world)
    }
}
