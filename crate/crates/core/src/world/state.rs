use serde::{Deserialize, Serialize};

use super::geometry::{Point, Pose};
use super::graph::{NavGraph, Route};
use super::hazard::{HazardEntity, HazardSpec, Placement};
use super::station::{Station, StationId};
use super::WorldError;

/// Robot footprint radius: an on-path hazard closer than this is hit.
pub const FOOTPRINT_RADIUS: f64 = 0.25;
pub const DEFAULT_DT: f64 = 0.1;
pub const DEFAULT_SPEED: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionState {
    Idle,
    Navigating,
    Halted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmState {
    Stowed,
    AtCheckPose,
    Manipulating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManipulationTask {
    PickupRack,
    PlaceRack,
}

impl ManipulationTask {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "pickup_rack" => Some(ManipulationTask::PickupRack),
            "place_rack" => Some(ManipulationTask::PlaceRack),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ManipulationTask::PickupRack => "pickup_rack",
            ManipulationTask::PlaceRack => "place_rack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ManipulationOutcome {
    Success,
    UnsafeManipulation { hazards: Vec<String> },
}

/// Things that happened to the world, in clock order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WorldEvent {
    HazardAppeared { time: f64, id: String },
    HazardCleared { time: f64, id: String },
    Collision { time: f64, id: String },
    Arrived { time: f64, node: String },
    UnsafeManipulation { time: f64, hazards: Vec<String> },
}

#[derive(Debug, Clone)]
struct RouteProgress {
    route: Route,
    leg: usize,
    along: f64,
}

#[derive(Debug, Clone)]
pub struct Robot {
    pub pose: Pose,
    /// Graph node the robot rests at, when not between nodes.
    pub node: Option<usize>,
    pub base_speed: f64,
    /// Multiplier on base speed (run-to-run jitter).
    pub speed_factor: f64,
    pub motion: MotionState,
    pub arm: ArmState,
    pub carrying_rack: bool,
    route: Option<RouteProgress>,
}

/// Vision and classifier regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Rectangle in front of the robot: `range` meters long, `half_width`
    /// to either side.
    Ahead {
        range: f64,
        half_width: f64,
    },
    /// Manipulation interaction zone of a station.
    InteractionZone(StationId),
    /// What the arm camera sees from the check pose.
    CheckView(StationId),
    Radius {
        center: Point,
        r: f64,
    },
}

impl Region {
    pub const NAV_CAMERA: Region = Region::Ahead {
        range: 0.7,
        half_width: 0.35,
    };
    pub const NAV_CLASSIFIER: Region = Region::Ahead {
        range: 2.0,
        half_width: 1.0,
    };
}

/// Simulated laboratory state.
#[derive(Debug, Clone)]
pub struct World {
    clock: f64,
    graph: NavGraph,
    stations: Vec<Station>,
    robot: Robot,
    hazards: Vec<HazardEntity>,
    collided: Vec<String>,
    events: Vec<WorldEvent>,
    pub scenario_id: String,
}

impl World {
    pub fn new(graph: NavGraph, stations: Vec<Station>, start_node: &str) -> Result<World, WorldError> {
        let node = graph
            .index_of(start_node)
            .ok_or_else(|| WorldError::UnknownNode(start_node.to_string()))?;
        for s in &stations {
            if graph.index_of(&s.node).is_none() {
                return Err(WorldError::UnknownNode(s.node.clone()));
            }
        }
        let position = graph.node(node).position;
        Ok(World {
            clock: 0.0,
            graph,
            stations,
            robot: Robot {
                pose: Pose { position, heading: 0.0 },
                node: Some(node),
                base_speed: DEFAULT_SPEED,
                speed_factor: 1.0,
                motion: MotionState::Idle,
                arm: ArmState::Stowed,
                carrying_rack: false,
                route: None,
            },
            hazards: Vec::new(),
            collided: Vec::new(),
            events: Vec::new(),
            scenario_id: String::new(),
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn graph(&self) -> &NavGraph {
        &self.graph
    }

    pub fn robot(&self) -> &Robot {
        &self.robot
    }

    pub fn robot_mut(&mut self) -> &mut Robot {
        &mut self.robot
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn station(&self, id: StationId) -> Result<&Station, WorldError> {
        self.stations
            .iter()
            .find(|s| s.id == id)
            .ok_or(WorldError::UnknownStation(id))
    }

    fn station_mut(&mut self, id: StationId) -> Result<&mut Station, WorldError> {
        self.stations
            .iter_mut()
            .find(|s| s.id == id)
            .ok_or(WorldError::UnknownStation(id))
    }

    pub fn hazards(&self) -> &[HazardEntity] {
        &self.hazards
    }

    pub fn events(&self) -> &[WorldEvent] {
        &self.events
    }

    /// Node id the robot currently rests at.
    pub fn current_node(&self) -> Option<&str> {
        self.robot.node.map(|i| self.graph.node(i).id.as_str())
    }

    /// Station whose parking node the robot rests at.
    pub fn station_at_robot(&self) -> Option<StationId> {
        let node = self.current_node()?;
        self.stations.iter().find(|s| s.node == node).map(|s| s.id)
    }

    pub fn collisions(&self) -> &[String] {
        &self.collided
    }

    /// Adds a hazard. Hazards with `appears_at` in the past appear on the
    /// next step; `Ahead` placements resolve when they appear.
    pub fn add_hazard(&mut self, spec: &HazardSpec) -> Result<(), WorldError> {
        spec.check().map_err(WorldError::InvalidHazard)?;
        if self.hazards.iter().any(|h| h.id == spec.id) {
            return Err(WorldError::InvalidHazard(format!("duplicate hazard id {}", spec.id)));
        }
        let position = match spec.placement().map_err(WorldError::InvalidHazard)? {
            Placement::At(p) => Some(p),
            Placement::Ahead(_) => None,
        };
        self.hazards.push(HazardEntity {
            id: spec.id.clone(),
            kind: spec.kind,
            position,
            chemical: spec.chemical,
            containment: spec.containment,
            visible: spec.visible,
            appears_at: spec.appears_at,
            on_path: spec.on_path,
            in_interaction_zone: spec.in_interaction_zone,
            unsafe_ground_truth: spec.unsafe_ground_truth,
            label: spec.label().to_string(),
            subtle: spec.subtle,
            ahead: spec.ahead,
            appeared: false,
            cleared_at: None,
        });
        self.materialize();
        Ok(())
    }

    /// Removes a hazard (operator remediation).
    pub fn clear_hazard(&mut self, id: &str) -> bool {
        let now = self.clock;
        match self.hazards.iter_mut().find(|h| h.id == id && h.cleared_at.is_none()) {
            Some(h) => {
                h.cleared_at = Some(now);
                self.events.push(WorldEvent::HazardCleared {
                    time: now,
                    id: id.to_string(),
                });
                true
            }
            None => false,
        }
    }

    /// Present hazards (appeared, not cleared).
    pub fn present_hazards(&self) -> impl Iterator<Item = &HazardEntity> {
        let clock = self.clock;
        self.hazards.iter().filter(move |h| h.is_present(clock))
    }

    fn in_region(&self, region: Region, p: Point) -> Result<bool, WorldError> {
        Ok(match region {
            Region::Ahead { range, half_width } => {
                let (fwd, lat) = self.robot.pose.position.local(self.robot.pose.heading, p);
                (0.0..=range).contains(&fwd) && lat.abs() <= half_width
            }
            Region::InteractionZone(id) => self.station(id)?.in_interaction_zone(p),
            Region::CheckView(id) => {
                let s = self.station(id)?;
                p.distance(s.grasp_frame) <= s.view_radius + 1e-9
            }
            Region::Radius { center, r } => p.distance(center) <= r + 1e-9,
        })
    }

    /// Present hazards inside `region`. Camera regions (`Ahead`,
    /// `InteractionZone`, `CheckView`) only report visible hazards.
    pub fn ground_truth_query(&self, region: Region) -> Result<Vec<&HazardEntity>, WorldError> {
        let camera = !matches!(region, Region::Radius { .. });
        self.region_hazards(region, camera)
    }

    /// Present hazards inside `region` regardless of visibility.
    pub fn ground_truth_query_all(&self, region: Region) -> Result<Vec<&HazardEntity>, WorldError> {
        self.region_hazards(region, false)
    }

    fn region_hazards(&self, region: Region, visible_only: bool) -> Result<Vec<&HazardEntity>, WorldError> {
        let mut out = Vec::new();
        for h in self.present_hazards() {
            if visible_only && !h.visible {
                continue;
            }
            if self.in_region(region, h.position.expect("present hazards are placed"))? {
                out.push(h);
            }
        }
        Ok(out)
    }

    /// Advances the clock by `dt`, moves a navigating robot, then
    /// materializes due hazards and checks for collisions.
    pub fn step(&mut self, dt: f64) -> Result<(), WorldError> {
        if !(dt > 0.0) {
            return Err(WorldError::InvalidStep(dt));
        }
        // Rounded to microseconds so repeated 0.1 s steps land on exact ticks.
        self.clock = ((self.clock + dt) * 1e6).round() / 1e6;
        let moving = self.robot.motion == MotionState::Navigating;
        if moving {
            self.advance_robot(self.robot.base_speed * self.robot.speed_factor * dt);
        }
        self.materialize();
        if moving {
            self.check_collisions();
        }
        Ok(())
    }

    fn advance_robot(&mut self, mut remaining: f64) {
        let Some(progress) = self.robot.route.as_mut() else {
            return;
        };
        while remaining > 0.0 && progress.leg < progress.route.legs.len() {
            let room = progress.route.legs[progress.leg] - progress.along;
            if remaining < room - 1e-9 {
                progress.along += remaining;
                remaining = 0.0;
            } else {
                remaining -= room.max(0.0);
                progress.leg += 1;
                progress.along = 0.0;
            }
        }
        if progress.leg >= progress.route.legs.len() {
            let last = *progress.route.nodes.last().expect("routes are non-empty");
            self.robot.route = None;
            self.robot.node = Some(last);
            self.robot.motion = MotionState::Idle;
            self.robot.pose.position = self.graph.node(last).position;
            self.events.push(WorldEvent::Arrived {
                time: self.clock,
                node: self.graph.node(last).id.clone(),
            });
        } else {
            let a = self.graph.node(progress.route.nodes[progress.leg]).position;
            let b = self.graph.node(progress.route.nodes[progress.leg + 1]).position;
            let t = progress.along / progress.route.legs[progress.leg];
            self.robot.pose = Pose {
                position: a.lerp(b, t),
                heading: a.heading_to(b),
            };
        }
    }

    fn materialize(&mut self) {
        let clock = self.clock;
        let pose = self.robot.pose;
        for h in &mut self.hazards {
            if h.appeared || h.appears_at > clock + 1e-9 {
                continue;
            }
            if h.position.is_none() {
                h.position = Some(pose.position.advance(pose.heading, h.ahead.unwrap_or(0.0)));
            }
            h.appeared = true;
            self.events.push(WorldEvent::HazardAppeared {
                time: clock,
                id: h.id.clone(),
            });
        }
    }

    fn check_collisions(&mut self) {
        let pos = self.robot.pose.position;
        let hits: Vec<String> = self
            .present_hazards()
            .filter(|h| h.on_path && h.unsafe_ground_truth)
            .filter(|h| h.position.is_some_and(|p| p.distance(pos) <= FOOTPRINT_RADIUS))
            .filter(|h| !self.collided.contains(&h.id))
            .map(|h| h.id.clone())
            .collect();
        for id in hits {
            self.events.push(WorldEvent::Collision {
                time: self.clock,
                id: id.clone(),
            });
            self.collided.push(id);
        }
    }

    /// Plans the shortest route to `dest` and starts moving.
    pub fn begin_navigation(&mut self, dest: &str) -> Result<(), WorldError> {
        let to = self
            .graph
            .index_of(dest)
            .ok_or_else(|| WorldError::UnknownNode(dest.to_string()))?;
        if self.robot.motion != MotionState::Idle {
            return Err(WorldError::StateViolation(format!(
                "begin_navigation while {:?}",
                self.robot.motion
            )));
        }
        if self.robot.arm != ArmState::Stowed {
            return Err(WorldError::StateViolation("begin_navigation with arm deployed".into()));
        }
        let from = self
            .robot
            .node
            .ok_or_else(|| WorldError::StateViolation("robot is between nodes".into()))?;
        if from == to {
            self.events.push(WorldEvent::Arrived {
                time: self.clock,
                node: dest.to_string(),
            });
            return Ok(());
        }
        let route = self
            .graph
            .shortest_route(from, to)
            .ok_or_else(|| WorldError::UnreachableNode(dest.to_string()))?;
        let a = self.graph.node(route.nodes[0]).position;
        let b = self.graph.node(route.nodes[1]).position;
        self.robot.pose.heading = a.heading_to(b);
        self.robot.route = Some(RouteProgress {
            route,
            leg: 0,
            along: 0.0,
        });
        self.robot.node = None;
        self.robot.motion = MotionState::Navigating;
        Ok(())
    }

    /// Distance left on the current route.
    pub fn remaining_distance(&self) -> f64 {
        match &self.robot.route {
            Some(p) => p.route.legs[p.leg..].iter().sum::<f64>() - p.along,
            None => 0.0,
        }
    }

    pub fn halt_robot(&mut self) -> Result<(), WorldError> {
        match self.robot.motion {
            MotionState::Navigating => {
                self.robot.motion = MotionState::Halted;
                Ok(())
            }
            other => Err(WorldError::StateViolation(format!("halt while {other:?}"))),
        }
    }

    pub fn resume_robot(&mut self) -> Result<(), WorldError> {
        match self.robot.motion {
            MotionState::Halted => {
                self.robot.motion = MotionState::Navigating;
                Ok(())
            }
            other => Err(WorldError::StateViolation(format!("resume while {other:?}"))),
        }
    }

    fn require_at_station(&self, id: StationId) -> Result<(), WorldError> {
        if self.robot.motion != MotionState::Idle {
            return Err(WorldError::StateViolation(format!(
                "arm command while {:?}",
                self.robot.motion
            )));
        }
        if self.station_at_robot() != Some(id) {
            return Err(WorldError::StateViolation(format!("robot is not at {}", id.name())));
        }
        Ok(())
    }

    pub fn arm_move_to_check_pose(&mut self, station: StationId) -> Result<(), WorldError> {
        self.require_at_station(station)?;
        self.robot.arm = ArmState::AtCheckPose;
        Ok(())
    }

    pub fn begin_manipulation(&mut self, station: StationId) -> Result<(), WorldError> {
        self.require_at_station(station)?;
        self.robot.arm = ArmState::Manipulating;
        Ok(())
    }

    /// Finishes a manipulation at the robot's station. Any unsafe hazard in
    /// the interaction zone turns the manipulation into a workflow failure.
    pub fn execute_manipulation(&mut self, task: ManipulationTask) -> Result<ManipulationOutcome, WorldError> {
        let station = self
            .station_at_robot()
            .ok_or_else(|| WorldError::StateViolation("robot is not at a station".into()))?;
        self.require_at_station(station)?;
        let hazards: Vec<String> = self
            .present_hazards()
            .filter(|h| h.in_interaction_zone && h.unsafe_ground_truth)
            .map(|h| h.id.clone())
            .collect();
        self.robot.arm = ArmState::Stowed;
        if !hazards.is_empty() {
            self.events.push(WorldEvent::UnsafeManipulation {
                time: self.clock,
                hazards: hazards.clone(),
            });
            return Ok(ManipulationOutcome::UnsafeManipulation { hazards });
        }
        let carrying = self.robot.carrying_rack;
        let s = self.station_mut(station)?;
        match task {
            ManipulationTask::PickupRack if s.has_rack && !carrying => {
                s.has_rack = false;
                self.robot.carrying_rack = true;
            }
            ManipulationTask::PlaceRack if !s.has_rack && carrying => {
                s.has_rack = true;
                self.robot.carrying_rack = false;
            }
            _ => {
                return Err(WorldError::StateViolation(format!(
                    "{} not possible at {}",
                    task.name(),
                    station.name()
                )))
            }
        }
        Ok(ManipulationOutcome::Success)
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            clock: self.clock,
            pose: self.robot.pose,
            node: self.current_node().map(str::to_string),
            motion: self.robot.motion,
            arm: self.robot.arm,
            carrying_rack: self.robot.carrying_rack,
            hazards: self.present_hazards().cloned().collect(),
            stations: self.stations.clone(),
        }
    }
}

/// Read-only view published per tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub clock: f64,
    pub pose: Pose,
    pub node: Option<String>,
    pub motion: MotionState,
    pub arm: ArmState,
    pub carrying_rack: bool,
    pub hazards: Vec<HazardEntity>,
    pub stations: Vec<Station>,
}
