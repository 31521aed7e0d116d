//! The experiment room: robot, sensors, the participant's seat and the seven
//! paintings they look at.
//!
//! Painting bearings are in the seat frame: degrees from the seat heading,
//! left positive. The default seat faces 90 deg to the left of the robot, so
//! the robot sits in the participant's right peripheral field and the
//! paintings fan out over roughly half a circle in front of them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{wrap, HeadPose, Point2, Pose2};
use crate::head::{observe_head, relative_yaw};
use crate::laser::EllipseDims;
use crate::srm::{classify_instant, ViewingSituation};
use crate::tracker::{body_orientation_for_srm, BodyEstimate, BodyState};

pub const PAINTING_COUNT: usize = 7;
/// Eye height of the seated participant.
pub const HEAD_HEIGHT: f64 = 1.2;

/// One-based painting index, written `P1`..`P7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PaintingId(u8);

impl PaintingId {
    pub fn new(number: u8) -> Result<Self> {
        if (1..=PAINTING_COUNT as u8).contains(&number) {
            Ok(Self(number))
        } else {
            Err(Error::InvalidScenario(format!("painting number {number} out of range")))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for PaintingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

impl FromStr for PaintingId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix('P')
            .and_then(|n| n.parse::<u8>().ok())
            .ok_or_else(|| Error::InvalidScenario(format!("bad painting id '{s}'")))
            .and_then(PaintingId::new)
    }
}

impl Serialize for PaintingId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PaintingId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Robot base pose; pan angles are measured from its heading.
    pub robot_pose: Pose2,
    pub sensor_pose: Pose2,
    /// Head-tracking camera, mounted with the robot head.
    pub camera_pose: Pose2,
    pub human_seat: Pose2,
    /// Seat-frame bearings of P1..P7.
    pub paintings: Vec<f64>,
    pub painting_situation_map: BTreeMap<PaintingId, ViewingSituation>,
    #[serde(default)]
    pub shoulder: EllipseDims,
    /// Pan the robot holds before its first action, looking away from the
    /// participant.
    #[serde(default = "default_initial_pan")]
    pub robot_initial_pan: f64,
}

fn default_initial_pan() -> f64 {
    60.0
}

pub fn default_scenario() -> Scenario {
    use ViewingSituation::*;
    // Bearings relative to the participant-to-robot direction, converted to
    // the seat frame below. P1 sits just off the robot so that looking at it
    // is distinguishable from looking at the robot's face.
    let robot_relative = [6.0, 30.0, 55.0, 76.0, 85.0, 150.0, 175.0];
    let seat_to_robot = -90.0;
    let map = [
        (1, Central),
        (2, NearPeripheral),
        (3, NearPeripheral),
        (4, FarPeripheral),
        (5, FarPeripheral),
        (6, OutOfView),
    ]
    .into_iter()
    .map(|(n, s)| (PaintingId(n), s))
    .collect();
    Scenario {
        robot_pose: Pose2::new(0.0, 0.0, 0.0),
        sensor_pose: Pose2::new(0.0, -0.5, 14.036_243_467_926_479),
        camera_pose: Pose2::new(0.0, 0.0, 0.0),
        human_seat: Pose2::new(2.0, 0.0, -90.0),
        paintings: robot_relative.iter().map(|r| wrap(r + seat_to_robot)).collect(),
        painting_situation_map: map,
        shoulder: EllipseDims::default(),
        robot_initial_pan: default_initial_pan(),
    }
}

impl Scenario {
    pub fn seat_position(&self) -> Point2 {
        self.human_seat.position()
    }

    pub fn robot_position(&self) -> Point2 {
        self.robot_pose.position()
    }

    /// World bearing from the seat to the robot.
    pub fn human_to_robot_bearing(&self) -> f64 {
        self.seat_position().bearing_to(self.robot_position())
    }

    pub fn painting_ids(&self) -> impl Iterator<Item = PaintingId> + '_ {
        (1..=self.paintings.len() as u8).map(PaintingId)
    }

    /// World yaw of a participant looking at `id`.
    pub fn painting_world_yaw(&self, id: PaintingId) -> f64 {
        wrap(self.human_seat.heading() + self.paintings[id.index()])
    }

    /// Painting bearing relative to the participant-to-robot direction.
    pub fn painting_robot_relative(&self, id: PaintingId) -> f64 {
        wrap(self.painting_world_yaw(id) - self.human_to_robot_bearing())
    }

    pub fn paintings_for(&self, situation: ViewingSituation) -> Vec<PaintingId> {
        self.painting_situation_map
            .iter()
            .filter(|(_, s)| **s == situation)
            .map(|(id, _)| *id)
            .collect()
    }

    /// Head pose of a participant settled on `yaw` (world).
    pub fn head_pose(&self, yaw: f64) -> HeadPose {
        let p = self.seat_position();
        HeadPose::new([p.x, p.y, HEAD_HEIGHT], yaw, 0.0, 0.0)
    }

    /// Noise-free reading of the situation for a participant settled on a
    /// painting with head and body turned toward it.
    pub fn classify_painting(&self, id: PaintingId) -> Option<ViewingSituation> {
        let yaw = self.painting_world_yaw(id);
        let head = observe_head(&self.head_pose(yaw), &self.camera_pose, 0.0, 0, 0);
        let body = BodyEstimate::exact(BodyState::new(self.human_seat.x, self.human_seat.y, yaw), &self.sensor_pose);
        let theta_rel = body_orientation_for_srm(&body, &self.robot_pose).ok();
        classify_instant(&head, theta_rel)
    }

    pub fn validate(&self) -> Result<()> {
        if self.paintings.len() != PAINTING_COUNT {
            return Err(Error::InvalidScenario(format!(
                "expected {PAINTING_COUNT} paintings, got {}",
                self.paintings.len()
            )));
        }
        if let Some(b) = self.paintings.iter().find(|b| !b.is_finite()) {
            return Err(Error::NonFiniteAngle(*b));
        }
        if !self.robot_initial_pan.is_finite() {
            return Err(Error::NonFiniteAngle(self.robot_initial_pan));
        }
        self.shoulder.validate()?;
        if self.seat_position().distance(self.robot_position()) == 0.0 {
            return Err(Error::CoincidentPoints);
        }
        self.check_map()
    }

    /// Every mapped painting must classify to its mapped situation.
    pub fn check_map(&self) -> Result<()> {
        for (id, expected) in &self.painting_situation_map {
            if id.index() >= self.paintings.len() {
                return Err(Error::InvalidScenario(format!("{id} is mapped but not placed")));
            }
            let got = self.classify_painting(*id);
            if got != Some(*expected) {
                let got = got.map_or_else(|| "no situation".to_string(), |s| s.to_string());
                return Err(Error::InvalidScenario(format!("{id} is mapped to {expected} but reads as {got}")));
            }
        }
        Ok(())
    }

    /// Smallest arc, in degrees, containing every painting bearing.
    pub fn painting_span(&self) -> f64 {
        let mut b: Vec<f64> = self.paintings.iter().map(|&x| wrap(x)).collect();
        b.sort_by(f64::total_cmp);
        let mut largest_gap = 360.0 - (b[b.len() - 1] - b[0]);
        for w in b.windows(2) {
            largest_gap = largest_gap.max(w[1] - w[0]);
        }
        360.0 - largest_gap
    }

    /// The seat-frame robot bearing; used by callers building seat-relative
    /// layouts.
    pub fn robot_seat_bearing(&self) -> f64 {
        wrap(self.human_to_robot_bearing() - self.human_seat.heading())
    }

    /// True relative yaw the camera would report for a participant looking at
    /// `id`.
    pub fn painting_camera_yaw(&self, id: PaintingId) -> f64 {
        relative_yaw(&self.head_pose(self.painting_world_yaw(id)), &self.camera_pose)
    }
}
