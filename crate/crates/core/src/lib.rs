//! Simulation of a robot that catches a person's attention and then makes
//! eye contact with them.
//!
//! The loop runs at 30 frames per second: a synthetic laser scan feeds a
//! particle-filter body tracker, a simulated face tracker reports head
//! pose, a situation recognizer decides where the robot sits in the
//! person's field of view, and a controller escalates from head turn to head
//! shake to a spoken call until the person looks back. A stochastic human
//! model closes the loop.

pub mod controller;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod head;
pub mod human;
pub mod laser;
pub mod ptu;
pub mod rng;
pub mod scenario;
pub mod srm;
pub mod trace;
pub mod tracker;

pub use controller::{Method, RobotAction};
pub use error::{Error, Result};
pub use geometry::{angle_diff, normalize_angle, relative_bearing, HeadPose, Point2, Pose2};
pub use harness::{run_experiment, run_trial, ExperimentConfig, TrialConfig, TrialRecord};
pub use human::ResponseTable;
pub use scenario::{default_scenario, PaintingId, Scenario};
pub use srm::ViewingSituation;
