//! Simulated participant. They watch a painting, may answer each robot
//! action by turning to the robot, hold its gaze for a while once it has
//! seen them, and then go back to the painting.
//!
//! Response probabilities are recovered from the published per-method
//! success ratios by assuming that successive actions are answered
//! independently: a method's success is `1 - prod(1 - p_action)` over its
//! plan.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::controller::{EventKind, RobotAction, RobotEvent};
use crate::error::{Error, Result};
use crate::geometry::{angle_diff, slew_angle, HeadPose, Pose2};
use crate::rng::{rng_from_seed, stream_seed, Stream};
use crate::scenario::{PaintingId, Scenario};
use crate::srm::ViewingSituation;

/// Observed success ratios, rows M1..M4, columns CFOV, NPFOV, FPFOV, OFOV.
pub const TABLE2_MEANS: [[f64; 4]; 4] = [
    [0.92, 0.84, 0.08, 0.08],
    [1.0, 0.92, 0.84, 0.16],
    [1.0, 0.92, 0.92, 0.92],
    [1.0, 0.92, 0.92, 0.92],
];
pub const TABLE2_SDS: [[f64; 4]; 4] = [
    [0.29, 0.39, 0.29, 0.29],
    [0.0, 0.29, 0.39, 0.39],
    [0.0, 0.29, 0.29, 0.39],
    [0.0, 0.29, 0.29, 0.29],
];

/// Gaze time after a blinking robot: mean and variance, seconds.
pub const GAZE_BLINKED: (f64, f64) = (2.51, 0.13);
pub const GAZE_NOT_BLINKED: (f64, f64) = (1.1, 0.01);
/// Gaze draws are truncated to exceed this.
pub const GAZE_MIN: f64 = 0.1;
/// Time from the start of the response window until the look lands.
pub const LATENCY_RANGE: (f64, f64) = (0.5, 3.5);
pub const HEAD_TURN_SPEED: f64 = 90.0;
pub const BODY_TURN_SPEED: f64 = 60.0;

/// `p[action][situation]`, actions ordered HT, HS, RT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseTable {
    pub p: [[f64; 4]; 3],
}

impl ResponseTable {
    pub fn get(&self, action: RobotAction, situation: ViewingSituation) -> f64 {
        action.capture_index().map_or(0.0, |a| self.p[a][situation.index()])
    }

    pub fn validate(&self) -> Result<()> {
        for &v in self.p.iter().flatten() {
            check_probability(v)?;
        }
        Ok(())
    }
}

impl Default for ResponseTable {
    fn default() -> Self {
        derive_response_table(&TABLE2_MEANS).expect("published ratios are probabilities")
    }
}

fn check_probability(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(v))
    }
}

fn conditional_lift(before: f64, after: f64) -> f64 {
    if before < 1.0 {
        ((after - before) / (1.0 - before)).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Inverts the escalation model. Uses the first three rows (one, two and
/// three actions); further rows are ignored.
pub fn derive_response_table(means: &[[f64; 4]]) -> Result<ResponseTable> {
    if means.len() < 3 {
        return Err(Error::InvalidScenario("need success ratios for one, two and three actions".into()));
    }
    for &v in means.iter().flatten() {
        check_probability(v)?;
    }
    let mut p = [[0.0; 4]; 3];
    for s in 0..4 {
        p[0][s] = means[0][s];
        p[1][s] = conditional_lift(means[0][s], means[1][s]);
        p[2][s] = conditional_lift(means[1][s], means[2][s]);
    }
    Ok(ResponseTable { p })
}

/// Chance that at least one action of `plan` is answered.
pub fn escalation_success(table: &ResponseTable, plan: &[RobotAction], situation: ViewingSituation) -> f64 {
    1.0 - plan.iter().map(|a| 1.0 - table.get(*a, situation)).product::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Response {
    pub responds: bool,
    /// Seconds after the window opens at which the look lands.
    pub latency: f64,
}

pub fn respond(action: RobotAction, situation: ViewingSituation, table: &ResponseTable, seed: u64) -> Response {
    let mut rng = rng_from_seed(seed);
    let responds = rng.random::<f64>() < table.get(action, situation);
    let latency = rng.random_range(LATENCY_RANGE.0..LATENCY_RANGE.1);
    Response { responds, latency }
}

/// Gaze time drawn from a normal with the published moments, redrawn until
/// it exceeds the floor.
pub fn gaze_duration(blinked: bool, seed: u64) -> f64 {
    let (mean, var) = if blinked { GAZE_BLINKED } else { GAZE_NOT_BLINKED };
    let normal = Normal::new(mean, var.sqrt()).expect("finite moments");
    let mut rng = rng_from_seed(seed);
    loop {
        let d = normal.sample(&mut rng);
        if d > GAZE_MIN {
            return d;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "target", content = "painting", rename_all = "snake_case")]
pub enum Attention {
    Painting(PaintingId),
    Robot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PendingResponse {
    pub action: RobotAction,
    pub respond_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum HumanEvent {
    Responds { action: RobotAction, respond_at: f64 },
    Ignores { action: RobotAction },
    TurnsToRobot,
    Gazes { duration: f64 },
    ReturnsToPainting { painting: PaintingId },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HumanState {
    pub seat: Pose2,
    pub head: HeadPose,
    pub body_theta: f64,
    pub attending: Attention,
    /// Painting the participant goes back to.
    pub home: PaintingId,
    pub pending: Option<PendingResponse>,
    pub gaze_until: Option<f64>,
    /// Gaze time drawn when the robot saw the face.
    pub gaze_time: Option<f64>,
    /// Capture actions completed so far; indexes the response draws.
    pub actions_seen: u64,
}

impl HumanState {
    /// Seated and settled on `painting`.
    pub fn settled(scenario: &Scenario, painting: PaintingId) -> Self {
        let yaw = scenario.painting_world_yaw(painting);
        Self {
            seat: scenario.human_seat,
            head: scenario.head_pose(yaw),
            body_theta: yaw,
            attending: Attention::Painting(painting),
            home: painting,
            pending: None,
            gaze_until: None,
            gaze_time: None,
            actions_seen: 0,
        }
    }

    fn target_yaw(&self, scenario: &Scenario) -> f64 {
        match self.attending {
            Attention::Painting(id) => scenario.painting_world_yaw(id),
            Attention::Robot => scenario.human_to_robot_bearing(),
        }
    }
}

/// Per-trial constants of the participant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanModel {
    pub table: ResponseTable,
    pub situation: ViewingSituation,
    pub seed: u64,
}

/// When a capture action finished, or `None` for other events.
fn window_open(event: &RobotEvent) -> Option<(RobotAction, f64)> {
    match &event.kind {
        EventKind::HeadTurnEnd => Some((RobotAction::HT, event.t)),
        EventKind::HeadShakeEnd => Some((RobotAction::HS, event.t)),
        EventKind::Utterance { duration, .. } => Some((RobotAction::RT, event.t + duration)),
        _ => None,
    }
}

/// Advances the participant by one tick given the robot events emitted since
/// the last call.
pub fn human_step(
    state: &mut HumanState,
    scenario: &Scenario,
    model: &HumanModel,
    events: &[RobotEvent],
    t: f64,
    dt: f64,
    out: &mut Vec<(f64, HumanEvent)>,
) {
    let blinked = events.iter().any(|e| e.kind == EventKind::BlinkPulse);
    for e in events {
        if let Some((action, opened)) = window_open(e) {
            let seed = stream_seed(model.seed, Stream::Response, state.actions_seen);
            state.actions_seen += 1;
            let r = respond(action, model.situation, &model.table, seed);
            if r.responds && state.pending.is_none() && state.attending != Attention::Robot {
                let turn = angle_diff(scenario.human_to_robot_bearing(), state.head.yaw()).abs() / HEAD_TURN_SPEED;
                let respond_at = opened + (r.latency - turn).max(0.0);
                state.pending = Some(PendingResponse { action, respond_at });
                out.push((e.t, HumanEvent::Responds { action, respond_at }));
            } else if !r.responds {
                out.push((e.t, HumanEvent::Ignores { action }));
            }
        }
        if matches!(e.kind, EventKind::FaceDetected { .. }) && state.gaze_time.is_none() {
            let duration = gaze_duration(blinked, stream_seed(model.seed, Stream::Gaze, 0));
            state.gaze_time = Some(duration);
            state.gaze_until = Some(e.t + duration);
            out.push((e.t, HumanEvent::Gazes { duration }));
        }
    }

    if let Some(p) = state.pending {
        if t >= p.respond_at {
            state.pending = None;
            state.attending = Attention::Robot;
            out.push((t, HumanEvent::TurnsToRobot));
        }
    }
    if let Some(until) = state.gaze_until {
        if t >= until {
            state.gaze_until = None;
            state.attending = Attention::Painting(state.home);
            out.push((t, HumanEvent::ReturnsToPainting { painting: state.home }));
        }
    }

    let target = state.target_yaw(scenario);
    let yaw = slew_angle(state.head.yaw(), target, HEAD_TURN_SPEED * dt);
    state.head.set_yaw(yaw);
    state.body_theta = slew_angle(state.body_theta, target, BODY_TURN_SPEED * dt);
}
