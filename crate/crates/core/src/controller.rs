//! The attention-capture state machine. Once the viewing situation is
//! confirmed the robot works through its method's plan (head turn, head
//! shake, spoken call), waiting after each action for the person to look
//! at it. A detected face either starts three eye blinks or, for the
//! no-blink method, a silent hold; both end in success.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ptu::{clamp_pan, head_motion_step, HeadState, MotionMode, Shake};
use crate::srm::ViewingSituation;

/// Slack for comparing tick times against scheduled times.
const TIME_EPS: f64 = 1e-9;
/// Beyond this distance the face detector finds nothing.
pub const FACE_MAX_DISTANCE: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RobotAction {
    HT,
    HS,
    RT,
    Blink,
}

impl RobotAction {
    pub fn code(self) -> &'static str {
        match self {
            RobotAction::HT => "HT",
            RobotAction::HS => "HS",
            RobotAction::RT => "RT",
            RobotAction::Blink => "Blink",
        }
    }

    /// Row of the capture actions in response tables.
    pub fn capture_index(self) -> Option<usize> {
        match self {
            RobotAction::HT => Some(0),
            RobotAction::HS => Some(1),
            RobotAction::RT => Some(2),
            RobotAction::Blink => None,
        }
    }
}

impl fmt::Display for RobotAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for RobotAction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [RobotAction::HT, RobotAction::HS, RobotAction::RT, RobotAction::Blink]
            .into_iter()
            .find(|a| a.code() == s)
            .ok_or_else(|| format!("unknown action '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    M1,
    M2,
    M3,
    M4,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::M1, Method::M2, Method::M3, Method::M4];

    pub fn code(self) -> &'static str {
        match self {
            Method::M1 => "M1",
            Method::M2 => "M2",
            Method::M3 => "M3",
            Method::M4 => "M4",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.code() == s)
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Plan {
    pub actions: &'static [RobotAction],
    pub ensure_blink: bool,
}

pub fn plan_actions(method: Method) -> Plan {
    use RobotAction::*;
    match method {
        Method::M1 => Plan {
            actions: &[HT],
            ensure_blink: true,
        },
        Method::M2 => Plan {
            actions: &[HT, HS],
            ensure_blink: true,
        },
        Method::M3 => Plan {
            actions: &[HT, HS, RT],
            ensure_blink: false,
        },
        Method::M4 => Plan {
            actions: &[HT, HS, RT],
            ensure_blink: true,
        },
    }
}

/// True when the face points at the robot within `tolerance` degrees and is
/// close enough to be detected. `bearing` is the head yaw relative to the
/// direction from the person to the robot.
pub fn face_detected(bearing: f64, distance: f64, tolerance: f64) -> bool {
    bearing.abs() <= tolerance && distance <= FACE_MAX_DISTANCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub response_window_s: f64,
    pub utterance_text: String,
    pub utterance_s: f64,
    pub blink_count: u32,
    pub blink_interval_s: f64,
    /// Dwell after a detected face when the method does not blink.
    pub hold_s: f64,
    pub face_tolerance_deg: f64,
    /// Full escalation passes before giving up; experiments score one.
    pub max_passes: u32,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            response_window_s: 4.0,
            utterance_text: "excuse me".to_string(),
            utterance_s: 1.0,
            blink_count: 3,
            blink_interval_s: 1.0,
            hold_s: 3.0,
            face_tolerance_deg: 3.0,
            max_passes: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Observe,
    Recognize,
    ExecuteAction { action: RobotAction },
    AwaitResponse { action: RobotAction, opened: f64, deadline: f64 },
    EnsureAttention { blinks_remaining: u32, next_at: f64 },
    HoldNoBlink { deadline: f64 },
    Success,
    Failure,
}

impl Phase {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Phase::Success | Phase::Failure)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    HeadTurnStart { target_pan: f64, clamped: bool },
    HeadTurnEnd,
    HeadShakeStart { base_pan: f64 },
    HeadShakeEnd,
    Utterance { text: String, duration: f64 },
    BlinkPulse,
    FaceDetected { action: RobotAction },
    WindowExpired { action: RobotAction },
    Success,
    Failure,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::HeadTurnStart { .. } => "HeadTurnStart",
            EventKind::HeadTurnEnd => "HeadTurnEnd",
            EventKind::HeadShakeStart { .. } => "HeadShakeStart",
            EventKind::HeadShakeEnd => "HeadShakeEnd",
            EventKind::Utterance { .. } => "Utterance",
            EventKind::BlinkPulse => "BlinkPulse",
            EventKind::FaceDetected { .. } => "FaceDetected",
            EventKind::WindowExpired { .. } => "WindowExpired",
            EventKind::Success => "Success",
            EventKind::Failure => "Failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobotEvent {
    pub t: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// What the controller reads each tick.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerInputs {
    pub confirmed: Option<ViewingSituation>,
    pub face_detected: bool,
    /// Pan that points the head at the tracked body, if there is an estimate.
    pub target_pan: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub phase: Phase,
    pub head: HeadState,
    pub plan_cursor: usize,
    pub pass: u32,
    /// Situation latched when recognition happened.
    pub situation: Option<ViewingSituation>,
    plan: Plan,
    config: ControllerConfig,
    turn_target: f64,
    shake: Option<Shake>,
    utterance_end: f64,
}

impl Controller {
    pub fn new(method: Method, config: ControllerConfig, initial_pan: f64) -> Self {
        Self {
            phase: Phase::Observe,
            head: HeadState::new(initial_pan, 0.0),
            plan_cursor: 0,
            pass: 0,
            situation: None,
            plan: plan_actions(method),
            config,
            turn_target: initial_pan,
            shake: None,
            utterance_end: 0.0,
        }
    }

    pub fn plan(&self) -> Plan {
        self.plan
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    /// Index of the current action across passes; feeds per-action draws.
    pub fn action_index(&self) -> usize {
        self.pass as usize * self.plan.actions.len() + self.plan_cursor
    }

    /// Advances one tick at time `t`, appending emitted events to `out`.
    /// Terminal phases ignore all input.
    pub fn step(&mut self, inputs: &ControllerInputs, t: f64, dt: f64, out: &mut Vec<RobotEvent>) {
        match self.phase {
            Phase::Success | Phase::Failure => {}
            Phase::Observe => {
                if let Some(s) = inputs.confirmed {
                    self.situation = Some(s);
                    self.phase = Phase::Recognize;
                }
            }
            Phase::Recognize => self.start_action(inputs, t, out),
            Phase::ExecuteAction { action } => self.advance_action(action, t, dt, out),
            Phase::AwaitResponse { action, deadline, .. } => {
                if inputs.face_detected {
                    out.push(RobotEvent {
                        t,
                        kind: EventKind::FaceDetected { action },
                    });
                    if self.plan.ensure_blink && self.config.blink_count > 0 {
                        out.push(RobotEvent {
                            t,
                            kind: EventKind::BlinkPulse,
                        });
                        self.phase = Phase::EnsureAttention {
                            blinks_remaining: self.config.blink_count - 1,
                            next_at: t + self.config.blink_interval_s,
                        };
                    } else {
                        self.phase = Phase::HoldNoBlink {
                            deadline: t + self.config.hold_s,
                        };
                    }
                } else if t >= deadline - TIME_EPS {
                    out.push(RobotEvent {
                        t,
                        kind: EventKind::WindowExpired { action },
                    });
                    self.plan_cursor += 1;
                    if self.plan_cursor < self.plan.actions.len() {
                        self.start_action(inputs, t, out);
                    } else if self.pass + 1 < self.config.max_passes {
                        self.pass += 1;
                        self.plan_cursor = 0;
                        self.start_action(inputs, t, out);
                    } else {
                        out.push(RobotEvent {
                            t,
                            kind: EventKind::Failure,
                        });
                        self.phase = Phase::Failure;
                    }
                }
            }
            Phase::EnsureAttention { blinks_remaining, next_at } => {
                if t >= next_at - TIME_EPS {
                    if blinks_remaining > 0 {
                        out.push(RobotEvent {
                            t,
                            kind: EventKind::BlinkPulse,
                        });
                        self.phase = Phase::EnsureAttention {
                            blinks_remaining: blinks_remaining - 1,
                            next_at: next_at + self.config.blink_interval_s,
                        };
                    } else {
                        out.push(RobotEvent {
                            t,
                            kind: EventKind::Success,
                        });
                        self.phase = Phase::Success;
                    }
                }
            }
            Phase::HoldNoBlink { deadline } => {
                if t >= deadline - TIME_EPS {
                    out.push(RobotEvent {
                        t,
                        kind: EventKind::Success,
                    });
                    self.phase = Phase::Success;
                }
            }
        }
    }

    fn start_action(&mut self, inputs: &ControllerInputs, t: f64, out: &mut Vec<RobotEvent>) {
        let action = self.plan.actions[self.plan_cursor];
        let kind = match action {
            RobotAction::HT => {
                let requested = inputs.target_pan.unwrap_or(self.head.pan);
                self.turn_target = requested;
                EventKind::HeadTurnStart {
                    target_pan: requested,
                    clamped: clamp_pan(requested) != requested,
                }
            }
            RobotAction::HS => {
                self.shake = Some(Shake::new(self.head.pan));
                EventKind::HeadShakeStart { base_pan: self.head.pan }
            }
            RobotAction::RT => {
                self.utterance_end = t + self.config.utterance_s;
                EventKind::Utterance {
                    text: self.config.utterance_text.clone(),
                    duration: self.config.utterance_s,
                }
            }
            RobotAction::Blink => unreachable!("blinks are not capture actions"),
        };
        out.push(RobotEvent { t, kind });
        self.phase = Phase::ExecuteAction { action };
    }

    fn advance_action(&mut self, action: RobotAction, t: f64, dt: f64, out: &mut Vec<RobotEvent>) {
        let done = match action {
            RobotAction::HT => {
                let step = head_motion_step(self.head, self.turn_target, dt, MotionMode::Turn);
                self.head = step.head;
                if step.reached {
                    out.push(RobotEvent {
                        t,
                        kind: EventKind::HeadTurnEnd,
                    });
                }
                step.reached
            }
            RobotAction::HS => {
                let shake = self.shake.as_mut().expect("shake started");
                let done = shake.step(&mut self.head, dt);
                if done {
                    self.shake = None;
                    out.push(RobotEvent {
                        t,
                        kind: EventKind::HeadShakeEnd,
                    });
                }
                done
            }
            RobotAction::RT => t >= self.utterance_end - TIME_EPS,
            RobotAction::Blink => unreachable!("blinks are not capture actions"),
        };
        if done {
            self.phase = Phase::AwaitResponse {
                action,
                opened: t,
                deadline: t + self.config.response_window_s,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ptu::{PAN_LIMIT, TILT_MAX, TILT_MIN};

    const DT: f64 = 1.0 / 30.0;

    /// Drives a controller to completion. `respond_after` gives, per plan
    /// action, the delay after the window opens at which a face is seen.
    fn drive(method: Method, respond_after: &[Option<f64>]) -> Vec<RobotEvent> {
        let mut c = Controller::new(method, ControllerConfig::default(), 60.0);
        let mut events = Vec::new();
        for frame in 0..2000u64 {
            let t = frame as f64 * DT;
            let face = match c.phase {
                Phase::AwaitResponse { opened, .. } => respond_after.get(c.plan_cursor).copied().flatten().is_some_and(|d| t >= opened + d),
                _ => false,
            };
            let inputs = ControllerInputs {
                confirmed: Some(ViewingSituation::Central),
                face_detected: face,
                target_pan: Some(0.0),
            };
            c.step(&inputs, t, DT, &mut events);
            assert!(c.head.within_limits());
            if c.phase.is_terminal() {
                break;
            }
        }
        events
    }

    fn names(events: &[RobotEvent]) -> Vec<&'static str> {
        events.iter().map(|e| e.kind.name()).collect()
    }

    #[test]
    fn plans_follow_method_table() {
        use RobotAction::*;
        assert_eq!(
            plan_actions(Method::M1),
            Plan {
                actions: &[HT],
                ensure_blink: true
            }
        );
        assert_eq!(plan_actions(Method::M2).actions, &[HT, HS]);
        assert_eq!(
            plan_actions(Method::M3),
            Plan {
                actions: &[HT, HS, RT],
                ensure_blink: false
            }
        );
        assert_eq!(
            plan_actions(Method::M4),
            Plan {
                actions: &[HT, HS, RT],
                ensure_blink: true
            }
        );
    }

    #[test]
    fn m1_face_after_head_turn() {
        let events = drive(Method::M1, &[Some(1.2)]);
        assert_eq!(
            names(&events),
            [
                "HeadTurnStart",
                "HeadTurnEnd",
                "FaceDetected",
                "BlinkPulse",
                "BlinkPulse",
                "BlinkPulse",
                "Success"
            ]
        );
        let end = events[1].t;
        assert!((events[2].t - end - 1.2).abs() < DT + 1e-9);
        // Pan 60 -> 0 at 120 deg/s.
        assert!((end - events[0].t - 0.5).abs() < 1e-9);
        let fd = events[2].t;
        for (k, e) in events[3..6].iter().enumerate() {
            assert!((e.t - fd - k as f64).abs() < 1e-9);
        }
        assert!((events[6].t - fd - 3.0).abs() < 1e-9);
    }

    #[test]
    fn m4_escalates_to_spoken_call() {
        let events = drive(Method::M4, &[None, None, Some(0.7)]);
        assert_eq!(
            names(&events),
            [
                "HeadTurnStart",
                "HeadTurnEnd",
                "WindowExpired",
                "HeadShakeStart",
                "HeadShakeEnd",
                "WindowExpired",
                "Utterance",
                "FaceDetected",
                "BlinkPulse",
                "BlinkPulse",
                "BlinkPulse",
                "Success"
            ]
        );
        let utter = events.iter().find(|e| e.kind.name() == "Utterance").unwrap();
        assert_eq!(
            utter.kind,
            EventKind::Utterance {
                text: "excuse me".into(),
                duration: 1.0
            }
        );
        let fd = events.iter().find(|e| e.kind.name() == "FaceDetected").unwrap();
        assert_eq!(fd.kind, EventKind::FaceDetected { action: RobotAction::RT });
        assert!(fd.t - utter.t >= 1.7 - 1e-9);
    }

    #[test]
    fn m1_without_response_fails_after_one_window() {
        let events = drive(Method::M1, &[None]);
        assert_eq!(names(&events), ["HeadTurnStart", "HeadTurnEnd", "WindowExpired", "Failure"]);
        assert!((events[2].t - events[1].t - 4.0).abs() < DT);
    }

    #[test]
    fn m3_holds_without_blinking() {
        let events = drive(Method::M3, &[None, Some(0.5)]);
        assert_eq!(
            names(&events),
            [
                "HeadTurnStart",
                "HeadTurnEnd",
                "WindowExpired",
                "HeadShakeStart",
                "HeadShakeEnd",
                "FaceDetected",
                "Success"
            ]
        );
        assert!((events[6].t - events[5].t - 3.0).abs() < 1e-9);
    }

    #[test]
    fn terminal_state_ignores_input() {
        let mut c = Controller::new(Method::M1, ControllerConfig::default(), 0.0);
        c.phase = Phase::Failure;
        let mut out = Vec::new();
        let inputs = ControllerInputs {
            confirmed: Some(ViewingSituation::Central),
            face_detected: true,
            target_pan: Some(10.0),
        };
        let before = c.clone();
        c.step(&inputs, 5.0, DT, &mut out);
        assert!(out.is_empty());
        assert_eq!(c, before);
    }

    #[test]
    fn out_of_range_target_is_clamped_and_flagged() {
        let mut c = Controller::new(Method::M1, ControllerConfig::default(), 0.0);
        let mut out = Vec::new();
        let inputs = ControllerInputs {
            confirmed: Some(ViewingSituation::Central),
            face_detected: false,
            target_pan: Some(170.0),
        };
        for frame in 0..200 {
            c.step(&inputs, frame as f64 * DT, DT, &mut out);
            assert!(c.head.pan.abs() <= PAN_LIMIT);
            assert!((TILT_MIN..=TILT_MAX).contains(&c.head.tilt));
        }
        assert_eq!(
            out[0].kind,
            EventKind::HeadTurnStart {
                target_pan: 170.0,
                clamped: true
            }
        );
        assert_eq!(c.head.pan, PAN_LIMIT);
    }

    #[test]
    fn retries_run_the_plan_again() {
        let config = ControllerConfig {
            max_passes: 2,
            ..ControllerConfig::default()
        };
        let mut c = Controller::new(Method::M1, config, 60.0);
        let mut out = Vec::new();
        let inputs = ControllerInputs {
            confirmed: Some(ViewingSituation::Central),
            face_detected: false,
            target_pan: Some(0.0),
        };
        for frame in 0..1000 {
            c.step(&inputs, frame as f64 * DT, DT, &mut out);
        }
        assert_eq!(names(&out).iter().filter(|n| **n == "HeadTurnStart").count(), 2);
        assert_eq!(out.last().unwrap().kind, EventKind::Failure);
    }

    #[test]
    fn face_detection_boundary() {
        assert!(face_detected(0.0, 2.0, 10.0));
        assert!(!face_detected(25.0, 2.0, 10.0));
        assert!(face_detected(10.0, 2.0, 10.0));
        assert!(face_detected(-10.0, 2.0, 10.0));
        assert!(!face_detected(0.0, 3.5, 10.0));
    }

    #[test]
    fn parse_codes() {
        assert_eq!("M3".parse::<Method>().unwrap(), Method::M3);
        assert!("M5".parse::<Method>().is_err());
        assert_eq!("RT".parse::<RobotAction>().unwrap(), RobotAction::RT);
    }
}
