//! One closed-loop interaction, ticked at 30 fps until the controller
//! reaches success or failure.
//!
//! Per tick: the participant moves, the laser and body tracker run (or the
//! true body is used directly), the head tracker observes, the situation
//! recognizer updates, and the controller steps. Robot events reach the
//! participant on the following tick.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::controller::{face_detected, Controller, ControllerConfig, ControllerInputs, EventKind, Method, Phase, RobotAction, RobotEvent};
use crate::error::{Error, Result};
use crate::geometry::{angle_diff, relative_bearing};
use crate::head::{observe_head, DEFAULT_NOISE_SIGMA, FRAME_DT};
use crate::human::{human_step, HumanEvent, HumanModel, HumanState, ResponseTable};
use crate::laser::{synthesize_scan, EllipseBody, LaserConfig};
use crate::rng::{stream_rng, stream_seed, Stream};
use crate::scenario::{PaintingId, Scenario};
use crate::srm::{classify_instant, SrmState, ViewingSituation};
use crate::trace::{Source, TraceRecord, TraceSink};
use crate::tracker::{body_orientation_for_srm, BodyEstimate, BodyState, BodyTracker, FilterConfig};

/// Where the body estimate comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySource {
    /// Synthetic laser scans tracked by the particle filter.
    ParticleFilter(FilterConfig),
    /// The true body pose, skipping laser and filter.
    GroundTruth,
}

impl Default for BodySource {
    fn default() -> Self {
        BodySource::ParticleFilter(FilterConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub body: BodySource,
    pub laser: LaserConfig,
    pub head_noise_sigma: f64,
    pub controller: ControllerConfig,
    /// Simulated seconds the recognizer may take to confirm the situation.
    pub startup_budget_s: f64,
    /// Hard stop for a trial that never terminates.
    pub max_duration_s: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            body: BodySource::default(),
            laser: LaserConfig::default(),
            head_noise_sigma: DEFAULT_NOISE_SIGMA,
            controller: ControllerConfig::default(),
            startup_budget_s: 10.0,
            max_duration_s: 120.0,
        }
    }
}

impl TrialConfig {
    pub fn ground_truth() -> Self {
        Self {
            body: BodySource::GroundTruth,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let BodySource::ParticleFilter(f) = &self.body {
            f.validate()?;
        }
        let positive = [
            ("head_noise_sigma", self.head_noise_sigma >= 0.0),
            ("startup_budget_s", self.startup_budget_s > 0.0),
            ("max_duration_s", self.max_duration_s > 0.0),
            ("controller.response_window_s", self.controller.response_window_s > 0.0),
            ("controller.utterance_s", self.controller.utterance_s >= 0.0),
            ("controller.blink_interval_s", self.controller.blink_interval_s > 0.0),
            ("controller.hold_s", self.controller.hold_s >= 0.0),
            ("controller.face_tolerance_deg", self.controller.face_tolerance_deg >= 0.0),
            ("controller.max_passes", self.controller.max_passes >= 1),
        ];
        match positive.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(Error::InvalidConfig(format!("{name} is out of range"))),
            None => Ok(()),
        }
    }
}

/// Outcome of one trial, one row of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub method: Method,
    pub situation: ViewingSituation,
    pub responded: bool,
    pub responding_action: Option<RobotAction>,
    /// Seconds from the opening of the answered window to face detection.
    pub response_latency: Option<f64>,
    pub gaze_time: Option<f64>,
    pub seed: u64,
}

/// One response window as the controller ran it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub action: RobotAction,
    pub opened: f64,
    pub closed: f64,
}

/// A trial with everything needed to audit the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub record: TrialRecord,
    pub painting: PaintingId,
    pub events: Vec<RobotEvent>,
    pub human_events: Vec<(f64, HumanEvent)>,
    pub windows: Vec<Window>,
    pub confirmed_at: f64,
    pub pan_range: (f64, f64),
    pub tilt_range: (f64, f64),
    pub frames: u64,
}

/// Picks the painting the participant watches; ties between paintings that
/// share a situation are broken by the placement stream.
pub fn choose_painting(scenario: &Scenario, situation: ViewingSituation, seed: u64) -> Result<PaintingId> {
    let candidates = scenario.paintings_for(situation);
    match candidates.len() {
        0 => Err(Error::UnmappedSituation(situation)),
        1 => Ok(candidates[0]),
        n => Ok(candidates[stream_rng(seed, Stream::Placement, 0).random_range(0..n)]),
    }
}

pub fn run_trial(
    scenario: &Scenario,
    method: Method,
    situation: ViewingSituation,
    table: &ResponseTable,
    seed: u64,
    config: &TrialConfig,
) -> Result<TrialRecord> {
    run_trial_traced(scenario, method, situation, table, seed, config, &mut crate::trace::NullSink).map(|r| r.record)
}

fn trace(sink: &mut dyn TraceSink, t: f64, source: Source, kind: &str, detail: serde_json::Value) {
    sink.record(TraceRecord {
        t,
        source,
        kind: kind.to_string(),
        detail,
    });
}

#[allow(clippy::too_many_arguments)]
pub fn run_trial_traced(
    scenario: &Scenario,
    method: Method,
    situation: ViewingSituation,
    table: &ResponseTable,
    seed: u64,
    config: &TrialConfig,
    sink: &mut dyn TraceSink,
) -> Result<TrialRun> {
    let dt = FRAME_DT;
    let painting = choose_painting(scenario, situation, seed)?;
    let mut human = HumanState::settled(scenario, painting);
    let model = HumanModel {
        table: *table,
        situation,
        seed,
    };
    let mut controller = Controller::new(method, config.controller.clone(), scenario.robot_initial_pan);
    let seat = scenario.human_seat;
    let sensor = scenario.sensor_pose;
    let robot = scenario.robot_pose;
    let to_robot = scenario.human_to_robot_bearing();
    let robot_distance = scenario.seat_position().distance(scenario.robot_position());
    let mut tracker = match config.body {
        BodySource::ParticleFilter(filter) => {
            let prior = BodyState::new(seat.x, seat.y, seat.heading());
            Some(BodyTracker::new(
                filter,
                scenario.shoulder,
                sensor,
                config.laser,
                prior,
                stream_seed(seed, Stream::FilterInit, 0),
            )?)
        }
        BodySource::GroundTruth => None,
    };

    let mut srm = SrmState::default();
    let mut pending: Vec<RobotEvent> = Vec::new();
    let mut events = Vec::new();
    let mut human_events = Vec::new();
    let mut windows = Vec::new();
    let mut confirmed_at = None;
    let mut detection: Option<(RobotAction, f64, f64)> = None;
    let mut pan_range = (controller.head.pan, controller.head.pan);
    let mut tilt_range = (controller.head.tilt, controller.head.tilt);
    let tracing = sink.enabled();

    let mut frame = 0u64;
    loop {
        let t = frame as f64 * dt;
        if t > config.max_duration_s {
            return Err(Error::TrialTimeout(config.max_duration_s));
        }

        let first_human_event = human_events.len();
        human_step(&mut human, scenario, &model, &pending, t, dt, &mut human_events);
        pending.clear();
        if tracing {
            for (te, e) in &human_events[first_human_event..] {
                trace(sink, *te, Source::Human, "event", serde_json::to_value(e).unwrap_or_default());
            }
        }

        let truth = BodyState::new(seat.x, seat.y, human.body_theta);
        let estimate = match tracker.as_mut() {
            Some(tr) => {
                let body = EllipseBody::facing(truth.position(), truth.theta, scenario.shoulder)?;
                let scan = synthesize_scan(&sensor, &body, &config.laser, stream_seed(seed, Stream::Laser, frame));
                let report = tr.step(&scan, stream_seed(seed, Stream::Filter, frame));
                if tracing {
                    trace(
                        sink,
                        t,
                        Source::Laser,
                        "scan",
                        json!({"frame": frame, "returns": scan.return_count()}),
                    );
                    let e = report.estimate;
                    trace(
                        sink,
                        t,
                        Source::Btm,
                        "estimate",
                        json!({"frame": frame, "x": e.x, "y": e.y, "theta": e.theta, "d": e.distance, "converged": e.converged, "n_effective": report.n_effective, "reinitialized": report.reinitialized}),
                    );
                }
                report.estimate
            }
            None => BodyEstimate::exact(truth, &sensor),
        };

        let head = observe_head(&human.head, &scenario.camera_pose, config.head_noise_sigma, seed, frame);
        let theta_rel = body_orientation_for_srm(&estimate, &robot).ok();
        let instant = classify_instant(&head, theta_rel);
        let before = srm.confirmed;
        srm = srm.update(instant);
        if tracing {
            trace(sink, t, Source::Hdtm, "observation", serde_json::to_value(head).unwrap_or_default());
            if srm.confirmed != before {
                trace(
                    sink,
                    t,
                    Source::Srm,
                    "confirmed",
                    json!({"situation": srm.confirmed, "candidate": instant}),
                );
            }
        }

        // Recognition only counts once the intended situation is read.
        let confirmed = srm.confirmed.filter(|s| *s == situation);
        if controller.phase == Phase::Observe {
            if confirmed.is_some() {
                confirmed_at.get_or_insert(t);
            } else if t > config.startup_budget_s {
                return Err(Error::SituationNotConfirmed {
                    intended: situation,
                    budget_s: config.startup_budget_s,
                });
            }
        }

        let awaiting = match controller.phase {
            Phase::AwaitResponse { action, opened, .. } => Some((action, opened)),
            _ => None,
        };
        let face = awaiting.is_some()
            && face_detected(
                angle_diff(human.head.yaw(), to_robot),
                robot_distance,
                config.controller.face_tolerance_deg,
            );
        let inputs = ControllerInputs {
            confirmed,
            face_detected: face,
            target_pan: relative_bearing(&robot, estimate.position()).ok(),
        };
        controller.step(&inputs, t, dt, &mut pending);
        pan_range = (pan_range.0.min(controller.head.pan), pan_range.1.max(controller.head.pan));
        tilt_range = (tilt_range.0.min(controller.head.tilt), tilt_range.1.max(controller.head.tilt));

        for e in &pending {
            match e.kind {
                EventKind::FaceDetected { action } => {
                    let (_, opened) = awaiting.expect("detection only while awaiting");
                    detection = Some((action, opened, e.t));
                    windows.push(Window {
                        action,
                        opened,
                        closed: e.t,
                    });
                }
                EventKind::WindowExpired { action } => {
                    let (_, opened) = awaiting.expect("expiry only while awaiting");
                    windows.push(Window {
                        action,
                        opened,
                        closed: e.t,
                    });
                }
                _ => {}
            }
            if tracing {
                let detail = serde_json::to_value(&e.kind).unwrap_or_default();
                trace(sink, e.t, Source::Ctrl, e.kind.name(), detail);
            }
        }
        events.extend(pending.iter().cloned());

        frame += 1;
        if controller.phase.is_terminal() {
            break;
        }
    }

    let responded = controller.phase == Phase::Success;
    let record = TrialRecord {
        trial_id: 0,
        method,
        situation,
        responded,
        responding_action: detection.map(|d| d.0),
        response_latency: detection.map(|(_, opened, at)| at - opened),
        gaze_time: if responded { human.gaze_time } else { None },
        seed,
    };
    Ok(TrialRun {
        record,
        painting,
        events,
        human_events,
        windows,
        confirmed_at: confirmed_at.unwrap_or(f64::NAN),
        pan_range,
        tilt_range,
        frames: frame,
    })
}
