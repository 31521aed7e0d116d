//! Pan-tilt head kinematics: rate-limited pan toward a target, and the
//! three-leg head shake.

use serde::{Deserialize, Serialize};

pub const PAN_LIMIT: f64 = 159.0;
pub const TILT_MIN: f64 = -47.0;
pub const TILT_MAX: f64 = 31.0;
/// Mechanical rate cap, deg/s.
pub const MAX_SPEED: f64 = 300.0;
pub const TURN_SPEED: f64 = 120.0;
pub const SHAKE_SPEED: f64 = 240.0;
pub const SHAKE_AMPLITUDE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionMode {
    Turn,
    Shake,
}

impl MotionMode {
    pub fn speed(self) -> f64 {
        match self {
            MotionMode::Turn => TURN_SPEED,
            MotionMode::Shake => SHAKE_SPEED,
        }
        .min(MAX_SPEED)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeadState {
    pub pan: f64,
    pub tilt: f64,
}

impl HeadState {
    pub fn new(pan: f64, tilt: f64) -> Self {
        Self {
            pan: clamp_pan(pan),
            tilt: tilt.clamp(TILT_MIN, TILT_MAX),
        }
    }

    pub fn within_limits(&self) -> bool {
        self.pan.abs() <= PAN_LIMIT && (TILT_MIN..=TILT_MAX).contains(&self.tilt)
    }
}

pub fn clamp_pan(pan: f64) -> f64 {
    pan.clamp(-PAN_LIMIT, PAN_LIMIT)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionStep {
    pub head: HeadState,
    pub reached: bool,
    /// The requested target lay outside the pan range.
    pub clamped: bool,
}

/// Moves the pan toward `target_pan` for `dt` seconds. Pan is a joint angle,
/// not a heading, so it is never wrapped.
pub fn head_motion_step(head: HeadState, target_pan: f64, dt: f64, mode: MotionMode) -> MotionStep {
    debug_assert!(dt > 0.0);
    let target = clamp_pan(target_pan);
    let max_step = mode.speed() * dt;
    let delta = target - head.pan;
    let (pan, reached) = if delta.abs() <= max_step + 1e-9 {
        (target, true)
    } else {
        (head.pan + max_step.copysign(delta), false)
    };
    MotionStep {
        head: HeadState {
            pan: clamp_pan(pan),
            ..head
        },
        reached,
        clamped: target != target_pan,
    }
}

/// Back-and-forth shake about the pan held when it started.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shake {
    base: f64,
    leg: usize,
}

impl Shake {
    pub fn new(base: f64) -> Self {
        Self { base, leg: 0 }
    }

    pub fn waypoints(&self) -> [f64; 3] {
        [
            clamp_pan(self.base + SHAKE_AMPLITUDE),
            clamp_pan(self.base - SHAKE_AMPLITUDE),
            self.base,
        ]
    }

    /// Advances one tick; returns true once the head is back at the base.
    /// Each leg ends on its waypoint, so both peaks are held for a tick.
    pub fn step(&mut self, head: &mut HeadState, dt: f64) -> bool {
        if self.leg < 3 {
            let s = head_motion_step(*head, self.waypoints()[self.leg], dt, MotionMode::Shake);
            *head = s.head;
            if s.reached {
                self.leg += 1;
            }
        }
        self.leg == 3
    }
}
