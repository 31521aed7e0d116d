//! Viewing-situation recognition: where the robot sits in the human's visual
//! field, from head yaw/pitch when the face is tracked and from body
//! orientation when it is not. A situation is confirmed only after it has been
//! read on 30 consecutive frames.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::head::HeadObservation;

/// Frames a reading must persist before it is confirmed.
pub const PERSISTENCE_FRAMES: u32 = 30;

pub const CENTRAL_HALF_WIDTH: f64 = 10.0;
pub const NEAR_PERIPHERAL_LIMIT: f64 = 70.0;
pub const FAR_PERIPHERAL_LIMIT: f64 = 90.0;
pub const PITCH_LIMIT: f64 = 10.0;
/// Body orientation (relative to the human-to-robot direction) beyond which
/// the robot is behind the human.
pub const BODY_AWAY_LIMIT: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ViewingSituation {
    #[serde(rename = "CFOV")]
    Central,
    #[serde(rename = "NPFOV")]
    NearPeripheral,
    #[serde(rename = "FPFOV")]
    FarPeripheral,
    #[serde(rename = "OFOV")]
    OutOfView,
}

impl ViewingSituation {
    pub const ALL: [ViewingSituation; 4] = [
        ViewingSituation::Central,
        ViewingSituation::NearPeripheral,
        ViewingSituation::FarPeripheral,
        ViewingSituation::OutOfView,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ViewingSituation::Central => "CFOV",
            ViewingSituation::NearPeripheral => "NPFOV",
            ViewingSituation::FarPeripheral => "FPFOV",
            ViewingSituation::OutOfView => "OFOV",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ViewingSituation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ViewingSituation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ViewingSituation::ALL
            .into_iter()
            .find(|v| v.code() == s)
            .ok_or_else(|| format!("unknown viewing situation '{s}'"))
    }
}

/// Single-frame classification. `None` is the internal "no rule matched"
/// marker; it is never confirmed.
///
/// Each band boundary belongs to the more central class. A valid head with
/// pitch beyond +/-10 deg matches no rule.
pub fn classify_instant(head: &HeadObservation, body_rel: Option<f64>) -> Option<ViewingSituation> {
    if head.valid {
        if head.pitch.abs() > PITCH_LIMIT {
            return None;
        }
        let yaw = head.yaw.abs();
        if yaw <= CENTRAL_HALF_WIDTH {
            Some(ViewingSituation::Central)
        } else if yaw <= NEAR_PERIPHERAL_LIMIT {
            Some(ViewingSituation::NearPeripheral)
        } else if yaw <= FAR_PERIPHERAL_LIMIT {
            Some(ViewingSituation::FarPeripheral)
        } else {
            None
        }
    } else {
        match body_rel {
            Some(theta) if theta.abs() > BODY_AWAY_LIMIT => Some(ViewingSituation::OutOfView),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SrmState {
    pub confirmed: Option<ViewingSituation>,
    pub candidate: Option<ViewingSituation>,
    pub streak: u32,
}

impl SrmState {
    /// Advances by one frame. The streak saturates at the persistence length.
    pub fn update(self, instant: Option<ViewingSituation>) -> SrmState {
        let (candidate, streak) = if instant == self.candidate && self.streak > 0 {
            (self.candidate, (self.streak + 1).min(PERSISTENCE_FRAMES))
        } else {
            (instant, 1)
        };
        let confirmed = match candidate {
            Some(s) if streak >= PERSISTENCE_FRAMES => Some(s),
            _ => self.confirmed,
        };
        SrmState {
            confirmed,
            candidate,
            streak,
        }
    }
}

pub fn srm_update(state: SrmState, instant: Option<ViewingSituation>) -> SrmState {
    state.update(instant)
}
