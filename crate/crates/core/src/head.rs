//! Simulated head tracker: a 30 fps face tracker that reports yaw/pitch/roll
//! relative to its camera with bounded noise, and loses the face beyond
//! +/-90 deg of relative yaw.

use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::geometry::{wrap, HeadPose, Pose2};
use crate::rng::{stream_rng, Stream};

pub const FRAME_RATE_HZ: f64 = 30.0;
pub const FRAME_DT: f64 = 1.0 / FRAME_RATE_HZ;
pub const TRACKING_HALF_RANGE: f64 = 90.0;
pub const DEFAULT_NOISE_SIGMA: f64 = 1.0;

/// One tracker output. When `valid` is false the angles are zero and carry
/// no information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeadObservation {
    pub valid: bool,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub frame: u64,
}

/// Head yaw relative to the camera axis: 0 when the face points straight
/// back along the optical axis.
pub fn relative_yaw(head: &HeadPose, camera: &Pose2) -> f64 {
    wrap(head.yaw() - (camera.heading() + 180.0))
}

pub fn observe_head(true_head: &HeadPose, camera: &Pose2, noise_sigma: f64, seed: u64, frame: u64) -> HeadObservation {
    let rel = relative_yaw(true_head, camera);
    if rel.abs() > TRACKING_HALF_RANGE {
        return HeadObservation {
            valid: false,
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            frame,
        };
    }
    let (dy, dp, dr) = if noise_sigma > 0.0 {
        let mut rng = stream_rng(seed, Stream::Head, frame);
        let n = Normal::new(0.0, noise_sigma).expect("finite sigma");
        (n.sample(&mut rng), n.sample(&mut rng), n.sample(&mut rng))
    } else {
        (0.0, 0.0, 0.0)
    };
    HeadObservation {
        valid: true,
        yaw: wrap(rel + dy),
        pitch: wrap(true_head.pitch() + dp),
        roll: wrap(true_head.roll() + dr),
        frame,
    }
}
