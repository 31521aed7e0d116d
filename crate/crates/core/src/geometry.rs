//! Ground-plane geometry shared by every subsystem.
//!
//! Angles are degrees, left-turn positive, normalized to (-180, +180].
//! World heading 0 is the moving robot's base line of sight (+x).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle into (-180, +180].
pub fn normalize_angle(deg: f64) -> Result<f64> {
    if !deg.is_finite() {
        return Err(Error::NonFiniteAngle(deg));
    }
    Ok(wrap(deg))
}

/// Infallible wrap for values already known to be finite.
pub(crate) fn wrap(deg: f64) -> f64 {
    // rem_euclid lands in [0, 360]; the closed end can appear through rounding.
    let a = deg.rem_euclid(360.0);
    if a > 180.0 {
        a - 360.0
    } else {
        a
    }
}

/// Signed smallest difference `to - from`, wrapped.
pub fn angle_diff(to: f64, from: f64) -> f64 {
    wrap(to - from)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// World bearing of `other` seen from `self`, degrees.
    pub fn bearing_to(self, other: Point2) -> f64 {
        (other.y - self.y).atan2(other.x - self.x).to_degrees()
    }

    /// Rotates about the origin by `deg`.
    pub fn rotated(self, deg: f64) -> Point2 {
        let (s, c) = deg.to_radians().sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// Position and heading on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPose2")]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    heading: f64,
}

#[derive(Deserialize)]
struct RawPose2 {
    x: f64,
    y: f64,
    heading: f64,
}

impl TryFrom<RawPose2> for Pose2 {
    type Error = Error;

    fn try_from(raw: RawPose2) -> Result<Self> {
        if !raw.x.is_finite() || !raw.y.is_finite() {
            return Err(Error::NonFinitePosition);
        }
        Ok(Pose2 {
            x: raw.x,
            y: raw.y,
            heading: normalize_angle(raw.heading)?,
        })
    }
}

impl Pose2 {
    /// Builds a pose; the heading is normalized on the way in.
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap(heading),
        }
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn set_heading(&mut self, heading: f64) {
        self.heading = wrap(heading);
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Rotates the whole pose about the world origin.
    pub fn rotated(&self, deg: f64) -> Pose2 {
        let p = self.position().rotated(deg);
        Pose2::new(p.x, p.y, self.heading + deg)
    }
}

/// Signed angle from the observer's heading to the target, wrapped.
pub fn relative_bearing(observer: &Pose2, target: Point2) -> Result<f64> {
    let origin = observer.position();
    if origin.distance_sq(target) == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(angle_diff(origin.bearing_to(target), observer.heading))
}

/// 3D head position plus yaw / pitch / roll (world frame, degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPose {
    pub position: [f64; 3],
    yaw: f64,
    pitch: f64,
    roll: f64,
}

impl HeadPose {
    pub fn new(position: [f64; 3], yaw: f64, pitch: f64, roll: f64) -> Self {
        Self {
            position,
            yaw: wrap(yaw),
            pitch: wrap(pitch),
            roll: wrap(roll),
        }
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    pub fn set_yaw(&mut self, yaw: f64) {
        self.yaw = wrap(yaw);
    }

    pub fn set_pitch(&mut self, pitch: f64) {
        self.pitch = wrap(pitch);
    }

    pub fn ground_position(&self) -> Point2 {
        Point2::new(self.position[0], self.position[1])
    }
}

/// Moves `current` toward `target` by at most `max_step` degrees along the
/// shorter arc.
pub(crate) fn slew_angle(current: f64, target: f64, max_step: f64) -> f64 {
    let d = angle_diff(target, current);
    if d.abs() <= max_step {
        wrap(target)
    } else {
        wrap(current + max_step.copysign(d))
    }
}
