//! Synthetic 2D range scans of a single human's shoulder cross-section.

use std::io::Write;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, Point2, Pose2};
use crate::rng::rng_from_seed;

/// Fixed sensor model: 240 deg field of view, 0.36 deg beams, 4 m range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaserConfig {
    pub fov_deg: f64,
    pub angular_step_deg: f64,
    pub max_range: f64,
    pub min_range: f64,
    pub noise_sigma: f64,
}

impl Default for LaserConfig {
    fn default() -> Self {
        Self {
            fov_deg: 240.0,
            angular_step_deg: 0.36,
            max_range: 4.0,
            min_range: 0.02,
            noise_sigma: 0.01,
        }
    }
}

impl LaserConfig {
    pub fn beam_count(&self) -> usize {
        (self.fov_deg / self.angular_step_deg + 1e-9).floor() as usize + 1
    }

    /// Bearing of beam 0. The beams are centred on the sensor heading, so
    /// the middle beam looks straight ahead.
    pub fn start_angle(&self) -> f64 {
        -((self.beam_count() - 1) as f64) * self.angular_step_deg / 2.0
    }
}

/// Semi-axes of the shoulder ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseDims {
    pub semi_major: f64,
    pub semi_minor: f64,
}

impl Default for EllipseDims {
    fn default() -> Self {
        Self {
            semi_major: 0.25,
            semi_minor: 0.15,
        }
    }
}

impl EllipseDims {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.semi_major, self.semi_minor);
        if !(a.is_finite() && b.is_finite() && a >= b && b > 0.0) {
            return Err(Error::InvalidEllipse { a, b });
        }
        Ok(())
    }
}

/// Body cross-section. `pose.heading()` is the direction of the major axis
/// (the shoulder line), which is perpendicular to the way the body faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseBody {
    pub pose: Pose2,
    dims: EllipseDims,
}

impl EllipseBody {
    pub fn new(pose: Pose2, dims: EllipseDims) -> Result<Self> {
        dims.validate()?;
        Ok(Self { pose, dims })
    }

    /// Ellipse for a body centred at `center` and facing `facing` degrees.
    pub fn facing(center: Point2, facing: f64, dims: EllipseDims) -> Result<Self> {
        Self::new(Pose2::new(center.x, center.y, facing + 90.0), dims)
    }

    pub fn semi_major(&self) -> f64 {
        self.dims.semi_major
    }

    pub fn semi_minor(&self) -> f64 {
        self.dims.semi_minor
    }

    pub fn dims(&self) -> EllipseDims {
        self.dims
    }

    /// Contour point and outward (unnormalized) normal at parameter angle `t`
    /// (radians).
    pub fn contour(&self, t: f64) -> (Point2, Point2) {
        let (st, ct) = t.sin_cos();
        contour_at(self.pose, self.dims, ct, st)
    }

    fn local_point(&self, p: Point2) -> Point2 {
        Point2::new(p.x - self.pose.x, p.y - self.pose.y).rotated(-self.pose.heading())
    }

    pub fn contains(&self, p: Point2) -> bool {
        let q = self.local_point(p);
        let (a, b) = (self.dims.semi_major, self.dims.semi_minor);
        (q.x / a).powi(2) + (q.y / b).powi(2) <= 1.0
    }
}

/// Contour point and outward normal for a precomputed (cos t, sin t).
pub(crate) fn contour_at(pose: Pose2, dims: EllipseDims, ct: f64, st: f64) -> (Point2, Point2) {
    let (a, b) = (dims.semi_major, dims.semi_minor);
    let (sp, cp) = pose.heading().to_radians().sin_cos();
    let (lx, ly) = (a * ct, b * st);
    let (nx, ny) = (ct / a, st / b);
    let p = Point2::new(pose.x + cp * lx - sp * ly, pose.y + sp * lx + cp * ly);
    let n = Point2::new(cp * nx - sp * ny, sp * nx + cp * ny);
    (p, n)
}

/// Distance along the ray to the first boundary crossing, if any. The
/// direction is normalized internally.
pub fn ray_ellipse_intersect(origin: Point2, direction: Point2, body: &EllipseBody) -> Result<Option<f64>> {
    let len = direction.x.hypot(direction.y);
    let dir = Point2::new(direction.x / len, direction.y / len);
    let p = body.local_point(origin);
    let v = dir.rotated(-body.pose.heading());
    let (a2, b2) = (body.dims.semi_major.powi(2), body.dims.semi_minor.powi(2));

    let qa = v.x * v.x / a2 + v.y * v.y / b2;
    let qb = 2.0 * (p.x * v.x / a2 + p.y * v.y / b2);
    let qc = p.x * p.x / a2 + p.y * p.y / b2 - 1.0;
    if qc <= 0.0 {
        return Err(Error::OriginInsideEllipse);
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Ok(None);
    }
    // Stable root pair; both roots share a sign because qc > 0.
    let q = -0.5 * (qb + disc.sqrt().copysign(qb));
    let (t1, t2) = (q / qa, qc / q);
    let t = t1.min(t2);
    Ok((t > 0.0).then_some(t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaserScan {
    pub sensor_pose: Pose2,
    pub start_angle: f64,
    pub angular_step: f64,
    /// One range per beam; `max_range` marks "no return".
    pub ranges: Vec<f64>,
    pub max_range: f64,
    pub timestamp: f64,
}

impl LaserScan {
    pub fn beam_angle(&self, index: usize) -> f64 {
        self.start_angle + index as f64 * self.angular_step
    }

    pub fn is_return(&self, index: usize) -> bool {
        self.ranges[index] < self.max_range
    }

    pub fn return_count(&self) -> usize {
        (0..self.ranges.len()).filter(|&i| self.is_return(i)).count()
    }

    /// Debug export: `beam_index,angle_deg,range_m`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["beam_index", "angle_deg", "range_m"])?;
        for (i, r) in self.ranges.iter().enumerate() {
            w.write_record([i.to_string(), format!("{:.4}", self.beam_angle(i)), format!("{r:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Casts every beam against the body and adds Gaussian range noise to the
/// returns. Only beams that can geometrically reach the body are traced.
pub fn synthesize_scan(sensor: &Pose2, body: &EllipseBody, config: &LaserConfig, seed: u64) -> LaserScan {
    let n = config.beam_count();
    let start = config.start_angle();
    let step = config.angular_step_deg;
    let mut ranges = vec![config.max_range; n];

    let origin = sensor.position();
    let center = body.pose.position();
    let dist = origin.distance(center);
    let reach = body.semi_major();
    let (center_rel, half_width) = if dist > reach {
        (
            angle_diff(origin.bearing_to(center), sensor.heading()),
            (reach / dist).asin().to_degrees(),
        )
    } else {
        (0.0, 180.0)
    };

    let noise = (config.noise_sigma > 0.0).then(|| Normal::new(0.0, config.noise_sigma).expect("finite sigma"));
    let mut rng = rng_from_seed(seed);

    for (i, range) in ranges.iter_mut().enumerate() {
        let rel = start + i as f64 * step;
        if angle_diff(rel, center_rel).abs() > half_width + step {
            continue;
        }
        let dir = Point2::new(1.0, 0.0).rotated(sensor.heading() + rel);
        // Inside the body or within the dead zone there is no usable return.
        let Ok(Some(truth)) = ray_ellipse_intersect(origin, dir, body) else {
            continue;
        };
        if truth >= config.max_range {
            continue;
        }
        let noisy = match &noise {
            Some(d) => truth + d.sample(&mut rng),
            None => truth,
        };
        *range = noisy.clamp(config.min_range, config.max_range);
    }

    LaserScan {
        sensor_pose: *sensor,
        start_angle: start,
        angular_step: step,
        ranges,
        max_range: config.max_range,
        timestamp: 0.0,
    }
}

/// World-frame points for every beam with a return.
pub fn scan_to_points(scan: &LaserScan) -> Vec<Point2> {
    let origin = scan.sensor_pose.position();
    (0..scan.ranges.len())
        .filter(|&i| scan.is_return(i))
        .map(|i| {
            let r = scan.ranges[i];
            let (s, c) = (scan.sensor_pose.heading() + scan.beam_angle(i)).to_radians().sin_cos();
            Point2::new(origin.x + r * c, origin.y + r * s)
        })
        .collect()
}
