//! Particle-filter body tracking from laser scans.
//!
//! Each hypothesis is a shoulder ellipse `[x, y, theta]`. Only the part of
//! its contour facing the sensor is scored: for every visible evaluation
//! point the distance `d_n` to the nearest scan point is taken, and the
//! hypothesis weight is `exp(-d_max^2 / sigma_d)` where `d_max` is the
//! largest `d_n` and `sigma_d` the (floored) population variance of the
//! frame's `d_n`. By default that variance pools the distances of every
//! hypothesis in the frame, so all particles are scored on one scale.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, wrap, Point2, Pose2};
use crate::laser::{contour_at, scan_to_points, EllipseDims, LaserConfig, LaserScan};
use crate::rng::{rng_from_seed, SimRng};

/// Ground-plane body state. `theta` is the facing direction in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl BodyState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap(theta) }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Ellipse pose: the major axis runs along the shoulders.
    fn ellipse_pose(&self) -> Pose2 {
        Pose2::new(self.x, self.y, self.theta + 90.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub state: BodyState,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodyEstimate {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    /// Distance from the body centre to the laser sensor.
    pub distance: f64,
    pub converged: bool,
}

impl BodyEstimate {
    /// A perfect estimate, used when the tracker is bypassed.
    pub fn exact(state: BodyState, sensor: &Pose2) -> Self {
        Self {
            x: state.x,
            y: state.y,
            theta: state.theta,
            distance: state.position().distance(sensor.position()),
            converged: true,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub n_particles: usize,
    /// Per-frame Gaussian diffusion of x and y, metres.
    pub motion_sigma_xy: f64,
    /// Per-frame Gaussian diffusion of theta, degrees.
    pub motion_sigma_theta: f64,
    pub n_eval_points: usize,
    /// Lower bound on sigma_d, m^2.
    pub sigma_floor: f64,
    /// Weight given to every particle on a frame without laser returns.
    pub min_weight: f64,
    /// Radius of the uniform disc used to seed particles around the prior.
    pub init_radius: f64,
    /// Weighted positional spread (m) below which the estimate is converged.
    pub converged_spread_xy: f64,
    /// Circular spread of theta (deg) below which the estimate is converged.
    pub converged_spread_theta: f64,
    pub sigma_scope: SigmaScope,
    /// Redraw the phase of the evaluation grid every frame. With a fixed
    /// grid the contour point nearest the silhouette edge, which the scanner
    /// never resolves, pulls the estimate the same way on every frame.
    pub jitter_eval_phase: bool,
}

/// Which distances the likelihood variance `sigma_d` is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaScope {
    /// The hypothesis's own evaluation distances.
    Hypothesis,
    /// All evaluation distances of every hypothesis in the frame.
    Frame,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_particles: 1000,
            motion_sigma_xy: 0.05,
            motion_sigma_theta: 5.0,
            n_eval_points: 20,
            sigma_floor: 1e-4,
            min_weight: 1e-6,
            init_radius: 0.3,
            converged_spread_xy: 0.1,
            converged_spread_theta: 15.0,
            sigma_scope: SigmaScope::Frame,
            jitter_eval_phase: true,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::InvalidFilterConfig("n_particles must be >= 2"));
        }
        if self.n_eval_points < 4 {
            return Err(Error::InvalidFilterConfig("n_eval_points must be >= 4"));
        }
        if self.sigma_floor.is_nan() || self.sigma_floor <= 0.0 {
            return Err(Error::InvalidFilterConfig("sigma_floor must be > 0"));
        }
        if !(self.min_weight > 0.0 && self.min_weight <= 1.0) {
            return Err(Error::InvalidFilterConfig("min_weight must be in (0, 1]"));
        }
        if self.motion_sigma_xy < 0.0 || self.motion_sigma_theta < 0.0 {
            return Err(Error::InvalidFilterConfig("motion noise must be non-negative"));
        }
        Ok(())
    }
}

fn eval_table(n: usize, phase: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let t = std::f64::consts::TAU * (k as f64 + phase) / n as f64;
            (t.cos(), t.sin())
        })
        .collect()
}

/// Keeps contour points whose outward normal points toward the sensor.
fn push_visible(state: &BodyState, dims: EllipseDims, sensor: Point2, table: &[(f64, f64)], out: &mut Vec<Point2>) {
    out.clear();
    let pose = state.ellipse_pose();
    for &(ct, st) in table {
        let (p, n) = contour_at(pose, dims, ct, st);
        if n.x * (sensor.x - p.x) + n.y * (sensor.y - p.y) > 0.0 {
            out.push(p);
        }
    }
}

/// Contour points (equally spaced in parameter angle) whose outward normal
/// points toward the sensor.
pub fn visible_evaluation_points(hypothesis: &BodyState, dims: EllipseDims, sensor: &Pose2, n_eval_points: usize) -> Vec<Point2> {
    let mut out = Vec::with_capacity(n_eval_points);
    push_visible(hypothesis, dims, sensor.position(), &eval_table(n_eval_points, 0.0), &mut out);
    out
}

/// Distance from each evaluation point to its nearest scan point.
fn nearest_distances(eval_points: &[Point2], scan_points: &[Point2], out: &mut Vec<f64>) {
    out.clear();
    out.extend(
        eval_points
            .iter()
            .map(|e| scan_points.iter().map(|s| e.distance_sq(*s)).fold(f64::INFINITY, f64::min).sqrt()),
    );
}

fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n
}

fn score(d_max: f64, sigma_d: f64) -> f64 {
    (-(d_max * d_max) / sigma_d).exp().max(f64::MIN_POSITIVE)
}

/// Likelihood of a hypothesis given its visible evaluation points and the
/// scan points. Returns `None` when either list is empty.
pub fn likelihood(eval_points: &[Point2], scan_points: &[Point2], sigma_floor: f64) -> Option<f64> {
    if eval_points.is_empty() || scan_points.is_empty() {
        return None;
    }
    let mut d = Vec::with_capacity(eval_points.len());
    nearest_distances(eval_points, scan_points, &mut d);
    let d_max = d.iter().copied().fold(0.0, f64::max);
    Some(score(d_max, population_variance(&d).max(sigma_floor)))
}

/// Low-variance resampling with a single uniform offset.
pub fn systematic_resample(particles: &[Particle], rng: &mut impl Rng) -> Vec<Particle> {
    let n = particles.len();
    let step = 1.0 / n as f64;
    let start = rng.random::<f64>() * step;
    let uniform = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    let mut cumulative = particles[0].weight;
    for k in 0..n {
        let target = start + k as f64 * step;
        while cumulative < target && i + 1 < n {
            i += 1;
            cumulative += particles[i].weight;
        }
        out.push(Particle {
            state: particles[i].state,
            weight: uniform,
        });
    }
    out
}

/// Per-frame diagnostics alongside the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub estimate: BodyEstimate,
    pub n_effective: f64,
    pub reinitialized: bool,
}

/// One filter instance tracks one human.
#[derive(Debug, Clone)]
pub struct BodyTracker {
    config: FilterConfig,
    dims: EllipseDims,
    sensor: Pose2,
    laser: LaserConfig,
    prior: BodyState,
    particles: Vec<Particle>,
    table: Vec<(f64, f64)>,
    last: Option<BodyEstimate>,
}

impl BodyTracker {
    /// Seeds particles uniformly in a disc around the prior position, with
    /// orientation within +/-90 deg of the prior facing. The ellipse looks
    /// the same under a half turn, so that window picks one of the two
    /// mirror solutions.
    pub fn new(config: FilterConfig, dims: EllipseDims, sensor: Pose2, laser: LaserConfig, prior: BodyState, seed: u64) -> Result<Self> {
        config.validate()?;
        dims.validate()?;
        let mut tracker = Self {
            config,
            dims,
            sensor,
            laser,
            prior,
            particles: Vec::new(),
            table: eval_table(config.n_eval_points, 0.0),
            last: None,
        };
        let mut rng = rng_from_seed(seed);
        tracker.seed_around_prior(&mut rng);
        Ok(tracker)
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn set_particles(&mut self, particles: Vec<Particle>) {
        self.particles = particles;
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn last_estimate(&self) -> Option<BodyEstimate> {
        self.last
    }

    fn random_theta(&self, rng: &mut SimRng) -> f64 {
        self.prior.theta + rng.random_range(-90.0..90.0)
    }

    fn seed_around_prior(&mut self, rng: &mut SimRng) {
        let n = self.config.n_particles;
        let w = 1.0 / n as f64;
        self.particles = (0..n)
            .map(|_| {
                let r = self.config.init_radius * rng.random::<f64>().sqrt();
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                let theta = self.random_theta(rng);
                Particle {
                    state: BodyState::new(self.prior.x + r * a.cos(), self.prior.y + r * a.sin(), theta),
                    weight: w,
                }
            })
            .collect();
    }

    /// Track loss: spread particles over the whole sensor field.
    fn seed_over_field(&mut self, rng: &mut SimRng) {
        let n = self.config.n_particles;
        let w = 1.0 / n as f64;
        let half = self.laser.fov_deg / 2.0;
        let (r_lo, r_hi) = (0.3, self.laser.max_range);
        self.particles = (0..n)
            .map(|_| {
                let r = rng.random_range(r_lo..r_hi);
                let a = (self.sensor.heading() + rng.random_range(-half..half)).to_radians();
                let theta = self.random_theta(rng);
                Particle {
                    state: BodyState::new(self.sensor.x + r * a.cos(), self.sensor.y + r * a.sin(), theta),
                    weight: w,
                }
            })
            .collect();
    }

    fn diffuse(&mut self, rng: &mut SimRng) {
        let (sxy, sth) = (self.config.motion_sigma_xy, self.config.motion_sigma_theta);
        let nxy = (sxy > 0.0).then(|| Normal::new(0.0, sxy).expect("finite sigma"));
        let nth = (sth > 0.0).then(|| Normal::new(0.0, sth).expect("finite sigma"));
        for p in &mut self.particles {
            if let Some(d) = &nxy {
                p.state.x += d.sample(rng);
                p.state.y += d.sample(rng);
            }
            if let Some(d) = &nth {
                p.state.theta = wrap(p.state.theta + d.sample(rng));
            }
        }
    }

    /// Weighted mean position and circular mean orientation, plus spreads.
    fn summarize(&self) -> (BodyEstimate, f64) {
        let (mut x, mut y, mut s, mut c, mut w2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in &self.particles {
            let w = p.weight;
            x += w * p.state.x;
            y += w * p.state.y;
            let (st, ct) = p.state.theta.to_radians().sin_cos();
            s += w * st;
            c += w * ct;
            w2 += w * w;
        }
        let var_xy: f64 = self
            .particles
            .iter()
            .map(|p| p.weight * ((p.state.x - x).powi(2) + (p.state.y - y).powi(2)))
            .sum();
        let resultant = s.hypot(c).min(1.0);
        let theta_spread = if resultant > 0.0 {
            (-2.0 * resultant.ln()).sqrt().to_degrees()
        } else {
            180.0
        };
        let theta = s.atan2(c).to_degrees();
        let converged = var_xy.sqrt() <= self.config.converged_spread_xy && theta_spread <= self.config.converged_spread_theta;
        let position = Point2::new(x, y);
        (
            BodyEstimate {
                x,
                y,
                theta: wrap(theta),
                distance: position.distance(self.sensor.position()),
                converged,
            },
            1.0 / w2,
        )
    }

    /// Diffuse, weight, normalize, estimate, resample. Deterministic in
    /// `seed`.
    pub fn step(&mut self, scan: &LaserScan, seed: u64) -> StepReport {
        let mut rng = rng_from_seed(seed);
        self.diffuse(&mut rng);
        if self.config.jitter_eval_phase {
            self.table = eval_table(self.config.n_eval_points, rng.random::<f64>());
        }

        let scan_points = scan_to_points(scan);
        let sensor = self.sensor.position();
        let mut eval = Vec::with_capacity(self.table.len());
        let mut d = Vec::with_capacity(self.table.len());
        let mut max_w = 0.0f64;
        if scan_points.is_empty() {
            for p in &mut self.particles {
                p.weight = self.config.min_weight;
            }
            max_w = self.config.min_weight;
        } else {
            match self.config.sigma_scope {
                SigmaScope::Hypothesis => {
                    for p in &mut self.particles {
                        push_visible(&p.state, self.dims, sensor, &self.table, &mut eval);
                        p.weight = likelihood(&eval, &scan_points, self.config.sigma_floor).unwrap_or(self.config.min_weight);
                        max_w = max_w.max(p.weight);
                    }
                }
                SigmaScope::Frame => {
                    let mut all = Vec::with_capacity(self.particles.len() * self.table.len());
                    let mut d_max = Vec::with_capacity(self.particles.len());
                    for p in &self.particles {
                        push_visible(&p.state, self.dims, sensor, &self.table, &mut eval);
                        nearest_distances(&eval, &scan_points, &mut d);
                        all.extend_from_slice(&d);
                        d_max.push(d.iter().copied().fold(f64::NAN, f64::max));
                    }
                    let sigma_d = if all.is_empty() {
                        self.config.sigma_floor
                    } else {
                        population_variance(&all).max(self.config.sigma_floor)
                    };
                    for (p, dm) in self.particles.iter_mut().zip(d_max) {
                        p.weight = if dm.is_nan() { self.config.min_weight } else { score(dm, sigma_d) };
                        max_w = max_w.max(p.weight);
                    }
                }
            }
        }

        if max_w <= f64::MIN_POSITIVE {
            self.seed_over_field(&mut rng);
            let (mut estimate, n_eff) = self.summarize();
            estimate.converged = false;
            self.last = Some(estimate);
            return StepReport {
                estimate,
                n_effective: n_eff,
                reinitialized: true,
            };
        }

        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        for p in &mut self.particles {
            p.weight /= total;
        }
        let (estimate, n_effective) = self.summarize();
        self.particles = systematic_resample(&self.particles, &mut rng);
        self.last = Some(estimate);
        StepReport {
            estimate,
            n_effective,
            reinitialized: false,
        }
    }
}

/// Body orientation relative to the human-to-robot direction; 0 means the
/// body faces the robot.
pub fn body_orientation_for_srm(estimate: &BodyEstimate, robot: &Pose2) -> Result<f64> {
    if !estimate.converged {
        return Err(Error::NotConverged);
    }
    let toward_robot = estimate.position().bearing_to(robot.position());
    Ok(angle_diff(estimate.theta, toward_robot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laser::{synthesize_scan, EllipseBody};
    use proptest::prelude::*;

    fn circle() -> EllipseDims {
        EllipseDims {
            semi_major: 0.25,
            semi_minor: 0.25,
        }
    }

    /// Independent nearest-neighbour oracle for d_n.
    fn brute_force_dn(eval: &[Point2], scan: &[Point2]) -> Vec<f64> {
        eval.iter()
            .map(|e| {
                let mut best = f64::INFINITY;
                for s in scan {
                    let d = ((e.x - s.x).powi(2) + (e.y - s.y).powi(2)).sqrt();
                    if d < best {
                        best = d;
                    }
                }
                best
            })
            .collect()
    }

    #[test]
    fn visible_points_face_sensor() {
        let hyp = BodyState::new(2.0, 0.0, 0.0);
        let right = visible_evaluation_points(&hyp, circle(), &Pose2::new(5.0, 0.0, 180.0), 20);
        assert!(!right.is_empty());
        assert!(right.iter().all(|p| p.x >= 2.0 - 1e-12));
        let left = visible_evaluation_points(&hyp, circle(), &Pose2::new(-1.0, 0.0, 0.0), 20);
        assert!(left.iter().all(|p| p.x <= 2.0 + 1e-12));
        for p in &right {
            assert!(!left.iter().any(|q| q.distance(*p) < 1e-12));
        }
    }

    #[test]
    fn visible_point_count_matches_brute_force() {
        // Brute-force dot-product test at every contour point.
        let hyp = BodyState::new(2.0, 0.0, 0.0);
        let sensor = Point2::new(-40.0, 3.0);
        let mut expected = 0;
        for k in 0..20 {
            let t = std::f64::consts::TAU * k as f64 / 20.0;
            // With theta = 0 the major axis is rotated to +y.
            let p = Point2::new(2.0 - 0.25 * t.sin(), 0.25 * t.cos());
            let n = Point2::new(p.x - 2.0, p.y);
            if n.x * (sensor.x - p.x) + n.y * (sensor.y - p.y) > 0.0 {
                expected += 1;
            }
        }
        assert_eq!(expected, 10);
        let got = visible_evaluation_points(&hyp, circle(), &Pose2::new(sensor.x, sensor.y, 0.0), 20);
        assert_eq!(got.len(), expected);
    }

    #[test]
    fn likelihood_examples() {
        let pts = [Point2::new(1.0, 1.0), Point2::new(2.0, 0.5)];
        assert_eq!(likelihood(&pts, &pts, 1e-4), Some(1.0));
        assert_eq!(likelihood(&[], &pts, 1e-4), None);
        assert_eq!(likelihood(&pts, &[], 1e-4), None);

        // Single evaluation point: variance 0, floored to sigma_floor; pick
        // d_max^2 = sigma_floor.
        let e = [Point2::new(0.0, 0.0)];
        let s = [Point2::new(0.01, 0.0)];
        let a = likelihood(&e, &s, 1e-4).unwrap();
        assert!((a - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn likelihood_worked_example() {
        // d_n = {0.01, 0.02, 0.05}: three evaluation points each offset
        // from its own scan point, with the other scan points far away.
        let eval = [Point2::new(0.0, 0.0), Point2::new(10.0, 0.0), Point2::new(20.0, 0.0)];
        let scan = [Point2::new(0.0, 0.01), Point2::new(10.0, 0.02), Point2::new(20.0, 0.05)];
        let dn = brute_force_dn(&eval, &scan);
        let mean = dn.iter().sum::<f64>() / 3.0;
        let var = dn.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((var - 2.8888888888888e-4).abs() < 1e-15);
        let oracle = (-(0.05f64 * 0.05) / var).exp();
        assert!((oracle - 1.7437e-4).abs() < 1e-7, "{oracle}");
        let got = likelihood(&eval, &scan, 1e-4).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-12);
    }

    #[test]
    fn orientation_examples() {
        let robot = Pose2::new(0.0, 0.0, 0.0);
        let est = |theta| BodyEstimate {
            x: 2.0,
            y: 0.0,
            theta,
            distance: 2.0,
            converged: true,
        };
        assert!(body_orientation_for_srm(&est(180.0), &robot).unwrap().abs() < 1e-12);
        assert!((body_orientation_for_srm(&est(0.0), &robot).unwrap() - 180.0).abs() < 1e-12);

        // Human->robot bearing 30 deg, body at 120 deg -> 90 deg.
        let (s, c) = 30.0f64.to_radians().sin_cos();
        let e = BodyEstimate {
            x: -2.0 * c,
            y: -2.0 * s,
            theta: 120.0,
            distance: 2.0,
            converged: true,
        };
        assert!((body_orientation_for_srm(&e, &robot).unwrap() - 90.0).abs() < 1e-9);

        let mut e = est(0.0);
        e.converged = false;
        assert!(matches!(body_orientation_for_srm(&e, &robot), Err(Error::NotConverged)));
    }

    #[test]
    fn config_validation() {
        let ok = FilterConfig::default();
        assert!(ok.validate().is_ok());
        assert!(FilterConfig { n_particles: 1, ..ok }.validate().is_err());
        assert!(FilterConfig { n_eval_points: 3, ..ok }.validate().is_err());
        assert!(FilterConfig { sigma_floor: 0.0, ..ok }.validate().is_err());
    }

    #[test]
    fn resampling_preserves_count_and_uniformity() {
        let mut rng = rng_from_seed(3);
        let ps: Vec<Particle> = (0..50)
            .map(|i| Particle {
                state: BodyState::new(i as f64, 0.0, 0.0),
                weight: if i == 7 { 0.5 } else { 0.5 / 49.0 },
            })
            .collect();
        let out = systematic_resample(&ps, &mut rng);
        assert_eq!(out.len(), 50);
        assert!(out.iter().all(|p| (p.weight - 0.02).abs() < 1e-15));
        let copies = out.iter().filter(|p| p.state.x == 7.0).count();
        assert!((24..=26).contains(&copies), "{copies}");
    }

    #[test]
    fn fixed_point_without_motion_noise() {
        let sensor = Pose2::new(0.0, 0.0, 0.0);
        let truth = BodyState::new(2.0, 0.1, 160.0);
        let cfg = FilterConfig {
            motion_sigma_xy: 0.0,
            motion_sigma_theta: 0.0,
            ..FilterConfig::default()
        };
        let laser = LaserConfig::default();
        let mut tracker = BodyTracker::new(cfg, EllipseDims::default(), sensor, laser, truth, 1).unwrap();
        tracker.set_particles(vec![
            Particle {
                state: truth,
                weight: 1.0 / cfg.n_particles as f64
            };
            cfg.n_particles
        ]);
        let body = EllipseBody::facing(truth.position(), truth.theta, EllipseDims::default()).unwrap();
        let scan = synthesize_scan(&sensor, &body, &laser, 2);
        let est = tracker.step(&scan, 3).estimate;
        assert!((est.x - truth.x).abs() < 1e-9);
        assert!((est.y - truth.y).abs() < 1e-9);
        assert!(angle_diff(est.theta, truth.theta).abs() < 1e-9);
        assert!(est.converged);
        assert!((est.distance - truth.position().distance(sensor.position())).abs() < 1e-12);
    }

    #[test]
    fn empty_scan_keeps_cloud_and_far_cloud_reinitializes() {
        let sensor = Pose2::new(0.0, 0.0, 0.0);
        let laser = LaserConfig::default();
        let prior = BodyState::new(3.0, -3.0, 135.0);
        let mut tracker = BodyTracker::new(FilterConfig::default(), EllipseDims::default(), sensor, laser, prior, 4).unwrap();
        let empty = LaserScan {
            sensor_pose: sensor,
            start_angle: laser.start_angle(),
            angular_step: laser.angular_step_deg,
            ranges: vec![laser.max_range; laser.beam_count()],
            max_range: laser.max_range,
            timestamp: 0.0,
        };
        let r = tracker.step(&empty, 5);
        assert!(!r.reinitialized);

        // A single return ~8 m from the particle cloud, seen almost equally
        // far from every evaluation point: every weight underflows and the
        // tracker falls back to the full field.
        let mut lone = empty.clone();
        let beam = lone.ranges.len() - 1;
        lone.ranges[beam] = 3.9;
        let r = tracker.step(&lone, 7);
        assert!(r.reinitialized);
        assert!(!r.estimate.converged);
        let spread = tracker
            .particles()
            .iter()
            .map(|p| p.state.position().distance(sensor.position()))
            .fold(0.0, f64::max);
        assert!(spread > 2.5);
        assert!(tracker
            .particles()
            .iter()
            .all(|p| p.state.position().distance(sensor.position()) <= laser.max_range));
    }

    fn track(sensor: Pose2, truth: BodyState, prior: BodyState, frames: u64) -> BodyEstimate {
        let laser = LaserConfig::default();
        let dims = EllipseDims::default();
        let body = EllipseBody::facing(truth.position(), truth.theta, dims).unwrap();
        let mut tracker = BodyTracker::new(FilterConfig::default(), dims, sensor, laser, prior, 11).unwrap();
        let mut last = None;
        for f in 0..frames {
            let scan = synthesize_scan(&sensor, &body, &laser, 100 + f);
            last = Some(tracker.step(&scan, 200 + f).estimate);
        }
        last.unwrap()
    }

    #[test]
    fn estimate_rotates_with_the_world() {
        let phi = 73.0;
        let rotate = |s: BodyState| {
            let p = s.position().rotated(phi);
            BodyState::new(p.x, p.y, s.theta + phi)
        };
        let sensor = Pose2::new(0.0, 0.0, 10.0);
        let truth = BodyState::new(2.0, 0.4, 200.0);
        let prior = BodyState::new(2.0, 0.4, 190.0);
        let a = track(sensor, truth, prior, 40);
        let b = track(Pose2::new(0.0, 0.0, 10.0 + phi), rotate(truth), rotate(prior), 40);
        let a_rot = Point2::new(a.x, a.y).rotated(phi);
        assert!(a_rot.distance(b.position()) < 0.05, "{a:?} {b:?}");
        assert!(angle_diff(a.theta + phi, b.theta).abs() < 6.0, "{a:?} {b:?}");
        assert!((a.distance - b.distance).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn likelihood_strictly_decreasing_in_d_max(sigma in 1e-4f64..1e-2, d in 0.0f64..0.2, step in 1e-4f64..0.1) {
            prop_assert!(score(d + step, sigma) < score(d, sigma) || score(d, sigma) == f64::MIN_POSITIVE);
        }

        #[test]
        fn likelihood_in_unit_interval(
            ex in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..12),
            sx in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..12),
        ) {
            let e: Vec<Point2> = ex.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            let s: Vec<Point2> = sx.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            let a = likelihood(&e, &s, 1e-4).unwrap();
            prop_assert!(a > 0.0 && a <= 1.0);
        }
    }
}
