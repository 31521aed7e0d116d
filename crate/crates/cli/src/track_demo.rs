//! Body-tracker error statistics on a body that walks and turns in front of
//! the laser.

use serde::Serialize;

use eyecontact::geometry::{angle_diff, Point2, Pose2};
use eyecontact::head::FRAME_DT;
use eyecontact::laser::{synthesize_scan, EllipseBody, EllipseDims, LaserConfig};
use eyecontact::rng::{derive_seed, stream_seed, Stream};
use eyecontact::tracker::{BodyState, BodyTracker, FilterConfig};
use eyecontact::Result;

use crate::config::TrackDemoConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackDemoReport {
    pub runs: usize,
    pub frames_per_run: u64,
    pub scored_frames: usize,
    pub orientation_error_deg: ErrorSummary,
    pub position_error_m: ErrorSummary,
    pub share_within_6deg: f64,
    pub share_converged: f64,
}

fn summarize(mut xs: Vec<f64>) -> ErrorSummary {
    xs.sort_by(f64::total_cmp);
    let rank = ((0.95 * xs.len() as f64).ceil() as usize).clamp(1, xs.len());
    ErrorSummary {
        mean: xs.iter().sum::<f64>() / xs.len() as f64,
        p95: xs[rank - 1],
        max: xs[xs.len() - 1],
    }
}

/// Position along the walk: a triangle wave of the given half length.
fn walk_offset(t: f64, half_length: f64, speed: f64) -> f64 {
    if half_length == 0.0 || speed == 0.0 {
        return 0.0;
    }
    let period = 4.0 * half_length / speed;
    let phase = (t / period).fract() * 4.0;
    half_length
        * match phase {
            p if p < 1.0 => p,
            p if p < 3.0 => 2.0 - p,
            p => p - 4.0,
        }
}

/// Pose of the walking body at time `t`; it faces the sensor on average.
pub fn demo_pose(config: &TrackDemoConfig, t: f64) -> BodyState {
    let y = walk_offset(t, config.walk_half_length, config.walk_speed);
    let swing = config.turn_amplitude_deg * (std::f64::consts::TAU * t / config.turn_period_s).sin();
    BodyState::new(config.range, y, 180.0 + swing)
}

pub fn run_track_demo(config: &TrackDemoConfig, filter: FilterConfig, laser: LaserConfig, base_seed: u64) -> Result<TrackDemoReport> {
    let dims = EllipseDims::default();
    let sensor = Pose2::new(0.0, 0.0, 0.0);
    let mut orientation = Vec::new();
    let mut position = Vec::new();
    let mut converged = 0usize;
    for run in 0..config.runs {
        let seed = derive_seed(base_seed, &[run as u64]);
        let mut tracker = BodyTracker::new(
            filter,
            dims,
            sensor,
            laser,
            demo_pose(config, 0.0),
            stream_seed(seed, Stream::FilterInit, 0),
        )?;
        for frame in 0..config.frames {
            let truth = demo_pose(config, frame as f64 * FRAME_DT);
            let body = EllipseBody::facing(Point2::new(truth.x, truth.y), truth.theta, dims)?;
            let scan = synthesize_scan(&sensor, &body, &laser, stream_seed(seed, Stream::Laser, frame));
            let est = tracker.step(&scan, stream_seed(seed, Stream::Filter, frame)).estimate;
            if frame >= config.warmup_frames {
                orientation.push(angle_diff(est.theta, truth.theta).abs());
                position.push(est.position().distance(truth.position()));
                converged += usize::from(est.converged);
            }
        }
    }
    let scored = orientation.len();
    let within = orientation.iter().filter(|e| **e < 6.0).count();
    Ok(TrackDemoReport {
        runs: config.runs,
        frames_per_run: config.frames,
        scored_frames: scored,
        orientation_error_deg: summarize(orientation),
        position_error_m: summarize(position),
        share_within_6deg: within as f64 / scored as f64,
        share_converged: converged as f64 / scored as f64,
    })
}
