//! Velocity and acceleration sets, angular kinematics, trust
//! factor and torque, all in pixel/frame units.

use crate::don_core::ObjectObservation;
use crate::geometry::{wrap_angle, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EstimationError {
    #[error("need at least two valid observations, have {valid}")]
    InsufficientObservations { valid: usize },
    #[error("skeleton length is zero")]
    ZeroRadius,
    #[error("inertia must be positive, got {0}")]
    NonPositiveInertia(f64),
}

/// One tracked position of the arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    /// `ς`: distal endpoint.
    pub location: Vec2,
    pub pivot: Vec2,
    pub skeleton_length_px: f64,
    pub valid: bool,
}

impl TrackPoint {
    pub fn invalid() -> Self {
        Self {
            location: Vec2::ZERO,
            pivot: Vec2::ZERO,
            skeleton_length_px: 0.0,
            valid: false,
        }
    }

    /// Screen angle of `location - pivot`.
    pub fn angle(&self) -> f64 {
        (self.location - self.pivot).angle()
    }
}

impl From<&ObjectObservation> for TrackPoint {
    fn from(o: &ObjectObservation) -> Self {
        if o.is_empty() {
            return Self::invalid();
        }
        Self {
            location: o.location,
            pivot: o.pivot_point,
            skeleton_length_px: o.skeleton_length_px,
            valid: true,
        }
    }
}

/// A series with a validity flag per entry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Flagged<T> {
    pub values: Vec<T>,
    pub valid: Vec<bool>,
}

impl<T: Copy> Flagged<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn valid_values(&self) -> impl Iterator<Item = T> + '_ {
        self.values.iter().zip(&self.valid).filter(|(_, &ok)| ok).map(|(&v, _)| v)
    }

    pub fn all_valid(values: Vec<T>) -> Self {
        let valid = vec![true; values.len()];
        Self { values, valid }
    }
}

/// First difference; an entry is valid when both its operands are.
fn diff<T: Copy + std::ops::Sub<Output = T>>(values: &[T], valid: &[bool]) -> Flagged<T> {
    Flagged {
        values: values.windows(2).map(|w| w[1] - w[0]).collect(),
        valid: valid.windows(2).map(|w| w[0] && w[1]).collect(),
    }
}

/// Invalid points take the nearest earlier valid location (or the first
/// valid one when none precedes them), so they contribute zero motion.
fn held<T: Copy>(points: &[TrackPoint], f: impl Fn(&TrackPoint) -> T) -> Vec<T> {
    let first = points.iter().find(|p| p.valid).map(&f);
    let mut last = first;
    points
        .iter()
        .map(|p| {
            if p.valid {
                last = Some(f(p));
            }
            last.expect("at least one valid point")
        })
        .collect()
}

fn require_valid(points: &[TrackPoint]) -> Result<(), EstimationError> {
    let valid = points.iter().filter(|p| p.valid).count();
    if valid < 2 {
        return Err(EstimationError::InsufficientObservations { valid });
    }
    Ok(())
}

/// `v_p = ς_p - ς_{p-1}`, `a_p = v_p - v_{p-1}` over points given oldest
/// first. `L` points give `L-1` velocities and `L-2` accelerations.
pub fn estimate_motion(points: &[TrackPoint]) -> Result<(Flagged<Vec2>, Flagged<Vec2>), EstimationError> {
    require_valid(points)?;
    let locs = held(points, |p| p.location);
    let flags: Vec<bool> = points.iter().map(|p| p.valid).collect();
    let v = diff(&locs, &flags);
    let a = diff(&v.values, &v.valid);
    Ok((v, a))
}

/// Signed angular velocity and acceleration from wrapped differences of
/// `φ = angle(ς - pivot)`, plus `r` as the median valid skeleton length.
pub fn angular_kinematics(points: &[TrackPoint]) -> Result<(Flagged<f64>, Flagged<f64>, f64), EstimationError> {
    require_valid(points)?;
    let r_px = median(points.iter().filter(|p| p.valid).map(|p| p.skeleton_length_px).collect());
    if !(r_px > 0.0) {
        return Err(EstimationError::ZeroRadius);
    }
    let phi = held(points, TrackPoint::angle);
    let flags: Vec<bool> = points.iter().map(|p| p.valid).collect();
    let omega = Flagged {
        values: phi.windows(2).map(|w| wrap_angle(w[1] - w[0])).collect(),
        valid: flags.windows(2).map(|w| w[0] && w[1]).collect(),
    };
    let alpha = diff(&omega.values, &omega.valid);
    Ok((omega, alpha, r_px))
}

/// `|v| / r`, the unsigned angular speed of circular motion.
pub fn circular_speed(v: Vec2, r_px: f64) -> f64 {
    v.norm() / r_px
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

/// Object areas over the window, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionTrack {
    pub s: Vec<f64>,
}

impl RegionTrack {
    pub fn new(s: Vec<f64>) -> Self {
        Self { s }
    }

    /// `c_p = |M_1 - M_p|` for `p = 2..N`.
    pub fn s_d(&self) -> Vec<f64> {
        self.s.iter().skip(1).map(|&m| (self.s[0] - m).abs()).collect()
    }

    pub fn max_area(&self) -> f64 {
        self.s.iter().copied().fold(0.0, f64::max)
    }
}

/// `η = 1 - max(S_d) / max(S)`, or 0 when every area is zero.
pub fn trust_factor(track: &RegionTrack) -> f64 {
    let max_s = track.max_area();
    if max_s <= 0.0 {
        return 0.0;
    }
    let max_d = track.s_d().into_iter().fold(0.0, f64::max);
    (1.0 - max_d / max_s).clamp(0.0, 1.0)
}

/// `θ_p = I α_p`.
pub fn torque(alpha: &[f64], inertia: f64) -> Result<Vec<f64>, EstimationError> {
    if !(inertia > 0.0) {
        return Err(EstimationError::NonPositiveInertia(inertia));
    }
    Ok(alpha.iter().map(|a| inertia * a).collect())
}

/// Motion estimate for one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionEstimate {
    pub velocity: Flagged<Vec2>,
    pub acceleration: Flagged<Vec2>,
    pub omega: Flagged<f64>,
    pub alpha: Flagged<f64>,
    pub r_px: f64,
    pub eta: f64,
    pub predicted: bool,
}

impl MotionEstimate {
    /// Most recent valid angular velocity, if any.
    pub fn latest_omega(&self) -> Option<f64> {
        latest(&self.omega)
    }

    pub fn latest_alpha(&self) -> Option<f64> {
        latest(&self.alpha)
    }
}

fn latest(f: &Flagged<f64>) -> Option<f64> {
    f.values.iter().zip(&f.valid).rev().find(|(_, &ok)| ok).map(|(&v, _)| v)
}
