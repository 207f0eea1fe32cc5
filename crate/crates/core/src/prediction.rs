//! Reliability filtering and forward-difference extrapolation of
//! the velocity and acceleration sets.

use std::ops::{Add, Sub};

use crate::estimation::RegionTrack;

pub const DEFAULT_ETA_THRESHOLD: f64 = 0.5;
/// Relative area change above which a frame is considered corrupted.
pub const AREA_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictionError {
    #[error("prediction state is not initialized")]
    NotInitialized,
    #[error("every frame in the window was rejected")]
    AllRejected,
    #[error("k = {k} exceeds the window length {n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("expected {expected} {what}, got {found}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
}

/// Sets from the previous execution (`Ṽ`, `Ã`).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionState<T> {
    pub v_prev: Vec<T>,
    pub a_prev: Vec<T>,
    pub initialized: bool,
}

impl<T> Default for PredictionState<T> {
    fn default() -> Self {
        Self {
            v_prev: Vec::new(),
            a_prev: Vec::new(),
            initialized: false,
        }
    }
}

impl<T> PredictionState<T> {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Stores the sets for the next tick, replacing any earlier ones.
pub fn commit<T: Clone>(state: &mut PredictionState<T>, v: &[T], a: &[T]) {
    state.v_prev = v.to_vec();
    state.a_prev = a.to_vec();
    state.initialized = true;
}

/// Strictly below the threshold.
pub fn should_predict(eta: f64, threshold: f64) -> bool {
    debug_assert!(threshold > 0.0 && threshold < 1.0);
    eta < threshold
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reliability {
    /// Rejected frames at the newest end of the window.
    pub k: usize,
    /// Rejected frames (0-based, oldest first) that are followed by a
    /// reliable one and therefore do not count towards `k`.
    pub mid_window: Vec<usize>,
}

/// Counts the contiguous run of frames at the newest end whose area differs
/// from the oldest frame's by at least 5% of the largest area.
pub fn filter_reliable(track: &RegionTrack) -> Result<Reliability, PredictionError> {
    filter_reliable_with(track, AREA_TOLERANCE)
}

/// [`filter_reliable`] with the relative tolerance `fraction`.
pub fn filter_reliable_with(track: &RegionTrack, fraction: f64) -> Result<Reliability, PredictionError> {
    let n = track.s.len();
    let limit = fraction * track.max_area();
    let rejected: Vec<bool> = track.s.iter().map(|&m| (track.s[0] - m).abs() >= limit).collect();
    let k = rejected.iter().rev().take_while(|&&r| r).count();
    if k == n {
        return Err(PredictionError::AllRejected);
    }
    let mid_window = (0..n - k).filter(|&i| rejected[i]).collect();
    Ok(Reliability { k, mid_window })
}

/// Forward-difference extrapolation. With `N = v.len()`, forms `Ṽ ++ V[..N-k]` and
/// `Ã ++ A[..N-1-k]`, then appends `v' = v_last + a_last` and
/// `a' = a_last + (a_last - a_prev_last)` until the sets hold `2N` and
/// `2N-2` elements, and returns the last `N` and `N-1` of them.
///
/// Each appended step uses the latest acceleration and the latest second
/// difference, so the increments keep evolving as elements are added.
pub fn predict<T>(state: &PredictionState<T>, v: &[T], a: &[T], k: usize) -> Result<(Vec<T>, Vec<T>), PredictionError>
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T>,
{
    if !state.initialized {
        return Err(PredictionError::NotInitialized);
    }
    let n = v.len();
    let check = |what, expected: usize, found: usize| {
        if expected == found {
            Ok(())
        } else {
            Err(PredictionError::LengthMismatch { what, expected, found })
        }
    };
    check("previous velocities", n, state.v_prev.len())?;
    check("accelerations", n.saturating_sub(1), a.len())?;
    check("previous accelerations", n.saturating_sub(1), state.a_prev.len())?;
    if k > n {
        return Err(PredictionError::KOutOfRange { k, n });
    }
    let mut vs: Vec<T> = state.v_prev.iter().chain(&v[..n - k]).copied().collect();
    let mut as_: Vec<T> = state.a_prev.iter().chain(&a[..a.len().saturating_sub(k)]).copied().collect();
    let (v_len, a_len) = (2 * n, 2 * n.saturating_sub(1));
    while vs.len() < v_len || as_.len() < a_len {
        let a_last = as_.last().copied().unwrap_or_default();
        let jerk = match as_.len() {
            0 | 1 => T::default(),
            m => as_[m - 1] - as_[m - 2],
        };
        if vs.len() < v_len {
            let v_last = *vs.last().expect("velocity history is never empty");
            vs.push(v_last + a_last);
        }
        if as_.len() < a_len {
            as_.push(a_last + jerk);
        }
    }
    Ok((vs[vs.len() - n..].to_vec(), as_[as_.len() - a.len()..].to_vec()))
}
