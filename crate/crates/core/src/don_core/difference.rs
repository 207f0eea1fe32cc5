//! Consecutive (`delta1`) and current-to-past (`delta2`) differences.

use rayon::prelude::*;

use super::window::FrameWindow;
use super::DonError;
use crate::mask::BinaryMask;

pub const DEFAULT_THRESHOLD: u8 = 25;

/// Sets every pixel strictly brighter than `threshold`.
pub fn binarize(width: u32, height: u32, values: &[u8], threshold: u8) -> BinaryMask {
    BinaryMask::from_bytes(width, height, values, |v| v > threshold)
}

pub fn abs_diff(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y)).collect()
}

fn diff_mask(window: &FrameWindow, a: usize, b: usize, threshold: u8) -> BinaryMask {
    let (w, h) = window.dimensions().expect("window is not empty");
    BinaryMask::from_byte_pairs(w, h, window.blurred(a), window.blurred(b), |x, y| {
        x.abs_diff(y) > threshold
    })
}

/// `delta1[p] = |f_{t-p} - f_{t-p-1}|` for `p = 0..N-1`, binarized.
pub fn delta1(window: &FrameWindow, threshold: u8) -> Result<Vec<BinaryMask>, DonError> {
    window.require_full()?;
    Ok((0..window.n())
        .into_par_iter()
        .map(|p| diff_mask(window, p, p + 1, threshold))
        .collect())
}

/// `delta2[p - 1] = |f_t - f_{t-p}|` for `p = 1..N`, binarized.
pub fn delta2(window: &FrameWindow, threshold: u8) -> Result<Vec<BinaryMask>, DonError> {
    window.require_full()?;
    Ok((1..=window.n())
        .into_par_iter()
        .map(|p| diff_mask(window, 0, p, threshold))
        .collect())
}
