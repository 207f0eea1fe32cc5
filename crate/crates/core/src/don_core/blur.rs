//! Separable Gaussian pre-blur in 14-bit fixed point.

use rayon::prelude::*;

const SHIFT: u32 = 14;
const ONE: i64 = 1 << SHIFT;
/// Fractional bits kept between the two passes.
const MID_BITS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianBlur {
    weights: Vec<u32>,
}

impl GaussianBlur {
    /// `size` must be odd; `size == 1` is the identity.
    pub fn new(size: usize, sigma: f64) -> Option<Self> {
        if size % 2 == 0 || !(sigma > 0.0) {
            return None;
        }
        let r = (size / 2) as i64;
        let g: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let total: f64 = g.iter().sum();
        let mut weights: Vec<i64> = g.iter().map(|v| (v / total * ONE as f64).round() as i64).collect();
        // Force the quantised weights to sum to exactly one.
        let err = ONE - weights.iter().sum::<i64>();
        weights[r as usize] += err;
        Some(Self {
            weights: weights.into_iter().map(|w| w as u32).collect(),
        })
    }

    pub fn identity() -> Self {
        Self { weights: vec![ONE as u32] }
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn is_identity(&self) -> bool {
        self.weights.len() == 1
    }

    /// Blurs a row-major `width x height` image with replicated borders.
    pub fn apply(&self, width: usize, height: usize, src: &[u8]) -> Vec<u8> {
        assert_eq!(src.len(), width * height);
        if self.is_identity() {
            return src.to_vec();
        }
        let r = self.weights.len() / 2;
        let mut mid = vec![0u16; width * height];
        mid.par_chunks_mut(width).enumerate().for_each(|(y, out)| {
            let row = &src[y * width..(y + 1) * width];
            for (x, o) in out.iter_mut().enumerate() {
                let mut acc = 0u32;
                for (i, &w) in self.weights.iter().enumerate() {
                    let xx = (x + i).saturating_sub(r).min(width - 1);
                    acc += w * row[xx] as u32;
                }
                *o = (acc >> (SHIFT - MID_BITS)) as u16;
            }
        });
        let mut out = vec![0u8; width * height];
        let round = 1u64 << (SHIFT + MID_BITS - 1);
        out.par_chunks_mut(width).enumerate().for_each(|(y, dst)| {
            let mut acc = vec![0u64; width];
            for (i, &w) in self.weights.iter().enumerate() {
                let yy = (y + i).saturating_sub(r).min(height - 1);
                let row = &mid[yy * width..(yy + 1) * width];
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += w as u64 * v as u64;
                }
            }
            for (d, a) in dst.iter_mut().zip(acc) {
                *d = ((a + round) >> (SHIFT + MID_BITS)).min(255) as u8;
            }
        });
        out
    }
}
