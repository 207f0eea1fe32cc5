//! Packed one-bit-per-pixel masks.

use crate::geometry::Pixel;

#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    words: Vec<u64>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BinaryMask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        let mut m = Self::new(width, height);
        m.words.iter_mut().for_each(|w| *w = u64::MAX);
        m.clear_padding();
        m
    }

    /// Builds a mask from a predicate over `(x, y)`.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    pub fn from_bools(width: u32, height: u32, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize);
        let mut m = Self::new(width, height);
        for (i, &b) in bits.iter().enumerate() {
            if b {
                m.words[i / 64] |= 1 << (i % 64);
            }
        }
        m
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.get_index(y as usize * self.width as usize + x as usize)
    }

    /// Out-of-bounds reads are background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64 && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, value: bool) {
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let i = y as usize * self.width as usize + x as usize;
        self.set_index(i, value);
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, other: &BinaryMask) {
        assert!(self.same_shape(other), "mask shape mismatch");
        self.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a |= b);
    }

    pub fn intersect_with(&mut self, other: &BinaryMask) {
        assert!(self.same_shape(other), "mask shape mismatch");
        self.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a &= b);
    }

    pub fn intersection(&self, other: &BinaryMask) -> BinaryMask {
        let mut m = self.clone();
        m.intersect_with(other);
        m
    }

    pub fn union(&self, other: &BinaryMask) -> BinaryMask {
        let mut m = self.clone();
        m.union_with(other);
        m
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_shape(other) && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        let w = self.width as usize;
        self.set_indices().map(move |i| Pixel::new((i % w) as u32, (i / w) as u32))
    }

    /// Row-major indices of set pixels, skipping empty words.
    pub fn set_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().filter(|(_, &w)| w != 0).flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Builds a mask by testing corresponding bytes of two equal-sized buffers.
    pub fn from_byte_pairs(width: u32, height: u32, a: &[u8], b: &[u8], f: impl Fn(u8, u8) -> bool) -> Self {
        let n = width as usize * height as usize;
        assert!(a.len() == n && b.len() == n);
        let words = a
            .chunks(64)
            .zip(b.chunks(64))
            .map(|(ca, cb)| {
                ca.iter()
                    .zip(cb)
                    .enumerate()
                    .fold(0u64, |acc, (i, (&x, &y))| acc | ((f(x, y) as u64) << i))
            })
            .collect();
        Self { width, height, words }
    }

    /// Builds a mask by testing each byte of a row-major buffer.
    pub fn from_bytes(width: u32, height: u32, bytes: &[u8], f: impl Fn(u8) -> bool) -> Self {
        assert_eq!(bytes.len(), width as usize * height as usize);
        let words = bytes
            .chunks(64)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, &b)| acc | ((f(b) as u64) << i))
            })
            .collect();
        Self { width, height, words }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.get_index(i)).collect()
    }

    /// 0/255 grayscale rendering.
    pub fn to_gray(&self) -> Vec<u8> {
        (0..self.len()).map(|i| if self.get_index(i) { 255 } else { 0 }).collect()
    }

    /// Intersection over union; two empty masks score 1.
    pub fn iou(&self, other: &BinaryMask) -> f64 {
        let inter = self.intersection(other).count();
        let uni = self.union(other).count();
        if uni == 0 {
            1.0
        } else {
            inter as f64 / uni as f64
        }
    }

    /// Bounding box `(x0, y0, x1, y1)` inclusive, or `None` when empty.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bb: Option<(u32, u32, u32, u32)> = None;
        for p in self.pixels() {
            bb = Some(match bb {
                None => (p.x, p.y, p.x, p.y),
                Some((x0, y0, x1, y1)) => (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y)),
            });
        }
        bb
    }

    fn clear_padding(&mut self) {
        let n = self.len();
        if n % 64 != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (n % 64)) - 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_count() {
        let mut m = BinaryMask::new(10, 9);
        assert!(m.is_empty());
        m.set(3, 4, true);
        m.set(9, 8, true);
        assert!(m.get(3, 4) && m.get(9, 8) && !m.get(4, 3));
        assert_eq!(m.count(), 2);
        assert_eq!(m.bounding_box(), Some((3, 4, 9, 8)));
        m.set(3, 4, false);
        assert_eq!(m.count(), 1);
    }

    #[test]
    fn full_mask_has_no_padding_bits() {
        let m = BinaryMask::full(7, 9);
        assert_eq!(m.count(), 63);
        assert!(m.is_subset_of(&BinaryMask::full(7, 9)));
    }

    #[test]
    fn set_algebra() {
        let a = BinaryMask::from_fn(8, 8, |x, _| x < 4);
        let b = BinaryMask::from_fn(8, 8, |_, y| y < 4);
        assert_eq!(a.intersection(&b).count(), 16);
        assert_eq!(a.union(&b).count(), 48);
        assert!(a.intersection(&b).is_subset_of(&a));
        assert!((a.iou(&b) - 16.0 / 48.0).abs() < 1e-12);
    }
}
