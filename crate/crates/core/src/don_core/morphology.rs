//! 3x3 binary morphology and connected components on a cropped grid.

use crate::mask::BinaryMask;

/// A padded crop of a mask. Cells may extend past the image border; those
/// start unset and are dropped when converting back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Grid {
    pub x0: i64,
    pub y0: i64,
    pub w: usize,
    pub h: usize,
    pub cells: Vec<bool>,
}

impl Grid {
    pub fn crop(mask: &BinaryMask, pad: u32) -> Option<Grid> {
        let (bx0, by0, bx1, by1) = mask.bounding_box()?;
        let pad = pad as i64;
        let (x0, y0) = (bx0 as i64 - pad, by0 as i64 - pad);
        let w = (bx1 - bx0) as usize + 1 + 2 * pad as usize;
        let h = (by1 - by0) as usize + 1 + 2 * pad as usize;
        let mut cells = vec![false; w * h];
        for p in mask.pixels() {
            let (gx, gy) = ((p.x as i64 - x0) as usize, (p.y as i64 - y0) as usize);
            cells[gy * w + gx] = true;
        }
        Some(Grid { x0, y0, w, h, cells })
    }

    pub fn to_mask(&self, width: u32, height: u32) -> BinaryMask {
        let mut m = BinaryMask::new(width, height);
        for (i, _) in self.cells.iter().enumerate().filter(|(_, &c)| c) {
            let (x, y) = (self.x0 + (i % self.w) as i64, self.y0 + (i / self.w) as i64);
            if x >= 0 && y >= 0 && x < width as i64 && y < height as i64 {
                m.set(x as u32, y as u32, true);
            }
        }
        m
    }

    pub fn at(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h && self.cells[y as usize * self.w + x as usize]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    fn filter3(&self, keep_if_all: bool) -> Vec<bool> {
        let mut out = vec![false; self.cells.len()];
        for y in 0..self.h as i64 {
            for x in 0..self.w as i64 {
                let mut all = true;
                let mut any = false;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let v = self.at(x + dx, y + dy);
                        all &= v;
                        any |= v;
                    }
                }
                out[y as usize * self.w + x as usize] = if keep_if_all { all } else { any };
            }
        }
        out
    }

    pub fn erode(&mut self) {
        self.cells = self.filter3(true);
    }

    pub fn dilate(&mut self) {
        self.cells = self.filter3(false);
    }

    /// 3x3 opening repeated `radius` times each way.
    pub fn open(&mut self, radius: u32) {
        (0..radius).for_each(|_| self.erode());
        (0..radius).for_each(|_| self.dilate());
    }

    /// Needs at least `radius` cells of padding to stay exact.
    pub fn close(&mut self, radius: u32) {
        (0..radius).for_each(|_| self.dilate());
        (0..radius).for_each(|_| self.erode());
    }

    /// 8-connected component labels (0 = background) and component sizes,
    /// numbered in raster order of their first pixel.
    pub fn label(&self) -> (Vec<u32>, Vec<usize>) {
        let mut labels = vec![0u32; self.cells.len()];
        let mut sizes = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.cells.len() {
            if !self.cells[start] || labels[start] != 0 {
                continue;
            }
            sizes.push(0);
            let id = sizes.len() as u32;
            labels[start] = id;
            stack.push(start);
            while let Some(i) = stack.pop() {
                sizes[id as usize - 1] += 1;
                let (x, y) = ((i % self.w) as i64, (i / self.w) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if self.at(nx, ny) {
                            let j = ny as usize * self.w + nx as usize;
                            if labels[j] == 0 {
                                labels[j] = id;
                                stack.push(j);
                            }
                        }
                    }
                }
            }
        }
        (labels, sizes)
    }

    /// Keeps the largest 8-connected component; ties go to the one that
    /// appears first in raster order.
    pub fn keep_largest(&mut self) {
        let (labels, sizes) = self.label();
        let Some(best) = sizes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i as u32 + 1)
        else {
            return;
        };
        for (c, l) in self.cells.iter_mut().zip(labels) {
            *c = l == best;
        }
    }
}

pub fn opening(mask: &BinaryMask) -> BinaryMask {
    apply(mask, 1, |g| g.open(1))
}

pub fn closing(mask: &BinaryMask, radius: u32) -> BinaryMask {
    apply(mask, radius + 1, |g| g.close(radius))
}

pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    apply(mask, 0, Grid::keep_largest)
}

pub fn component_count(mask: &BinaryMask) -> usize {
    Grid::crop(mask, 0).map_or(0, |g| g.label().1.len())
}

fn apply(mask: &BinaryMask, pad: u32, f: impl FnOnce(&mut Grid)) -> BinaryMask {
    match Grid::crop(mask, pad) {
        Some(mut g) => {
            f(&mut g);
            g.to_mask(mask.width(), mask.height())
        }
        None => mask.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(rows: &[&str]) -> BinaryMask {
        let h = rows.len() as u32;
        let w = rows[0].len() as u32;
        BinaryMask::from_fn(w, h, |x, y| rows[y as usize].as_bytes()[x as usize] == b'#')
    }

    #[test]
    fn opening_removes_specks_and_keeps_blocks() {
        let m = mask(&[
            "#.......", //
            "..###...",
            "..###...",
            "..###..#",
            "........",
        ]);
        let o = opening(&m);
        assert_eq!(o, mask(&["........", "..###...", "..###...", "..###...", "........"]));
    }

    #[test]
    fn opening_removes_one_pixel_lines() {
        let m = mask(&["........", "########", "........"]);
        assert!(opening(&m).is_empty());
    }

    #[test]
    fn closing_bridges_a_one_pixel_gap() {
        let m = mask(&[
            "..........",
            ".###.###..",
            ".###.###..",
            ".###.###..",
            "..........",
        ]);
        let c = closing(&m, 1);
        assert!(c.get(4, 2));
        assert_eq!(component_count(&c), 1);
        assert!(m.is_subset_of(&c));
    }

    #[test]
    fn largest_component_is_eight_connected() {
        let m = mask(&[
            "##....", //
            "..#...",
            "...#..",
            ".....#",
            "####.#",
        ]);
        // The chain and the bottom bar tie at four; the chain comes first.
        let l = largest_component(&m);
        assert_eq!(l.count(), 4);
        assert!(l.get(0, 0) && l.get(3, 2));
        assert_eq!(component_count(&m), 3);
    }

    #[test]
    fn full_mask_is_its_own_largest_component() {
        let m = BinaryMask::full(9, 7);
        assert_eq!(largest_component(&m), m);
    }

    proptest! {
        #[test]
        fn largest_component_is_subset_and_connected(bits in proptest::collection::vec(any::<bool>(), 12 * 10)) {
            let m = BinaryMask::from_bools(12, 10, &bits);
            let l = largest_component(&m);
            prop_assert!(l.is_subset_of(&m));
            prop_assert!(component_count(&l) <= 1);
            prop_assert_eq!(l.is_empty(), m.is_empty());
        }

        #[test]
        fn opening_is_antiextensive_and_idempotent(bits in proptest::collection::vec(any::<bool>(), 12 * 10)) {
            let m = BinaryMask::from_bools(12, 10, &bits);
            let o = opening(&m);
            prop_assert!(o.is_subset_of(&m));
            prop_assert_eq!(opening(&o), o);
        }
    }
}
