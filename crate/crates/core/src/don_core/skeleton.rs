//! Zhang-Suen thinning and longest-path extraction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::morphology::Grid;
use super::DonError;
use crate::geometry::{Pixel, Vec2};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    /// All thinned pixels, raster order.
    pub pixels: Vec<Pixel>,
    /// Longest path through the thinned set, endpoint to endpoint.
    pub path: Vec<Pixel>,
    pub length_px: f64,
    /// Continuous end points of the extended path, in path order: where
    /// the fitted end directions leave the blob.
    pub tips: [Vec2; 2],
}

impl Skeleton {
    pub fn endpoints(&self) -> (Pixel, Pixel) {
        (self.path[0], *self.path.last().expect("path is never empty"))
    }
}

// Neighbours P2..P9, clockwise from north.
const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

pub(crate) fn zhang_suen(g: &mut Grid) {
    let mut marked = Vec::new();
    loop {
        let mut changed = false;
        for step in 0..2 {
            marked.clear();
            for y in 0..g.h as i64 {
                for x in 0..g.w as i64 {
                    if !g.at(x, y) {
                        continue;
                    }
                    let p: [bool; 8] = RING.map(|(dx, dy)| g.at(x + dx, y + dy));
                    let b = p.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let (n, e, s, w) = (p[0], p[2], p[4], p[6]);
                    let ok = if step == 0 {
                        !(n && e && s) && !(e && s && w)
                    } else {
                        !(n && e && w) && !(n && s && w)
                    };
                    if ok {
                        marked.push(y as usize * g.w + x as usize);
                    }
                }
            }
            for &i in &marked {
                g.cells[i] = false;
            }
            changed |= !marked.is_empty();
        }
        if !changed {
            break;
        }
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest-path distances over the 8-connected set bits of `g`.
fn dijkstra(g: &Grid, src: usize) -> (Vec<f64>, Vec<usize>) {
    let mut dist = vec![f64::INFINITY; g.cells.len()];
    let mut prev = vec![usize::MAX; g.cells.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Item(0.0, src));
    while let Some(Item(d, i)) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        let (x, y) = ((i % g.w) as i64, (i / g.w) as i64);
        for (dx, dy) in RING {
            if !g.at(x + dx, y + dy) {
                continue;
            }
            let j = (y + dy) as usize * g.w + (x + dx) as usize;
            let nd = d + if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            if nd < dist[j] {
                dist[j] = nd;
                prev[j] = i;
                heap.push(Item(nd, j));
            }
        }
    }
    (dist, prev)
}

/// Farthest reachable cell; ties go to the lowest raster index.
fn farthest(dist: &[f64]) -> usize {
    let mut best = 0;
    for (i, &d) in dist.iter().enumerate() {
        if d.is_finite() && (!dist[best].is_finite() || d > dist[best]) {
            best = i;
        }
    }
    best
}

/// Double-sweep longest path on a thinned grid. Exact on trees.
pub(crate) fn longest_path(g: &Grid) -> Option<(Vec<usize>, f64)> {
    let start = g.cells.iter().position(|&c| c)?;
    let (d0, _) = dijkstra(g, start);
    let a = farthest(&d0);
    let (d1, prev) = dijkstra(g, a);
    let b = farthest(&d1);
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Some((path, d1[b]))
}

/// Walks from `tip` along the fitted direction of `tail` (path cells
/// ending at `tip`) while the pixels stay inside `blob`. Returns the added
/// cells in walking order and the continuous point, on the fitted line,
/// where the walk leaves the blob (grid coordinates).
fn extend_tip(blob: &Grid, tail: &[usize]) -> (Vec<usize>, (f64, f64)) {
    let xy = |i: usize| ((i % blob.w) as f64, (i / blob.w) as f64);
    let tip = *tail.last().expect("non-empty tail");
    let (tx, ty) = xy(tip);
    let (fx, fy) = xy(tail[0]);
    let n = tail.len() as f64;
    let (mx, my) = tail.iter().fold((0.0, 0.0), |(sx, sy), &i| {
        let (x, y) = xy(i);
        (sx + x / n, sy + y / n)
    });
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &i in tail {
        let (x, y) = xy(i);
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (mut dx, mut dy) = (theta.cos(), theta.sin());
    if dx * (tx - fx) + dy * (ty - fy) < 0.0 {
        (dx, dy) = (-dx, -dy);
    }
    let steps = dx.abs().max(dy.abs());
    if tail.len() < 2 || steps == 0.0 {
        return (Vec::new(), (tx, ty));
    }
    let (sx, sy) = (dx / steps, dy / steps);
    let mut out = Vec::new();
    let mut last = tip;
    for k in 1.. {
        let (x, y) = ((tx + sx * k as f64).round() as i64, (ty + sy * k as f64).round() as i64);
        if !blob.at(x, y) {
            break;
        }
        let i = y as usize * blob.w + x as usize;
        if i != last {
            out.push(i);
            last = i;
        }
    }
    let inside = |s: f64| blob.at((mx + dx * s).round() as i64, (my + dy * s).round() as i64);
    let mut s = (tx - mx) * dx + (ty - my) * dy;
    while inside(s + 0.25) {
        s += 0.25;
    }
    (out, (mx + dx * s, my + dy * s))
}

/// Path cells per chord when measuring length, which smooths out the
/// staircase of a digitized diagonal.
const CHORD: usize = 8;
/// Path cells fitted to aim a tip extension.
const TIP_BASE: usize = 12;
/// Cells cut from each end of a long path before extension, which removes
/// the short forks thinning leaves at blunt or notched ends.
const TIP_TRIM: usize = 6;

pub(crate) fn skeletonize_grid(mut g: Grid) -> Result<Skeleton, DonError> {
    let area = g.count();
    if area < 3 {
        return Err(DonError::DegenerateBlob { pixels: area });
    }
    let blob = g.clone();
    zhang_suen(&mut g);
    let (mut path, _) = longest_path(&g).ok_or(DonError::DegenerateBlob { pixels: area })?;
    if path.len() < 2 {
        return Err(DonError::DegenerateBlob { pixels: area });
    }
    // Thinning eats into the ends of elongated blobs and forks at blunt
    // ones; trim the ends, then grow both tips back out to the blob
    // boundary along the local path direction.
    if path.len() > 3 * TIP_TRIM {
        for &i in path[..TIP_TRIM].iter().chain(&path[path.len() - TIP_TRIM..]) {
            g.cells[i] = false;
        }
        path = path[TIP_TRIM..path.len() - TIP_TRIM].to_vec();
    }
    let m = TIP_BASE.min(path.len());
    let rev: Vec<usize> = path[..m].iter().rev().copied().collect();
    let (head, head_tip) = extend_tip(&blob, &rev);
    let (tail, tail_tip) = extend_tip(&blob, &path[path.len() - m..]);
    for &i in head.iter().chain(&tail) {
        g.cells[i] = true;
    }
    path = head.into_iter().rev().chain(path).chain(tail).collect();
    let xy = |i: usize| Vec2::new((i % g.w) as f64, (i / g.w) as f64);
    let mut knots = vec![Vec2::new(head_tip.0, head_tip.1)];
    knots.extend(path.iter().step_by(CHORD).skip(1).map(|&i| xy(i)));
    knots.push(Vec2::new(tail_tip.0, tail_tip.1));
    let length_px = knots.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let to_pixel = |i: usize| Pixel::new((g.x0 + (i % g.w) as i64) as u32, (g.y0 + (i / g.w) as i64) as u32);
    let pixels = (0..g.cells.len()).filter(|&i| g.cells[i]).map(to_pixel).collect();
    let to_image = |(x, y): (f64, f64)| Vec2::new(g.x0 as f64 + x, g.y0 as f64 + y);
    Ok(Skeleton {
        tips: [to_image(head_tip), to_image(tail_tip)],
        pixels,
        path: path.into_iter().map(to_pixel).collect(),
        length_px,
    })
}

/// Thins `mask` to a one-pixel skeleton and measures its longest path, with
/// the path tips extended to the blob boundary. Blobs thinning to a single
/// pixel are also reported as degenerate.
pub fn skeletonize(mask: &BinaryMask) -> Result<Skeleton, DonError> {
    match Grid::crop(mask, 1) {
        Some(g) => skeletonize_grid(g),
        None => Err(DonError::DegenerateBlob { pixels: 0 }),
    }
}
