use rayon::prelude::*;

use super::difference::{delta1, delta2};
use super::morphology::Grid;
use super::skeleton::{skeletonize_grid, Skeleton};
use super::window::FrameWindow;
use super::DonError;
use crate::geometry::{Pixel, Vec2};
use crate::mask::BinaryMask;

/// Morphological cleanup applied to each `l_p`.
///
/// The raw intersection is closed, opened and reduced to its largest
/// 8-connected component; that blob is the object hull. The located object
/// is the part of the raw intersection lying inside the hull, so it never
/// leaves `delta1_p` or the `delta2` union. Skeletons are taken from the
/// hull, whose closing merges the two edge bands a slowly turning bar leaves
/// in `delta1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cleanup {
    /// Iterations of 3x3 closing before the opening; 0 disables it.
    pub close_radius: u32,
    pub open: bool,
}

impl Cleanup {
    pub const RAW: Cleanup = Cleanup {
        close_radius: 0,
        open: false,
    };
}

impl Default for Cleanup {
    fn default() -> Self {
        Self {
            close_radius: 3,
            open: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectObservation {
    pub frame_index: u64,
    /// Object hull (see [`Cleanup`]).
    pub mask: BinaryMask,
    pub area_px: usize,
    pub skeleton: Vec<Pixel>,
    pub path: Vec<Pixel>,
    pub skeleton_length_px: f64,
    pub pivot_px: Pixel,
    pub distal_px: Pixel,
    /// Continuous pivot-side tip of the skeleton.
    pub pivot_point: Vec2,
    /// `ς_p`: the continuous distal tip of the skeleton.
    pub location: Vec2,
}

impl ObjectObservation {
    /// Placeholder for a frame with no usable object.
    pub fn sentinel(frame_index: u64, width: u32, height: u32) -> Self {
        Self {
            frame_index,
            mask: BinaryMask::new(width, height),
            area_px: 0,
            skeleton: Vec::new(),
            path: Vec::new(),
            skeleton_length_px: 0.0,
            pivot_px: Pixel::new(0, 0),
            distal_px: Pixel::new(0, 0),
            pivot_point: Vec2::ZERO,
            location: Vec2::ZERO,
        }
    }

    fn found(frame_index: u64, mask: BinaryMask, skel: Skeleton) -> Self {
        let (a, b) = skel.endpoints();
        Self {
            frame_index,
            area_px: mask.count(),
            mask,
            skeleton: skel.pixels,
            path: skel.path,
            skeleton_length_px: skel.length_px,
            pivot_px: a,
            distal_px: b,
            pivot_point: skel.tips[0],
            location: skel.tips[1],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.area_px == 0
    }

    /// Angle of `location - pivot_point`, counter-clockwise on screen.
    pub fn angle(&self) -> f64 {
        (self.location - self.pivot_point).angle()
    }

    fn swap_endpoints(&mut self) {
        std::mem::swap(&mut self.pivot_px, &mut self.distal_px);
        std::mem::swap(&mut self.pivot_point, &mut self.location);
        self.path.reverse();
    }
}

/// Returns `(object, hull)` as grids over the same crop.
fn cleaned_grid(union2: &BinaryMask, delta1_p: &BinaryMask, cleanup: Cleanup) -> Result<(Grid, Grid), DonError> {
    if !union2.same_shape(delta1_p) {
        return Err(DonError::MaskShapeMismatch);
    }
    let l = union2.intersection(delta1_p);
    let raw = Grid::crop(&l, cleanup.close_radius + 1).ok_or(DonError::EmptyObject)?;
    let mut hull = raw.clone();
    hull.close(cleanup.close_radius);
    if cleanup.open {
        hull.open(1);
    }
    hull.keep_largest();
    let mut object = raw;
    for (o, &h) in object.cells.iter_mut().zip(&hull.cells) {
        *o &= h;
    }
    if object.count() == 0 {
        return Err(DonError::EmptyObject);
    }
    Ok((object, hull))
}

fn union_all(masks: &[BinaryMask]) -> Result<BinaryMask, DonError> {
    let mut it = masks.iter();
    let mut u = it.next().ok_or(DonError::EmptyObject)?.clone();
    for m in it {
        if !m.same_shape(&u) {
            return Err(DonError::MaskShapeMismatch);
        }
        u.union_with(m);
    }
    Ok(u)
}

/// `l_p = (U delta2) n delta1_p`, cleaned and reduced to its largest component.
pub fn locate_object(delta2_all: &[BinaryMask], delta1_p: &BinaryMask, cleanup: Cleanup) -> Result<BinaryMask, DonError> {
    let u = union_all(delta2_all)?;
    let (object, _) = cleaned_grid(&u, delta1_p, cleanup)?;
    Ok(object.to_mask(u.width(), u.height()))
}

/// Masks behind one tick's observations, kept for debug dumps.
#[derive(Debug, Clone)]
pub struct LayerMasks {
    pub delta1: Vec<BinaryMask>,
    pub delta2: Vec<BinaryMask>,
    /// Oldest first, like the observations.
    pub observations: Vec<ObjectObservation>,
}

/// Runs the N object finders. Observations come back oldest first: entry
/// `i` localizes the object from `delta1[N-1-i]`, the change between frames
/// `t-N+i` and `t-N+i+1`, and carries the index of the newer frame.
pub fn observe(window: &FrameWindow, threshold: u8, cleanup: Cleanup) -> Result<Vec<ObjectObservation>, DonError> {
    observe_layers(window, threshold, cleanup).map(|l| l.observations)
}

pub fn observe_layers(window: &FrameWindow, threshold: u8, cleanup: Cleanup) -> Result<LayerMasks, DonError> {
    let d1 = delta1(window, threshold)?;
    let d2 = delta2(window, threshold)?;
    let u = union_all(&d2)?;
    let n = window.n();
    let (w, h) = window.dimensions().expect("window is full");
    let mut obs: Vec<ObjectObservation> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = n - 1 - i;
            let idx = window.frame(p).index();
            let found = cleaned_grid(&u, &d1[p], cleanup).and_then(|(_, hull)| {
                let mask = hull.to_mask(w, h);
                skeletonize_grid(hull).map(|s| (mask, s))
            });
            match found {
                Ok((mask, s)) => ObjectObservation::found(idx, mask, s),
                Err(_) => ObjectObservation::sentinel(idx, w, h),
            }
        })
        .collect();
    if obs.iter().all(|o| o.is_empty()) {
        return Err(DonError::AllFramesEmpty);
    }
    label_pivots(&mut obs);
    Ok(LayerMasks {
        delta1: d1,
        delta2: d2,
        observations: obs,
    })
}

/// Principal axis of a pixel set: `(centroid, unit direction)`.
fn principal_axis(pixels: &[Pixel]) -> Option<(Vec2, Vec2)> {
    if pixels.len() < 2 {
        return None;
    }
    let n = pixels.len() as f64;
    let mean = pixels.iter().fold(Vec2::ZERO, |s, p| s + p.center()) / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pixels {
        let d = p.center() - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((mean, Vec2::new(theta.cos(), theta.sin())))
}

/// Shortest path stretch used for an end's local axis.
const END_AXIS_MIN: usize = 12;

/// Mean squared sine of the spread of line directions below which the
/// window is treated as non-rotating (about 0.02 rad RMS).
const MIN_TURN: f64 = 5e-4;

/// Least-squares intersection of the lines through `points` along `dirs`
/// and the RMS distance of the lines from it, or `None` when the lines are
/// too close to parallel.
fn rotation_centre(lines: &[(Vec2, Vec2)]) -> Option<(Vec2, f64)> {
    let (mut m00, mut m01, mut m11) = (0.0, 0.0, 0.0);
    let mut rhs = Vec2::ZERO;
    for &(p, u) in lines {
        // Projector onto the line normal.
        let (a, b, c) = (1.0 - u.x * u.x, -u.x * u.y, 1.0 - u.y * u.y);
        m00 += a;
        m01 += b;
        m11 += c;
        rhs += Vec2::new(a * p.x + b * p.y, b * p.x + c * p.y);
    }
    let n = lines.len() as f64;
    let tr = m00 + m11;
    let det = m00 * m11 - m01 * m01;
    let lambda_min = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
    if lines.len() < 2 || lambda_min / n < MIN_TURN {
        return None;
    }
    let c = Vec2::new((m11 * rhs.x - m01 * rhs.y) / det, (m00 * rhs.y - m01 * rhs.x) / det);
    let ss: f64 = lines.iter().map(|&(p, u)| (c - p).dot(u.perp()).powi(2)).sum();
    Some((c, (ss / n).sqrt()))
}

/// Orients every valid observation so that `pivot_px` is the endpoint at
/// the joint. Endpoints are first matched frame to frame by proximity.
///
/// When the object turns over the window, each end gets a rotation centre:
/// the least-squares intersection of the axes fitted to the third of the
/// path next to that end. The label whose endpoints sit closer to their own
/// centre is the pivot. Otherwise the label that moves
/// less across the link axis is the pivot (the thresholded ends of a
/// difference mask jitter mostly along it); on a tie, the label whose first
/// position is smaller in `(y, x)` order wins.
pub fn label_pivots(obs: &mut [ObjectObservation]) {
    let mut prev: Option<(Vec2, Vec2)> = None;
    for o in obs.iter_mut().filter(|o| !o.is_empty()) {
        let (a, b) = (o.pivot_point, o.location);
        if let Some((pa, pb)) = prev {
            if (a - pb).norm() + (b - pa).norm() < (a - pa).norm() + (b - pb).norm() {
                o.swap_endpoints();
            }
        }
        prev = Some((o.pivot_point, o.location));
    }
    let valid: Vec<&ObjectObservation> = obs.iter().filter(|o| !o.is_empty()).collect();
    let Some(first) = valid.first() else {
        return;
    };
    let ends: Vec<(Vec2, Vec2)> = valid.iter().map(|o| (o.pivot_point, o.location)).collect();
    // Local axes near each end: the joint lies on the extension of the
    // pivot-side link, so lines fitted there converge close to it.
    let end_axes = |head: bool| -> Vec<(Vec2, Vec2)> {
        valid
            .iter()
            .filter_map(|o| {
                let m = (o.path.len() / 3).max(END_AXIS_MIN).min(o.path.len());
                let part = if head { &o.path[..m] } else { &o.path[o.path.len() - m..] };
                principal_axis(part)
            })
            .collect()
    };
    // The end whose axes meet most tightly gives the better centre; the
    // pivot is the label that stays nearer it.
    let centre = match (rotation_centre(&end_axes(true)), rotation_centre(&end_axes(false))) {
        (Some(a), Some(b)) => Some(if b.1 < a.1 { b.0 } else { a.0 }),
        (a, b) => a.or(b).map(|c| c.0),
    };
    let (score_a, score_b) = match centre {
        Some(c) => ends
            .iter()
            .fold((0.0, 0.0), |(sa, sb), &(a, b)| (sa + (a - c).norm(), sb + (b - c).norm())),
        None => {
            let (mut move_a, mut move_b) = (0.0, 0.0);
            for w in ends.windows(2) {
                let ((a0, b0), (a1, b1)) = (w[0], w[1]);
                if let Some(across) = ((b0 - a0) + (b1 - a1)).normalized().map(Vec2::perp) {
                    move_a += (a1 - a0).dot(across).abs();
                    move_b += (b1 - b0).dot(across).abs();
                }
            }
            (move_a, move_b)
        }
    };
    let flip = if (score_a - score_b).abs() <= 1e-9 * (score_a + score_b) {
        first.distal_px.yx() < first.pivot_px.yx()
    } else {
        score_b < score_a
    };
    if flip {
        obs.iter_mut().filter(|o| !o.is_empty()).for_each(|o| o.swap_endpoints());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::don_core::blur::GaussianBlur;
    use crate::testutil::rotating_link;
    use crate::video_io::{render_synthetic, Frame};
    use proptest::prelude::*;

    fn rows(spec: &[&str]) -> BinaryMask {
        BinaryMask::from_fn(spec[0].len() as u32, spec.len() as u32, |x, y| {
            spec[y as usize].as_bytes()[x as usize] == b'#'
        })
    }

    #[test]
    fn empty_delta1_gives_empty_object() {
        let full = BinaryMask::full(5, 5);
        let none = BinaryMask::new(5, 5);
        assert_eq!(locate_object(&[full], &none, Cleanup::default()), Err(DonError::EmptyObject));
    }

    #[test]
    fn full_masks_locate_full_object() {
        let full = BinaryMask::full(9, 9);
        assert_eq!(locate_object(&[full.clone(), full.clone()], &full, Cleanup::default()).unwrap(), full);
    }

    #[test]
    fn toy_intersection_without_cleanup() {
        let union_part = rows(&["#####", "#####", "#####", ".....", "....."]);
        let d1 = rows(&[".....", ".....", "#####", "#####", "#####"]);
        let got = locate_object(&[union_part.clone()], &d1, Cleanup::RAW).unwrap();
        // Brute-force set algebra over the 25 pixels.
        let expected = BinaryMask::from_fn(5, 5, |x, y| union_part.get(x, y) && d1.get(x, y));
        assert_eq!(got, expected);
        assert_eq!(got, rows(&[".....", ".....", "#####", ".....", "....."]));
    }

    #[test]
    fn static_scene_has_no_motion() {
        let spec = rotating_link(120, 120, 12, 60.0, 0.5, 0.0);
        let (frames, _) = render_synthetic(&spec).unwrap();
        let w = FrameWindow::from_frames(10, GaussianBlur::new(15, 2.5).unwrap(), frames[1..].to_vec()).unwrap();
        assert_eq!(observe(&w, 25, Cleanup::default()).unwrap_err(), DonError::AllFramesEmpty);
    }

    #[test]
    fn translated_bar_tie_breaks_to_the_left() {
        // A horizontal bar moving straight down: both ends move equally.
        let frames: Vec<Frame> = (0..=10u64)
            .map(|i| {
                let y0 = 10 + 3 * i as usize;
                let data = (0..80 * 80)
                    .map(|k| {
                        let (x, y) = (k % 80, k / 80);
                        if (20..60).contains(&x) && (y0..y0 + 4).contains(&y) { 220 } else { 20 }
                    })
                    .collect();
                Frame::new(80, 80, data, i, 30.0).unwrap()
            })
            .collect();
        let w = FrameWindow::from_frames(10, GaussianBlur::identity(), frames).unwrap();
        let obs = observe(&w, 25, Cleanup::default()).unwrap();
        for o in obs.iter().filter(|o| !o.is_empty()) {
            assert!(o.pivot_px.x < o.distal_px.x, "{:?} {:?}", o.pivot_px, o.distal_px);
        }
    }

    #[test]
    fn observation_invariants_on_rotating_link() {
        let mut spec = rotating_link(200, 200, 12, 100.0, 0.2, 0.05);
        spec.noise_amplitude = 5;
        let (frames, _) = render_synthetic(&spec).unwrap();
        let w = FrameWindow::from_frames(10, GaussianBlur::new(15, 2.5).unwrap(), frames[1..].to_vec()).unwrap();
        let obs = observe(&w, 25, Cleanup::default()).unwrap();
        assert_eq!(obs.len(), 10);
        assert_eq!(obs.iter().map(|o| o.frame_index).collect::<Vec<_>>(), (2..=11).collect::<Vec<_>>());
        for o in &obs {
            assert_eq!(o.area_px, o.mask.count());
            if o.is_empty() {
                continue;
            }
            assert!(o.skeleton_length_px > 0.0);
            assert!(o.skeleton.iter().all(|p| o.mask.get(p.x, p.y)));
            assert!(o.skeleton.contains(&o.pivot_px) && o.skeleton.contains(&o.distal_px));
            assert!((o.location - o.distal_px.center()).norm() < 3.0);
            assert!((o.pivot_point - o.pivot_px.center()).norm() < 3.0);
        }
    }

    #[test]
    fn endpoints_follow_the_rendered_link() {
        let mut spec = rotating_link(320, 240, 30, 100.0, 0.2, 0.05);
        spec.noise_amplitude = 5;
        let (frames, _) = render_synthetic(&spec).unwrap();
        let mut w = FrameWindow::new(10, GaussianBlur::new(15, 2.5).unwrap());
        let (mut total, mut pivot_side, mut on_axis) = (0, 0, 0);
        for f in frames {
            w.push_frame(f).unwrap();
            if !w.is_full() {
                continue;
            }
            for o in observe(&w, 25, Cleanup::default()).unwrap() {
                if o.is_empty() {
                    continue;
                }
                total += 1;
                let joint = spec.pivot;
                if (o.pivot_px.center() - joint).norm() < (o.distal_px.center() - joint).norm() {
                    pivot_side += 1;
                }
                // Distance from the distal point to the link axis, taken at
                // the two frames the difference mask spans.
                let k = o.frame_index as usize;
                let dist = [k - 1, k]
                    .iter()
                    .map(|&j| {
                        let dir = Vec2::from_angle(spec.links[0].program.angle_at(j as f64));
                        let rel = o.distal_px.center() - joint;
                        let along = rel.dot(dir).clamp(0.0, 100.0);
                        (rel - dir * along).norm()
                    })
                    .fold(f64::INFINITY, f64::min);
                if dist <= 5.0 {
                    on_axis += 1;
                }
            }
        }
        assert!(pivot_side * 10 >= total * 8, "{pivot_side}/{total}");
        assert!(on_axis * 10 >= total * 8, "{on_axis}/{total}");
    }

    proptest! {
        #[test]
        fn located_object_is_contained_in_both_operands(
            a in proptest::collection::vec(any::<bool>(), 16 * 12),
            b in proptest::collection::vec(any::<bool>(), 16 * 12),
            c in proptest::collection::vec(any::<bool>(), 16 * 12),
            close in 0u32..4,
            open in any::<bool>(),
        ) {
            let d2 = [BinaryMask::from_bools(16, 12, &a), BinaryMask::from_bools(16, 12, &b)];
            let d1 = BinaryMask::from_bools(16, 12, &c);
            let union = d2[0].union(&d2[1]);
            match locate_object(&d2, &d1, Cleanup { close_radius: close, open }) {
                Ok(l) => {
                    prop_assert!(l.is_subset_of(&d1));
                    prop_assert!(l.is_subset_of(&union));
                }
                Err(e) => prop_assert_eq!(e, DonError::EmptyObject),
            }
        }
    }
}
