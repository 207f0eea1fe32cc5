//! Object regression layer: split the skeleton path of an n-link chain into
//! straight segments, fit each by total least squares, and read off joint
//! angles.

use crate::geometry::{signed_angle_between, Pixel, Vec2};

/// Residual (px) above which a segment is split.
pub const SPLIT_RESIDUAL: f64 = 2.5;
/// Smallest segment, in skeleton pixels.
pub const MIN_SEGMENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineModel {
    /// Centroid of the fitted pixels.
    pub point: Vec2,
    /// Unit vector pointing away from the pivot.
    pub direction: Vec2,
    pub inlier_count: usize,
    /// Projections of the first and last fitted pixel onto the line.
    pub segment_span: (Vec2, Vec2),
}

impl LineModel {
    /// Total-least-squares fit to points given in proximal-to-distal order.
    pub fn fit(points: &[Vec2]) -> Option<LineModel> {
        if points.len() < 2 {
            return None;
        }
        let n = points.len() as f64;
        let mean = points.iter().fold(Vec2::ZERO, |s, &p| s + p) / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &p in points {
            let d = p - mean;
            sxx += d.x * d.x;
            sxy += d.x * d.y;
            syy += d.y * d.y;
        }
        let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
        let mut dir = Vec2::new(theta.cos(), theta.sin());
        let (first, last) = (points[0], points[points.len() - 1]);
        if (last - first).dot(dir) < 0.0 {
            dir = -dir;
        }
        let project = |p: Vec2| mean + dir * (p - mean).dot(dir);
        Some(LineModel {
            point: mean,
            direction: dir,
            inlier_count: points.len(),
            segment_span: (project(first), project(last)),
        })
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        (p - self.point).dot(self.direction.perp()).abs()
    }

    /// Same line traversed the other way.
    pub fn reversed(&self) -> LineModel {
        LineModel {
            direction: -self.direction,
            segment_span: (self.segment_span.1, self.segment_span.0),
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFit {
    /// Ordered from the pivot outwards.
    pub models: Vec<LineModel>,
    /// Path index ranges `[start, end)` behind each model.
    pub ranges: Vec<(usize, usize)>,
    /// Fewer than the requested number of links could be separated.
    pub under_segmented: bool,
}

/// Largest perpendicular residual of `pts` from their fitted line.
fn max_residual(pts: &[Vec2]) -> f64 {
    LineModel::fit(pts).map_or(0.0, |line| pts.iter().map(|&p| line.distance(p)).fold(0.0, f64::max))
}

fn sq_residual(pts: &[Vec2]) -> f64 {
    LineModel::fit(pts).map_or(0.0, |line| pts.iter().map(|&p| line.distance(p).powi(2)).sum())
}

/// Index of the point farthest from the chord joining the ends.
fn farthest_from_chord(pts: &[Vec2]) -> usize {
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    let normal = (b - a).normalized().map(Vec2::perp);
    let dist = |p: Vec2| match normal {
        Some(n) => (p - a).dot(n).abs(),
        None => (p - a).norm(),
    };
    (0..pts.len()).fold(0, |best, i| if dist(pts[i]) > dist(pts[best]) { i } else { best })
}

/// Splits a pivot-to-tip skeleton path into at most `n_links` straight
/// segments. Starting from the whole path, the segment whose line fit has
/// the largest residual above [`SPLIT_RESIDUAL`] is cut at the pixel
/// farthest from its chord (moved inwards if needed so both halves keep
/// [`MIN_SEGMENT`] pixels), until `n_links` segments exist or every segment
/// is straight enough. Each cut is then moved to the position between its
/// neighbouring cuts that minimises the squared residuals of the two fits.
pub fn segment_and_fit(path: &[Pixel], n_links: usize) -> SegmentFit {
    let pts: Vec<Vec2> = path.iter().map(|p| p.center()).collect();
    let n_links = n_links.max(1);
    let mut cuts = vec![0, pts.len()];
    while cuts.len() - 1 < n_links {
        let mut best: Option<(usize, usize, f64)> = None;
        for ri in 0..cuts.len() - 1 {
            let (s, e) = (cuts[ri], cuts[ri + 1]);
            if e - s < 2 * MIN_SEGMENT {
                continue;
            }
            let d = max_residual(&pts[s..e]);
            if d > SPLIT_RESIDUAL && best.map_or(true, |(_, _, bd)| d > bd) {
                let cut = (s + farthest_from_chord(&pts[s..e])).clamp(s + MIN_SEGMENT, e - MIN_SEGMENT);
                best = Some((ri, cut, d));
            }
        }
        let Some((ri, cut, _)) = best else {
            break;
        };
        cuts.insert(ri + 1, cut);
    }
    for ci in 1..cuts.len() - 1 {
        let (lo, hi) = (cuts[ci - 1] + MIN_SEGMENT, cuts[ci + 1] - MIN_SEGMENT);
        let cost = |c: usize| sq_residual(&pts[cuts[ci - 1]..c]) + sq_residual(&pts[c..cuts[ci + 1]]);
        cuts[ci] = (lo..=hi).fold(cuts[ci], |best, c| if cost(c) < cost(best) { c } else { best });
    }
    let ranges: Vec<(usize, usize)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    let models = ranges.iter().filter_map(|&(s, e)| LineModel::fit(&pts[s..e])).collect::<Vec<_>>();
    SegmentFit {
        under_segmented: models.len() < n_links,
        models,
        ranges,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainAngles {
    /// Base angle against the reference axis, then one relative angle per
    /// further link. Counter-clockwise on screen is positive.
    pub joints: Vec<f64>,
    pub n_links: usize,
}

/// Base angle of model 0 from `reference_axis`, then the signed turn from
/// each model's direction to the next.
pub fn chain_angles(models: &[LineModel], reference_axis: Vec2) -> ChainAngles {
    let mut joints = Vec::with_capacity(models.len());
    if let Some(first) = models.first() {
        joints.push(signed_angle_between(reference_axis, first.direction));
    }
    for w in models.windows(2) {
        joints.push(signed_angle_between(w[0].direction, w[1].direction));
    }
    ChainAngles {
        n_links: models.len(),
        joints,
    }
}
