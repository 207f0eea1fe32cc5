//! Rotating-link scenes with analytic ground truth.
//!
//! A scene is an open chain of rectangular links hinged at a fixed pivot.
//! Each link's joint angle follows an [`AngleProgram`]: piecewise constant
//! angular acceleration in rad/frame². Link 0's angle is measured from the
//! +x axis; every other link's angle is relative to its predecessor.
//!
//! Scene file schema (see also the README):
//!
//! ```text
//! width = 320            # pixels
//! height = 240
//! frames = 300
//! fps = 30               # optional, default 30
//! pivot = 60, 120        # x, y of the chain base in pixels
//! background = 20        # optional, default 20
//! noise = 5              # optional amplitude of uniform noise, default 0
//! seed = 0               # optional, default 0
//!
//! [link]                 # one section per link, proximal first
//! length = 100
//! thickness = 8
//! intensity = 230        # optional, default 230, 190, 150, ...
//! angle = 0.0            # joint angle at frame 0, rad
//! velocity = 0.02        # joint rate at frame 0, rad/frame
//! accel = 0:0.0, 120:0.001   # optional start_frame:rad/frame² segments
//!
//! [occlusion]
//! frames = 100-105       # inclusive range
//! rect = 150, 80, 60, 60 # x, y, width, height
//! fill = 20
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pgm::encode_pgm;
use super::{Frame, VideoError};
use crate::geometry::Vec2;
use crate::keyvalue::{parse_document, parse_list, ParseError, Section};
use crate::mask::BinaryMask;

pub const DEFAULT_BACKGROUND: u8 = 20;
const DEFAULT_INTENSITIES: [u8; 5] = [230, 190, 150, 110, 250];

/// Constant angular acceleration from `start_frame` until the next segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSegment {
    pub start_frame: f64,
    pub acceleration: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AngleProgram {
    pub initial_angle: f64,
    pub initial_velocity: f64,
    /// Sorted by start frame; acceleration is zero before the first one.
    pub segments: Vec<AccelSegment>,
}

impl AngleProgram {
    pub fn constant_velocity(initial_angle: f64, velocity: f64) -> Self {
        Self {
            initial_angle,
            initial_velocity: velocity,
            segments: Vec::new(),
        }
    }

    pub fn constant_acceleration(initial_angle: f64, velocity: f64, acceleration: f64) -> Self {
        Self {
            initial_angle,
            initial_velocity: velocity,
            segments: vec![AccelSegment {
                start_frame: 0.0,
                acceleration,
            }],
        }
    }

    /// Joint angle at (continuous) frame time `t`. Times before zero
    /// extrapolate with the initial velocity.
    pub fn angle_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.initial_angle + self.initial_velocity * t;
        }
        let mut angle = self.initial_angle;
        let mut vel = self.initial_velocity;
        let mut time = 0.0;
        let mut accel = 0.0;
        for seg in &self.segments {
            let start = seg.start_frame.max(0.0);
            if start >= t {
                break;
            }
            let dt = start - time;
            angle += vel * dt + 0.5 * accel * dt * dt;
            vel += accel * dt;
            time = start;
            accel = seg.acceleration;
        }
        let dt = t - time;
        angle + vel * dt + 0.5 * accel * dt * dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub length_px: f64,
    pub thickness_px: f64,
    pub intensity: u8,
    pub program: AngleProgram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OcclusionRect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl OcclusionRect {
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.width && y < self.y + self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occlusion {
    pub first_frame: usize,
    /// Inclusive.
    pub last_frame: usize,
    pub rect: OcclusionRect,
    pub fill: u8,
}

impl Occlusion {
    pub fn active(&self, frame: usize) -> bool {
        (self.first_frame..=self.last_frame).contains(&frame)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub width: u32,
    pub height: u32,
    pub frames: usize,
    pub fps: f64,
    pub pivot: Vec2,
    pub background: u8,
    pub noise_amplitude: u8,
    pub seed: u64,
    pub links: Vec<LinkSpec>,
    pub occlusions: Vec<Occlusion>,
}

/// Per-link truth for one frame. Rates are exact discrete differences of
/// the programmed angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTruth {
    pub angle_rad: f64,
    pub angular_velocity_rad_per_frame: f64,
    pub angular_acceleration_rad_per_frame2: f64,
    pub occluded_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `frames[k][i]` is link `i` at frame `k`.
    pub frames: Vec<Vec<LinkTruth>>,
}

impl GroundTruth {
    pub fn link(&self, frame: usize, link: usize) -> &LinkTruth {
        &self.frames[frame][link]
    }

    /// Absolute (screen) angle of `link`, i.e. the sum of joint angles up to it.
    pub fn absolute_angle(&self, frame: usize, link: usize) -> f64 {
        self.frames[frame][..=link].iter().map(|t| t.angle_rad).sum()
    }
}

impl SyntheticSpec {
    /// A single link on a 20-intensity background, no noise or occlusion.
    pub fn single_link(width: u32, height: u32, frames: usize, pivot: Vec2, link: LinkSpec) -> Self {
        Self {
            width,
            height,
            frames,
            fps: super::DEFAULT_FPS,
            pivot,
            background: DEFAULT_BACKGROUND,
            noise_amplitude: 0,
            seed: 0,
            links: vec![link],
            occlusions: Vec::new(),
        }
    }

    pub fn default_intensity(link: usize) -> u8 {
        DEFAULT_INTENSITIES[link % DEFAULT_INTENSITIES.len()]
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let sections = parse_document(text)?;
        let top = &sections[0];
        top.check_keys(&[
            "width",
            "height",
            "frames",
            "fps",
            "pivot",
            "background",
            "noise",
            "seed",
        ])?;
        let pivot_entry = top.get("pivot").ok_or_else(|| ParseError {
            line: 1,
            message: "missing key `pivot` in top-level block".into(),
        })?;
        let pivot: Vec<f64> = parse_list(pivot_entry)?;
        if pivot.len() != 2 {
            return Err(ParseError {
                line: pivot_entry.line,
                message: "pivot needs two coordinates `x, y`".into(),
            });
        }
        let mut spec = SyntheticSpec {
            width: top.require("width")?,
            height: top.require("height")?,
            frames: top.require("frames")?,
            fps: top.parse("fps")?.unwrap_or(super::DEFAULT_FPS),
            pivot: Vec2::new(pivot[0], pivot[1]),
            background: top.parse("background")?.unwrap_or(DEFAULT_BACKGROUND),
            noise_amplitude: top.parse("noise")?.unwrap_or(0),
            seed: top.parse("seed")?.unwrap_or(0),
            links: Vec::new(),
            occlusions: Vec::new(),
        };
        for section in &sections[1..] {
            match section.name.as_str() {
                "link" => {
                    let link = parse_link(section, spec.links.len())?;
                    spec.links.push(link);
                }
                "occlusion" => spec.occlusions.push(parse_occlusion(section)?),
                other => {
                    return Err(ParseError {
                        line: section.line,
                        message: format!("unknown section [{other}]"),
                    })
                }
            }
        }
        spec.check_fields().map_err(|message| ParseError { line: 1, message })?;
        Ok(spec)
    }

    /// Field-level checks that do not need rendering.
    fn check_fields(&self) -> Result<(), String> {
        if self.width < super::MIN_FRAME_SIDE || self.height < super::MIN_FRAME_SIDE {
            return Err(format!("frame {}x{} is too small", self.width, self.height));
        }
        if self.frames == 0 {
            return Err("frames must be positive".into());
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err("fps must be positive".into());
        }
        if self.links.is_empty() {
            return Err("at least one [link] section is required".into());
        }
        for (i, l) in self.links.iter().enumerate() {
            if !(l.length_px > 0.0 && l.thickness_px > 0.0) {
                return Err(format!("link {i}: length and thickness must be positive"));
            }
            if l.program.segments.iter().any(|s| s.start_frame < 0.0) {
                return Err(format!("link {i}: acceleration segments must start at frame >= 0"));
            }
        }
        for (i, o) in self.occlusions.iter().enumerate() {
            let r = o.rect;
            if r.width == 0 || r.height == 0 || r.x + r.width > self.width || r.y + r.height > self.height {
                return Err(format!("occlusion {i}: rectangle lies outside the frame"));
            }
            if o.first_frame > o.last_frame {
                return Err(format!("occlusion {i}: empty frame range"));
            }
        }
        Ok(())
    }

    /// Joint positions `p_0 = pivot, ..., p_n` at frame `k`.
    pub fn joint_positions(&self, k: usize) -> Vec<Vec2> {
        let mut pts = vec![self.pivot];
        let mut abs = 0.0;
        let mut p = self.pivot;
        for link in &self.links {
            abs += link.program.angle_at(k as f64);
            p = p + Vec2::from_angle(abs) * link.length_px;
            pts.push(p);
        }
        pts
    }

    fn link_corners(&self, k: usize, link: usize) -> [Vec2; 4] {
        let joints = self.joint_positions(k);
        let (a, b) = (joints[link], joints[link + 1]);
        let dir = (b - a).normalized().unwrap_or(Vec2::new(1.0, 0.0));
        let half = dir.perp() * (self.links[link].thickness_px / 2.0);
        [a + half, a - half, b + half, b - half]
    }

    /// Checks frame/occlusion bounds and that every link stays inside the
    /// frame on every rendered frame.
    pub fn validate(&self) -> Result<(), VideoError> {
        self.check_fields()
            .map_err(|message| VideoError::InvalidSpec(ParseError { line: 0, message }))?;
        let (w, h) = (self.width as f64, self.height as f64);
        for k in 0..self.frames {
            for link in 0..self.links.len() {
                let inside = self
                    .link_corners(k, link)
                    .iter()
                    .all(|c| c.x >= 0.0 && c.y >= 0.0 && c.x <= w - 1.0 && c.y <= h - 1.0);
                if !inside {
                    return Err(VideoError::LinkOutOfFrame {
                        link,
                        frame: k,
                        width: self.width,
                        height: self.height,
                    });
                }
            }
        }
        Ok(())
    }

    /// Pixels covered by `link`'s rectangle at frame `k`, ignoring occlusion.
    pub fn link_mask(&self, k: usize, link: usize) -> BinaryMask {
        let mut mask = BinaryMask::new(self.width, self.height);
        self.for_each_link_pixel(k, link, |x, y| mask.set(x, y, true));
        mask
    }

    /// Pixels of `link` visible after later links and active occluders are drawn.
    pub fn visible_link_mask(&self, k: usize, link: usize) -> BinaryMask {
        let mut mask = self.link_mask(k, link);
        for later in link + 1..self.links.len() {
            let over = self.link_mask(k, later);
            mask = BinaryMask::from_fn(self.width, self.height, |x, y| mask.get(x, y) && !over.get(x, y));
        }
        for occ in self.occlusions.iter().filter(|o| o.active(k)) {
            let r = occ.rect;
            for y in r.y..r.y + r.height {
                for x in r.x..r.x + r.width {
                    mask.set(x, y, false);
                }
            }
        }
        mask
    }

    fn for_each_link_pixel(&self, k: usize, link: usize, mut f: impl FnMut(u32, u32)) {
        let joints = self.joint_positions(k);
        let (a, b) = (joints[link], joints[link + 1]);
        let len = self.links[link].length_px;
        let half = self.links[link].thickness_px / 2.0;
        let dir = (b - a).normalized().unwrap_or(Vec2::new(1.0, 0.0));
        let corners = self.link_corners(k, link);
        let min_x = corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min).floor().max(0.0) as u32;
        let min_y = corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min).floor().max(0.0) as u32;
        let max_x = corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max).ceil();
        let max_y = corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max).ceil();
        let max_x = (max_x.max(0.0) as u32).min(self.width - 1);
        let max_y = (max_y.max(0.0) as u32).min(self.height - 1);
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let d = Vec2::new(x as f64, y as f64) - a;
                let along = d.dot(dir);
                let across = d.dot(dir.perp());
                if (0.0..=len).contains(&along) && across.abs() <= half {
                    f(x, y);
                }
            }
        }
    }

    /// Fraction of each pixel's area inside `link`'s rectangle, estimated
    /// on a 4x4 grid of subsamples. Pixels with zero coverage are skipped.
    fn for_each_link_coverage(&self, k: usize, link: usize, mut f: impl FnMut(u32, u32, f64)) {
        const SUB: usize = 4;
        let joints = self.joint_positions(k);
        let a = joints[link];
        let dir = (joints[link + 1] - a).normalized().unwrap_or(Vec2::new(1.0, 0.0));
        let len = self.links[link].length_px;
        let half = self.links[link].thickness_px / 2.0;
        let corners = self.link_corners(k, link);
        let lo = |v: f64| (v - 1.0).floor().max(0.0) as u32;
        let min_x = lo(corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min));
        let min_y = lo(corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min));
        let max_x = (corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0) as u32;
        let max_y = (corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0) as u32;
        let offsets: Vec<f64> = (0..SUB).map(|i| (i as f64 + 0.5) / SUB as f64 - 0.5).collect();
        for y in min_y..=max_y.min(self.height - 1) {
            for x in min_x..=max_x.min(self.width - 1) {
                let mut inside = 0;
                for &oy in &offsets {
                    for &ox in &offsets {
                        let d = Vec2::new(x as f64 + ox, y as f64 + oy) - a;
                        if (0.0..=len).contains(&d.dot(dir)) && d.dot(dir.perp()).abs() <= half {
                            inside += 1;
                        }
                    }
                }
                if inside > 0 {
                    f(x, y, inside as f64 / (SUB * SUB) as f64);
                }
            }
        }
    }

    /// Fraction of `link`'s pixels hidden by active occluders at frame `k`.
    pub fn occluded_fraction(&self, k: usize, link: usize) -> f64 {
        let active: Vec<&Occlusion> = self.occlusions.iter().filter(|o| o.active(k)).collect();
        let (mut total, mut hidden) = (0usize, 0usize);
        self.for_each_link_pixel(k, link, |x, y| {
            total += 1;
            if active.iter().any(|o| o.rect.contains(x, y)) {
                hidden += 1;
            }
        });
        if total == 0 {
            0.0
        } else {
            hidden as f64 / total as f64
        }
    }

    /// Renders frame `k` without validation.
    pub fn render_frame(&self, k: usize) -> Frame {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut data = vec![self.background; w * h];
        for link in 0..self.links.len() {
            let value = self.links[link].intensity as f64;
            self.for_each_link_coverage(k, link, |x, y, c| {
                let p = &mut data[y as usize * w + x as usize];
                *p = (*p as f64 * (1.0 - c) + value * c).round() as u8;
            });
        }
        for occ in self.occlusions.iter().filter(|o| o.active(k)) {
            let r = occ.rect;
            for y in r.y..r.y + r.height {
                let row = y as usize * w;
                data[row + r.x as usize..row + (r.x + r.width) as usize].fill(occ.fill);
            }
        }
        if self.noise_amplitude > 0 {
            let amp = self.noise_amplitude as i16;
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(k as u64);
            for v in data.iter_mut() {
                let n: i16 = rng.gen_range(-amp..=amp);
                *v = (*v as i16 + n).clamp(0, 255) as u8;
            }
        }
        Frame::new(self.width, self.height, data, k as u64, self.fps).expect("validated dimensions")
    }

    pub fn ground_truth(&self) -> GroundTruth {
        let frames = (0..self.frames)
            .map(|k| {
                self.links
                    .iter()
                    .enumerate()
                    .map(|(i, link)| {
                        let t = k as f64;
                        let p = &link.program;
                        let (a0, a1, a2) = (p.angle_at(t), p.angle_at(t - 1.0), p.angle_at(t - 2.0));
                        let v = a0 - a1;
                        let v_prev = a1 - a2;
                        LinkTruth {
                            angle_rad: a0,
                            angular_velocity_rad_per_frame: v,
                            angular_acceleration_rad_per_frame2: v - v_prev,
                            occluded_fraction: self.occluded_fraction(k, i),
                        }
                    })
                    .collect()
            })
            .collect();
        GroundTruth { frames }
    }
}

fn parse_link(section: &Section, index: usize) -> Result<LinkSpec, ParseError> {
    section.check_keys(&["length", "thickness", "intensity", "angle", "velocity", "accel"])?;
    let mut segments = Vec::new();
    if let Some(entry) = section.get("accel") {
        for item in entry.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = || ParseError {
                line: entry.line,
                message: format!("accel segment `{item}` must be `start_frame:acceleration`"),
            };
            let (s, a) = item.split_once(':').ok_or_else(bad)?;
            segments.push(AccelSegment {
                start_frame: s.trim().parse().map_err(|_| bad())?,
                acceleration: a.trim().parse().map_err(|_| bad())?,
            });
        }
        if segments.windows(2).any(|w| w[0].start_frame >= w[1].start_frame) {
            return Err(ParseError {
                line: entry.line,
                message: "accel segments must have increasing start frames".into(),
            });
        }
    }
    Ok(LinkSpec {
        length_px: section.require("length")?,
        thickness_px: section.require("thickness")?,
        intensity: section
            .parse("intensity")?
            .unwrap_or_else(|| SyntheticSpec::default_intensity(index)),
        program: AngleProgram {
            initial_angle: section.parse("angle")?.unwrap_or(0.0),
            initial_velocity: section.parse("velocity")?.unwrap_or(0.0),
            segments,
        },
    })
}

fn parse_occlusion(section: &Section) -> Result<Occlusion, ParseError> {
    section.check_keys(&["frames", "rect", "fill"])?;
    let frames = section.get("frames").ok_or_else(|| ParseError {
        line: section.line,
        message: "missing key `frames` in [occlusion] section".into(),
    })?;
    let bad = || ParseError {
        line: frames.line,
        message: format!("frame range `{}` must be `first-last`", frames.value),
    };
    let (a, b) = frames.value.split_once('-').ok_or_else(bad)?;
    let rect_entry = section.get("rect").ok_or_else(|| ParseError {
        line: section.line,
        message: "missing key `rect` in [occlusion] section".into(),
    })?;
    let r: Vec<u32> = parse_list(rect_entry)?;
    if r.len() != 4 {
        return Err(ParseError {
            line: rect_entry.line,
            message: "rect needs `x, y, width, height`".into(),
        });
    }
    Ok(Occlusion {
        first_frame: a.trim().parse().map_err(|_| bad())?,
        last_frame: b.trim().parse().map_err(|_| bad())?,
        rect: OcclusionRect {
            x: r[0],
            y: r[1],
            width: r[2],
            height: r[3],
        },
        fill: section.parse("fill")?.unwrap_or(DEFAULT_BACKGROUND),
    })
}

/// Validates `spec` and renders every frame plus its ground truth.
pub fn render_synthetic(spec: &SyntheticSpec) -> Result<(Vec<Frame>, GroundTruth), VideoError> {
    spec.validate()?;
    let frames = (0..spec.frames).map(|k| spec.render_frame(k)).collect();
    Ok((frames, spec.ground_truth()))
}

/// Writes `frame_NNNNNN.pgm` files and `ground_truth.csv` into `dir`.
pub fn write_synthetic(dir: &Path, frames: &[Frame], truth: &GroundTruth) -> Result<(), VideoError> {
    fs::create_dir_all(dir).map_err(|e| VideoError::io(dir, e))?;
    for f in frames {
        let path = dir.join(format!("frame_{:06}.pgm", f.index()));
        fs::write(&path, encode_pgm(f.width(), f.height(), f.data())).map_err(|e| VideoError::io(&path, e))?;
    }
    let mut csv = String::from(
        "frame,link,angle_rad,angular_velocity_rad_per_frame,angular_acceleration_rad_per_frame2,occluded_fraction\n",
    );
    for (k, links) in truth.frames.iter().enumerate() {
        for (i, t) in links.iter().enumerate() {
            writeln!(
                csv,
                "{k},{i},{},{},{},{}",
                t.angle_rad, t.angular_velocity_rad_per_frame, t.angular_acceleration_rad_per_frame2, t.occluded_fraction
            )
            .expect("writing to a String");
        }
    }
    let path = dir.join("ground_truth.csv");
    fs::write(&path, csv).map_err(|e| VideoError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotating(velocity: f64) -> SyntheticSpec {
        SyntheticSpec::single_link(
            160,
            120,
            10,
            Vec2::new(40.0, 60.0),
            LinkSpec {
                length_px: 60.0,
                thickness_px: 8.0,
                intensity: 230,
                program: AngleProgram::constant_velocity(0.0, velocity),
            },
        )
    }

    #[test]
    fn static_scene_renders_identical_frames() {
        let (frames, truth) = render_synthetic(&rotating(0.0)).unwrap();
        assert_eq!(frames.len(), 10);
        assert!(frames.windows(2).all(|w| w[0].data() == w[1].data()));
        assert!(truth
            .frames
            .iter()
            .all(|f| f[0].angular_velocity_rad_per_frame == 0.0 && f[0].angular_acceleration_rad_per_frame2 == 0.0));
    }

    #[test]
    fn constant_rate_truth() {
        let (_, truth) = render_synthetic(&rotating(0.02)).unwrap();
        for f in &truth.frames {
            assert!((f[0].angular_velocity_rad_per_frame - 0.02).abs() < 1e-15);
            assert!(f[0].angular_acceleration_rad_per_frame2.abs() < 1e-15);
        }
    }

    #[test]
    fn truth_is_exact_discrete_difference() {
        let mut spec = rotating(0.01);
        spec.links[0].program.segments = vec![
            AccelSegment {
                start_frame: 2.0,
                acceleration: 0.003,
            },
            AccelSegment {
                start_frame: 6.5,
                acceleration: -0.002,
            },
        ];
        let truth = spec.ground_truth();
        for k in 1..truth.frames.len() {
            let (cur, prev) = (truth.link(k, 0), truth.link(k - 1, 0));
            assert_eq!(cur.angular_velocity_rad_per_frame, cur.angle_rad - prev.angle_rad);
            assert_eq!(
                cur.angular_acceleration_rad_per_frame2,
                cur.angular_velocity_rad_per_frame - prev.angular_velocity_rad_per_frame
            );
        }
    }

    #[test]
    fn program_is_continuous_across_segments() {
        let p = AngleProgram {
            initial_angle: 0.5,
            initial_velocity: 0.1,
            segments: vec![AccelSegment {
                start_frame: 3.0,
                acceleration: 0.2,
            }],
        };
        assert!((p.angle_at(3.0) - 0.8).abs() < 1e-12);
        assert!((p.angle_at(5.0) - (0.8 + 0.2 + 0.4)).abs() < 1e-12);
        assert!((p.angle_at(-1.0) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn link_leaving_frame_is_rejected() {
        let mut spec = rotating(0.0);
        spec.links[0].length_px = 200.0;
        assert!(matches!(render_synthetic(&spec), Err(VideoError::LinkOutOfFrame { link: 0, frame: 0, .. })));
    }

    #[test]
    fn occluded_fraction_matches_pixel_count() {
        let mut spec = rotating(0.0);
        // Horizontal link from x=40 to x=100; hide x in [64, 100].
        spec.occlusions.push(Occlusion {
            first_frame: 5,
            last_frame: 8,
            rect: OcclusionRect {
                x: 64,
                y: 40,
                width: 40,
                height: 40,
            },
            fill: DEFAULT_BACKGROUND,
        });
        let truth = spec.ground_truth();
        let mask = spec.link_mask(5, 0);
        let hidden = mask.pixels().filter(|p| p.x >= 64).count();
        let oracle = hidden as f64 / mask.count() as f64;
        for k in 5..=8 {
            assert_eq!(truth.link(k, 0).occluded_fraction, oracle);
            assert!((oracle - 0.6).abs() <= 0.05, "{oracle}");
        }
        assert_eq!(truth.link(4, 0).occluded_fraction, 0.0);
        assert_eq!(truth.link(9, 0).occluded_fraction, 0.0);
        assert!(spec.visible_link_mask(5, 0).count() < mask.count());
    }

    #[test]
    fn noise_is_seeded() {
        let mut spec = rotating(0.02);
        spec.noise_amplitude = 5;
        let a = spec.render_frame(3);
        let b = spec.render_frame(3);
        assert_eq!(a, b);
        spec.seed = 1;
        assert_ne!(a, spec.render_frame(3));
    }

    #[test]
    fn parse_full_document() {
        let text = "width = 320\nheight = 240\nframes = 30\npivot = 60, 120\nnoise = 5\n\n[link]\nlength = 100\nthickness = 8\nvelocity = 0.02\naccel = 0:0.001, 10:-0.001\n\n[occlusion]\nframes = 5-8\nrect = 100, 80, 40, 40\n";
        let spec = SyntheticSpec::parse(text).unwrap();
        assert_eq!(spec.links.len(), 1);
        assert_eq!(spec.links[0].intensity, 230);
        assert_eq!(spec.links[0].program.segments.len(), 2);
        assert_eq!(spec.occlusions[0].last_frame, 8);
        assert_eq!(spec.noise_amplitude, 5);
    }

    #[test]
    fn parse_errors_have_lines() {
        let text = "width = 320\nheight = 240\nframes = 30\npivot = 60, 120\n[link]\nlength = x\n";
        assert_eq!(SyntheticSpec::parse(text).unwrap_err().line, 6);
        let text = "width = 320\nheight = 240\nframes = 30\npivot = 60, 120\n[wheel]\n";
        assert_eq!(SyntheticSpec::parse(text).unwrap_err().line, 5);
    }
}
