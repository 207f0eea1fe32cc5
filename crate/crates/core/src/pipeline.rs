//! One tick of the whole chain: window push, difference layers, object
//! finders, motion estimation, trust gate, prediction, optional chain
//! fitting and the simulated servo.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use crate::actuation::{
    map_to_physical, ActuationError, Calibration, JointCommand, JointLimit, LogRow, Quantity, ServoConfig, Simulator,
    TrajectoryLog, DEFAULT_JOINT_LIMIT, DEFAULT_LINK_LENGTH_M, DEFAULT_LINK_MASS, DEFAULT_MAX_SPEED,
};
use crate::don_core::{
    debug, observe_layers, Cleanup, DonError, FrameWindow, GaussianBlur, ObjectObservation, DEFAULT_BLUR_SIGMA,
    DEFAULT_BLUR_SIZE, DEFAULT_THRESHOLD, DEFAULT_WINDOW,
};
use crate::estimation::{
    angular_kinematics, estimate_motion, torque, trust_factor, EstimationError, Flagged, MotionEstimate, RegionTrack,
    TrackPoint,
};
use crate::geometry::Vec2;
use crate::keyvalue::{parse_document, ParseError};
use crate::multilink::{chain_angles, segment_and_fit, ChainAngles};
use crate::prediction::{
    commit, filter_reliable_with, predict, should_predict, PredictionError, PredictionState, AREA_TOLERANCE,
    DEFAULT_ETA_THRESHOLD,
};
use crate::video_io::{render_synthetic, AngleProgram, Frame, LinkSpec, SyntheticSpec, VideoError, DEFAULT_FPS};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error(transparent)]
    Don(#[from] DonError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Actuation(#[from] ActuationError),
    #[error("need at least {required} frames, got {found}")]
    TooFewFrames { found: usize, required: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// `N`: predecessors of the current frame.
    pub window: usize,
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub threshold: u8,
    pub eta_threshold: f64,
    pub area_change_fraction: f64,
    pub n_links: usize,
    pub fps: f64,
    pub cleanup: Cleanup,
    pub ratio_length: Option<f64>,
    pub ratio_angular_velocity: f64,
    pub ratio_angular_acceleration: f64,
    /// One value for every link, or one per link.
    pub inertia: Vec<f64>,
    pub link_lengths_m: Vec<f64>,
    /// Symmetric travel half-range per joint (rad); one value or one per joint.
    pub joint_limit_rad: Vec<f64>,
    pub max_speed: f64,
    pub debug_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            blur_kernel: DEFAULT_BLUR_SIZE,
            blur_sigma: DEFAULT_BLUR_SIGMA,
            threshold: DEFAULT_THRESHOLD,
            eta_threshold: DEFAULT_ETA_THRESHOLD,
            area_change_fraction: AREA_TOLERANCE,
            n_links: 1,
            fps: DEFAULT_FPS,
            cleanup: Cleanup::default(),
            ratio_length: None,
            ratio_angular_velocity: 1.0,
            ratio_angular_acceleration: 1.0,
            inertia: vec![DEFAULT_LINK_MASS * DEFAULT_LINK_LENGTH_M * DEFAULT_LINK_LENGTH_M / 3.0],
            link_lengths_m: vec![DEFAULT_LINK_LENGTH_M],
            joint_limit_rad: vec![DEFAULT_JOINT_LIMIT],
            max_speed: DEFAULT_MAX_SPEED,
            debug_dir: None,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "window",
    "blur_kernel",
    "blur_sigma",
    "threshold",
    "eta_threshold",
    "area_change_fraction",
    "n_links",
    "fps",
    "close_radius",
    "open",
    "ratio_length",
    "ratio_angular_velocity",
    "ratio_angular_acceleration",
    "inertia",
    "link_lengths_m",
    "joint_limit_rad",
    "max_speed",
    "debug_dir",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.trim().parse().map_err(|_| format!("invalid value for `{key}`: `{value}`"))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, String> {
    let items: Result<Vec<f64>, String> = value.split(',').map(|s| num(key, s)).collect();
    let items = items?;
    if items.is_empty() {
        return Err(format!("`{key}` needs at least one value"));
    }
    Ok(items)
}

/// `values` stretched to `n` entries when it holds a single value.
fn per_link(what: &str, values: &[f64], n: usize) -> Result<Vec<f64>, String> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        m if m == n => Ok(values.to_vec()),
        m => Err(format!("`{what}` has {m} values for {n} links")),
    }
}

impl PipelineConfig {
    /// Reads a `key = value` document; keys not given keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let sections = parse_document(text)?;
        if let Some(s) = sections.get(1) {
            return Err(ParseError {
                line: s.line,
                message: "configuration files have no sections".into(),
            });
        }
        let top = &sections[0];
        top.check_keys(CONFIG_KEYS)?;
        let mut cfg = Self::default();
        for e in &top.entries {
            cfg.set(&e.key, &e.value).map_err(|message| ParseError { line: e.line, message })?;
        }
        Ok(cfg)
    }

    /// Overrides one key, as in the configuration file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "window" => self.window = num(key, value)?,
            "blur_kernel" => self.blur_kernel = num(key, value)?,
            "blur_sigma" => self.blur_sigma = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "eta_threshold" => self.eta_threshold = num(key, value)?,
            "area_change_fraction" => self.area_change_fraction = num(key, value)?,
            "n_links" => self.n_links = num(key, value)?,
            "fps" => self.fps = num(key, value)?,
            "close_radius" => self.cleanup.close_radius = num(key, value)?,
            "open" => self.cleanup.open = num(key, value)?,
            "ratio_length" => self.ratio_length = Some(num(key, value)?),
            "ratio_angular_velocity" => self.ratio_angular_velocity = num(key, value)?,
            "ratio_angular_acceleration" => self.ratio_angular_acceleration = num(key, value)?,
            "inertia" => self.inertia = list(key, value)?,
            "link_lengths_m" => self.link_lengths_m = list(key, value)?,
            "joint_limit_rad" => self.joint_limit_rad = list(key, value)?,
            "max_speed" => self.max_speed = num(key, value)?,
            "debug_dir" => self.debug_dir = Some(PathBuf::from(value.trim())),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.window < 3 {
            return bad(format!("window must be at least 3, got {}", self.window));
        }
        if self.blur_kernel % 2 == 0 {
            return bad(format!("blur_kernel must be odd, got {}", self.blur_kernel));
        }
        if self.blur_kernel > 1 && !(self.blur_sigma > 0.0 && self.blur_sigma.is_finite()) {
            return bad(format!("blur_sigma must be positive, got {}", self.blur_sigma));
        }
        if self.threshold == u8::MAX {
            return bad("threshold 255 can never be exceeded".into());
        }
        if !(self.eta_threshold > 0.0 && self.eta_threshold < 1.0) {
            return bad(format!("eta_threshold must lie in (0, 1), got {}", self.eta_threshold));
        }
        if !(self.area_change_fraction > 0.0 && self.area_change_fraction < 1.0) {
            return bad(format!(
                "area_change_fraction must lie in (0, 1), got {}",
                self.area_change_fraction
            ));
        }
        if self.n_links == 0 {
            return bad("n_links must be at least 1".into());
        }
        self.calibration()?.validate()?;
        self.servo()?.validate()?;
        Ok(())
    }

    pub fn blur(&self) -> Result<GaussianBlur, PipelineError> {
        if self.blur_kernel <= 1 {
            return Ok(GaussianBlur::identity());
        }
        GaussianBlur::new(self.blur_kernel, self.blur_sigma)
            .ok_or_else(|| PipelineError::Config(format!("blur {}x{}", self.blur_kernel, self.blur_kernel)))
    }

    pub fn calibration(&self) -> Result<Calibration, PipelineError> {
        let mut c = Calibration::new(self.fps, self.n_links);
        c.inertia = per_link("inertia", &self.inertia, self.n_links).map_err(PipelineError::Config)?;
        c.link_lengths_m = per_link("link_lengths_m", &self.link_lengths_m, self.n_links).map_err(PipelineError::Config)?;
        c.set_ratio(Quantity::AngularVelocity, self.ratio_angular_velocity)?;
        c.set_ratio(Quantity::AngularAcceleration, self.ratio_angular_acceleration)?;
        if let Some(r) = self.ratio_length {
            c.set_ratio(Quantity::Length, r)?;
        }
        Ok(c)
    }

    pub fn servo(&self) -> Result<ServoConfig, PipelineError> {
        let limits = per_link("joint_limit_rad", &self.joint_limit_rad, self.n_links).map_err(PipelineError::Config)?;
        let mut s = ServoConfig::new(self.n_links);
        s.limits = limits.into_iter().map(JointLimit::symmetric).collect();
        s.max_speed = self.max_speed;
        Ok(s)
    }
}

/// Inputs and outputs of one extrapolation call on the positional sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTrace {
    pub k: usize,
    pub mid_window: Vec<usize>,
    pub v_prev: Vec<Vec2>,
    pub a_prev: Vec<Vec2>,
    pub v_in: Vec<Vec2>,
    pub a_in: Vec<Vec2>,
    pub v_out: Vec<Vec2>,
    pub a_out: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickResult {
    pub frame_index: u64,
    /// `None` when nothing moved (the command holds).
    pub estimate: Option<MotionEstimate>,
    pub chain: Option<ChainAngles>,
    pub command: JointCommand,
    pub executed: Vec<f64>,
    pub trace: Option<PredictionTrace>,
    pub row: LogRow,
    pub elapsed_ms: f64,
}

impl TickResult {
    pub fn predicted(&self) -> bool {
        self.estimate.as_ref().is_some_and(|e| e.predicted)
    }
}

/// A frame's point as last resolved, with the area it stood for.
#[derive(Debug, Clone, Copy)]
struct Resolved {
    point: TrackPoint,
    area: f64,
    predicted: bool,
}

/// Single-owner pipeline state.
pub struct Pipeline {
    config: PipelineConfig,
    calibration: Calibration,
    servo: ServoConfig,
    window: FrameWindow,
    simulator: Simulator,
    v_state: PredictionState<Vec2>,
    w_state: PredictionState<f64>,
    resolved: BTreeMap<u64, Resolved>,
    targets: Vec<f64>,
    primed: bool,
}

struct Motion {
    estimate: MotionEstimate,
    trace: Option<PredictionTrace>,
    targets: Option<Vec<f64>>,
    chain: Option<ChainAngles>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let calibration = config.calibration()?;
        let servo = config.servo()?;
        let simulator = Simulator::new(servo.clone(), config.fps)?;
        Ok(Self {
            window: FrameWindow::new(config.window, config.blur()?),
            targets: servo.initial.clone(),
            calibration,
            servo,
            simulator,
            config,
            v_state: PredictionState::new(),
            w_state: PredictionState::new(),
            resolved: BTreeMap::new(),
            primed: false,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Pushes `frame`. Returns `None` during warm-up, i.e. for the first
    /// `N + 1` frames, and one result per frame afterwards.
    pub fn run_tick(&mut self, frame: Frame) -> Result<Option<TickResult>, PipelineError> {
        let start = Instant::now();
        self.window.push_frame(frame)?;
        if !self.window.is_full() {
            return Ok(None);
        }
        let t = self.window.frame(0).index();
        let layers = match observe_layers(&self.window, self.config.threshold, self.config.cleanup) {
            Ok(l) => Some(l),
            Err(DonError::AllFramesEmpty) => None,
            Err(e) => return Err(e.into()),
        };
        if let (Some(dir), Some(l)) = (&self.config.debug_dir, &layers) {
            debug::dump_layers(dir, t, l)?;
        }
        if !self.primed {
            if let Some(l) = &layers {
                for o in &l.observations {
                    self.remember(o.frame_index, TrackPoint::from(o), o.area_px as f64, false);
                }
            }
            self.primed = true;
            return Ok(None);
        }
        let motion = match &layers {
            Some(l) => self.process(t, &l.observations)?,
            None => None,
        };
        self.prune(t);
        let (estimate, trace, chain) = match motion {
            Some(m) => {
                if let Some(targets) = m.targets {
                    self.targets = targets;
                }
                (Some(m.estimate), m.trace, m.chain)
            }
            None => (None, None, None),
        };
        let command = self.servo.command(t, &self.targets);
        let executed = self.simulator.step(&command)?;
        let omega_px = estimate.as_ref().and_then(|e| e.latest_omega()).unwrap_or(0.0);
        let alpha_px = estimate.as_ref().and_then(|e| e.latest_alpha()).unwrap_or(0.0);
        let alpha_phys = map_to_physical(alpha_px, &self.calibration, Quantity::AngularAcceleration)?;
        let tau = torque(&[alpha_phys], self.calibration.inertia[0])?[0];
        let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        let row = LogRow {
            tick: t,
            eta: estimate.as_ref().map_or(0.0, |e| e.eta),
            predicted: estimate.as_ref().is_some_and(|e| e.predicted),
            omega_px,
            omega_phys: map_to_physical(omega_px, &self.calibration, Quantity::AngularVelocity)?,
            alpha_phys,
            torque: tau,
            commanded: command.targets.clone(),
            executed: executed.clone(),
            elapsed_ms,
        };
        Ok(Some(TickResult {
            frame_index: t,
            estimate,
            chain,
            command,
            executed,
            trace,
            row,
            elapsed_ms,
        }))
    }

    fn remember(&mut self, frame: u64, point: TrackPoint, area: f64, predicted: bool) {
        self.resolved.insert(frame, Resolved { point, area, predicted });
    }

    fn prune(&mut self, t: u64) {
        let oldest = t.saturating_sub(self.config.window as u64);
        self.resolved = self.resolved.split_off(&oldest);
    }

    /// Point for the frame just before the first observation, taken from
    /// the previous tick and oriented like `first`.
    fn leading_point(&self, frame: u64, first: &ObjectObservation) -> TrackPoint {
        let Some(r) = self.resolved.get(&frame) else {
            return TrackPoint::invalid();
        };
        let mut p = r.point;
        if p.valid && !first.is_empty() {
            let pivot = first.pivot_point;
            if (p.location - pivot).norm() < (p.location - first.location).norm() {
                std::mem::swap(&mut p.location, &mut p.pivot);
            }
        }
        p
    }

    fn process(&mut self, t: u64, obs: &[ObjectObservation]) -> Result<Option<Motion>, PipelineError> {
        let n = self.config.window;
        let mut points = Vec::with_capacity(n + 1);
        let mut areas = Vec::with_capacity(n);
        points.push(self.leading_point(t - n as u64, &obs[0]));
        // A frame that was extrapolated and still shows nothing keeps its
        // extrapolated point and the area it was assumed to have, and so do
        // the extrapolated frames leading up to it.
        let mut carried = vec![false; n];
        for i in (0..n).rev() {
            let predicted = self.resolved.get(&obs[i].frame_index).is_some_and(|r| r.predicted);
            carried[i] = predicted && (obs[i].is_empty() || carried.get(i + 1).copied().unwrap_or(false));
        }
        for (o, &c) in obs.iter().zip(&carried) {
            match self.resolved.get(&o.frame_index) {
                Some(r) if c => {
                    points.push(r.point);
                    areas.push(r.area);
                }
                _ => {
                    points.push(TrackPoint::from(o));
                    areas.push(o.area_px as f64);
                }
            }
        }
        let track = RegionTrack::new(areas);
        let eta = trust_factor(&track);
        let (v, a) = match estimate_motion(&points) {
            Ok(x) => x,
            Err(EstimationError::InsufficientObservations { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let (omega, alpha, r_px) = angular_kinematics(&points)?;

        let mut estimate = MotionEstimate {
            velocity: v,
            acceleration: a,
            omega,
            alpha,
            r_px,
            eta,
            predicted: false,
        };
        let mut trace = None;
        let mut k = 0;
        if should_predict(eta, self.config.eta_threshold) && self.v_state.initialized {
            let (kk, mid_window) = match filter_reliable_with(&track, self.config.area_change_fraction) {
                Ok(r) => (r.k, r.mid_window),
                Err(PredictionError::AllRejected) => (n, Vec::new()),
                Err(e) => return Err(e.into()),
            };
            k = kk;
            let (v_out, a_out) = predict(&self.v_state, &estimate.velocity.values, &estimate.acceleration.values, k)?;
            let (w_out, al_out) = predict(&self.w_state, &estimate.omega.values, &estimate.alpha.values, k)?;
            trace = Some(PredictionTrace {
                k,
                mid_window,
                v_prev: self.v_state.v_prev.clone(),
                a_prev: self.v_state.a_prev.clone(),
                v_in: estimate.velocity.values.clone(),
                a_in: estimate.acceleration.values.clone(),
                v_out: v_out.clone(),
                a_out: a_out.clone(),
            });
            estimate.velocity = replace_tail(&estimate.velocity, v_out, k);
            estimate.acceleration = replace_tail(&estimate.acceleration, a_out, k);
            estimate.omega = replace_tail(&estimate.omega, w_out, k);
            estimate.alpha = replace_tail(&estimate.alpha, al_out, k);
            estimate.predicted = true;
        }
        commit(&mut self.v_state, &estimate.velocity.values, &estimate.acceleration.values);
        commit(&mut self.w_state, &estimate.omega.values, &estimate.alpha.values);

        // Rebuild the rejected tail from the last reliable point.
        let anchor = (0..=n - k).rev().find(|&i| points[i].valid);
        let extrapolated = k > 0 && anchor.is_some();
        if let Some(anchor) = anchor.filter(|_| k > 0) {
            let pivot = points[anchor].pivot;
            for i in anchor..n {
                points[i + 1] = TrackPoint {
                    location: points[i].location + estimate.velocity.values[i],
                    pivot,
                    skeleton_length_px: r_px,
                    valid: true,
                };
            }
        }
        for (i, o) in obs.iter().enumerate() {
            let predicted_now = extrapolated && i >= n - k;
            let area = if predicted_now { track.s[0] } else { track.s[i] };
            self.remember(o.frame_index, points[i + 1], area, predicted_now || carried[i]);
        }

        let newest = if extrapolated {
            Some(n)
        } else {
            (1..=n).rev().find(|&i| points[i].valid)
        };
        let (targets, chain) = if self.config.n_links == 1 {
            (newest.map(|i| vec![points[i].angle()]), None)
        } else {
            let usable = n - if extrapolated { k } else { 0 };
            let chain = obs[..usable]
                .iter()
                .rev()
                .find(|o| !o.is_empty() && o.path.len() >= 2)
                .map(|o| chain_angles(&segment_and_fit(&o.path, self.config.n_links).models, Vec2::new(1.0, 0.0)));
            let targets = chain.as_ref().map(|c| {
                let mut t = self.targets.clone();
                for (dst, &src) in t.iter_mut().zip(&c.joints) {
                    *dst = src;
                }
                t
            });
            (targets, chain)
        };
        Ok(Some(Motion {
            estimate,
            trace,
            targets,
            chain,
        }))
    }
}

/// `out` with the last `k` entries marked valid.
fn replace_tail<T: Copy>(orig: &Flagged<T>, out: Vec<T>, k: usize) -> Flagged<T> {
    let m = out.len();
    let valid = orig
        .valid
        .iter()
        .enumerate()
        .map(|(i, &ok)| ok || i + k >= m)
        .collect();
    Flagged { values: out, valid }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceOutput {
    pub ticks: Vec<TickResult>,
    pub log: TrajectoryLog,
}

/// Runs every frame through a fresh pipeline.
pub fn run_sequence(frames: Vec<Frame>, config: &PipelineConfig) -> Result<SequenceOutput, PipelineError> {
    let required = config.window + 1;
    if frames.len() < required {
        return Err(PipelineError::TooFewFrames {
            found: frames.len(),
            required,
        });
    }
    let mut p = Pipeline::new(config.clone())?;
    let mut log = TrajectoryLog::new(config.n_links);
    let mut ticks = Vec::with_capacity(frames.len() - required);
    for f in frames {
        if let Some(r) = p.run_tick(f)? {
            log.push(r.row.clone());
            ticks.push(r);
        }
    }
    Ok(SequenceOutput { ticks, log })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub width: u32,
    pub height: u32,
    pub ticks: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
}

/// A one-link scene scaled to `width x height`, turning at `omega`
/// rad/frame.
pub fn bench_scene(width: u32, height: u32, frames: usize, omega: f64) -> SyntheticSpec {
    let s = height.min(width) as f64 / 240.0;
    let mut spec = SyntheticSpec::single_link(
        width,
        height,
        frames,
        Vec2::new(0.3 * width as f64, 0.7 * height as f64),
        LinkSpec {
            length_px: 100.0 * s,
            thickness_px: 8.0 * s,
            intensity: SyntheticSpec::default_intensity(0),
            program: AngleProgram::constant_velocity(0.0, omega),
        },
    );
    spec.noise_amplitude = 5;
    spec.seed = 7;
    spec
}

/// Mean, median and 95th percentile tick time of `ticks` timed ticks at
/// each `(width, height)`.
pub fn benchmark(
    config: &PipelineConfig,
    resolutions: &[(u32, u32)],
    ticks: usize,
    omega: f64,
) -> Result<Vec<BenchRow>, PipelineError> {
    let mut rows = Vec::with_capacity(resolutions.len());
    for &(w, h) in resolutions {
        let (frames, _) = render_synthetic(&bench_scene(w, h, config.window + 1 + ticks, omega))?;
        let out = run_sequence(frames, config)?;
        let mut ms: Vec<f64> = out.ticks.iter().map(|t| t.elapsed_ms).collect();
        ms.sort_by(f64::total_cmp);
        let m = ms.len().max(1);
        rows.push(BenchRow {
            width: w,
            height: h,
            ticks: ms.len(),
            mean_ms: ms.iter().sum::<f64>() / m as f64,
            median_ms: crate::estimation::median(ms.clone()),
            p95_ms: ms.get(((ms.len() as f64 * 0.95).ceil() as usize).saturating_sub(1)).copied().unwrap_or(0.0),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::rotating_link;
    use crate::video_io::{Occlusion, OcclusionRect};

    fn small() -> PipelineConfig {
        PipelineConfig::default()
    }

    #[test]
    fn config_defaults_and_parse() {
        let c = PipelineConfig::parse("# comment\nwindow = 8\nblur_kernel = 9\nn_links = 3\njoint_limit_rad = 1.0\n").unwrap();
        assert_eq!(c.window, 8);
        assert_eq!(c.blur_kernel, 9);
        assert_eq!(c.servo().unwrap().limits.len(), 3);
        c.validate().unwrap();
        let d = PipelineConfig::default();
        assert_eq!((d.window, d.blur_kernel, d.threshold, d.n_links), (10, 15, 25, 1));
    }

    #[test]
    fn config_errors_carry_lines() {
        let e = PipelineConfig::parse("window = 10\nfoo = 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = PipelineConfig::parse("\n\nwindow = x\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(PipelineConfig::parse("[a]\nwindow = 3\n").is_err());
    }

    #[test]
    fn config_validation() {
        for (k, v) in [
            ("window", "2"),
            ("blur_kernel", "14"),
            ("eta_threshold", "1.0"),
            ("area_change_fraction", "0"),
            ("n_links", "0"),
            ("fps", "0"),
            ("max_speed", "-1"),
            ("inertia", "0"),
            ("threshold", "255"),
        ] {
            let mut c = PipelineConfig::default();
            c.set(k, v).unwrap();
            assert!(c.validate().is_err(), "{k} = {v} accepted");
        }
        let mut c = PipelineConfig::default();
        c.set("n_links", "2").unwrap();
        c.set("inertia", "1e-5, 2e-5, 3e-5").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn warm_up_counts() {
        let cfg = small();
        let (frames, _) = render_synthetic(&rotating_link(160, 120, 11, 60.0, 0.0, 0.03)).unwrap();
        assert_eq!(run_sequence(frames, &cfg).unwrap().ticks.len(), 0);
        let (frames, _) = render_synthetic(&rotating_link(160, 120, 16, 60.0, 0.0, 0.03)).unwrap();
        let out = run_sequence(frames, &cfg).unwrap();
        assert_eq!(out.ticks.len(), 5);
        assert_eq!(out.ticks[0].frame_index, 11);
        assert!(out.ticks.windows(2).all(|w| w[1].frame_index == w[0].frame_index + 1));
        let (frames, _) = render_synthetic(&rotating_link(160, 120, 10, 60.0, 0.0, 0.03)).unwrap();
        assert!(matches!(
            run_sequence(frames, &cfg),
            Err(PipelineError::TooFewFrames { found: 10, required: 11 })
        ));
    }

    #[test]
    fn static_scene_holds_command() {
        let (frames, _) = render_synthetic(&rotating_link(160, 120, 15, 60.0, 0.3, 0.0)).unwrap();
        let out = run_sequence(frames, &small()).unwrap();
        assert_eq!(out.ticks.len(), 4);
        for t in &out.ticks {
            assert!(t.estimate.is_none());
            assert_eq!(t.command.targets, vec![0.0]);
        }
    }

    #[test]
    fn unoccluded_rotation_is_trusted() {
        let (frames, truth) = render_synthetic(&rotating_link(320, 240, 40, 100.0, -0.3, 0.02)).unwrap();
        let out = run_sequence(frames, &small()).unwrap();
        let trusted = out.ticks.iter().filter(|t| t.estimate.as_ref().unwrap().eta > 0.9).count();
        assert!(trusted * 10 >= out.ticks.len() * 9, "{trusted}/{}", out.ticks.len());
        assert!(out.ticks.iter().all(|t| !t.predicted()));
        for t in &out.ticks {
            let k = t.frame_index as usize;
            let want = 0.5 * (truth.link(k, 0).angle_rad + truth.link(k - 1, 0).angle_rad);
            assert!((t.command.targets[0] - want).abs() < 0.1, "tick {k}: {} vs {want}", t.command.targets[0]);
        }
    }

    #[test]
    fn one_command_per_frame_and_deterministic() {
        let (frames, _) = render_synthetic(&rotating_link(160, 120, 30, 60.0, 0.0, 0.03)).unwrap();
        let a = run_sequence(frames.clone(), &small()).unwrap();
        let b = run_sequence(frames, &small()).unwrap();
        assert_eq!(a.ticks.len(), 19);
        let strip = |o: &SequenceOutput| {
            o.ticks
                .iter()
                .map(|t| (t.command.clone(), t.executed.clone(), t.row.eta, t.row.omega_px))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    /// Extrapolation over explicit 1-based indices.
    fn extrapolation_oracle(v_prev: &[Vec2], a_prev: &[Vec2], v: &[Vec2], a: &[Vec2], k: usize) -> Vec<Vec2> {
        let n = v.len();
        let mut vs: Vec<Vec2> = v_prev.to_vec();
        vs.extend_from_slice(&v[..n - k]);
        let mut acc: Vec<Vec2> = a_prev.to_vec();
        acc.extend_from_slice(&a[..a.len() - k.min(a.len())]);
        while vs.len() < 2 * n || acc.len() < 2 * (n - 1) {
            let j = acc.len();
            let last = acc[j - 1];
            let jerk = last - acc[j - 2];
            if vs.len() < 2 * n {
                let i = vs.len();
                vs.push(vs[i - 1] + last);
            }
            if acc.len() < 2 * (n - 1) {
                acc.push(last + jerk);
            }
        }
        vs[n..].to_vec()
    }

    #[test]
    fn partial_occlusion_predicts_by_extrapolation() {
        let mut spec = rotating_link(320, 240, 45, 100.0, 0.0, 0.02);
        let tip = spec.joint_positions(30)[1];
        spec.occlusions.push(Occlusion {
            rect: OcclusionRect {
                x: (tip.x - 30.0) as u32,
                y: (tip.y - 30.0) as u32,
                width: 60,
                height: 60,
            },
            first_frame: 28,
            last_frame: 33,
            fill: 20,
        });
        let (frames, _) = render_synthetic(&spec).unwrap();
        let out = run_sequence(frames, &small()).unwrap();
        let predicted: Vec<_> = out.ticks.iter().filter(|t| t.predicted()).collect();
        assert!(!predicted.is_empty());
        for t in predicted {
            let tr = t.trace.as_ref().unwrap();
            let want = extrapolation_oracle(&tr.v_prev, &tr.a_prev, &tr.v_in, &tr.a_in, tr.k);
            assert_eq!(tr.v_out, want);
            assert_eq!(t.estimate.as_ref().unwrap().velocity.values, want);
        }
    }
}
