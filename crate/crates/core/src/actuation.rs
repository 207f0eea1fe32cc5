//! Pixel-to-physical calibration, position commands and a rate-limited
//! joint servo simulator with trajectory logging.

use std::fmt::Write as _;

/// Default servo speed cap (rad/s).
pub const DEFAULT_MAX_SPEED: f64 = 4.0;
/// Default travel limit: ±60°, 120° in total.
pub const DEFAULT_JOINT_LIMIT: f64 = std::f64::consts::FRAC_PI_3;
/// Default link mass (kg) and length (m) for the rod inertia `m L² / 3`.
pub const DEFAULT_LINK_MASS: f64 = 0.01;
pub const DEFAULT_LINK_LENGTH_M: f64 = 0.105;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActuationError {
    #[error("{what} must be positive, got {value}")]
    NonPositiveInput { what: &'static str, value: f64 },
    #[error("no calibration for {0:?}")]
    UncalibratedQuantity(Quantity),
    #[error("invalid joint limits: {0}")]
    JointLimitConfig(String),
    #[error("command tick {found} does not follow tick {previous}")]
    NonIncreasingTick { previous: u64, found: u64 },
    #[error("command has {found} targets, simulator drives {expected} joints")]
    JointCountMismatch { expected: usize, found: usize },
}

/// Calibrated quantity. Angles themselves need no mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Length,
    AngularVelocity,
    AngularAcceleration,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::Length, Quantity::AngularVelocity, Quantity::AngularAcceleration];

    /// Power of the frame rate that turns a per-frame value into a per-second one.
    pub fn rate_order(self) -> i32 {
        match self {
            Quantity::Length => 0,
            Quantity::AngularVelocity => 1,
            Quantity::AngularAcceleration => 2,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// `measured / known` per quantity, after the per-second conversion.
    ratios: [Option<f64>; 3],
    pub fps: f64,
    /// Moment of inertia per link (kg·m²).
    pub inertia: Vec<f64>,
    pub link_lengths_m: Vec<f64>,
}

impl Calibration {
    /// No ratios; one default rod per link.
    pub fn new(fps: f64, n_links: usize) -> Self {
        let inertia = DEFAULT_LINK_MASS * DEFAULT_LINK_LENGTH_M * DEFAULT_LINK_LENGTH_M / 3.0;
        Self {
            ratios: [None; 3],
            fps,
            inertia: vec![inertia; n_links],
            link_lengths_m: vec![DEFAULT_LINK_LENGTH_M; n_links],
        }
    }

    /// Angular quantities mapped with ratio 1, i.e. only rad/frame to rad/s.
    pub fn unit_angular(fps: f64, n_links: usize) -> Self {
        let mut c = Self::new(fps, n_links);
        c.ratios[Quantity::AngularVelocity.slot()] = Some(1.0);
        c.ratios[Quantity::AngularAcceleration.slot()] = Some(1.0);
        c
    }

    pub fn ratio(&self, q: Quantity) -> Option<f64> {
        self.ratios[q.slot()]
    }

    pub fn set_ratio(&mut self, q: Quantity, ratio: f64) -> Result<(), ActuationError> {
        positive("aspect ratio", ratio)?;
        self.ratios[q.slot()] = Some(ratio);
        Ok(())
    }

    /// Stores `measured / known` for `q`. `measured_px` is per frame and
    /// `known_physical` per second where `q` is a rate.
    pub fn calibrate(&mut self, q: Quantity, known_physical: f64, measured_px: f64) -> Result<f64, ActuationError> {
        let ratio = calibrate(known_physical, measured_px, q, self.fps)?;
        self.ratios[q.slot()] = Some(ratio);
        Ok(ratio)
    }

    pub fn validate(&self) -> Result<(), ActuationError> {
        positive("fps", self.fps)?;
        for &r in self.ratios.iter().flatten() {
            positive("aspect ratio", r)?;
        }
        for &i in &self.inertia {
            positive("inertia", i)?;
        }
        for &l in &self.link_lengths_m {
            positive("link length", l)?;
        }
        Ok(())
    }
}

fn positive(what: &'static str, value: f64) -> Result<(), ActuationError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ActuationError::NonPositiveInput { what, value })
    }
}

/// Aspect ratio `measured / known` with `measured` converted to per-second.
pub fn calibrate(known_physical: f64, measured_px: f64, q: Quantity, fps: f64) -> Result<f64, ActuationError> {
    positive("known value", known_physical)?;
    positive("measured value", measured_px)?;
    positive("fps", fps)?;
    Ok(measured_px * fps.powi(q.rate_order()) / known_physical)
}

pub fn map_to_physical(value_px: f64, calibration: &Calibration, q: Quantity) -> Result<f64, ActuationError> {
    let ratio = calibration.ratio(q).ok_or(ActuationError::UncalibratedQuantity(q))?;
    Ok(value_px * calibration.fps.powi(q.rate_order()) / ratio)
}

/// Position targets for one tick, already clamped to the joint limits.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCommand {
    pub tick: u64,
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimit {
    pub min: f64,
    pub max: f64,
}

impl JointLimit {
    pub fn symmetric(half_range: f64) -> Self {
        Self {
            min: -half_range,
            max: half_range,
        }
    }
}

impl Default for JointLimit {
    fn default() -> Self {
        Self::symmetric(DEFAULT_JOINT_LIMIT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServoConfig {
    pub limits: Vec<JointLimit>,
    /// rad/s, applied per joint.
    pub max_speed: f64,
    pub initial: Vec<f64>,
}

impl ServoConfig {
    pub fn new(n_joints: usize) -> Self {
        Self {
            limits: vec![JointLimit::default(); n_joints],
            max_speed: DEFAULT_MAX_SPEED,
            initial: vec![0.0; n_joints],
        }
    }

    pub fn validate(&self) -> Result<(), ActuationError> {
        let bad = |m: String| Err(ActuationError::JointLimitConfig(m));
        if self.limits.is_empty() {
            return bad("no joints".into());
        }
        if self.initial.len() != self.limits.len() {
            return bad(format!("{} initial angles for {} joints", self.initial.len(), self.limits.len()));
        }
        if !(self.max_speed > 0.0 && self.max_speed.is_finite()) {
            return bad(format!("max speed {}", self.max_speed));
        }
        for (i, (l, &q)) in self.limits.iter().zip(&self.initial).enumerate() {
            if !(l.min.is_finite() && l.max.is_finite() && l.min < l.max) {
                return bad(format!("joint {i}: [{}, {}]", l.min, l.max));
            }
            if !(l.min..=l.max).contains(&q) {
                return bad(format!("joint {i}: initial angle {q} outside [{}, {}]", l.min, l.max));
            }
        }
        Ok(())
    }

    /// Command for `tick` with each target clamped into its joint's range.
    pub fn command(&self, tick: u64, targets: &[f64]) -> JointCommand {
        JointCommand {
            tick,
            targets: targets
                .iter()
                .zip(&self.limits)
                .map(|(&t, l)| t.clamp(l.min, l.max))
                .collect(),
        }
    }
}

/// First-order position servo: each tick every joint moves straight toward
/// its target by at most `max_speed * dt`.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: ServoConfig,
    fps: f64,
    pose: Vec<f64>,
    last_tick: Option<u64>,
}

impl Simulator {
    pub fn new(config: ServoConfig, fps: f64) -> Result<Self, ActuationError> {
        config.validate()?;
        positive("fps", fps)?;
        let pose = config.initial.clone();
        Ok(Self {
            config,
            fps,
            pose,
            last_tick: None,
        })
    }

    pub fn config(&self) -> &ServoConfig {
        &self.config
    }

    pub fn pose(&self) -> &[f64] {
        &self.pose
    }

    /// Largest per-joint move over `frames` frames.
    pub fn max_step(&self, frames: u64) -> f64 {
        self.config.max_speed * frames as f64 / self.fps
    }

    /// Advances to `cmd.tick` and returns the executed angles. The first
    /// command gets one frame of travel.
    pub fn step(&mut self, cmd: &JointCommand) -> Result<Vec<f64>, ActuationError> {
        if cmd.targets.len() != self.pose.len() {
            return Err(ActuationError::JointCountMismatch {
                expected: self.pose.len(),
                found: cmd.targets.len(),
            });
        }
        let frames = match self.last_tick {
            Some(prev) if cmd.tick <= prev => {
                return Err(ActuationError::NonIncreasingTick {
                    previous: prev,
                    found: cmd.tick,
                })
            }
            Some(prev) => cmd.tick - prev,
            None => 1,
        };
        let cap = self.max_step(frames);
        for ((q, &target), l) in self.pose.iter_mut().zip(&cmd.targets).zip(&self.config.limits) {
            let target = target.clamp(l.min, l.max);
            let next = if (target - *q).abs() <= cap {
                target
            } else {
                *q + cap.copysign(target - *q)
            };
            assert!((next - *q).abs() <= cap * (1.0 + 1e-12), "rate cap exceeded");
            assert!((l.min..=l.max).contains(&next), "joint limit exceeded");
            *q = next;
        }
        self.last_tick = Some(cmd.tick);
        Ok(self.pose.clone())
    }
}

/// One logged tick.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub tick: u64,
    pub eta: f64,
    pub predicted: bool,
    pub omega_px: f64,
    pub omega_phys: f64,
    pub alpha_phys: f64,
    pub torque: f64,
    pub commanded: Vec<f64>,
    pub executed: Vec<f64>,
    pub elapsed_ms: f64,
}

impl LogRow {
    /// `commanded - executed` per joint.
    pub fn error(&self) -> Vec<f64> {
        self.commanded.iter().zip(&self.executed).map(|(c, e)| c - e).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog {
    /// Joint columns are written when the chain has more than one link.
    pub n_joints: usize,
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    pub fn new(n_joints: usize) -> Self {
        Self {
            n_joints,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: LogRow) {
        self.rows.push(row);
    }

    pub fn header(&self) -> String {
        let mut h = String::from("tick,eta,predicted,omega_px,omega_phys,alpha_phys,torque,cmd_angle_rad");
        if self.n_joints > 1 {
            for i in 0..self.n_joints {
                write!(h, ",joint{i}_angle_rad").unwrap();
            }
        }
        h.push_str(",exec_angle_rad,error_rad,elapsed_ms");
        h
    }

    /// CSV text. `cmd`, `exec` and `error` refer to joint 0; the joint
    /// columns hold every commanded joint angle.
    pub fn to_csv(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.rows {
            let cmd0 = r.commanded.first().copied().unwrap_or(0.0);
            let exec0 = r.executed.first().copied().unwrap_or(0.0);
            write!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.tick,
                r.eta,
                u8::from(r.predicted),
                r.omega_px,
                r.omega_phys,
                r.alpha_phys,
                r.torque,
                cmd0
            )
            .unwrap();
            if self.n_joints > 1 {
                for i in 0..self.n_joints {
                    write!(out, ",{}", r.commanded.get(i).copied().unwrap_or(0.0)).unwrap();
                }
            }
            writeln!(out, ",{},{},{:.3}", exec0, cmd0 - exec0, r.elapsed_ms).unwrap();
        }
        out
    }

    /// Joint-`j` commanded and executed series.
    pub fn series(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        self.rows.iter().map(|r| (r.commanded[j], r.executed[j])).unzip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub mean_abs_error: f64,
    pub max_error: f64,
    pub lag_frames: usize,
}

/// Error statistics of joint 0. The lag is the shift `d` in `0..=n/2` that
/// best aligns `executed[t]` with `commanded[t - d]` in mean squared
/// difference; ties go to the smaller shift.
pub fn tracking_error(log: &TrajectoryLog) -> Option<ErrorSummary> {
    if log.rows.is_empty() {
        return None;
    }
    let (cmd, exec) = log.series(0);
    Some(error_summary(&cmd, &exec))
}

pub fn error_summary(commanded: &[f64], executed: &[f64]) -> ErrorSummary {
    let n = commanded.len().min(executed.len());
    let errs: Vec<f64> = (0..n).map(|t| (commanded[t] - executed[t]).abs()).collect();
    let mean_abs_error = errs.iter().sum::<f64>() / n.max(1) as f64;
    let max_error = errs.iter().copied().fold(0.0, f64::max);
    ErrorSummary {
        mean_abs_error,
        max_error,
        lag_frames: best_lag(&commanded[..n], &executed[..n]),
    }
}

fn best_lag(cmd: &[f64], exec: &[f64]) -> usize {
    let n = cmd.len();
    let mut best = (f64::INFINITY, 0);
    for d in 0..=n / 2 {
        let m = n - d;
        if m == 0 {
            break;
        }
        let mse = (d..n).map(|t| (exec[t] - cmd[t - d]).powi(2)).sum::<f64>() / m as f64;
        if mse < best.0 - 1e-15 {
            best = (mse, d);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(sim: &mut Simulator, cmds: &[JointCommand]) -> Vec<f64> {
        cmds.iter().map(|c| sim.step(c).unwrap()[0]).collect()
    }

    #[test]
    fn calibration_examples() {
        let r = calibrate(15.0, 0.5, Quantity::AngularVelocity, 30.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let mut c = Calibration::new(30.0, 1);
        c.set_ratio(Quantity::Length, 2.0).unwrap();
        assert_eq!(map_to_physical(100.0, &c, Quantity::Length).unwrap(), 50.0);
        let c = Calibration::unit_angular(30.0, 1);
        assert!((map_to_physical(0.02, &c, Quantity::AngularVelocity).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(
            map_to_physical(1.0, &c, Quantity::Length),
            Err(ActuationError::UncalibratedQuantity(Quantity::Length))
        );
    }

    #[test]
    fn doubled_measurement_halves_mapping() {
        let mut c = Calibration::new(30.0, 1);
        let r = c.calibrate(Quantity::AngularVelocity, 3.0, 0.2).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert!((map_to_physical(0.1, &c, Quantity::AngularVelocity).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn non_positive_calibration_inputs() {
        assert!(calibrate(0.0, 1.0, Quantity::Length, 30.0).is_err());
        assert!(calibrate(1.0, -1.0, Quantity::Length, 30.0).is_err());
        let mut c = Calibration::new(30.0, 1);
        c.inertia[0] = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn torque_chain_matches_hand_computation() {
        let c = Calibration::unit_angular(30.0, 1);
        let alpha_px = 0.0005;
        let alpha = map_to_physical(alpha_px, &c, Quantity::AngularAcceleration).unwrap();
        assert!((alpha - 0.45).abs() < 1e-12);
        let i = 0.01 * 0.105 * 0.105 / 3.0;
        let t = crate::estimation::torque(&[alpha], c.inertia[0]).unwrap()[0];
        assert!((t - i * 0.45).abs() < 1e-18);
    }

    #[test]
    fn feasible_commands_track_exactly() {
        let cfg = ServoConfig::new(1);
        let mut sim = Simulator::new(cfg.clone(), 30.0).unwrap();
        let cmds: Vec<_> = (0..60).map(|t| cfg.command(t, &[0.1 * (t as f64 * 0.1).sin()])).collect();
        let exec = run(&mut sim, &cmds);
        for (c, e) in cmds.iter().zip(&exec) {
            assert_eq!(c.targets[0], *e);
        }
    }

    #[test]
    fn step_ramps_at_the_cap() {
        let cfg = ServoConfig::new(1);
        let mut sim = Simulator::new(cfg.clone(), 30.0).unwrap();
        let cmds: Vec<_> = (0..20).map(|t| cfg.command(t, &[1.0])).collect();
        let exec = run(&mut sim, &cmds);
        let cap = 4.0 / 30.0;
        assert!((exec[0] - cap).abs() < 1e-12);
        assert!((exec[3] - 4.0 * cap).abs() < 1e-12);
        let err: Vec<f64> = exec.iter().map(|e| 1.0 - e).collect();
        assert!(err.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*err.last().unwrap(), 0.0);
    }

    #[test]
    fn targets_clamped_to_travel_limit() {
        let cfg = ServoConfig::new(1);
        let cmd = cfg.command(0, &[3.0]);
        assert_eq!(cmd.targets[0], DEFAULT_JOINT_LIMIT);
        let mut sim = Simulator::new(cfg.clone(), 30.0).unwrap();
        for t in 0..100 {
            sim.step(&cfg.command(t, &[3.0])).unwrap();
        }
        assert_eq!(sim.pose()[0], DEFAULT_JOINT_LIMIT);
    }

    #[test]
    fn gaps_between_ticks_allow_longer_moves() {
        let cfg = ServoConfig::new(1);
        let mut sim = Simulator::new(cfg.clone(), 30.0).unwrap();
        sim.step(&cfg.command(0, &[0.0])).unwrap();
        let q = sim.step(&cfg.command(3, &[1.0])).unwrap()[0];
        assert!((q - 0.4).abs() < 1e-12);
    }

    #[test]
    fn malformed_limits_and_ticks() {
        let mut cfg = ServoConfig::new(1);
        cfg.limits[0] = JointLimit { min: 1.0, max: -1.0 };
        assert!(matches!(Simulator::new(cfg, 30.0), Err(ActuationError::JointLimitConfig(_))));
        let mut cfg = ServoConfig::new(2);
        cfg.initial = vec![0.0];
        assert!(cfg.validate().is_err());
        let cfg = ServoConfig::new(1);
        let mut sim = Simulator::new(cfg.clone(), 30.0).unwrap();
        sim.step(&cfg.command(5, &[0.0])).unwrap();
        assert!(matches!(
            sim.step(&cfg.command(5, &[0.0])),
            Err(ActuationError::NonIncreasingTick { .. })
        ));
        assert!(sim
            .step(&JointCommand {
                tick: 6,
                targets: vec![0.0, 0.0]
            })
            .is_err());
    }

    #[test]
    fn lag_examples() {
        let cmd: Vec<f64> = (0..40).map(|t| (t as f64 * 0.3).sin()).collect();
        assert_eq!(error_summary(&cmd, &cmd).lag_frames, 0);
        assert_eq!(error_summary(&cmd, &cmd).max_error, 0.0);
        let shifted: Vec<f64> = (0..40).map(|t| if t < 3 { 0.0 } else { cmd[t - 3] }).collect();
        assert_eq!(error_summary(&cmd, &shifted).lag_frames, 3);
    }

    #[test]
    fn csv_layout() {
        let mut log = TrajectoryLog::new(1);
        log.push(LogRow {
            tick: 11,
            eta: 1.0,
            predicted: false,
            omega_px: 0.02,
            omega_phys: 0.6,
            alpha_phys: 0.0,
            torque: 0.0,
            commanded: vec![0.5],
            executed: vec![0.25],
            elapsed_ms: 1.23456,
        });
        assert_eq!(
            log.to_csv(),
            "tick,eta,predicted,omega_px,omega_phys,alpha_phys,torque,cmd_angle_rad,exec_angle_rad,error_rad,elapsed_ms\n\
             11,1,0,0.02,0.6,0,0,0.5,0.25,0.25,1.235\n"
        );
        let log3 = TrajectoryLog::new(3);
        assert!(log3.header().contains(",cmd_angle_rad,joint0_angle_rad,joint1_angle_rad,joint2_angle_rad,exec"));
    }

    proptest! {
        #[test]
        fn round_trip(known in 1e-3f64..1e3, measured in 1e-3f64..1e3, qi in 0usize..3, fps in 1.0f64..240.0) {
            let q = Quantity::ALL[qi];
            let mut c = Calibration::new(fps, 1);
            c.calibrate(q, known, measured).unwrap();
            let back = map_to_physical(measured, &c, q).unwrap();
            prop_assert!(((back - known) / known).abs() < 1e-12);
        }

        #[test]
        fn never_exceeds_limits_or_cap(targets in proptest::collection::vec(-4.0f64..4.0, 1..80), fps in 5.0f64..120.0) {
            let cfg = ServoConfig::new(1);
            let mut sim = Simulator::new(cfg.clone(), fps).unwrap();
            let mut prev = 0.0;
            for (t, &x) in targets.iter().enumerate() {
                let q = sim.step(&cfg.command(t as u64, &[x])).unwrap()[0];
                prop_assert!(q.abs() <= DEFAULT_JOINT_LIMIT);
                prop_assert!((q - prev).abs() <= 4.0 / fps * (1.0 + 1e-12));
                prev = q;
            }
        }

        #[test]
        fn feasible_streams_have_zero_error(steps in proptest::collection::vec(-1.0f64..1.0, 1..80)) {
            let cfg = ServoConfig::new(1);
            let mut sim = Simulator::new(cfg.clone(), 30.0).unwrap();
            let cap = 4.0 / 30.0;
            let mut target: f64 = 0.0;
            for (t, s) in steps.iter().enumerate() {
                target = (target + s * cap).clamp(-DEFAULT_JOINT_LIMIT, DEFAULT_JOINT_LIMIT);
                let cmd = cfg.command(t as u64, &[target]);
                let q = sim.step(&cmd).unwrap()[0];
                prop_assert_eq!(q, cmd.targets[0]);
            }
        }
    }
}
