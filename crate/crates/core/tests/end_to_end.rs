use imimic_core::actuation::{calibrate, error_summary, map_to_physical, Calibration, Quantity};
use imimic_core::geometry::Vec2;
use imimic_core::pipeline::{benchmark, run_sequence, Pipeline, PipelineConfig};
use imimic_core::video_io::{render_synthetic, AngleProgram, LinkSpec, SyntheticSpec};

fn spinning(width: u32, height: u32, frames: usize, length: f64, start: f64, omega: f64) -> SyntheticSpec {
    let mut spec = SyntheticSpec::single_link(
        width,
        height,
        frames,
        Vec2::new(width as f64 / 2.0, height as f64 / 2.0),
        LinkSpec {
            length_px: length,
            thickness_px: 8.0,
            intensity: SyntheticSpec::default_intensity(0),
            program: AngleProgram::constant_velocity(start, omega),
        },
    );
    spec.noise_amplitude = 5;
    spec
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn mean_omega_px(spec: &SyntheticSpec) -> f64 {
    let (frames, _) = render_synthetic(spec).unwrap();
    let out = run_sequence(frames, &PipelineConfig::default()).unwrap();
    let w: Vec<f64> = out.ticks.iter().map(|t| t.row.omega_px).collect();
    mean(&w)
}

#[test]
fn tick_latency_does_not_grow_with_sequence_length() {
    let mut spec = spinning(96, 96, 1040, 36.0, 0.0, 0.02);
    spec.noise_amplitude = 0;
    let (frames, _) = render_synthetic(&spec).unwrap();
    let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
    let mut ms = Vec::new();
    for f in frames {
        if let Some(t) = p.run_tick(f).unwrap() {
            ms.push(t.elapsed_ms);
        }
    }
    let median = |s: &[f64]| {
        let mut v = s.to_vec();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let early = median(&ms[10..60]);
    let late = median(&ms[ms.len() - 50..]);
    assert!(late <= 3.0 * early.max(0.05), "early {early:.3} ms, late {late:.3} ms");
}

#[test]
fn calibration_transfers_between_sequences() {
    let fps = 30.0;
    let (w_a, w_b) = (0.02, 0.035);
    let a = spinning(320, 240, 60, 100.0, -1.0, w_a);
    let b = spinning(320, 240, 60, 100.0, -1.0, w_b);
    let ratio = calibrate(w_a * fps, mean_omega_px(&a), Quantity::AngularVelocity, fps).unwrap();
    let mut cal = Calibration::unit_angular(fps, 1);
    cal.set_ratio(Quantity::AngularVelocity, ratio).unwrap();
    let got = map_to_physical(mean_omega_px(&b), &cal, Quantity::AngularVelocity).unwrap();
    let want = w_b * fps;
    assert!((got - want).abs() < 0.1 * want, "{got} vs {want}");
}

#[test]
fn constant_rate_replay_is_tracked() {
    let spec = spinning(320, 240, 70, 100.0, -0.9, 0.02);
    let (frames, truth) = render_synthetic(&spec).unwrap();
    let out = run_sequence(frames, &PipelineConfig::default()).unwrap();
    assert_eq!(out.ticks.len(), 70 - 11);
    for t in &out.ticks {
        let a = truth.link(t.frame_index as usize, 0).angle_rad;
        assert!(a.abs() < std::f64::consts::FRAC_PI_3);
    }
    let (cmd, exec) = out.log.series(0);
    let s = error_summary(&cmd, &exec);
    assert!(s.mean_abs_error < 0.05, "{s:?}");
    assert!(s.lag_frames <= 10, "{s:?}");
    let off: Vec<f64> = out
        .ticks
        .iter()
        .map(|t| (t.command.targets[0] - truth.link(t.frame_index as usize, 0).angle_rad).abs())
        .collect();
    assert!(mean(&off) < 0.05, "{}", mean(&off));
}

#[test]
fn benchmark_reports_each_resolution() {
    let rows = benchmark(&PipelineConfig::default(), &[(160, 120), (320, 240)], 5, 0.02).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.ticks == 5 && r.mean_ms > 0.0 && r.p95_ms >= r.median_ms));
    assert_eq!((rows[1].width, rows[1].height), (320, 240));
}
