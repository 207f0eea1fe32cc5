use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use imimic_core::actuation::{error_summary, JointCommand, Simulator};
use imimic_core::pipeline::{benchmark, run_sequence, PipelineConfig, PipelineError};
use imimic_core::video_io::{read_frame_sequence, render_synthetic, write_synthetic, FrameSource, SyntheticSpec, VideoError};

const EXIT_IO: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_PIPELINE: u8 = 4;

const DEFAULT_RESOLUTIONS: &str = "320x240,640x480,960x720,1280x960";

#[derive(Parser)]
#[command(name = "imimic", version, about = "Mimic a moving arm seen on video with a simulated planar manipulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a frame sequence and write the trajectory log.
    Run(RunArgs),
    /// Render a synthetic scene to PGM frames plus ground_truth.csv.
    Synth(SynthArgs),
    /// Replay joint commands from a CSV through the servo simulator.
    Simulate(SimulateArgs),
    /// Time the pipeline on synthetic scenes at several resolutions.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration file.
    #[arg(long, env = "IMIMIC_CONFIG")]
    config: Option<PathBuf>,
    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Directory of PGM/PNG frames, or `-` for a raw Y8 stream on stdin.
    #[arg(long)]
    input: String,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Dump every intermediate mask as PGM into this directory.
    #[arg(long)]
    debug_dir: Option<PathBuf>,
    /// Number of links in the observed chain.
    #[arg(long)]
    links: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description file.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Noise seed; overrides the spec's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// CSV with a `tick` column and one target angle column per joint.
    #[arg(long)]
    commands: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated `WIDTHxHEIGHT` list.
    #[arg(long, default_value = DEFAULT_RESOLUTIONS)]
    resolutions: String,
    /// Timed ticks per resolution.
    #[arg(long, default_value_t = 30)]
    ticks: usize,
    /// Link rotation rate of the benchmark scene in rad/frame.
    #[arg(long, default_value_t = 0.02)]
    omega: f64,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: impl fmt::Display) -> Self {
        Self { code: EXIT_IO, message: message.to_string() }
    }

    fn config(message: impl fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: message.to_string() }
    }
}

impl From<VideoError> for Failure {
    fn from(e: VideoError) -> Self {
        match e {
            VideoError::InvalidSpec(_) | VideoError::LinkOutOfFrame { .. } => Failure::config(e),
            _ => Failure::io(e),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(_) => Failure::config(e),
            PipelineError::Video(v) => v.into(),
            PipelineError::TooFewFrames { .. } => Failure::io(e),
            _ => Failure { code: EXIT_PIPELINE, message: e.to_string() },
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn load_config(args: &ConfigArgs) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            PipelineConfig::parse(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    for item in &args.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("--set expects KEY=VALUE, got `{item}`")))?;
        cfg.set(key.trim(), value).map_err(|m| Failure::config(format!("--set: {m}")))?;
    }
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(n) = args.links {
        cfg.n_links = n;
    }
    if args.debug_dir.is_some() {
        cfg.debug_dir = args.debug_dir;
    }
    cfg.validate()?;
    if let Some(dir) = &cfg.debug_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    }
    let min_frames = cfg.window + 1;
    let frames = if args.input == "-" {
        let mut stdin = io::stdin().lock();
        read_frame_sequence(FrameSource::RawStream(&mut stdin), cfg.fps, min_frames)?
    } else {
        let dir = Path::new(&args.input);
        if !dir.is_dir() {
            return Err(Failure::io(format!("{}: no such input directory", dir.display())));
        }
        read_frame_sequence(FrameSource::Directory(dir), cfg.fps, min_frames)?
    };
    let out = run_sequence(frames, &cfg)?;
    write_file(&args.out, out.log.to_csv().as_bytes())?;
    eprintln!("{} ticks written to {}", out.log.rows.len(), args.out.display());
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.spec).map_err(|e| Failure::io(format!("{}: {e}", args.spec.display())))?;
    let mut spec = SyntheticSpec::parse(&text).map_err(|e| Failure::config(format!("{}: {e}", args.spec.display())))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let (frames, truth) = render_synthetic(&spec)?;
    write_synthetic(&args.out, &frames, &truth)?;
    eprintln!("{} frames written to {}", frames.len(), args.out.display());
    Ok(())
}

/// Target columns of a command CSV: `joint<i>_angle_rad` when present,
/// else `cmd_angle_rad`, else every column but `tick`.
fn command_columns(header: &[&str]) -> Result<(usize, Vec<usize>), String> {
    let tick = header
        .iter()
        .position(|h| *h == "tick")
        .ok_or("missing `tick` column")?;
    let joints: Vec<usize> = (0..)
        .map_while(|i| header.iter().position(|h| *h == format!("joint{i}_angle_rad")))
        .collect();
    let cols = if !joints.is_empty() {
        joints
    } else if let Some(c) = header.iter().position(|h| *h == "cmd_angle_rad") {
        vec![c]
    } else {
        (0..header.len()).filter(|&c| c != tick).collect()
    };
    if cols.is_empty() {
        return Err("no target columns".into());
    }
    Ok((tick, cols))
}

fn parse_commands(text: &str) -> Result<Vec<JointCommand>, String> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or("line 1: empty file")?;
    let header: Vec<&str> = header.split(',').map(str::trim).collect();
    let (tick_col, cols) = command_columns(&header).map_err(|m| format!("line 1: {m}"))?;
    let mut out = Vec::new();
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let cell = |c: usize| cells.get(c).copied().unwrap_or("");
        let bad = |c: usize| format!("line {}: bad value `{}` in column `{}`", i + 1, cell(c), header[c]);
        let tick = cell(tick_col).parse::<u64>().map_err(|_| bad(tick_col))?;
        let targets = cols
            .iter()
            .map(|&c| cell(c).parse::<f64>().map_err(|_| bad(c)))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(JointCommand { tick, targets });
    }
    Ok(out)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.config)?;
    let text = fs::read_to_string(&args.commands).map_err(|e| Failure::io(format!("{}: {e}", args.commands.display())))?;
    let commands = parse_commands(&text).map_err(|m| Failure::config(format!("{}: {m}", args.commands.display())))?;
    let n = commands.first().map_or(1, |c| c.targets.len());
    cfg.n_links = n;
    cfg.validate()?;
    let servo = cfg.servo()?;
    let mut sim = Simulator::new(servo.clone(), cfg.fps).map_err(PipelineError::from)?;
    let mut csv = String::from("tick");
    for i in 0..n {
        csv.push_str(&format!(",cmd{i}_rad,exec{i}_rad,error{i}_rad"));
    }
    csv.push('\n');
    let (mut cmd0, mut exec0) = (Vec::new(), Vec::new());
    for c in &commands {
        let clamped = servo.command(c.tick, &c.targets);
        let exec = sim.step(&clamped).map_err(PipelineError::from)?;
        csv.push_str(&c.tick.to_string());
        for (t, e) in clamped.targets.iter().zip(&exec) {
            csv.push_str(&format!(",{t},{e},{}", t - e));
        }
        csv.push('\n');
        cmd0.push(clamped.targets[0]);
        exec0.push(exec[0]);
    }
    write_file(&args.out, csv.as_bytes())?;
    let s = error_summary(&cmd0, &exec0);
    println!(
        "joint 0: mean |error| {:.6} rad, max {:.6} rad, lag {} frames",
        s.mean_abs_error, s.max_error, s.lag_frames
    );
    Ok(())
}

fn parse_resolutions(list: &str) -> Result<Vec<(u32, u32)>, Failure> {
    let items: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Failure::config("--resolutions needs at least one WIDTHxHEIGHT"));
    }
    items
        .iter()
        .map(|item| {
            let parsed = item
                .split_once(['x', 'X'])
                .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)));
            parsed.ok_or_else(|| Failure::config(format!("bad resolution `{item}`, expected WIDTHxHEIGHT")))
        })
        .collect()
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    cfg.validate()?;
    let resolutions = parse_resolutions(&args.resolutions)?;
    if args.ticks == 0 {
        return Err(Failure::config("--ticks must be positive"));
    }
    let rows = benchmark(&cfg, &resolutions, args.ticks, args.omega)?;
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{:>11}  {:>5}  {:>9}  {:>9}  {:>9}", "resolution", "ticks", "mean_ms", "median_ms", "p95_ms");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>11}  {:>5}  {:>9.3}  {:>9.3}  {:>9.3}",
            format!("{}x{}", r.width, r.height),
            r.ticks,
            r.mean_ms,
            r.median_ms,
            r.p95_ms
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("imimic: {}", f.message.replace('\n', " "));
            ExitCode::from(f.code)
        }
    }
}
