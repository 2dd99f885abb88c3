//! `evtm`: turbulence simulation, event synthesis and restoration from the
//! command line.

mod config;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evtm_core::epaw::EpawParams;
use evtm_core::ettube::{classify_events, edge_masked_motion, fit_event_tubes, project_to_motion_field, TubeParams};
use evtm_core::evsynth::{synthesize_events, EvsParams};
use evtm_core::fixture::{build_fixture, FixtureParams, Preset};
use evtm_core::io;
use evtm_core::metrics::MetricReport;
use evtm_core::paep::{count_paep, gradient_map, paep_gradient_correlation};
use evtm_core::restore::{restore_frame_detailed, RestoreParams};
use evtm_core::turbsim::{apply_turbulence, generate_tilt_field, TurbParams};
use evtm_core::{Error, EventStream, Frame, FrameSequence, TubeLabel};

use config::{Config, Resolver};

/// Failure with its process exit status.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    pub const USAGE: u8 = 1;
    pub const IO: u8 = 2;
    pub const VALIDATION: u8 = 3;

    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: Self::USAGE,
            msg: msg.into(),
        }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self {
            code: Self::IO,
            msg: msg.into(),
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Self {
            code: Self::VALIDATION,
            msg: msg.into(),
        }
    }

    /// Attributes a core error to `what` (a flag and its value, or a step).
    fn from_core(what: impl Display, e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::BadMagic | Error::Corrupt(_) | Error::Unsorted(_) => Self::IO,
            _ => Self::VALIDATION,
        };
        Self {
            code,
            msg: format!("{what}: {e}"),
        }
    }
}

trait Context<T> {
    fn ctx(self, what: impl Display) -> Result<T, CliError>;
}

impl<T> Context<T> for evtm_core::Result<T> {
    fn ctx(self, what: impl Display) -> Result<T, CliError> {
        self.map_err(|e| CliError::from_core(what, e))
    }
}

#[derive(Parser, Debug)]
#[command(name = "evtm", version, about = "Event-guided turbulence mitigation toolkit")]
struct Cli {
    /// key = value file; command-line flags take precedence over it
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core); never changes any output byte
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply simulated turbulence to a clean frame sequence
    Simulate(SimulateArgs),
    /// Write a standard synthetic fixture (clean, turbulent, events, ground truth)
    Fixture(FixtureArgs),
    /// Synthesize an event stream from a frame sequence
    Events(EventsArgs),
    /// Count polarity alternation event pairs and correlate them with edges
    Paep(PaepArgs),
    /// Fit event tubes and export the motion field
    Tube(TubeArgs),
    /// Restore one frame from turbulent frames and events
    Restore(RestoreArgs),
    /// Compare two PGM images
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Clean frame directory (manifest.txt + PGMs); a single frame is repeated
    #[arg(long, value_name = "DIR")]
    clean: Option<PathBuf>,
    /// Output directory for the turbulent frames and tilt.tf1
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// RMS tilt [px]
    #[arg(long)]
    sigma_tilt: Option<f64>,
    /// Spatial correlation length [px]
    #[arg(long)]
    corr_len: Option<f64>,
    /// Frame-to-frame AR(1) coefficient [0, 1)
    #[arg(long)]
    rho_t: Option<f64>,
    /// Per-frame blur std [px]
    #[arg(long)]
    blur: Option<f64>,
    /// Number of output frames [count]; default: as many as the input
    #[arg(long)]
    frames: Option<usize>,
    /// Random seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Scene preset: static, textured or bar
    #[arg(long)]
    preset: Option<Preset>,
    /// Random seed
    #[arg(long)]
    seed: Option<u64>,
    /// RMS tilt [px]
    #[arg(long)]
    sigma_tilt: Option<f64>,
    /// Number of frames [count]
    #[arg(long)]
    frames: Option<usize>,
    /// Frame interval [µs]
    #[arg(long)]
    dt_us: Option<u64>,
    /// Event contrast threshold [log intensity]; default depends on the preset
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct EventsArgs {
    /// Frame directory (manifest.txt + PGMs)
    #[arg(long, value_name = "DIR")]
    frames: Option<PathBuf>,
    /// Output EVB1 file
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Contrast threshold C [log intensity]
    #[arg(long)]
    threshold: Option<f64>,
    /// Intensity floor added before the log [intensity]
    #[arg(long)]
    eps: Option<f64>,
    /// Per-pixel refractory period [µs]
    #[arg(long)]
    refractory: Option<u64>,
    /// Also write the events as t,x,y,p text
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PaepArgs {
    /// Input EVB1 file
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
    /// Reference PGM whose Sobel magnitude is correlated with the counts
    #[arg(long, value_name = "PGM")]
    frame: Option<PathBuf>,
    /// Counting window from the stream start [µs]; default: the whole span
    #[arg(long)]
    window_us: Option<u64>,
    /// Largest gap between the two events of a pair [µs]
    #[arg(long)]
    max_gap_us: Option<u64>,
    /// Pixels excluded at each image border from the correlation [px]
    #[arg(long)]
    border: Option<usize>,
    /// Output 16-bit PGM of per-pixel counts
    #[arg(long, value_name = "PGM")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct TubeFlags {
    /// Half of the fitting window [µs]
    #[arg(long)]
    half_window_us: Option<u64>,
    /// Neighbourhood radius [px]
    #[arg(long)]
    radius: Option<usize>,
    /// Inlier distance and residual bound [px]
    #[arg(long)]
    tol: Option<f64>,
    /// Minimum inlier count [events]
    #[arg(long)]
    min_support: Option<usize>,
    /// RANSAC iterations per pixel [count]
    #[arg(long)]
    iters: Option<usize>,
    /// Minimum inlier spread along the motion [px]
    #[arg(long)]
    min_travel: Option<f64>,
    /// Minimum inlier share of the neighbourhood [0, 1]
    #[arg(long)]
    min_inlier_frac: Option<f64>,
    /// Random seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TubeArgs {
    /// Input EVB1 file
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
    /// Output directory for tubes.tfm and motion.mf1
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Window centre [µs]; default: middle of the stream, window shrunk to fit
    #[arg(long)]
    t0_us: Option<u64>,
    /// Frame interval [µs]; velocities are px/frame when set, else px/ms
    #[arg(long)]
    frame_dt_us: Option<u64>,
    /// PGM used to keep only motion on edges (writes motion_edges.mf1)
    #[arg(long, value_name = "PGM")]
    edge_frame: Option<PathBuf>,
    /// Sobel magnitude threshold for --edge-frame [intensity/px]
    #[arg(long)]
    edge_thresh: Option<f64>,
    #[command(flatten)]
    tube: TubeFlags,
}

#[derive(Args, Debug)]
struct RestoreArgs {
    /// Turbulent frame directory (manifest.txt + PGMs)
    #[arg(long, value_name = "DIR")]
    frames: Option<PathBuf>,
    /// Input EVB1 file covering the frames
    #[arg(long, value_name = "FILE")]
    events: Option<PathBuf>,
    /// Output PGM
    #[arg(long, value_name = "PGM")]
    out: Option<PathBuf>,
    /// Reference frame index [frame]; default: the last frame
    #[arg(long)]
    t_ref: Option<usize>,
    /// PAEP pair gap [µs]; default: two frame intervals
    #[arg(long)]
    max_gap_us: Option<u64>,
    /// EPAW weight gain beta
    #[arg(long)]
    beta: Option<f64>,
    /// EPAW sharpening strength lambda
    #[arg(long)]
    lambda: Option<f64>,
    /// EPAW unsharp blur std [px]
    #[arg(long)]
    sigma_us: Option<f64>,
    /// Dilation of tube pixels into the object region [px]
    #[arg(long)]
    dilate_radius: Option<usize>,
    /// Also write the motion field used for compensation
    #[arg(long, value_name = "FILE")]
    motion_out: Option<PathBuf>,
    #[command(flatten)]
    tube: TubeFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// First PGM
    #[arg(long, value_name = "PGM")]
    a: Option<PathBuf>,
    /// Second PGM
    #[arg(long, value_name = "PGM")]
    b: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CliError::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::usage(format!("--threads {}: {e}", cli.threads)))?;
    let mut r = Resolver::new(config);
    pool.install(|| match cli.command {
        Command::Simulate(a) => simulate(&mut r, a),
        Command::Fixture(a) => fixture(&mut r, a),
        Command::Events(a) => events(&mut r, a),
        Command::Paep(a) => paep(&mut r, a),
        Command::Tube(a) => tube(&mut r, a),
        Command::Restore(a) => restore(&mut r, a),
        Command::Eval(a) => eval(&mut r, a),
    })
}

/// Checks the config for leftovers and prints the resolved parameters as
/// commented `key = value` lines.
fn print_config(r: &mut Resolver, seed: Option<u64>) -> Result<(), CliError> {
    let resolved = std::mem::replace(r, Resolver::new(Config::default())).finish()?;
    for (k, v) in &resolved {
        println!("# {k} = {v}");
    }
    match seed {
        Some(s) => println!("# resolved seed = {s}"),
        None => println!("# resolved seed = none (deterministic command)"),
    }
    Ok(())
}

fn flag(path: &Path, name: &str) -> String {
    format!("--{name} {}", path.display())
}

fn create_dir(dir: &Path, name: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", flag(dir, name))))
}

fn read_stream(path: &Path) -> Result<EventStream, CliError> {
    io::read_events(path).ctx(flag(path, "events"))
}

fn simulate(r: &mut Resolver, a: SimulateArgs) -> Result<(), CliError> {
    let d = TurbParams::default();
    let clean_dir: PathBuf = r.path("clean", a.clean)?;
    let out: PathBuf = r.path("out", a.out)?;
    let turb = TurbParams {
        sigma_tilt: r.value("sigma-tilt", a.sigma_tilt, d.sigma_tilt)?,
        corr_len: r.value("corr-len", a.corr_len, d.corr_len)?,
        rho_t: r.value("rho-t", a.rho_t, d.rho_t)?,
        blur_sigma: r.value("blur", a.blur, d.blur_sigma)?,
        seed: r.value("seed", a.seed, d.seed)?,
    };
    let n = r.optional("frames", a.frames)?;
    print_config(r, Some(turb.seed))?;

    let clean = io::read_frames(&clean_dir).ctx(flag(&clean_dir, "clean"))?;
    let clean = match n {
        None => clean,
        Some(0) => return Err(CliError::validation("--frames must be >= 1")),
        Some(n) if clean.len() == 1 => {
            FrameSequence::new(vec![clean.frames()[0].clone(); n], clean.t0(), clean.dt()).ctx("--frames")?
        }
        Some(n) => clean.prefix(n).ctx(format!("--frames {n}"))?,
    };
    turb.validate().ctx("turbulence parameters")?;
    let (w, h) = clean.dims();
    let field = generate_tilt_field(w, h, clean.len(), &turb).ctx("tilt field")?;
    let turbulent = apply_turbulence(&clean, &field, turb.blur_sigma).ctx("turbulence")?;
    create_dir(&out, "out")?;
    io::write_frames(&out, &turbulent).ctx(flag(&out, "out"))?;
    io::write_turbulence_field(out.join("tilt.tf1"), &field).ctx(flag(&out, "out"))?;
    println!("frames={} rms_tilt={:.6}", turbulent.len(), field.rms());
    Ok(())
}

fn mask_frame(mask: &evtm_core::Grid<bool>) -> Result<Frame, CliError> {
    let (w, h) = mask.dims();
    Frame::new(
        w,
        h,
        mask.as_slice().iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
    )
    .ctx("mask")
}

fn fixture(r: &mut Resolver, a: FixtureArgs) -> Result<(), CliError> {
    let d = FixtureParams::default();
    let out: PathBuf = r.path("out", a.out)?;
    let preset: Preset = r.required("preset", a.preset)?;
    let seed = r.value("seed", a.seed, d.seed)?;
    let sigma_tilt = r.value("sigma-tilt", a.sigma_tilt, d.turb.sigma_tilt)?;
    let n_frames = r.value("frames", a.frames, d.n_frames)?;
    let dt = r.value("dt-us", a.dt_us, d.dt)?;
    let evs = preset.default_evs();
    let contrast = r.value("threshold", a.threshold, evs.contrast)?;
    print_config(r, Some(seed))?;

    let params = FixtureParams {
        seed,
        n_frames,
        dt,
        turb: TurbParams { sigma_tilt, ..d.turb },
        evs: Some(EvsParams { contrast, ..evs }),
    };
    let fx = build_fixture(preset, &params).ctx(format!("--preset {preset}"))?;
    let o = |name: &str| out.join(name);
    create_dir(&out, "out")?;
    let to_out = |e| CliError::from_core(flag(&out, "out"), e);
    io::write_frames(o("clean"), &fx.clean).map_err(to_out)?;
    io::write_frames(o("turbulent"), &fx.turbulent).map_err(to_out)?;
    io::write_events(o("events.evb"), &fx.stream).map_err(to_out)?;
    io::write_turbulence_field(o("tilt.tf1"), &fx.field).map_err(to_out)?;
    io::write_motion_field(o("motion.mf1"), &fx.motion).map_err(to_out)?;
    let labels: Vec<u8> = fx.labels.iter().map(|l| l.code()).collect();
    std::fs::write(o("labels.u8"), labels).map_err(|e| to_out(e.into()))?;
    create_dir(&o("masks"), "out")?;
    for (k, m) in fx.masks.iter().enumerate() {
        io::write_pgm(o("masks").join(io::frame_file_name(k)), &mask_frame(m)?).map_err(to_out)?;
    }
    io::write_run_manifest(
        o("fixture.txt"),
        &[
            ("preset".into(), preset.to_string()),
            ("seed".into(), seed.to_string()),
            ("sigma_tilt".into(), sigma_tilt.to_string()),
            ("frames".into(), n_frames.to_string()),
            ("dt_us".into(), dt.to_string()),
            ("threshold".into(), contrast.to_string()),
            ("events".into(), fx.stream.len().to_string()),
        ],
    )
    .map_err(to_out)?;
    let tube = fx.labels.iter().filter(|&&l| l == TubeLabel::Tube).count();
    println!("events={} object_events={tube}", fx.stream.len());
    Ok(())
}

fn events(r: &mut Resolver, a: EventsArgs) -> Result<(), CliError> {
    let d = EvsParams::default();
    let frames: PathBuf = r.path("frames", a.frames)?;
    let out: PathBuf = r.path("out", a.out)?;
    let params = EvsParams {
        contrast: r.value("threshold", a.threshold, d.contrast)?,
        eps: r.value("eps", a.eps, d.eps)?,
        refractory: r.value("refractory", a.refractory, d.refractory)?,
    };
    let csv = r.opt_path("csv", a.csv)?;
    print_config(r, None)?;

    let seq = io::read_frames(&frames).ctx(flag(&frames, "frames"))?;
    let stream = synthesize_events(&seq, &params).ctx("event synthesis")?;
    io::write_events(&out, &stream).ctx(flag(&out, "out"))?;
    if let Some(csv) = csv {
        io::write_events_csv(&csv, &stream).ctx(flag(&csv, "csv"))?;
    }
    println!("events={}", stream.len());
    Ok(())
}

fn paep(r: &mut Resolver, a: PaepArgs) -> Result<(), CliError> {
    let events: PathBuf = r.path("events", a.events)?;
    let frame: PathBuf = r.path("frame", a.frame)?;
    let window = r.optional("window-us", a.window_us)?;
    let max_gap = r.value("max-gap-us", a.max_gap_us, 10_000)?;
    let border = r.value("border", a.border, 2)?;
    let out = r.opt_path("out", a.out)?;
    print_config(r, None)?;

    let stream = read_stream(&events)?;
    let reference = io::read_pgm(&frame).ctx(flag(&frame, "frame"))?;
    let t_end = match window {
        Some(w) => stream.t_begin().saturating_add(w).min(stream.t_end()),
        None => stream.t_end(),
    };
    let counts = count_paep(&stream, stream.t_begin(), t_end, max_gap).ctx("--max-gap-us")?;
    let grad = gradient_map(&reference).ctx(flag(&frame, "frame"))?;
    let corr = paep_gradient_correlation(&counts, &grad, border).ctx(flag(&frame, "frame"))?;
    if let Some(out) = out {
        let values: Vec<u16> = counts.counts().iter().map(|&c| c.min(u16::MAX as u32) as u16).collect();
        io::write_pgm16(&out, counts.width(), counts.height(), &values).ctx(flag(&out, "out"))?;
    }
    println!("pairs={} r={corr:.6}", counts.total());
    Ok(())
}

fn tube_params(r: &mut Resolver, f: TubeFlags) -> Result<TubeParams, CliError> {
    let d = TubeParams::default();
    Ok(TubeParams {
        half_window: r.value("half-window-us", f.half_window_us, d.half_window)?,
        radius: r.value("radius", f.radius, d.radius)?,
        min_support: r.value("min-support", f.min_support, d.min_support)?,
        tol: r.value("tol", f.tol, d.tol)?,
        ransac_iters: r.value("iters", f.iters, d.ransac_iters)?,
        seed: r.value("seed", f.seed, d.seed)?,
        min_travel: r.value("min-travel", f.min_travel, d.min_travel)?,
        min_inlier_frac: r.value("min-inlier-frac", f.min_inlier_frac, d.min_inlier_frac)?,
    })
}

fn label_counts(labels: &[TubeLabel]) -> String {
    let n = |l| labels.iter().filter(|&&x| x == l).count();
    format!(
        "tube={} turbulence={} empty={}",
        n(TubeLabel::Tube),
        n(TubeLabel::Turbulence),
        n(TubeLabel::Empty)
    )
}

fn tube(r: &mut Resolver, a: TubeArgs) -> Result<(), CliError> {
    let events: PathBuf = r.path("events", a.events)?;
    let out: PathBuf = r.path("out", a.out)?;
    let t0 = r.optional("t0-us", a.t0_us)?;
    let frame_dt = r.optional("frame-dt-us", a.frame_dt_us)?;
    let edge_frame = r.opt_path("edge-frame", a.edge_frame)?;
    let edge_thresh = r.value("edge-thresh", a.edge_thresh, 0.1)?;
    let mut params = tube_params(r, a.tube)?;
    print_config(r, Some(params.seed))?;

    let stream = read_stream(&events)?;
    let t0 = match t0 {
        Some(t0) => t0,
        None => {
            let mid = stream.t_begin() + (stream.t_end() - stream.t_begin()) / 2;
            params.half_window = params.half_window.min(mid - stream.t_begin()).min(stream.t_end() - mid);
            if params.half_window == 0 {
                return Err(CliError::validation(format!(
                    "{}: stream span is too short to fit tubes",
                    flag(&events, "events")
                )));
            }
            mid
        }
    };
    let fits = fit_event_tubes(&stream, t0, &params, frame_dt).ctx("--t0-us/--half-window-us")?;
    let motion = project_to_motion_field(&fits);
    let labels = classify_events(&stream, &fits, params.tol).ctx("classification")?;
    create_dir(&out, "out")?;
    io::write_tube_fits(out.join("tubes.tfm"), &fits).ctx(flag(&out, "out"))?;
    io::write_motion_field(out.join("motion.mf1"), &motion).ctx(flag(&out, "out"))?;
    if let Some(edge) = edge_frame {
        let frame = io::read_pgm(&edge).ctx(flag(&edge, "edge-frame"))?;
        let grad = gradient_map(&frame).ctx(flag(&edge, "edge-frame"))?;
        let masked = edge_masked_motion(&motion, &grad, edge_thresh).ctx(flag(&edge, "edge-frame"))?;
        io::write_motion_field(out.join("motion_edges.mf1"), &masked).ctx(flag(&out, "out"))?;
    }
    let tube_events = labels.iter().filter(|&&l| l == TubeLabel::Tube).count();
    println!("t0_us={t0} {} tube_events={tube_events}", label_counts(fits.labels()));
    Ok(())
}

fn restore(r: &mut Resolver, a: RestoreArgs) -> Result<(), CliError> {
    let d = RestoreParams::default();
    let frames: PathBuf = r.path("frames", a.frames)?;
    let events: PathBuf = r.path("events", a.events)?;
    let out: PathBuf = r.path("out", a.out)?;
    let t_ref = r.optional("t-ref", a.t_ref)?;
    let epaw = EpawParams {
        max_gap: r.optional("max-gap-us", a.max_gap_us)?,
        beta: r.value("beta", a.beta, d.epaw.beta)?,
        lambda: r.value("lambda", a.lambda, d.epaw.lambda)?,
        sigma_us: r.value("sigma-us", a.sigma_us, d.epaw.sigma_us)?,
    };
    let dilate_radius = r.value("dilate-radius", a.dilate_radius, d.dilate_radius)?;
    let motion_out = r.opt_path("motion-out", a.motion_out)?;
    let tube = tube_params(r, a.tube)?;
    print_config(r, Some(tube.seed))?;

    let seq = io::read_frames(&frames).ctx(flag(&frames, "frames"))?;
    let stream = read_stream(&events)?;
    let params = RestoreParams {
        tube,
        epaw,
        dilate_radius,
    };
    let res = restore_frame_detailed(&seq, &stream, t_ref, &params).ctx("restore")?;
    io::write_pgm(&out, &res.frame).ctx(flag(&out, "out"))?;
    if let Some(m) = motion_out {
        io::write_motion_field(&m, &res.motion).ctx(flag(&m, "motion-out"))?;
    }
    let object = res.scene_mask.as_slice().iter().filter(|&&s| !s).count();
    println!("{} object_pixels={object}", label_counts(res.fits.labels()));
    Ok(())
}

fn eval(r: &mut Resolver, a: EvalArgs) -> Result<(), CliError> {
    let pa: PathBuf = r.path("a", a.a)?;
    let pb: PathBuf = r.path("b", a.b)?;
    print_config(r, None)?;
    let fa = io::read_pgm(&pa).ctx(flag(&pa, "a"))?;
    let fb = io::read_pgm(&pb).ctx(flag(&pb, "b"))?;
    let report = MetricReport::compute(&fa, &fb).ctx(format!("--a {} --b {}", pa.display(), pb.display()))?;
    println!("{report}");
    Ok(())
}
