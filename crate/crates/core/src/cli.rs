//! The `frame-tuner` command line.
//!
//! Exit codes: 0 success, 2 input error, 3 invariant violation, 4 stalled.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_integer::Integer;
use serde::Serialize;

use crate::autotune::{tune, EpsilonPolicy, Outcome};
use crate::descent::{step_and_check, DescentConfig, StepSize, Termination, TraceMode};
use crate::error::{Error, Result};
use crate::frame::{
    analyze, example_theta, example_theta_tight, harmonic_frame, perturb, random_frame, Frame,
    DEFAULT_UNTF_TOL,
};
use crate::io::{frame_to_json, read_raw_frame};
use crate::linalg::Field;
use crate::partition::op_threshold;
use crate::structured::{
    commutation_check, filter_bank_to_json, gabor_to_json, orbit_distance, orbit_gradient,
    random_generator, read_lattice_config, structured_step, synthesize, GaborSystem, LatticeConfig,
    OrbitFrame,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_STALLED: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "frame-tuner",
    version,
    about = "Tune unit norm frames toward unit norm tight frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print spectral and partition diagnostics of a frame file.
    Analyze(AnalyzeArgs),
    /// Run the tuning pipeline on a frame file.
    Tune(TuneArgs),
    /// Tune the generator of a Gabor system or filter bank.
    GaborTune(GaborArgs),
    /// Write a fixture frame file.
    Make(MakeArgs),
    /// Take a single descent step.
    Step(StepArgs),
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Scale columns to unit norm before use.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = DEFAULT_UNTF_TOL)]
    tol: f64,
}

#[derive(Args, Debug)]
struct DescentArgs {
    /// `auto` for 1/(4N), or an explicit value in (0, 1/(2N)).
    #[arg(long, default_value = "auto", value_parser = parse_step)]
    step: StepSize,
    #[arg(long, default_value_t = DEFAULT_UNTF_TOL)]
    tol: f64,
    #[arg(long = "grad-tol", default_value_t = 1e-10)]
    grad_tol: f64,
    #[arg(long = "max-iter", default_value_t = 1_000_000)]
    max_iter: usize,
}

impl DescentArgs {
    fn config(&self) -> DescentConfig {
        DescentConfig {
            step: self.step,
            untf_tol: self.tol,
            gradient_tol: self.grad_tol,
            max_iter: self.max_iter,
            op_check_stride: 1,
            trace: TraceMode::Thinned,
        }
    }
}

#[derive(Args, Debug)]
struct TuneArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// CSV trace of the top-level descent.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    descent: DescentArgs,
    /// `paper`, `paper-per-iterate`, or a fixed positive value.
    #[arg(long, default_value = "paper", value_parser = parse_epsilon)]
    epsilon: EpsilonPolicy,
}

#[derive(Args, Debug)]
struct GaborArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Where to write the tuned system.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    descent: DescentArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Harmonic,
    Random,
    #[value(alias = "example_theta")]
    ExampleTheta,
    /// A Gabor config with a random generator.
    Gabor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

#[derive(Args, Debug)]
struct MakeArgs {
    kind: Kind,
    #[arg(long = "M")]
    m: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    /// Translation step of a Gabor lattice.
    #[arg(long = "A")]
    a: Option<usize>,
    /// Modulation step of a Gabor lattice.
    #[arg(long = "B")]
    b: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FieldArg::Complex)]
    field: FieldArg,
    #[arg(long)]
    theta: Option<f64>,
    /// Geodesic angle by which to perturb every column.
    #[arg(long)]
    perturb: Option<f64>,
    /// Defaults to standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    /// For `example-theta`, also write the nearby UNTF here.
    #[arg(long = "tilde-output")]
    tilde_output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "auto", value_parser = parse_step)]
    step: StepSize,
}

fn parse_step(s: &str) -> std::result::Result<StepSize, String> {
    if s == "auto" {
        return Ok(StepSize::Auto);
    }
    s.parse::<f64>()
        .map(StepSize::Fixed)
        .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
}

fn parse_epsilon(s: &str) -> std::result::Result<EpsilonPolicy, String> {
    match s {
        "paper" => Ok(EpsilonPolicy::Paper),
        "paper-per-iterate" => Ok(EpsilonPolicy::PaperPerIterate),
        _ => match s.parse::<f64>() {
            Ok(e) if e > 0.0 && e.is_finite() => Ok(EpsilonPolicy::Fixed(e)),
            _ => Err(format!(
                "expected `paper`, `paper-per-iterate` or a positive number, got `{s}`"
            )),
        },
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Format { .. }
        | Error::Io(_)
        | Error::InvalidParameter(_)
        | Error::InvalidLattice(_)
        | Error::StepOutOfRange { .. }
        | Error::EpsilonOutOfRange { .. }
        | Error::DimensionMismatch(_)
        | Error::ZeroColumn { .. }
        | Error::ImaginaryInRealFrame { .. }
        | Error::NonFinite { .. }
        | Error::RealFieldUnsupported
        | Error::Precondition(_) => EXIT_INPUT,
        _ => EXIT_INVARIANT,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with_io<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::NotUnitNorm { .. }) {
                let _ = writeln!(err, "hint: pass --normalize to scale columns to unit norm");
            }
            exit_code(&e)
        }
    }
}

/// Runs with the process arguments and standard streams.
pub fn main_exit_code() -> i32 {
    // Unlocked handles: log records from worker threads also write to stderr.
    run_with_io(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    )
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::Tune(a) => cmd_tune(&a, out),
        Command::GaborTune(a) => cmd_gabor_tune(&a, out),
        Command::Make(a) => cmd_make(&a, out),
        Command::Step(a) => cmd_step(&a, out),
    }
}

fn load(input: &InputArgs) -> Result<Frame> {
    let raw = read_raw_frame(&input.input)?;
    if input.normalize {
        raw.into_normalized_frame()
    } else {
        raw.into_frame()
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(Error::from)
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let f = load(&a.input)?;
    let r = analyze(&f, a.tol)?;
    let (m, n) = (r.dim, r.len);
    let mut s = String::new();
    s.push_str(&format!("M {m}\nN {n}\ngcd(M,N) {}\n", m.gcd(&n)));
    s.push_str(&format!("frame potential {:.6e}\n", r.frame_potential));
    s.push_str(&format!("N^2/M {:.6e}\n", (n * n) as f64 / m as f64));
    s.push_str(&format!("distance {:.3e}\n", r.distance_from_tightness));
    s.push_str(&format!(
        "frame bounds A {:.6e} B {:.6e}\n",
        r.lower_frame_bound, r.upper_frame_bound
    ));
    if n >= 2 {
        let (tau, p) = op_threshold(&f)?;
        s.push_str(&format!(
            "tau {tau:.6e} I {:?} J {:?}\n",
            p.block_i, p.block_j
        ));
    }
    s.push_str(&format!("UNTF: {}\n", if r.is_untf { "yes" } else { "no" }));
    emit(out, &s)?;
    Ok(EXIT_OK)
}

fn cmd_tune(a: &TuneArgs, out: &mut dyn Write) -> Result<i32> {
    let f0 = load(&a.input)?;
    let cfg = a.descent.config();
    let result = tune(&f0, &cfg, a.epsilon)?;
    crate::io::write_frame(&a.output, &result.frame)?;
    if let Some(path) = &a.report {
        write_file(path, &result.report.to_json())?;
    }
    if let (Some(path), Some(trace)) = (&a.trace, &result.trace) {
        trace.write_csv(path)?;
    }
    let r = &result.report;
    emit(
        out,
        &format!(
            "outcome {}\niterations {}\ndistance {:.3e}\ndisplacement {:.6e}\n",
            r.outcome, r.total_iterations, r.final_distance, r.displacement
        ),
    )?;
    if let Some(note) = &r.note {
        emit(out, &format!("note {note}\n"))?;
    }
    Ok(match r.outcome {
        Outcome::Untf | Outcome::OpSplit => EXIT_OK,
        Outcome::Stalled => EXIT_STALLED,
    })
}

#[derive(Debug, Serialize)]
struct GaborReport {
    kind: &'static str,
    dim: usize,
    len: usize,
    iterations: usize,
    termination: Termination,
    initial_distance: f64,
    final_distance: f64,
    /// Entrywise gap between a structured step and a full-frame step from the
    /// final system.
    orbit_equality_residual: f64,
    commutation_violation: f64,
}

fn cmd_gabor_tune(a: &GaborArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = a.descent.config();
    let report = match read_lattice_config(&a.input.input, a.input.normalize)? {
        LatticeConfig::Gabor(sys) => {
            let (sys, report) = orbit_tune(sys, &cfg, "gabor")?;
            write_file(&a.output, &gabor_to_json(&sys))?;
            report
        }
        LatticeConfig::FilterBank(bank) => {
            let (bank, report) = orbit_tune(bank, &cfg, "filter-bank")?;
            write_file(&a.output, &filter_bank_to_json(&bank))?;
            report
        }
    };
    if let Some(path) = &a.report {
        let json = serde_json::to_string_pretty(&report).expect("reports serialize");
        write_file(path, &json)?;
    }
    emit(
        out,
        &format!(
            "termination {}\niterations {}\ndistance {:.3e}\norbit residual {:.3e}\n",
            report.termination,
            report.iterations,
            report.final_distance,
            report.orbit_equality_residual
        ),
    )?;
    Ok(if report.termination == Termination::Tolerance {
        EXIT_OK
    } else {
        EXIT_STALLED
    })
}

fn orbit_tune<S: OrbitFrame>(
    sys: S,
    cfg: &DescentConfig,
    kind: &'static str,
) -> Result<(S, GaborReport)> {
    let t = cfg.validate(sys.len())?;
    let commute = commutation_check(&sys);
    if !commute.holds {
        return Err(Error::Precondition(format!(
            "lattice unitaries do not commute with the frame operator ({:.3e})",
            commute.max_violation
        )));
    }
    let initial = orbit_distance(&sys);
    let mut cur = sys;
    let mut k = 0;
    let termination = loop {
        let d = orbit_distance(&cur);
        if d <= cfg.untf_tol {
            break Termination::Tolerance;
        }
        let g_sq: f64 = orbit_gradient(&cur)
            .iter()
            .map(|g| crate::linalg::norm_sqr(g))
            .sum();
        // Each generator's gradient is repeated over the orbit.
        if g_sq * cur.orbit_size() as f64 <= cfg.gradient_tol * cfg.gradient_tol {
            break Termination::GradientVanished;
        }
        if k >= cfg.max_iter {
            break Termination::Budget;
        }
        cur = structured_step(&cur, t)?;
        k += 1;
    };
    let full = synthesize(&cur);
    let stepped = synthesize(&structured_step(&cur, t)?);
    let reference = crate::descent::geodesic_step(&full, &crate::descent::gradient(&full), t);
    let residual = stepped.synthesis().max_abs_diff(reference.synthesis())?;
    let report = GaborReport {
        kind,
        dim: cur.dim(),
        len: cur.len(),
        iterations: k,
        termination,
        initial_distance: initial,
        final_distance: orbit_distance(&cur),
        orbit_equality_residual: residual,
        commutation_violation: commutation_check(&cur).max_violation,
    };
    Ok((cur, report))
}

fn need(v: Option<usize>, name: &str) -> Result<usize> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required")))
}

fn cmd_make(a: &MakeArgs, out: &mut dyn Write) -> Result<i32> {
    let field = match a.field {
        FieldArg::Real => Field::Real,
        FieldArg::Complex => Field::Complex,
    };
    let text = match a.kind {
        Kind::Gabor => {
            let m = need(a.m, "M")?;
            let sys = GaborSystem::new(
                m,
                need(a.a, "A")?,
                need(a.b, "B")?,
                random_generator(m, a.seed),
            )?;
            gabor_to_json(&sys)
        }
        kind => {
            let f = match kind {
                Kind::Harmonic => harmonic_frame(need(a.m, "M")?, need(a.n, "N")?)?,
                Kind::Random => random_frame(need(a.m, "M")?, need(a.n, "N")?, a.seed, field)?,
                _ => {
                    let theta = a
                        .theta
                        .ok_or_else(|| Error::InvalidParameter("--theta is required".into()))?;
                    if !theta.is_finite() {
                        return Err(Error::InvalidParameter("--theta must be finite".into()));
                    }
                    if let Some(path) = &a.tilde_output {
                        write_file(path, &frame_to_json(&example_theta_tight(theta)))?;
                    }
                    example_theta(theta)
                }
            };
            let f = match a.perturb {
                Some(mag) if !(mag >= 0.0 && mag.is_finite()) => {
                    return Err(Error::InvalidParameter(format!(
                        "--perturb must be a non-negative angle, got {mag}"
                    )))
                }
                Some(mag) => perturb(&f, mag, a.seed)?,
                None => f,
            };
            frame_to_json(&f)
        }
    };
    match &a.output {
        Some(path) => write_file(path, &text)?,
        None => emit(out, &text)?,
    }
    Ok(EXIT_OK)
}

fn cmd_step(a: &StepArgs, out: &mut dyn Write) -> Result<i32> {
    let f = load(&a.input)?;
    let t = a.step.resolve(f.len())?;
    let before = crate::frame::frame_potential(&f);
    let s = step_and_check(&f, t)?;
    emit(
        out,
        &format!(
            "step {t:.6e}\nframe potential {before:.12e} -> {:.12e}\nguaranteed decrease {:.6e}\ndistance {:.3e}\n",
            s.frame_potential, s.guaranteed_decrease, s.distance
        ),
    )?;
    if let Some(path) = &a.output {
        crate::io::write_frame(path, &s.frame)?;
    }
    Ok(EXIT_OK)
}
