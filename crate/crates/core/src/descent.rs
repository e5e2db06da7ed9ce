//! Geodesic gradient descent of the frame potential over products of spheres.
//!
//! For a unit norm frame `F = {f_n}` with frame operator `S = FF*` the search
//! direction of each vector is the tangential part of `S f_n`:
//!
//! ```text
//! g_n = S f_n - <S f_n, f_n> f_n
//! f_n(t) = cos(|g_n| t) f_n - sin(|g_n| t) g_n / |g_n|
//! ```
//!
//! Any step `t` in `(0, 1/(2N))` decreases the potential by at least
//! `4t(1 - 2Nt) Σ|g_n|²`; `t = 1/(4N)` maximizes that guarantee.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{frame_operator, tightness_gap, Frame, DEFAULT_UNTF_TOL};
use crate::io::fmt_f64;
use crate::linalg::{self, hs_norm, mat_vec, Matrix, C64};
use crate::partition::{op_threshold, Partition};

/// Step size selection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StepSize {
    /// `t = 1/(4N)`.
    #[default]
    Auto,
    Fixed(f64),
}

impl StepSize {
    /// Resolves the step for a frame with `n` vectors, rejecting values outside
    /// the open interval `(0, 1/(2N))`.
    pub fn resolve(self, n: usize) -> Result<f64> {
        let limit = 1.0 / (2.0 * n as f64);
        match self {
            StepSize::Auto => Ok(1.0 / (4.0 * n as f64)),
            StepSize::Fixed(t) => check_step(t, n)
                .map(|_| t)
                .map_err(|_| Error::StepOutOfRange { step: t, limit }),
        }
    }
}

fn check_step(t: f64, n: usize) -> Result<()> {
    let limit = 1.0 / (2.0 * n as f64);
    if !(t > 0.0 && t < limit) {
        return Err(Error::StepOutOfRange { step: t, limit });
    }
    Ok(())
}

/// How many trace rows to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Every iteration.
    Full,
    /// Every iteration below [`THIN_AFTER`], then only iterations at
    /// `round(1.1^j)`, plus the last one.
    #[default]
    Thinned,
}

pub const THIN_AFTER: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub step: StepSize,
    pub untf_tol: f64,
    pub gradient_tol: f64,
    pub max_iter: usize,
    /// Check for ε-orthogonal partitionability every this many iterations.
    pub op_check_stride: usize,
    pub trace: TraceMode,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            step: StepSize::Auto,
            untf_tol: DEFAULT_UNTF_TOL,
            gradient_tol: 1e-10,
            max_iter: 1_000_000,
            op_check_stride: 1,
            trace: TraceMode::Thinned,
        }
    }
}

impl DescentConfig {
    pub fn with_step(mut self, t: f64) -> Self {
        self.step = StepSize::Fixed(t);
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    /// Validates the configuration for a frame with `n` vectors and returns
    /// the resolved step.
    pub fn validate(&self, n: usize) -> Result<f64> {
        if !(self.untf_tol > 0.0) || !(self.gradient_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "tolerances must be positive".to_string(),
            ));
        }
        if self.max_iter == 0 || self.op_check_stride == 0 {
            return Err(Error::InvalidParameter(
                "max_iter and op_check_stride must be positive".to_string(),
            ));
        }
        self.step.resolve(n)
    }
}

/// Projected gradient of the frame potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub directions: Vec<Vec<C64>>,
    pub total_sq_norm: f64,
}

impl Gradient {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            directions: vec![vec![C64::new(0.0, 0.0); m]; n],
            total_sq_norm: 0.0,
        }
    }
}

fn gradient_with(columns: &[Vec<C64>], s: &Matrix) -> Gradient {
    let directions: Vec<Vec<C64>> = columns
        .iter()
        .map(|f| {
            let sf = mat_vec(s, f);
            let c = linalg::inner(&sf, f);
            sf.iter().zip(f).map(|(a, b)| a - c * b).collect()
        })
        .collect();
    let total_sq_norm = directions.iter().map(|g| linalg::norm_sqr(g)).sum();
    Gradient {
        directions,
        total_sq_norm,
    }
}

/// `g_n = FF* f_n - <FF* f_n, f_n> f_n` for every vector.
pub fn gradient(f: &Frame) -> Gradient {
    gradient_with(&f.columns(), &frame_operator(f))
}

/// Moves one unit vector along the great circle tangent to `-g`.
pub(crate) fn geodesic_move(f: &[C64], g: &[C64], t: f64) -> Vec<C64> {
    let gn = linalg::norm(g);
    if gn == 0.0 {
        return f.to_vec();
    }
    let (s, c) = (gn * t).sin_cos();
    let mut out: Vec<C64> = f.iter().zip(g).map(|(x, d)| x * c - d * (s / gn)).collect();
    let nrm = linalg::norm(&out);
    for z in &mut out {
        *z /= nrm;
    }
    out
}

/// Pushes each `f_n` along its geodesic for time `t`, renormalizing columns.
pub fn geodesic_step(f: &Frame, g: &Gradient, t: f64) -> Frame {
    assert_eq!(
        g.directions.len(),
        f.len(),
        "gradient/frame length mismatch"
    );
    let cols: Vec<Vec<C64>> = f
        .columns()
        .iter()
        .zip(&g.directions)
        .map(|(x, d)| geodesic_move(x, d, t))
        .collect();
    Frame::from_columns(f.field(), f.dim(), &cols).expect("geodesic steps stay on the sphere")
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub frame: Frame,
    pub frame_potential: f64,
    pub distance: f64,
    /// `4t(1 - 2Nt) Σ|g_n|²`, the decrease the step is guaranteed to achieve.
    pub guaranteed_decrease: f64,
}

const DECREASE_SLACK: f64 = 1e-9;

/// One descent step, verifying the guaranteed decrease of the potential.
pub fn step_and_check(f: &Frame, t: f64) -> Result<StepOutcome> {
    check_step(t, f.len())?;
    let s = frame_operator(f);
    let g = gradient_with(&f.columns(), &s);
    let before = potential_of(&s);
    let next = geodesic_step(f, &g, t);
    let s_next = frame_operator(&next);
    let after = potential_of(&s_next);
    let guaranteed = guaranteed_decrease(f.len(), t, g.total_sq_norm);
    let bound = before - guaranteed + DECREASE_SLACK;
    if after > bound {
        return Err(Error::DescentGuarantee { after, bound });
    }
    Ok(StepOutcome {
        distance: tightness_gap(&s_next, next.redundancy()),
        frame: next,
        frame_potential: after,
        guaranteed_decrease: guaranteed,
    })
}

fn guaranteed_decrease(n: usize, t: f64, grad_sq: f64) -> f64 {
    4.0 * t * (1.0 - 2.0 * n as f64 * t) * grad_sq
}

// ||F*F||² = Tr((FF*)²) = ||FF*||².
fn potential_of(s: &Matrix) -> f64 {
    let h = hs_norm(s);
    h * h
}

/// Why a descent run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Distance from tightness fell below the tolerance.
    Tolerance,
    /// The gradient vanished before the frame became tight: a critical,
    /// non-tight frame.
    GradientVanished,
    Budget,
    /// The iterate became ε-orthogonally partitionable.
    OpDetected,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Tolerance => "tolerance",
            Termination::GradientVanished => "gradient-vanished",
            Termination::Budget => "budget",
            Termination::OpDetected => "op-detected",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub frame_potential: f64,
    pub distance: f64,
    pub grad_sq_norm: f64,
    /// `||F_k - F_0||_HS`.
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentTrace {
    pub records: Vec<TraceRecord>,
    pub termination: Termination,
    /// Number of steps taken.
    pub iterations: usize,
}

pub const TRACE_CSV_HEADER: &str = "iter,frame_potential,distance,grad_sq_norm,displacement";

impl DescentTrace {
    pub fn last(&self) -> &TraceRecord {
        self.records
            .last()
            .expect("a trace records at least the initial iterate")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration,
                fmt_f64(r.frame_potential),
                fmt_f64(r.distance),
                fmt_f64(r.grad_sq_norm),
                fmt_f64(r.displacement)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

/// Where the ε used for orthogonal-partitionability checks comes from.
#[derive(Clone, Copy, Default)]
pub enum OpMonitor<'a> {
    #[default]
    Off,
    Fixed(f64),
    /// ε as a function of the current distance from tightness.
    PerIterate(&'a (dyn Fn(f64) -> f64 + Sync)),
}

impl OpMonitor<'_> {
    fn epsilon(&self, distance: f64) -> Option<f64> {
        match self {
            OpMonitor::Off => None,
            OpMonitor::Fixed(e) => Some(*e),
            OpMonitor::PerIterate(f) => Some(f(distance)),
        }
    }
}

/// A read-only view of one iterate, handed to observers.
pub struct Iterate<'a> {
    pub index: usize,
    pub frame: &'a Frame,
    pub frame_operator: &'a Matrix,
    pub frame_potential: f64,
    pub distance: f64,
    pub gradient: &'a Gradient,
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentRun {
    pub frame: Frame,
    pub trace: DescentTrace,
    /// The achieving partition when the run stopped on OP detection.
    pub op_partition: Option<Partition>,
    /// The ε in force when OP was detected.
    pub op_epsilon: Option<f64>,
}

/// Runs descent until tight, critical, out of budget, or (with `op_epsilon`)
/// ε-orthogonally partitionable.
pub fn run(f0: &Frame, cfg: &DescentConfig, op_epsilon: Option<f64>) -> Result<DescentRun> {
    let monitor = op_epsilon.map_or(OpMonitor::Off, OpMonitor::Fixed);
    run_observed(f0, cfg, monitor, |_| {})
}

/// [`run`] with a configurable OP monitor and a callback on every iterate.
pub fn run_observed(
    f0: &Frame,
    cfg: &DescentConfig,
    monitor: OpMonitor<'_>,
    mut observer: impl FnMut(&Iterate<'_>),
) -> Result<DescentRun> {
    let n = f0.len();
    let t = cfg.validate(n)?;
    let mut thinner = Thinner::new(cfg.trace);
    let mut records = Vec::new();
    let mut frame = f0.clone();
    let mut k = 0usize;

    loop {
        let s = frame_operator(&frame);
        let columns = frame.columns();
        let g = gradient_with(&columns, &s);
        let potential = potential_of(&s);
        let distance = tightness_gap(&s, frame.redundancy());
        let displacement = frame.distance_to(f0)?;
        let record = TraceRecord {
            iteration: k,
            frame_potential: potential,
            distance,
            grad_sq_norm: g.total_sq_norm,
            displacement,
        };
        observer(&Iterate {
            index: k,
            frame: &frame,
            frame_operator: &s,
            frame_potential: potential,
            distance,
            gradient: &g,
            displacement,
        });

        let mut stop = None;
        let mut op_partition = None;
        let mut op_eps = None;
        if distance <= cfg.untf_tol {
            stop = Some(Termination::Tolerance);
        } else if let Some(eps) = monitor
            .epsilon(distance)
            .filter(|_| k.is_multiple_of(cfg.op_check_stride))
        {
            if n >= 2 && eps > 0.0 {
                let (tau, p) = op_threshold(&frame)?;
                if tau < eps {
                    stop = Some(Termination::OpDetected);
                    op_partition = Some(p);
                    op_eps = Some(eps);
                }
            }
        }
        if stop.is_none() {
            if g.total_sq_norm <= cfg.gradient_tol * cfg.gradient_tol {
                stop = Some(Termination::GradientVanished);
            } else if k >= cfg.max_iter {
                stop = Some(Termination::Budget);
            }
        }

        if let Some(termination) = stop {
            records.push(record);
            log::debug!(
                "descent stopped at iteration {k}: {termination} (distance {distance:.3e})"
            );
            return Ok(DescentRun {
                frame,
                trace: DescentTrace {
                    records,
                    termination,
                    iterations: k,
                },
                op_partition,
                op_epsilon: op_eps,
            });
        }
        if thinner.keep(k) {
            records.push(record);
        }

        let next = geodesic_step(&frame, &g, t);
        let after = potential_of(&frame_operator(&next));
        let bound = potential - guaranteed_decrease(n, t, g.total_sq_norm) + DECREASE_SLACK;
        if after > bound {
            return Err(Error::DescentGuarantee { after, bound });
        }
        frame = next;
        k += 1;
    }
}

struct Thinner {
    mode: TraceMode,
    exponent: i32,
    next: usize,
}

impl Thinner {
    fn new(mode: TraceMode) -> Self {
        Self {
            mode,
            exponent: 0,
            next: 1,
        }
    }

    fn keep(&mut self, k: usize) -> bool {
        if self.mode == TraceMode::Full || k < THIN_AFTER {
            return true;
        }
        while self.next < k {
            self.exponent += 1;
            self.next = 1.1f64.powi(self.exponent).round() as usize;
        }
        self.next == k
    }
}

/// Linear-convergence bounds for `K` steps that never meet an ε-OP iterate:
/// returns `(displacement_bound, distance_bound)`.
pub fn convergence_bounds(
    m: usize,
    n: usize,
    t: f64,
    epsilon: f64,
    k: usize,
    d0: f64,
) -> Result<(f64, f64)> {
    check_step(t, n)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            interval: "(0, 1]".to_string(),
        });
    }
    if !(d0 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "d0 must be non-negative, got {d0}"
        )));
    }
    let mf = m as f64;
    let shrink = 1.0 - 2.0 * n as f64 * t;
    let displacement = 4.0 * mf.powi(4) * (n as f64).sqrt() / (shrink * epsilon * epsilon) * d0;
    let rate = 1.0 - t * shrink * epsilon * epsilon / mf.powi(4);
    let distance = rate.powf(k as f64 / 2.0) * d0;
    Ok((displacement, distance))
}
