//! The full tuning pipeline.
//!
//! When `gcd(M, N) = 1` and the input is close enough to tight, plain descent
//! converges to a UNTF. Otherwise descent runs while watching for iterates
//! that are ε-orthogonally partitionable. When one appears, the frame jumps to
//! an exactly partitionable one, each block is rewritten in coordinates of its
//! own subspace, and both blocks are tuned recursively. The tuned blocks are
//! then embedded back and form an orthogonal direct sum.

use num_integer::Integer;
use serde::Serialize;

use crate::descent::{run_observed, DescentConfig, DescentTrace, OpMonitor, Termination};
use crate::error::{Error, Result};
use crate::frame::{distance_from_tightness, Frame};
use crate::linalg::{self, Field, Matrix, C64};
use crate::partition::{jump_bound, jump_to_op, op_threshold};

/// Residual allowed when expressing a block in its subspace basis.
pub const SUBSPACE_TOL: f64 = 1e-9;

/// How often the coprime path confirms that iterates stay far from OP.
pub const COPRIME_SPOT_CHECK: usize = 1000;

/// Constants from the convergence and displacement guarantees for an `M x N`
/// frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuaranteeConstants {
    pub m: usize,
    pub n: usize,
    /// `1/(M⁸N⁴)`: gated coprime iterates are never this close to OP.
    pub coprime_epsilon: f64,
    /// `2/M³`, the bound on the squared distance for the coprime guarantee.
    pub coprime_gate: f64,
    /// `(2²¹M²⁷N¹⁴)^(-1)`, the distance under which the recursive pipeline's
    /// displacement bound is guaranteed.
    pub non_coprime_gate: f64,
}

impl GuaranteeConstants {
    pub fn new(m: usize, n: usize) -> Self {
        let (mf, nf) = (m as f64, n as f64);
        Self {
            m,
            n,
            coprime_epsilon: 1.0 / (mf.powi(8) * nf.powi(4)),
            coprime_gate: 2.0 / mf.powi(3),
            non_coprime_gate: 1.0 / (2f64.powi(21) * mf.powi(27) * nf.powi(14)),
        }
    }

    pub fn is_coprime(&self) -> bool {
        self.m.gcd(&self.n) == 1
    }

    /// `4M²⁰N^8.5/(1 - 2Nt) · d0`.
    pub fn coprime_displacement_bound(&self, t: f64, d0: f64) -> f64 {
        let (mf, nf) = (self.m as f64, self.n as f64);
        4.0 * mf.powi(20) * nf.powf(8.5) / (1.0 - 2.0 * nf * t) * d0
    }

    /// `3M^(6/7) N^(1/2) d^(1/7)`.
    pub fn non_coprime_displacement_bound(&self, d: f64) -> f64 {
        let (mf, nf) = (self.m as f64, self.n as f64);
        3.0 * mf.powf(6.0 / 7.0) * nf.sqrt() * d.powf(1.0 / 7.0)
    }
}

/// ε for the recursive pipeline, `2^(3/2) 3^(3/7) M^(11/7) d^(3/7)`, clamped
/// to `(0, 1/(2M)]`. Returns the value and whether it was clamped.
pub fn paper_epsilon(m: usize, _n: usize, d: f64) -> (f64, bool) {
    let raw = 2f64.powf(1.5)
        * 3f64.powf(3.0 / 7.0)
        * (m as f64).powf(11.0 / 7.0)
        * d.max(0.0).powf(3.0 / 7.0);
    let cap = 1.0 / (2.0 * m as f64);
    if raw > cap {
        (cap, true)
    } else {
        (raw, false)
    }
}

/// Coordinates `c_n = B* f_n` of vectors lying in the span of the orthonormal
/// columns of `basis`.
pub fn restrict_to_subspace(vectors: &[Vec<C64>], basis: &Matrix, field: Field) -> Result<Frame> {
    let k = basis.cols();
    let b = basis.columns();
    let mut coords = Vec::with_capacity(vectors.len());
    for (index, f) in vectors.iter().enumerate() {
        if f.len() != basis.rows() {
            return Err(Error::DimensionMismatch(format!(
                "vector {index} has length {}, basis rows {}",
                f.len(),
                basis.rows()
            )));
        }
        let c: Vec<C64> = b.iter().map(|e| linalg::inner(f, e)).collect();
        let back = embed_vector(&c, &b);
        let residual = linalg::norm(&f.iter().zip(&back).map(|(x, y)| x - y).collect::<Vec<_>>());
        if residual > SUBSPACE_TOL {
            return Err(Error::OutsideSubspace { index, residual });
        }
        coords.push(c);
    }
    let field = if field == Field::Real && basis.is_real() {
        Field::Real
    } else {
        Field::Complex
    };
    Frame::from_columns_normalized(field, k, &coords)
}

fn embed_vector(c: &[C64], basis: &[Vec<C64>]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); basis.first().map_or(0, Vec::len)];
    for (ck, e) in c.iter().zip(basis) {
        for (o, x) in out.iter_mut().zip(e) {
            *o += ck * x;
        }
    }
    out
}

/// Maps a frame in subspace coordinates back to the ambient space.
pub fn embed(f: &Frame, basis: &Matrix) -> Result<Vec<Vec<C64>>> {
    if f.dim() != basis.cols() {
        return Err(Error::DimensionMismatch(format!(
            "frame dimension {} vs basis of {} vectors",
            f.dim(),
            basis.cols()
        )));
    }
    let b = basis.columns();
    Ok(f.columns().iter().map(|c| embed_vector(c, &b)).collect())
}

/// Where the OP-monitoring ε comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EpsilonPolicy {
    /// [`paper_epsilon`] of each level's initial distance.
    #[default]
    Paper,
    /// [`paper_epsilon`] of the current iterate's distance.
    PaperPerIterate,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Untf,
    OpSplit,
    Stalled,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Untf => "untf",
            Outcome::OpSplit => "op-split",
            Outcome::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Bounds {
    /// Coprime displacement bound, when the coprime path ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coprime_displacement: Option<f64>,
    /// `3M^(6/7)N^(1/2)d^(1/7)` for the level's initial distance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub non_coprime_displacement: Option<f64>,
    /// `sqrt(2N)(Mε)^(1/3)`, when a jump happened.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jump: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Flags {
    pub coprime: bool,
    /// The squared distance was within the coprime gate.
    pub coprime_gate: bool,
    /// The distance was within the recursive pipeline's gate, so its
    /// displacement bound is guaranteed.
    pub bound_guaranteed: bool,
    /// Every evaluated bound held.
    pub bounds_hold: bool,
    /// ε was clamped to `1/(2M)`.
    pub epsilon_clamped: bool,
    /// Coprime spot checks found an iterate closer to OP than allowed.
    pub coprime_op_violation: bool,
    pub depth_cap_reached: bool,
}

/// Displacement of each phase of one level.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PhaseDisplacements {
    pub descent: f64,
    pub jump: f64,
    /// Combined displacement of the embedded children.
    pub children: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    #[serde(rename = "I")]
    pub block_i: Vec<usize>,
    #[serde(rename = "J")]
    pub block_j: Vec<usize>,
    pub bottleneck: f64,
    /// `(M_I, M_J)`.
    pub sub_dims: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneReport {
    pub outcome: Outcome,
    pub dim: usize,
    pub len: usize,
    pub depth: usize,
    /// Descent iterations at this level.
    pub iterations: usize,
    /// Descent iterations including all descendants.
    pub total_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    pub initial_distance: f64,
    pub final_distance: f64,
    /// `||F_final - F_0||_HS`.
    pub displacement: f64,
    pub phases: PhaseDisplacements,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub bounds: Bounds,
    pub flags: Flags,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionReport>,
    /// `|I|/M_I = |J|/M_J = N/M` after the jump.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equal_redundancy: Option<bool>,
    pub children: Vec<TuneReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TuneReport {
    fn new(f0: &Frame, depth: usize) -> Self {
        let d0 = distance_from_tightness(f0);
        Self {
            outcome: Outcome::Stalled,
            dim: f0.dim(),
            len: f0.len(),
            depth,
            iterations: 0,
            total_iterations: 0,
            termination: None,
            initial_distance: d0,
            final_distance: d0,
            displacement: 0.0,
            phases: PhaseDisplacements::default(),
            epsilon: None,
            bounds: Bounds::default(),
            flags: Flags {
                coprime: GuaranteeConstants::new(f0.dim(), f0.len()).is_coprime(),
                bounds_hold: true,
                ..Flags::default()
            },
            partition: None,
            equal_redundancy: None,
            children: Vec::new(),
            note: None,
        }
    }

    /// Deepest level below and including this one.
    pub fn max_depth(&self) -> usize {
        self.children
            .iter()
            .map(TuneReport::max_depth)
            .max()
            .unwrap_or(self.depth)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub frame: Frame,
    pub report: TuneReport,
    /// Trace of the top-level descent.
    pub trace: Option<DescentTrace>,
}

fn check_coprime_preconditions(f0: &Frame) -> Result<GuaranteeConstants> {
    let k = GuaranteeConstants::new(f0.dim(), f0.len());
    if !k.is_coprime() {
        return Err(Error::Precondition(format!(
            "gcd(M, N) = {} is not 1",
            k.m.gcd(&k.n)
        )));
    }
    let d = distance_from_tightness(f0);
    if d * d > k.coprime_gate {
        return Err(Error::Precondition(format!(
            "squared distance {:.3e} exceeds 2/M³ = {:.3e}",
            d * d,
            k.coprime_gate
        )));
    }
    Ok(k)
}

/// Descent for coprime `M, N` inside the coprime gate, with no OP monitoring.
pub fn tune_coprime(f0: &Frame, cfg: &DescentConfig) -> Result<TuneResult> {
    check_coprime_preconditions(f0)?;
    tune_coprime_at(f0, cfg, 0)
}

fn tune_coprime_at(f0: &Frame, cfg: &DescentConfig, depth: usize) -> Result<TuneResult> {
    let k = GuaranteeConstants::new(f0.dim(), f0.len());
    let t = cfg.validate(f0.len())?;
    let mut report = TuneReport::new(f0, depth);
    report.flags.coprime_gate = true;
    let mut violation = false;
    let run = run_observed(f0, cfg, OpMonitor::Off, |it| {
        if it.index % COPRIME_SPOT_CHECK == 0 && it.frame.len() >= 2 {
            if let Ok((tau, _)) = op_threshold(it.frame) {
                if tau < k.coprime_epsilon {
                    violation = true;
                }
            }
        }
    })?;
    report.flags.coprime_op_violation = violation;
    let displacement = run.frame.distance_to(f0)?;
    let bound = k.coprime_displacement_bound(t, report.initial_distance);
    report.bounds.coprime_displacement = Some(bound);
    report.flags.bounds_hold = displacement <= bound + 1e-12 && !violation;
    report.iterations = run.trace.iterations;
    report.total_iterations = run.trace.iterations;
    report.termination = Some(run.trace.termination);
    report.displacement = displacement;
    report.phases.descent = displacement;
    report.final_distance = run.trace.last().distance;
    report.outcome = if run.trace.termination == Termination::Tolerance {
        Outcome::Untf
    } else {
        Outcome::Stalled
    };
    if violation {
        log::warn!(
            "coprime iterate came within {:.3e} of OP",
            k.coprime_epsilon
        );
    }
    Ok(TuneResult {
        frame: run.frame,
        report,
        trace: Some(run.trace),
    })
}

/// Tunes `f0`, splitting into orthogonal blocks whenever an iterate is
/// ε-orthogonally partitionable.
///
/// Only configuration errors are returned as `Err`; every other outcome,
/// including failure to reach a UNTF, is described by the report.
pub fn tune(f0: &Frame, cfg: &DescentConfig, policy: EpsilonPolicy) -> Result<TuneResult> {
    cfg.validate(f0.len())?;
    if let EpsilonPolicy::Fixed(e) = policy {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::EpsilonOutOfRange {
                epsilon: e,
                interval: "(0, inf)".to_string(),
            });
        }
    }
    tune_level(f0, cfg, policy, 0, f0.dim())
}

fn tune_level(
    f0: &Frame,
    cfg: &DescentConfig,
    policy: EpsilonPolicy,
    depth: usize,
    max_depth: usize,
) -> Result<TuneResult> {
    let m = f0.dim();
    let n = f0.len();
    let k = GuaranteeConstants::new(m, n);
    let d0 = distance_from_tightness(f0);
    log::info!("level {depth}: M={m} N={n} distance {d0:.3e}");

    if k.is_coprime() && d0 * d0 <= k.coprime_gate {
        return tune_coprime_at(f0, cfg, depth);
    }

    let mut report = TuneReport::new(f0, depth);
    report.flags.bound_guaranteed = d0 <= k.non_coprime_gate;
    let cap = 1.0 / (2.0 * m as f64);
    let (eps, clamped) = match policy {
        EpsilonPolicy::Paper | EpsilonPolicy::PaperPerIterate => paper_epsilon(m, n, d0),
        EpsilonPolicy::Fixed(e) if e > cap => (cap, true),
        EpsilonPolicy::Fixed(e) => (e, false),
    };
    report.epsilon = Some(eps);
    report.flags.epsilon_clamped = clamped;
    if report.flags.bound_guaranteed {
        report.bounds.non_coprime_displacement = Some(k.non_coprime_displacement_bound(d0));
    }

    let per_iterate = move |d: f64| paper_epsilon(m, n, d).0;
    let monitor = match policy {
        EpsilonPolicy::PaperPerIterate => OpMonitor::PerIterate(&per_iterate),
        _ if eps > 0.0 => OpMonitor::Fixed(eps),
        _ => OpMonitor::Off,
    };
    let run = run_observed(f0, cfg, monitor, |_| {})?;
    report.iterations = run.trace.iterations;
    report.total_iterations = run.trace.iterations;
    report.termination = Some(run.trace.termination);
    report.phases.descent = run.frame.distance_to(f0)?;
    report.final_distance = run.trace.last().distance;

    let finish =
        |mut report: TuneReport, frame: Frame, trace: DescentTrace| -> Result<TuneResult> {
            report.displacement = frame.distance_to(f0)?;
            report.final_distance = distance_from_tightness(&frame);
            if let Some(b) = report.bounds.non_coprime_displacement {
                report.flags.bounds_hold &= report.displacement <= b + 1e-12;
            }
            Ok(TuneResult {
                frame,
                report,
                trace: Some(trace),
            })
        };

    match run.trace.termination {
        Termination::Tolerance => {
            report.outcome = Outcome::Untf;
            return finish(report, run.frame, run.trace);
        }
        Termination::GradientVanished | Termination::Budget => {
            report.note = Some(format!("descent stopped: {}", run.trace.termination));
            return finish(report, run.frame, run.trace);
        }
        Termination::OpDetected => {}
    }

    let partition = run
        .op_partition
        .clone()
        .expect("OP detection carries a partition");
    let eps_used = run.op_epsilon.expect("OP detection carries ε");
    if depth >= max_depth {
        report.flags.depth_cap_reached = true;
        report.note = Some(format!("recursion depth cap {max_depth} reached"));
        return finish(report, run.frame, run.trace);
    }
    let jump = match jump_to_op(&run.frame, eps_used, &partition) {
        Ok(j) => j,
        Err(e) => {
            report.note = Some(format!("jump failed: {e}"));
            return finish(report, run.frame, run.trace);
        }
    };
    report.epsilon = Some(eps_used);
    let jb = jump_bound(m, n, eps_used);
    report.bounds.jump = Some(jb);
    report.flags.bounds_hold &= jump.displacement <= jb + 1e-9;
    report.phases.jump = jump.displacement;
    let (m_i, m_j) = jump.sub_dims;
    let (n_i, n_j) = (jump.partition.block_i.len(), jump.partition.block_j.len());
    let equal = n_i * m == n * m_i && n_j * m == n * m_j;
    report.equal_redundancy = Some(equal);
    report.partition = Some(PartitionReport {
        block_i: jump.partition.block_i.clone(),
        block_j: jump.partition.block_j.clone(),
        bottleneck: jump.partition.bottleneck,
        sub_dims: jump.sub_dims,
    });
    if !equal && report.flags.bound_guaranteed {
        log::warn!("unequal redundancies after a jump inside the guaranteed regime");
    }

    let op_cols = jump.op_frame.columns();
    let pick = |idx: &[usize]| idx.iter().map(|&i| op_cols[i].clone()).collect::<Vec<_>>();
    let blocks = (|| -> Result<(Frame, Frame)> {
        Ok((
            restrict_to_subspace(&pick(&jump.partition.block_i), &jump.basis_i, f0.field())?,
            restrict_to_subspace(&pick(&jump.partition.block_j), &jump.basis_j, f0.field())?,
        ))
    })();
    let (sub_i, sub_j) = match blocks {
        Ok(b) => b,
        Err(e) => {
            report.note = Some(format!("restriction failed: {e}"));
            return finish(report, jump.op_frame, run.trace);
        }
    };

    let mut child_cfg = cfg.clone();
    child_cfg.untf_tol = cfg.untf_tol / std::f64::consts::SQRT_2;
    let (ri, rj) = rayon::join(
        || tune_level(&sub_i, &child_cfg, policy, depth + 1, max_depth),
        || tune_level(&sub_j, &child_cfg, policy, depth + 1, max_depth),
    );
    let (ri, rj) = (ri?, rj?);

    let mut cols = op_cols.clone();
    for (child, basis, idx) in [
        (&ri, &jump.basis_i, &jump.partition.block_i),
        (&rj, &jump.basis_j, &jump.partition.block_j),
    ] {
        for (&k, v) in idx.iter().zip(embed(&child.frame, basis)?) {
            cols[k] = v;
        }
    }
    let assembled = Frame::from_columns_normalized(
        f0.field().join(ri.frame.field()).join(rj.frame.field()),
        m,
        &cols,
    )?;
    let assembled = if f0.field() == Field::Real && assembled.synthesis().is_real() {
        Frame::new(Field::Real, assembled.into_synthesis())?
    } else {
        assembled
    };
    report.phases.children = assembled.distance_to(&jump.op_frame)?;
    report.total_iterations += ri.report.total_iterations + rj.report.total_iterations;
    let children_tight =
        ri.report.outcome != Outcome::Stalled && rj.report.outcome != Outcome::Stalled;
    let distance = distance_from_tightness(&assembled);
    report.outcome = if children_tight && distance <= cfg.untf_tol {
        Outcome::OpSplit
    } else {
        report.note = Some(if !children_tight {
            "a block did not reach a tight frame".to_string()
        } else {
            format!("blocks are tight but their redundancies differ (distance {distance:.3e})")
        });
        Outcome::Stalled
    };
    report.flags.bounds_hold &= ri.report.flags.bounds_hold && rj.report.flags.bounds_hold;
    report.children = vec![ri.report, rj.report];
    finish(report, assembled, run.trace)
}
