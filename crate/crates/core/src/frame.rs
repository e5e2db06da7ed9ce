//! Unit norm frames and their scalar functionals.
//!
//! A [`Frame`] is an `M x N` synthesis matrix with unit-norm columns. The
//! functionals here measure how far it is from being tight:
//!
//! ```text
//! FP(F)                = ||F*F||²_HS
//! ||FF* - (N/M) I||²_HS = FP(F) - N²/M
//! ```

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, adjoint, hermitian_eig, hs_norm, matmul, Field, Matrix, C64};

/// Tolerance on column norms for a matrix to count as a unit norm frame.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// Default absolute tolerance on the distance from tightness.
pub const DEFAULT_UNTF_TOL: f64 = 1e-8;

/// A finite sequence of unit vectors, stored as the columns of its synthesis
/// operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    field: Field,
    synthesis: Matrix,
}

impl Frame {
    /// Wraps a synthesis matrix, checking unit norms (and realness for
    /// [`Field::Real`]).
    pub fn new(field: Field, synthesis: Matrix) -> Result<Self> {
        let synthesis = match field {
            Field::Real => {
                let mut s = synthesis;
                for i in 0..s.rows() {
                    for j in 0..s.cols() {
                        let z = s.get(i, j);
                        if z.im.abs() > UNIT_NORM_TOL {
                            return Err(Error::ImaginaryInRealFrame { row: i, col: j });
                        }
                        s.set(i, j, C64::new(z.re, 0.0));
                    }
                }
                s
            }
            Field::Complex => synthesis,
        };
        for j in 0..synthesis.cols() {
            let n = linalg::norm(&synthesis.column(j));
            if (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::NotUnitNorm { column: j, norm: n });
            }
        }
        Ok(Self { field, synthesis })
    }

    pub fn from_columns(field: Field, dim: usize, columns: &[Vec<C64>]) -> Result<Self> {
        Self::new(field, Matrix::from_columns(dim, columns)?)
    }

    /// Builds a frame from columns, renormalizing each one.
    pub fn from_columns_normalized(field: Field, dim: usize, columns: &[Vec<C64>]) -> Result<Self> {
        normalize_columns(field, &Matrix::from_columns(dim, columns)?)
    }

    pub fn from_real_columns(columns: &[&[f64]]) -> Result<Self> {
        let dim = columns.first().map_or(0, |c| c.len());
        let cols: Vec<Vec<C64>> = columns
            .iter()
            .map(|c| c.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_columns(Field::Real, dim, &cols)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Dimension `M` of the ambient space.
    pub fn dim(&self) -> usize {
        self.synthesis.rows()
    }

    /// Number of vectors `N`.
    pub fn len(&self) -> usize {
        self.synthesis.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The redundancy `N / M`.
    pub fn redundancy(&self) -> f64 {
        self.len() as f64 / self.dim() as f64
    }

    pub fn synthesis(&self) -> &Matrix {
        &self.synthesis
    }

    pub fn into_synthesis(self) -> Matrix {
        self.synthesis
    }

    pub fn column(&self, n: usize) -> Vec<C64> {
        self.synthesis.column(n)
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        self.synthesis.columns()
    }

    /// `||self - other||_HS`.
    pub fn distance_to(&self, other: &Frame) -> Result<f64> {
        Ok(hs_norm(&self.synthesis.sub(&other.synthesis)?))
    }
}

/// Scalar summary of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub dim: usize,
    pub len: usize,
    /// Eigenvalues of `FF*`, ascending.
    pub eigenvalues: Vec<f64>,
    pub frame_potential: f64,
    pub distance_from_tightness: f64,
    pub is_untf: bool,
    pub lower_frame_bound: f64,
    pub upper_frame_bound: f64,
}

/// Scales every column to unit norm.
pub fn normalize_columns(field: Field, raw: &Matrix) -> Result<Frame> {
    let mut out = raw.clone();
    for j in 0..raw.cols() {
        let col = raw.column(j);
        let n = linalg::norm(&col);
        if n <= 1e-14 {
            return Err(Error::ZeroColumn { column: j });
        }
        let scaled: Vec<C64> = col.iter().map(|z| z / n).collect();
        out.set_column(j, &scaled);
    }
    Frame::new(field, out)
}

/// The frame operator `FF*`, an `M x M` Hermitian matrix.
pub fn frame_operator(f: &Frame) -> Matrix {
    frame_operator_of(f.synthesis())
}

pub(crate) fn frame_operator_of(s: &Matrix) -> Matrix {
    let m = s.rows();
    let n = s.cols();
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += s.get(i, k) * s.get(j, k).conj();
            }
            if i == j {
                out.set(i, i, C64::new(acc.re, 0.0));
            } else {
                out.set(i, j, acc);
                out.set(j, i, acc.conj());
            }
        }
    }
    out
}

/// The Gram matrix `F*F` of pairwise inner products.
pub fn gram(f: &Frame) -> Matrix {
    matmul(&adjoint(f.synthesis()), f.synthesis()).expect("F* and F are conformable")
}

/// `FP(F) = ||F*F||²_HS`.
pub fn frame_potential(f: &Frame) -> f64 {
    let g = hs_norm(&gram(f));
    g * g
}

/// `||FF* - (N/M) I||_HS`, computed from the frame operator.
pub fn distance_from_tightness(f: &Frame) -> f64 {
    tightness_gap(&frame_operator(f), f.redundancy())
}

pub(crate) fn tightness_gap(s: &Matrix, redundancy: f64) -> f64 {
    let m = s.rows();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let z = s.get(i, j);
            acc += if i == j {
                let d = z.re - redundancy;
                d * d + z.im * z.im
            } else {
                z.norm_sqr()
            };
        }
    }
    acc.sqrt()
}

pub fn analyze(f: &Frame, untf_tol: f64) -> Result<FrameAnalysis> {
    if !(untf_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "UNTF tolerance must be positive, got {untf_tol}"
        )));
    }
    let s = frame_operator(f);
    let eig = hermitian_eig(&s)?;
    let distance = tightness_gap(&s, f.redundancy());
    let lower = eig.eigenvalues[0];
    let upper = *eig.eigenvalues.last().expect("M >= 1");
    Ok(FrameAnalysis {
        dim: f.dim(),
        len: f.len(),
        eigenvalues: eig.eigenvalues,
        frame_potential: frame_potential(f),
        distance_from_tightness: distance,
        is_untf: distance <= untf_tol,
        lower_frame_bound: lower,
        upper_frame_bound: upper,
    })
}

/// Rows `0..M` of the `N x N` DFT, scaled by `1/sqrt(M)`.
pub fn harmonic_frame(m: usize, n: usize) -> Result<Frame> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "harmonic frame needs 1 <= M <= N, got M={m}, N={n}"
        )));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let s = Matrix::from_fn(m, n, |r, c| {
        // Reduce the exponent mod N before scaling so the phase stays exact.
        let k = (r * c) % n;
        C64::from_polar(scale, 2.0 * PI * k as f64 / n as f64)
    });
    normalize_columns(Field::Complex, &s)
}

/// Standard normal deviates by the Box–Muller transform over a ChaCha8 stream.
pub(crate) struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub(crate) fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub(crate) fn scalar(&mut self, field: Field) -> C64 {
        match field {
            Field::Real => C64::new(self.sample(), 0.0),
            Field::Complex => {
                let re = self.sample();
                C64::new(re, self.sample())
            }
        }
    }

    pub(crate) fn vector(&mut self, field: Field, len: usize) -> Vec<C64> {
        (0..len).map(|_| self.scalar(field)).collect()
    }
}

/// Columns of i.i.d. Gaussian entries, normalized. Entries are drawn column by
/// column, real part before imaginary part, from `ChaCha8Rng::seed_from_u64(seed)`.
pub fn random_frame(m: usize, n: usize, seed: u64, field: Field) -> Result<Frame> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "random frame needs 1 <= M <= N, got M={m}, N={n}"
        )));
    }
    let mut g = Gaussian::new(seed);
    let cols: Vec<Vec<C64>> = (0..n).map(|_| g.vector(field, m)).collect();
    Frame::from_columns_normalized(field, m, &cols)
}

/// Moves every column by geodesic angle `magnitude` along a random tangent
/// direction.
pub fn perturb(f: &Frame, magnitude: f64, seed: u64) -> Result<Frame> {
    if !(magnitude >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturbation magnitude must be non-negative, got {magnitude}"
        )));
    }
    if magnitude == 0.0 {
        return Ok(f.clone());
    }
    let mut g = Gaussian::new(seed);
    let (s, c) = magnitude.sin_cos();
    let cols: Vec<Vec<C64>> = f
        .columns()
        .into_iter()
        .map(|col| {
            let w = g.vector(f.field(), f.dim());
            let proj = linalg::inner(&w, &col);
            let tangent: Vec<C64> = w.iter().zip(&col).map(|(a, b)| a - proj * b).collect();
            let tn = linalg::norm(&tangent);
            if tn <= 1e-14 {
                return col;
            }
            col.iter()
                .zip(&tangent)
                .map(|(x, u)| x * c + u * (s / tn))
                .collect()
        })
        .collect();
    Frame::from_columns_normalized(f.field(), f.dim(), &cols)
}

/// The closest tight frame with frame bound `N/M` in Hilbert–Schmidt norm:
/// `sqrt(N/M) (FF*)^{-1/2} F`. Columns are generally not unit norm.
pub fn nearest_tight_frame(f: &Frame) -> Result<Matrix> {
    let eig = hermitian_eig(&frame_operator(f))?;
    let smallest = eig.eigenvalues[0];
    if smallest <= 1e-12 {
        return Err(Error::RankDeficient { smallest });
    }
    let m = f.dim();
    let v = &eig.eigenvectors;
    let scale = f.redundancy().sqrt();
    let inv_sqrt = Matrix::from_fn(m, m, |i, j| {
        let mut acc = C64::new(0.0, 0.0);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            acc += v.get(i, k) * v.get(j, k).conj() * (scale / lam.sqrt());
        }
        acc
    });
    matmul(&inv_sqrt, f.synthesis())
}

/// The two-dimensional four-vector family
///
/// ```text
/// F(θ) = [ cos θ   cos θ   0  0 ]
///        [ sin θ  -sin θ   1  1 ]
/// ```
///
/// whose gradient flow collapses onto two copies of the standard basis.
pub fn example_theta(theta: f64) -> Frame {
    let (s, c) = theta.sin_cos();
    Frame::from_real_columns(&[&[c, s], &[c, -s], &[0.0, 1.0], &[0.0, 1.0]])
        .expect("columns are unit norm")
}

/// The UNTF closest to [`example_theta`] for small `θ`:
///
/// ```text
/// [ cos θ/2   cos θ/2  -sin θ/2  sin θ/2 ]
/// [ sin θ/2  -sin θ/2   cos θ/2  cos θ/2 ]
/// ```
pub fn example_theta_tight(theta: f64) -> Frame {
    let (s, c) = (theta / 2.0).sin_cos();
    Frame::from_real_columns(&[&[c, s], &[c, -s], &[-s, c], &[s, c]])
        .expect("columns are unit norm")
}
