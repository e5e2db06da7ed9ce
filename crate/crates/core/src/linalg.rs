//! Small dense linear algebra over real and complex scalars.
//!
//! Every matrix stores `Complex64` entries in row-major order; real data
//! simply carries zero imaginary parts, which complex arithmetic preserves
//! exactly. All reductions run in ascending index order so results are
//! bit-reproducible.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Scalar field of the underlying Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// The field able to hold both operands.
    pub fn join(self, other: Field) -> Field {
        if self == Field::Real && other == Field::Real {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                row: k / cols,
                col: k % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        if let Some(k) = columns.iter().position(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch(format!(
                "column {k} has length {}, expected {rows}",
                columns[k].len()
            )));
        }
        let cols = columns.len();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for c in columns {
                data.push(c[i]);
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<C64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C64]) {
        for (i, &x) in v.iter().enumerate() {
            self.set(i, j, x);
        }
    }

    /// Columns `range` as a new matrix.
    pub fn column_block(&self, columns: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, columns.len(), |i, j| self.get(i, columns[j]))
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.same_shape(other)?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn same_shape(&self, other: &Matrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// Standard matrix product.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..a.cols {
                acc += a.get(i, k) * b.get(k, j);
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Conjugate transpose.
pub fn adjoint(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.cols, a.rows, |i, j| a.get(j, i).conj())
}

/// Hilbert–Schmidt (Frobenius) norm.
pub fn hs_norm(a: &Matrix) -> f64 {
    a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<x, y> = Σ x_k conj(y_k)`, linear in the first argument.
pub fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm_sqr(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    norm_sqr(x).sqrt()
}

pub fn mat_vec(a: &Matrix, x: &[C64]) -> Vec<C64> {
    (0..a.rows)
        .map(|i| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &xj) in x.iter().enumerate() {
                acc += a.get(i, j) * xj;
            }
            acc
        })
        .collect()
}

/// Eigen-data of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `eigenvalues`.
    pub eigenvectors: Matrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }
}

const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;
const HERMITIAN_TOL: f64 = 1e-12;

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies
/// the classical real rotation, so real symmetric input stays real throughout.
/// Eigenvectors are phase-normalized so that their dominant component is real
/// and positive; within a (numerically) repeated eigenvalue they are ordered by
/// the index of that dominant component.
pub fn hermitian_eig(a: &Matrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let scale = hs_norm(a);
    let asymmetry = hs_norm(&a.sub(&adjoint(a))?);
    let allowed = HERMITIAN_TOL * (1.0 + scale);
    if asymmetry > allowed {
        return Err(Error::NotHermitian { asymmetry, allowed });
    }

    // Work on the exactly Hermitian part.
    let mut w = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(a.get(i, i).re, 0.0)
        } else {
            (a.get(i, j) + a.get(j, i).conj()) * 0.5
        }
    });
    let mut v = Matrix::identity(n);

    let off_norm = |w: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += w.get(i, j).norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&w) <= JACOBI_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w.get(p, q);
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let app = w.get(p, p).re;
                let aqq = w.get(q, q).re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let ph_conj = phase.conj();

                // W <- W G with G_pp = c, G_pq = s, G_qp = -s e^{-iφ}, G_qq = c e^{-iφ}
                for k in 0..n {
                    let wkp = w.get(k, p);
                    let wkq = w.get(k, q);
                    w.set(k, p, wkp * c - wkq * ph_conj * s);
                    w.set(k, q, wkp * s + wkq * ph_conj * c);
                }
                // W <- G* W
                for k in 0..n {
                    let wpk = w.get(p, k);
                    let wqk = w.get(q, k);
                    w.set(p, k, wpk * c - wqk * phase * s);
                    w.set(q, k, wpk * s + wqk * phase * c);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c - vkq * ph_conj * s);
                    v.set(k, q, vkp * s + vkq * ph_conj * c);
                }
                w.set(p, q, C64::new(0.0, 0.0));
                w.set(q, p, C64::new(0.0, 0.0));
                w.set(p, p, C64::new(w.get(p, p).re, 0.0));
                w.set(q, q, C64::new(w.get(q, q).re, 0.0));
            }
        }
    }
    if !converged {
        let off = off_norm(&w);
        if off > JACOBI_TOL * scale {
            return Err(Error::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                off,
            });
        }
    }

    // Phase-normalize each eigenvector and record its dominant index.
    let mut entries: Vec<(f64, usize, Vec<C64>)> = (0..n)
        .map(|k| {
            let mut col = v.column(k);
            let mut dominant = 0;
            let mut best = -1.0;
            for (i, z) in col.iter().enumerate() {
                let m = z.norm();
                if m > best * (1.0 + 1e-12) {
                    best = m;
                    dominant = i;
                }
            }
            let lead = col[dominant];
            if lead.norm() > 0.0 {
                let rot = lead.conj() / lead.norm();
                for z in &mut col {
                    *z *= rot;
                }
                col[dominant] = C64::new(col[dominant].re, 0.0);
            }
            (w.get(k, k).re, dominant, col)
        })
        .collect();

    entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // Within clusters of numerically equal eigenvalues order by dominant index.
    let tie = 1e-12 * scale.max(1.0);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && entries[end].0 - entries[end - 1].0 <= tie {
            end += 1;
        }
        entries[start..end].sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
        start = end;
    }

    let eigenvalues = entries.iter().map(|e| e.0).collect();
    let columns: Vec<Vec<C64>> = entries.into_iter().map(|e| e.2).collect();
    let eigenvectors = Matrix::from_columns(n, &columns)?;
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(rows: usize, cols: usize, d: &[f64]) -> Matrix {
        Matrix::from_real(rows, cols, d).unwrap()
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng, complex: bool) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(rng.random_range(-2.0..2.0), 0.0));
            for j in (i + 1)..n {
                let im = if complex {
                    rng.random_range(-1.0..1.0)
                } else {
                    0.0
                };
                let z = C64::new(rng.random_range(-1.0..1.0), im);
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    fn check_decomposition(a: &Matrix, eig: &EigenDecomposition) {
        let n = a.rows();
        let vecs = &eig.eigenvectors;
        let lam = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(eig.eigenvalues[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let av = matmul(a, vecs).unwrap();
        let vl = matmul(vecs, &lam).unwrap();
        let resid = hs_norm(&av.sub(&vl).unwrap());
        assert!(resid <= 1e-9 * hs_norm(a).max(1e-300), "residual {resid}");
        let gram = matmul(&adjoint(vecs), vecs).unwrap();
        let orth = hs_norm(&gram.sub(&Matrix::identity(n)).unwrap());
        assert!(orth <= 1e-10, "orthonormality {orth}");
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn matmul_examples() {
        let x = real(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(matmul(&Matrix::identity(2), &x).unwrap(), x);

        let p = real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e1 = real(2, 1, &[1.0, 0.0]);
        assert_eq!(matmul(&p, &e1).unwrap(), real(2, 1, &[0.0, 1.0]));

        let a = real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = real(2, 1, &[5.0, 6.0]);
        assert_eq!(matmul(&a, &b).unwrap(), real(2, 1, &[17.0, 39.0]));
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = real(2, 2, &[1.0; 4]);
        let b = real(3, 1, &[1.0; 3]);
        assert!(matches!(matmul(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn adjoint_examples() {
        let a = real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(adjoint(&a), real(2, 2, &[1.0, 3.0, 2.0, 4.0]));

        let i = Matrix::new(1, 1, vec![C64::new(0.0, 1.0)]).unwrap();
        assert_eq!(adjoint(&i).get(0, 0), C64::new(0.0, -1.0));

        let col = real(3, 1, &[1.0, 2.0, 3.0]);
        let row = adjoint(&col);
        assert_eq!((row.rows(), row.cols()), (1, 3));
        assert_eq!(adjoint(&row), col);
    }

    #[test]
    fn hs_norm_examples() {
        assert_eq!(hs_norm(&Matrix::zeros(3, 2)), 0.0);
        assert!((hs_norm(&Matrix::identity(5)) - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(hs_norm(&real(1, 2, &[3.0, 4.0])), 5.0);
    }

    #[test]
    fn hs_norm_matches_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = Matrix::from_fn(3, 4, |_, _| {
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let tr = matmul(&adjoint(&a), &a).unwrap().trace().re;
            let h = hs_norm(&a);
            assert!((tr - h * h).abs() <= 1e-12 * tr);
        }
    }

    #[test]
    fn eig_diagonal() {
        let a = real(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let eig = hermitian_eig(&a).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 3.0]);
        assert_eq!(
            eig.eigenvector(0),
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]
        );
        assert_eq!(
            eig.eigenvector(1),
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        );
    }

    #[test]
    fn eig_two_by_two() {
        let a = real(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let eig = hermitian_eig(&a).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 3.0).abs() < 1e-14);
        check_decomposition(&a, &eig);
    }

    #[test]
    fn eig_identity() {
        let eig = hermitian_eig(&Matrix::identity(4)).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l == 1.0));
        check_decomposition(&Matrix::identity(4), &eig);
    }

    #[test]
    fn eig_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            for complex in [false, true] {
                let a = random_hermitian(n, &mut rng, complex);
                let eig = hermitian_eig(&a).unwrap();
                check_decomposition(&a, &eig);
                if !complex {
                    assert!(eig.eigenvectors.is_real());
                }
            }
        }
    }

    #[test]
    fn eig_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(6, &mut rng, true);
        let e1 = hermitian_eig(&a).unwrap();
        let e2 = hermitian_eig(&a).unwrap();
        let bits = |e: &EigenDecomposition| {
            let mut v: Vec<u64> = e.eigenvalues.iter().map(|x| x.to_bits()).collect();
            v.extend(
                e.eigenvectors
                    .data()
                    .iter()
                    .flat_map(|z| [z.re.to_bits(), z.im.to_bits()]),
            );
            v
        };
        assert_eq!(bits(&e1), bits(&e2));
    }

    #[test]
    fn eig_rejects_bad_input() {
        assert!(matches!(
            hermitian_eig(&real(2, 3, &[0.0; 6])),
            Err(Error::NotSquare { .. })
        ));
        assert!(matches!(
            hermitian_eig(&real(2, 2, &[1.0, 2.0, 0.0, 1.0])),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn new_rejects_non_finite() {
        assert!(matches!(
            Matrix::from_real(1, 2, &[1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }
}
