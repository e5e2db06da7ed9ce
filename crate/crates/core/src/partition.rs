//! Orthogonal partitionability.
//!
//! A frame is ε-orthogonally partitionable (ε-OP) when its indices split into
//! two nonempty blocks whose cross inner products are all below ε in modulus.
//! The smallest achievable maximum cross product, `τ(F)`, is the minimum edge
//! of a maximum spanning tree of the complete graph weighted by
//! `|<f_i, f_j>|`, so `F` is ε-OP exactly when `τ(F) < ε`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::{frame_operator_of, Frame};
use crate::linalg::{self, hermitian_eig, Matrix, C64};

/// A nontrivial split of column indices into two blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    #[serde(rename = "I")]
    pub block_i: Vec<usize>,
    #[serde(rename = "J")]
    pub block_j: Vec<usize>,
    /// Largest `|<f_i, f_j>|` across the blocks.
    pub bottleneck: f64,
}

impl Partition {
    /// Builds a partition of `0..n` from block `I`, computing its bottleneck.
    pub fn from_block(f: &Frame, block_i: &[usize]) -> Result<Self> {
        let n = f.len();
        let mut in_i = vec![false; n];
        for &i in block_i {
            if i >= n || in_i[i] {
                return Err(Error::InvalidPartition(format!(
                    "index {i} repeated or out of range for N = {n}"
                )));
            }
            in_i[i] = true;
        }
        let block_i: Vec<usize> = (0..n).filter(|&k| in_i[k]).collect();
        let block_j: Vec<usize> = (0..n).filter(|&k| !in_i[k]).collect();
        if block_i.is_empty() || block_j.is_empty() {
            return Err(Error::InvalidPartition(
                "both blocks must be nonempty".to_string(),
            ));
        }
        let bottleneck = cross_bottleneck(&f.columns(), &block_i, &block_j);
        Ok(Self {
            block_i,
            block_j,
            bottleneck,
        })
    }

    pub fn swapped(&self) -> Self {
        Self {
            block_i: self.block_j.clone(),
            block_j: self.block_i.clone(),
            bottleneck: self.bottleneck,
        }
    }
}

fn cross_bottleneck(cols: &[Vec<C64>], block_i: &[usize], block_j: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for &i in block_i {
        for &j in block_j {
            worst = worst.max(linalg::inner(&cols[i], &cols[j]).norm());
        }
    }
    worst
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// `τ(F)`: the minimum over nontrivial partitions of the largest cross inner
/// product, with an achieving partition.
///
/// Edges are merged in descending weight (ties in ascending `(i, j)` order);
/// the edge that joins the last two components has weight `τ`, and those two
/// components are returned as `I` (the one holding index 0) and `J`.
pub fn op_threshold(f: &Frame) -> Result<(f64, Partition)> {
    let n = f.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "a partition needs at least two vectors, got {n}"
        )));
    }
    let cols = f.columns();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((linalg::inner(&cols[i], &cols[j]).norm(), i, j));
        }
    }
    // Stable sort keeps the lexicographic order among equal weights.
    edges.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut dsu = DisjointSet::new(n);
    let mut components = n;
    for &(w, i, j) in &edges {
        if dsu.find(i) == dsu.find(j) {
            continue;
        }
        if components == 2 {
            let root0 = dsu.find(0);
            let block_i: Vec<usize> = (0..n).filter(|&k| dsu.find(k) == root0).collect();
            let block_j: Vec<usize> = (0..n).filter(|&k| dsu.find(k) != root0).collect();
            return Ok((
                w,
                Partition {
                    block_i,
                    block_j,
                    bottleneck: w,
                },
            ));
        }
        dsu.union(i, j);
        components -= 1;
    }
    unreachable!("the complete graph on {n} >= 2 vertices is connected")
}

/// The achieving partition when `F` is ε-OP (`τ(F) < ε`).
pub fn is_epsilon_op(f: &Frame, epsilon: f64) -> Result<Option<Partition>> {
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            interval: "(0, inf)".to_string(),
        });
    }
    let (tau, p) = op_threshold(f)?;
    Ok((tau < epsilon).then_some(p))
}

/// Exhaustive `τ(F)` over all `2^(N-1) - 1` nontrivial bipartitions.
///
/// Test oracle for [`op_threshold`]; limited to `N <= 16`.
pub fn brute_force_op_threshold(f: &Frame) -> Result<(f64, Partition)> {
    let n = f.len();
    if !(2..=16).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "brute force needs 2 <= N <= 16, got {n}"
        )));
    }
    // Inner products through the Gram matrix, independent of the graph route.
    let g = crate::linalg::matmul(&crate::linalg::adjoint(f.synthesis()), f.synthesis())?;
    let mut best: Option<(f64, u32)> = None;
    // Index n-1 is always in J, so each bipartition is visited once.
    for mask in 1u32..(1u32 << (n - 1)) {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            if mask & (1 << i) == 0 {
                continue;
            }
            for j in 0..n {
                if j < n - 1 && mask & (1 << j) != 0 {
                    continue;
                }
                worst = worst.max(g.get(j, i).norm());
            }
        }
        if best.is_none_or(|(b, _)| worst < b) {
            best = Some((worst, mask));
        }
    }
    let (tau, mask) = best.expect("at least one bipartition");
    let block_i: Vec<usize> = (0..n)
        .filter(|&k| k < n - 1 && mask & (1 << k) != 0)
        .collect();
    let block_j: Vec<usize> = (0..n)
        .filter(|&k| k == n - 1 || mask & (1 << k) == 0)
        .collect();
    Ok((
        tau,
        Partition {
            block_i,
            block_j,
            bottleneck: tau,
        },
    ))
}

/// Result of projecting an ε-OP frame onto an exactly OP one.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpResult {
    pub op_frame: Frame,
    /// The partition as used: `I` is the projected (larger) block.
    pub partition: Partition,
    pub displacement: f64,
    /// `(M_I, M_J)` with `M_I + M_J = M`.
    pub sub_dims: (usize, usize),
    /// Orthonormal basis of the range of `P` (top eigenvectors of `F_I F_I*`,
    /// eigenvalues descending), `M x M_I`.
    pub basis_i: Matrix,
    /// Orthonormal basis of the range of `I - P`, `M x M_J`.
    pub basis_j: Matrix,
    /// The eigenvalue threshold `λ' = (2N/3)(ε²/M)^(1/3)`.
    pub lambda_prime: f64,
}

const ZERO_PROJECTION: f64 = 1e-14;

fn project(basis: &[Vec<C64>], f: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); f.len()];
    for e in basis {
        let c = linalg::inner(f, e);
        for (o, x) in out.iter_mut().zip(e) {
            *o += c * x;
        }
    }
    out
}

fn unit_or(v: Vec<C64>, fallback: &[C64]) -> Vec<C64> {
    let n = linalg::norm(&v);
    if n <= ZERO_PROJECTION {
        fallback.to_vec()
    } else {
        v.into_iter().map(|z| z / n).collect()
    }
}

/// Replaces an ε-OP frame by a nearby exactly orthogonally partitionable one.
///
/// With `|I| >= |J|` (blocks are swapped otherwise), `P` projects onto the
/// eigenvectors of `F_I F_I*` whose eigenvalues reach `λ'`; block `I` is
/// projected by `P` and block `J` by `I - P`, each vector renormalized. A
/// vector whose projection vanishes is replaced by the first basis vector of
/// its target subspace. Ties `|I| = |J|` keep the blocks as given.
pub fn jump_to_op(f: &Frame, epsilon: f64, p: &Partition) -> Result<JumpResult> {
    let m = f.dim();
    let n = f.len();
    let max_eps = 1.0 / (2.0 * m as f64);
    if !(epsilon > 0.0 && epsilon <= max_eps) {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            interval: format!("(0, {max_eps}]"),
        });
    }
    let p = Partition::from_block(f, &p.block_i)?;
    if p.bottleneck >= epsilon {
        return Err(Error::NotEpsilonPartitionable {
            bottleneck: p.bottleneck,
            epsilon,
        });
    }
    let p = if p.block_i.len() < p.block_j.len() {
        p.swapped()
    } else {
        p
    };

    let block_i = f.synthesis().column_block(&p.block_i);
    let eig = hermitian_eig(&frame_operator_of(&block_i))?;
    let lambda_prime = (2.0 * n as f64 / 3.0) * (epsilon * epsilon / m as f64).cbrt();
    // Eigenvalues ascending; reverse for descending order.
    let descending: Vec<usize> = (0..m).rev().collect();
    let m_i = descending
        .iter()
        .filter(|&&k| eig.eigenvalues[k] >= lambda_prime)
        .count();
    if m_i == 0 || m_i == m {
        return Err(Error::DegenerateSplit(format!(
            "threshold λ' = {lambda_prime:.6e} selects {m_i} of {m} eigenvalues {:?}",
            eig.eigenvalues
        )));
    }
    let top: Vec<Vec<C64>> = descending[..m_i]
        .iter()
        .map(|&k| eig.eigenvector(k))
        .collect();
    let rest: Vec<Vec<C64>> = descending[m_i..]
        .iter()
        .map(|&k| eig.eigenvector(k))
        .collect();

    let cols = f.columns();
    let mut out = cols.clone();
    for &i in &p.block_i {
        out[i] = unit_or(project(&top, &cols[i]), &top[0]);
    }
    for &j in &p.block_j {
        out[j] = unit_or(project(&rest, &cols[j]), &rest[0]);
    }
    let op_frame = Frame::from_columns_normalized(f.field(), m, &out)?;
    let displacement = op_frame.distance_to(f)?;
    let partition = Partition {
        bottleneck: cross_bottleneck(&op_frame.columns(), &p.block_i, &p.block_j),
        block_i: p.block_i,
        block_j: p.block_j,
    };
    Ok(JumpResult {
        op_frame,
        partition,
        displacement,
        sub_dims: (m_i, m - m_i),
        basis_i: Matrix::from_columns(m, &top)?,
        basis_j: Matrix::from_columns(m, &rest)?,
        lambda_prime,
    })
}

/// `sqrt(2N) (M ε)^(1/3)`, the guaranteed bound on a jump's displacement.
pub fn jump_bound(m: usize, n: usize, epsilon: f64) -> f64 {
    (2.0 * n as f64).sqrt() * (m as f64 * epsilon).cbrt()
}
