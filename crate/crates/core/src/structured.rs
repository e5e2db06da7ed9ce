//! Frames that are orbits of a few generators under a group of unitaries.
//!
//! If every unitary `U_i` commutes with the frame operator of the orbit
//! `{U_i f_j}`, the gradient of vector `U_i f_j` is `U_i g_j`. A descent step
//! therefore only needs to move the generators, and the stepped orbit is the
//! same frame that a full step would produce.
//!
//! Two lattices are built in:
//!
//! * [`GaborSystem`]: `T^{Ai} E^{Bj} f` for `0 <= i < C`, `0 <= j < D` with
//!   `M = AC = BD`.
//! * [`FilterBank`]: `T^{Ai} f_j` for `0 <= i < C` with `M = AC`.
//!
//! Here `(Tv)(m) = v(m - 1)` and `(Ev)(m) = e^{2πim/M} v(m)`, indices mod `M`.

use std::f64::consts::PI;
use std::path::Path;

use serde_json::Value;

use crate::descent::geodesic_move;
use crate::error::{Error, Result};
use crate::frame::{tightness_gap, Frame, UNIT_NORM_TOL};
use crate::io::{parse_usize, parse_vector, write_vector};
use crate::linalg::{self, hs_norm, matmul, Field, Matrix, C64};

/// Tolerance for [`commutation_check`].
pub const COMMUTATION_TOL: f64 = 1e-9;

/// Cyclic shift: `out[m] = v[m - steps]`.
pub fn translate(v: &[C64], steps: i64) -> Vec<C64> {
    let m = v.len();
    if m == 0 {
        return Vec::new();
    }
    let s = steps.rem_euclid(m as i64) as usize;
    (0..m).map(|k| v[(k + m - s) % m]).collect()
}

/// `out[m] = e^{2πi·steps·m/M} v[m]`.
pub fn modulate(v: &[C64], steps: i64) -> Vec<C64> {
    let m = v.len() as i64;
    v.iter()
        .enumerate()
        .map(|(k, z)| {
            // Exact integer phase index keeps E^M = I to rounding.
            let e = (steps.rem_euclid(m) * k as i64) % m;
            z * C64::from_polar(1.0, 2.0 * PI * e as f64 / m as f64)
        })
        .collect()
}

/// A frame given as the orbit `{U_i f_j}` of its generators.
///
/// Columns are ordered with the unitary index outermost.
pub trait OrbitFrame: Sized {
    fn dim(&self) -> usize;

    /// Number of unitaries in the orbit.
    fn orbit_size(&self) -> usize;

    fn generators(&self) -> &[Vec<C64>];

    /// `U_i v`.
    fn apply(&self, i: usize, v: &[C64]) -> Vec<C64>;

    /// The same structure with new generators.
    fn with_generators(&self, generators: Vec<Vec<C64>>) -> Result<Self>;

    /// Number of frame vectors.
    fn len(&self) -> usize {
        self.orbit_size() * self.generators().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Matrix of `U_i`.
    fn unitary(&self, i: usize) -> Matrix {
        let m = self.dim();
        let cols: Vec<Vec<C64>> = (0..m)
            .map(|k| {
                let mut e = vec![C64::new(0.0, 0.0); m];
                e[k] = C64::new(1.0, 0.0);
                self.apply(i, &e)
            })
            .collect();
        Matrix::from_columns(m, &cols).expect("unitary columns have length M")
    }
}

fn check_generators(m: usize, generators: &[Vec<C64>]) -> Result<()> {
    if generators.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one generator is required".into(),
        ));
    }
    for (j, g) in generators.iter().enumerate() {
        if g.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "generator {j} has length {}, expected {m}",
                g.len()
            )));
        }
        let norm = linalg::norm(g);
        if !((norm - 1.0).abs() <= UNIT_NORM_TOL) {
            return Err(Error::NotUnitNorm { column: j, norm });
        }
    }
    Ok(())
}

fn lattice_quotient(m: usize, step: usize, name: &str) -> Result<usize> {
    if step == 0 || !m.is_multiple_of(step) {
        return Err(Error::InvalidLattice(format!(
            "{name} = {step} must be a positive divisor of M = {m}"
        )));
    }
    Ok(m / step)
}

/// The Gabor system `{T^{Ai} E^{Bj} f}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborSystem {
    m: usize,
    a: usize,
    b: usize,
    generator: Vec<C64>,
}

impl GaborSystem {
    pub fn new(m: usize, a: usize, b: usize, generator: Vec<C64>) -> Result<Self> {
        lattice_quotient(m, a, "A")?;
        lattice_quotient(m, b, "B")?;
        check_generators(m, std::slice::from_ref(&generator))?;
        Ok(Self { m, a, b, generator })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// Number of translations, `M / A`.
    pub fn c(&self) -> usize {
        self.m / self.a
    }

    /// Number of modulations, `M / B`.
    pub fn d(&self) -> usize {
        self.m / self.b
    }

    pub fn generator(&self) -> &[C64] {
        &self.generator
    }
}

impl OrbitFrame for GaborSystem {
    fn dim(&self) -> usize {
        self.m
    }

    fn orbit_size(&self) -> usize {
        self.c() * self.d()
    }

    fn generators(&self) -> &[Vec<C64>] {
        std::slice::from_ref(&self.generator)
    }

    /// Index `i·D + j` is `T^{Ai} E^{Bj}`.
    fn apply(&self, idx: usize, v: &[C64]) -> Vec<C64> {
        let (i, j) = (idx / self.d(), idx % self.d());
        translate(&modulate(v, (self.b * j) as i64), (self.a * i) as i64)
    }

    fn with_generators(&self, mut generators: Vec<Vec<C64>>) -> Result<Self> {
        if generators.len() != 1 {
            return Err(Error::InvalidParameter(format!(
                "a Gabor system has one generator, got {}",
                generators.len()
            )));
        }
        Self::new(self.m, self.a, self.b, generators.remove(0))
    }
}

/// The filter bank `{T^{Ai} f_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    m: usize,
    a: usize,
    generators: Vec<Vec<C64>>,
}

impl FilterBank {
    pub fn new(m: usize, a: usize, generators: Vec<Vec<C64>>) -> Result<Self> {
        lattice_quotient(m, a, "A")?;
        check_generators(m, &generators)?;
        Ok(Self { m, a, generators })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn c(&self) -> usize {
        self.m / self.a
    }
}

impl OrbitFrame for FilterBank {
    fn dim(&self) -> usize {
        self.m
    }

    fn orbit_size(&self) -> usize {
        self.c()
    }

    fn generators(&self) -> &[Vec<C64>] {
        &self.generators
    }

    fn apply(&self, i: usize, v: &[C64]) -> Vec<C64> {
        translate(v, (self.a * i) as i64)
    }

    fn with_generators(&self, generators: Vec<Vec<C64>>) -> Result<Self> {
        Self::new(self.m, self.a, generators)
    }
}

/// An orbit under an explicit list of unitary matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    unitaries: Vec<Matrix>,
    generators: Vec<Vec<C64>>,
}

impl Orbit {
    pub fn new(unitaries: Vec<Matrix>, generators: Vec<Vec<C64>>) -> Result<Self> {
        let m = generators.first().map_or(0, Vec::len);
        if unitaries.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one unitary is required".into(),
            ));
        }
        for (i, u) in unitaries.iter().enumerate() {
            if u.rows() != m || u.cols() != m {
                return Err(Error::DimensionMismatch(format!(
                    "unitary {i} is {}x{}, expected {m}x{m}",
                    u.rows(),
                    u.cols()
                )));
            }
            let gap = matmul(&linalg::adjoint(u), u)?.max_abs_diff(&Matrix::identity(m))?;
            if gap > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "matrix {i} is not unitary (|U*U - I| = {gap:.3e})"
                )));
            }
        }
        check_generators(m, &generators)?;
        Ok(Self {
            unitaries,
            generators,
        })
    }
}

impl OrbitFrame for Orbit {
    fn dim(&self) -> usize {
        self.generators[0].len()
    }

    fn orbit_size(&self) -> usize {
        self.unitaries.len()
    }

    fn generators(&self) -> &[Vec<C64>] {
        &self.generators
    }

    fn apply(&self, i: usize, v: &[C64]) -> Vec<C64> {
        linalg::mat_vec(&self.unitaries[i], v)
    }

    fn with_generators(&self, generators: Vec<Vec<C64>>) -> Result<Self> {
        Self::new(self.unitaries.clone(), generators)
    }

    fn unitary(&self, i: usize) -> Matrix {
        self.unitaries[i].clone()
    }
}

/// Materializes the orbit: column `i·J + j` is `U_i f_j`.
pub fn synthesize<S: OrbitFrame>(sys: &S) -> Frame {
    let mut cols = Vec::with_capacity(sys.len());
    for i in 0..sys.orbit_size() {
        for g in sys.generators() {
            cols.push(sys.apply(i, g));
        }
    }
    Frame::from_columns(Field::Complex, sys.dim(), &cols).expect("unitaries preserve unit norms")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationReport {
    pub holds: bool,
    /// Largest `||FF* U - U FF*||_HS` over the orbit's unitaries.
    pub max_violation: f64,
}

/// Checks that every unitary of the orbit commutes with its frame operator.
pub fn commutation_check<S: OrbitFrame>(sys: &S) -> CommutationReport {
    let f = synthesize(sys);
    let s = crate::frame::frame_operator(&f);
    let max_violation = (0..sys.orbit_size())
        .map(|i| {
            let u = sys.unitary(i);
            let lhs = matmul(&s, &u).expect("square");
            let rhs = matmul(&u, &s).expect("square");
            hs_norm(&lhs.sub(&rhs).expect("same shape"))
        })
        .fold(0.0, f64::max);
    CommutationReport {
        holds: max_violation <= COMMUTATION_TOL,
        max_violation,
    }
}

/// `FF* v = Σ_i Σ_j <v, U_i f_j> U_i f_j`, without forming `F`.
fn orbit_frame_operator_apply<S: OrbitFrame>(sys: &S, v: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for i in 0..sys.orbit_size() {
        for g in sys.generators() {
            let u = sys.apply(i, g);
            let c = linalg::inner(v, &u);
            for (o, x) in out.iter_mut().zip(&u) {
                *o += c * x;
            }
        }
    }
    out
}

/// `g_j = FF* f_j - <FF* f_j, f_j> f_j` for each generator, via orbit sums.
pub fn orbit_gradient<S: OrbitFrame>(sys: &S) -> Vec<Vec<C64>> {
    sys.generators()
        .iter()
        .map(|f| {
            let sf = orbit_frame_operator_apply(sys, f);
            let c = linalg::inner(&sf, f);
            sf.iter().zip(f).map(|(a, b)| a - c * b).collect()
        })
        .collect()
}

/// Gradient of the single Gabor generator.
pub fn structured_gradient(sys: &GaborSystem) -> Vec<C64> {
    orbit_gradient(sys).remove(0)
}

/// Moves each generator along its geodesic for time `t ∈ (0, 1/(2N))`.
pub fn structured_step<S: OrbitFrame>(sys: &S, t: f64) -> Result<S> {
    let limit = 1.0 / (2.0 * sys.len() as f64);
    if !(t > 0.0 && t < limit) {
        return Err(Error::StepOutOfRange { step: t, limit });
    }
    let grads = orbit_gradient(sys);
    let next: Vec<Vec<C64>> = sys
        .generators()
        .iter()
        .zip(&grads)
        .map(|(f, g)| geodesic_move(f, g, t))
        .collect();
    sys.with_generators(next)
}

/// Distance from tightness of the synthesized frame.
pub fn orbit_distance<S: OrbitFrame>(sys: &S) -> f64 {
    let f = synthesize(sys);
    tightness_gap(&crate::frame::frame_operator(&f), f.redundancy())
}

/// A Gabor system or filter bank read from a config file.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeConfig {
    Gabor(GaborSystem),
    FilterBank(FilterBank),
}

fn config_err(field: &str, e: Error) -> Error {
    match e {
        Error::Format { .. } => e,
        other => Error::Format {
            field: field.to_string(),
            message: other.to_string(),
        },
    }
}

/// Parses `{"M": .., "A": .., "B": .., "generator": [[re, im], ...]}` for a
/// Gabor system, or `{"M": .., "A": .., "generators": [[[re, im], ...], ...]}`
/// for a filter bank. Generators are normalized when `normalize` is set.
pub fn parse_lattice_config(text: &str, normalize: bool) -> Result<LatticeConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Format {
        field: "<document>".into(),
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Format {
        field: "<document>".into(),
        message: "expected a JSON object".into(),
    })?;
    let m = parse_usize(obj, "M")?;
    let a = parse_usize(obj, "A")?;
    let fix = |v: Vec<C64>| -> Vec<C64> {
        if !normalize {
            return v;
        }
        let n = linalg::norm(&v);
        if n == 0.0 {
            v
        } else {
            v.into_iter().map(|z| z / n).collect()
        }
    };
    if let Some(g) = obj.get("generator") {
        let b = parse_usize(obj, "B")?;
        let g = fix(parse_vector(g, m, Field::Complex, "generator")?);
        GaborSystem::new(m, a, b, g)
            .map(LatticeConfig::Gabor)
            .map_err(|e| lattice_field_err(e, "generator"))
    } else if let Some(gs) = obj.get("generators") {
        let arr = gs.as_array().ok_or_else(|| Error::Format {
            field: "generators".into(),
            message: "expected an array of generators".into(),
        })?;
        let gens = arr
            .iter()
            .enumerate()
            .map(|(j, g)| parse_vector(g, m, Field::Complex, &format!("generators[{j}]")).map(fix))
            .collect::<Result<Vec<_>>>()?;
        FilterBank::new(m, a, gens)
            .map(LatticeConfig::FilterBank)
            .map_err(|e| lattice_field_err(e, "generators"))
    } else {
        Err(Error::Format {
            field: "generator".into(),
            message: "expected \"generator\" or \"generators\"".into(),
        })
    }
}

fn lattice_field_err(e: Error, field: &str) -> Error {
    match e {
        Error::InvalidLattice(_) | Error::NotUnitNorm { .. } => e,
        other => config_err(field, other),
    }
}

pub fn read_lattice_config(path: &Path, normalize: bool) -> Result<LatticeConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_lattice_config(&text, normalize)
}

/// Serializes a Gabor system in the config layout.
pub fn gabor_to_json(sys: &GaborSystem) -> String {
    let mut g = String::new();
    write_vector(&mut g, sys.generator(), Field::Complex);
    format!(
        "{{\"M\": {}, \"A\": {}, \"B\": {}, \"generator\": {g}}}\n",
        sys.dim(),
        sys.a(),
        sys.b()
    )
}

/// Serializes a filter bank in the config layout.
pub fn filter_bank_to_json(bank: &FilterBank) -> String {
    let gens: Vec<String> = bank
        .generators()
        .iter()
        .map(|g| {
            let mut s = String::new();
            write_vector(&mut s, g, Field::Complex);
            s
        })
        .collect();
    format!(
        "{{\"M\": {}, \"A\": {}, \"generators\": [\n  {}\n]}}\n",
        bank.dim(),
        bank.a(),
        gens.join(",\n  ")
    )
}

/// A random unit vector in `C^M`.
pub fn random_generator(m: usize, seed: u64) -> Vec<C64> {
    let mut gauss = crate::frame::Gaussian::new(seed);
    let v = gauss.vector(Field::Complex, m);
    let n = linalg::norm(&v);
    v.into_iter().map(|z| z / n).collect()
}
