//! Dense complex linear algebra and the spin/boson operator matrices that
//! everything else is built from.
//!
//! Spin bases are ordered by descending `m` (`m = S` first). Composite spaces
//! put the qudit factor first and the qubit factor second.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A spin quantum number, stored as `2S` so half-integers are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };
    pub const ONE: Spin = Spin { twice: 2 };
    pub const THREE_HALVES: Spin = Spin { twice: 3 };
    pub const FIVE_HALVES: Spin = Spin { twice: 5 };

    pub fn from_twice(twice: u32) -> Self {
        Spin { twice }
    }

    /// Parses `S` from a real value; `2S` must be a non-negative integer.
    pub fn new(value: f64) -> Result<Self> {
        let twice = 2.0 * value;
        if !value.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(value));
        }
        Ok(Spin {
            twice: twice.round() as u32,
        })
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// Multiplicity `2S + 1`.
    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// `m` for basis index `k` (descending order).
    pub fn m(self, k: usize) -> f64 {
        self.value() - k as f64
    }

    /// Basis index of the level with quantum number `m`, if it exists.
    pub fn index_of(self, m: f64) -> Option<usize> {
        let k = self.value() - m;
        let kr = k.round();
        if (k - kr).abs() > 1e-9 || kr < 0.0 || kr as usize >= self.dim() {
            None
        } else {
            Some(kr as usize)
        }
    }

    pub fn m_values(self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.m(k)).collect()
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl Serialize for Spin {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Spin::new(v).map_err(serde::de::Error::custom)
    }
}

/// Angular-momentum matrices of one spin in the descending-`m` basis.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub spin: Spin,
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
    pub splus: ComplexMatrix,
    pub sminus: ComplexMatrix,
}

pub fn spin_matrices(spin: Spin) -> SpinOperators {
    let n = spin.dim();
    let s = spin.value();
    let mut sz = ComplexMatrix::zeros(n, n);
    let mut splus = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        sz[(k, k)] = c(spin.m(k));
    }
    // <m+1|S+|m> sits at row k-1, column k.
    for k in 1..n {
        let m = spin.m(k);
        splus[(k - 1, k)] = c((s * (s + 1.0) - m * (m + 1.0)).sqrt());
    }
    let sminus = splus.adjoint();
    let sx = (&splus + &sminus) * c(0.5);
    let sy = (&splus - &sminus) * Complex64::new(0.0, -0.5);
    SpinOperators {
        spin,
        sx,
        sy,
        sz,
        splus,
        sminus,
    }
}

/// Convenience wrapper taking `S` as a real number.
pub fn spin_matrices_f64(s: f64) -> Result<SpinOperators> {
    Ok(spin_matrices(Spin::new(s)?))
}

/// Truncated harmonic-oscillator ladder operators on Fock levels `0..d`.
#[derive(Debug, Clone)]
pub struct BosonOperators {
    pub d: usize,
    pub a: ComplexMatrix,
    pub adag: ComplexMatrix,
    pub n: ComplexMatrix,
}

pub fn boson_matrices(d: usize) -> Result<BosonOperators> {
    if d < 2 {
        return Err(Error::InvalidTruncation(d));
    }
    let mut a = ComplexMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    let adag = a.adjoint();
    // Integer diagonal rather than adag*a, which picks up rounding from the square roots.
    let n = diag_real(&(0..d).map(|k| k as f64).collect::<Vec<_>>());
    Ok(BosonOperators { d, a, adag, n })
}

/// Kronecker product; the first factor varies slowest.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// Largest entrywise modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &ComplexMatrix) -> bool {
    hermiticity_error(m) <= HERMITIAN_TOL
}

pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn is_unitary(u: &ComplexMatrix) -> bool {
    unitarity_error(u) <= UNITARY_TOL
}

/// Spectral norm, via the largest eigenvalue of `A†A`.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    let g = a.adjoint() * a;
    let vals = SymmetricEigen::new(g).eigenvalues;
    vals.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending; eigenvectors are the matching columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn eig_hermitian(h: &ComplexMatrix) -> Result<HermitianEigen> {
    let err = hermiticity_error(h);
    // Loosen the entrywise check for large-norm inputs (e.g. GHz Hamiltonians).
    let scale = max_abs(h).max(1.0);
    if err > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(err));
    }
    Ok(eig_hermitian_unchecked(h))
}

pub(crate) fn eig_hermitian_unchecked(h: &ComplexMatrix) -> HermitianEigen {
    let n = h.nrows();
    // Symmetrize so round-off never leaks an anti-Hermitian part into the solver.
    let sym = (h + h.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    HermitianEigen { values, vectors }
}

impl HermitianEigen {
    /// `V f(Λ) V†` for a complex-valued spectral function.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let fj = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(h)?;
    Ok(eig.apply_fn(|lam| Complex64::from_polar(1.0, -lam * t)))
}

/// `U A U†`.
pub fn conjugate(u: &ComplexMatrix, a: &ComplexMatrix) -> ComplexMatrix {
    u * a * u.adjoint()
}

pub fn expectation(op: &ComplexMatrix, psi: &ComplexVector) -> Complex64 {
    psi.dotc(&(op * psi))
}

pub fn outer(psi: &ComplexVector) -> ComplexMatrix {
    psi * psi.adjoint()
}

pub fn basis_vector(dim: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    v[k] = c(1.0);
    v
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        m[(k, k)] = c(v);
    }
    m
}
