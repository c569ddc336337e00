//! The simulated model: a two-level atom coupled to one truncated boson mode
//! including counter-rotating terms, with exact-diagonalization oracles.
//!
//! Basis index is `2n + a` where `a = 0` for the atom down and `a = 1` for up.
//! Atom operators are spin-1/2 operators with eigenvalues ±1/2. Time is in
//! units of 1/Ω.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    basis_vector, boson_matrices, c, eig_hermitian, expm_hermitian, kron, ComplexMatrix,
    ComplexVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSpec {
    #[serde(default = "default_omega_a")]
    pub omega_a: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    pub g: f64,
    pub d: usize,
}

fn default_omega_a() -> f64 {
    0.5
}

fn default_omega() -> f64 {
    1.0
}

impl RabiSpec {
    pub fn new(g: f64, d: usize) -> Self {
        RabiSpec {
            omega_a: 0.5,
            omega: 1.0,
            g,
            d,
        }
    }

    pub fn with_d(self, d: usize) -> Self {
        RabiSpec { d, ..self }
    }

    pub fn with_g(self, g: f64) -> Self {
        RabiSpec { g, ..self }
    }

    pub fn dim(&self) -> usize {
        2 * self.d
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidTruncation(self.d));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::InvalidTarget(format!("G must be >= 0, got {}", self.g)));
        }
        if !self.omega_a.is_finite() || !self.omega.is_finite() || self.omega <= 0.0 {
            return Err(Error::InvalidTarget("frequencies must be finite, Omega > 0".into()));
        }
        Ok(())
    }
}

/// Atom operators in (down, up) order.
fn atom_ops() -> (ComplexMatrix, ComplexMatrix) {
    let sz = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(-0.5), c(0.5)]));
    let mut sx = ComplexMatrix::zeros(2, 2);
    sx[(0, 1)] = c(0.5);
    sx[(1, 0)] = c(0.5);
    (sz, sx)
}

pub fn index(n: usize, up: bool) -> usize {
    2 * n + usize::from(up)
}

/// Photon-number operator on the target space.
pub fn number_operator(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_fn(2 * d, |k, _| c((k / 2) as f64)))
}

/// Atom σz (eigenvalues ±1/2) on the target space.
pub fn sigma_z_operator(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_fn(2 * d, |k, _| {
        c(if k % 2 == 1 { 0.5 } else { -0.5 })
    }))
}

/// σz-parity times photon parity.
pub fn parity_operator(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_fn(2 * d, |k, _| {
        let photon = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let atom = if k % 2 == 1 { 1.0 } else { -1.0 };
        c(photon * atom)
    }))
}

pub fn rabi_hamiltonian(spec: &RabiSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let b = boson_matrices(spec.d)?;
    let (sz, sx) = atom_ops();
    let id_b = ComplexMatrix::identity(spec.d, spec.d);
    let id_a = ComplexMatrix::identity(2, 2);
    let x = &b.a + &b.adag;
    let h = kron(&id_b, &sz) * c(spec.omega_a)
        + kron(&b.n, &id_a) * c(spec.omega)
        + kron(&x, &sx) * c(2.0 * spec.g);
    Ok(h)
}

/// `|n=0, down>`.
pub fn vacuum(d: usize) -> ComplexVector {
    basis_vector(2 * d, 0)
}

pub fn exact_ground_state(spec: &RabiSpec) -> Result<(f64, ComplexVector)> {
    let eig = eig_hermitian(&rabi_hamiltonian(spec)?)?;
    let mut v = eig.vectors.column(0).into_owned();
    // Real gauge: largest component positive.
    let (k, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty");
    let phase = v[k].conj() / v[k].norm();
    v *= phase;
    Ok((eig.values[0], v))
}

pub fn exact_evolve(spec: &RabiSpec, psi0: &ComplexVector, t: f64) -> Result<ComplexVector> {
    if psi0.len() != spec.dim() {
        return Err(Error::InvalidTarget(format!(
            "state has length {}, expected {}",
            psi0.len(),
            spec.dim()
        )));
    }
    let u = expm_hermitian(&rabi_hamiltonian(spec)?, t)?;
    Ok(u * psi0)
}

/// Evolver that diagonalizes once and reuses the decomposition over a time grid.
pub struct ExactPropagator {
    values: Vec<f64>,
    vectors: ComplexMatrix,
}

impl ExactPropagator {
    pub fn new(spec: &RabiSpec) -> Result<Self> {
        let eig = eig_hermitian(&rabi_hamiltonian(spec)?)?;
        Ok(ExactPropagator {
            values: eig.values.iter().copied().collect(),
            vectors: eig.vectors,
        })
    }

    pub fn evolve(&self, psi0: &ComplexVector, t: f64) -> ComplexVector {
        let mut coeffs = self.vectors.adjoint() * psi0;
        for (k, z) in coeffs.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, -self.values[k] * t);
        }
        &self.vectors * coeffs
    }
}

/// `(<n>, <σz>)` of a target state.
pub fn observables(psi: &ComplexVector) -> (f64, f64) {
    let mut n = 0.0;
    let mut sz = 0.0;
    for (k, z) in psi.iter().enumerate() {
        let p = z.norm_sqr();
        n += (k / 2) as f64 * p;
        sz += if k % 2 == 1 { 0.5 * p } else { -0.5 * p };
    }
    (n, sz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationError {
    pub max_dn: f64,
    pub max_dsz: f64,
}

/// Largest deviation of `<n>` and `<σz>` between truncations `spec.d` and
/// `d_ref`, starting from the vacuum.
pub fn truncation_error(spec: &RabiSpec, d_ref: usize, t_grid: &[f64]) -> Result<TruncationError> {
    if d_ref <= spec.d {
        return Err(Error::InvalidTarget(format!(
            "reference truncation {d_ref} must exceed {}",
            spec.d
        )));
    }
    let small = ExactPropagator::new(spec)?;
    let big = ExactPropagator::new(&spec.with_d(d_ref))?;
    let (p0, q0) = (vacuum(spec.d), vacuum(d_ref));
    let mut out = TruncationError {
        max_dn: 0.0,
        max_dsz: 0.0,
    };
    for &t in t_grid {
        let (n_a, s_a) = observables(&small.evolve(&p0, t));
        let (n_b, s_b) = observables(&big.evolve(&q0, t));
        out.max_dn = out.max_dn.max((n_a - n_b).abs());
        out.max_dsz = out.max_dsz.max((s_a - s_b).abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{commutator, is_hermitian, max_abs};

    #[test]
    fn uncoupled_spectrum() {
        let spec = RabiSpec::new(0.0, 4);
        let h = rabi_hamiltonian(&spec).unwrap();
        for n in 0..4 {
            assert_eq!(h[(index(n, false), index(n, false))].re, n as f64 - 0.25);
            assert_eq!(h[(index(n, true), index(n, true))].re, n as f64 + 0.25);
        }
        assert!(max_abs(&(h.clone() - ComplexMatrix::from_diagonal(&h.diagonal()))) == 0.0);
        let (e, psi) = exact_ground_state(&spec).unwrap();
        assert!((e + 0.25).abs() < 1e-14);
        assert!((psi[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupling_element() {
        let h = rabi_hamiltonian(&RabiSpec::new(0.3, 4)).unwrap();
        assert!((h[(index(1, true), index(0, false))].re - 0.3).abs() < 1e-15);
        assert!(is_hermitian(&h));
    }

    #[test]
    fn weak_coupling_perturbation() {
        let (e, _) = exact_ground_state(&RabiSpec::new(0.05, 6)).unwrap();
        let pt = -0.25 - 0.05f64.powi(2) / 1.5;
        assert!((e - pt).abs() < 1e-4, "{e} vs {pt}");
    }

    #[test]
    fn parity_commutes() {
        let spec = RabiSpec::new(0.7, 6);
        let h = rabi_hamiltonian(&spec).unwrap();
        assert!(max_abs(&commutator(&h, &parity_operator(6))) < 1e-12);
    }

    #[test]
    fn ground_energy_decreases_with_g_and_d() {
        let mut last = f64::INFINITY;
        for k in 0..=10 {
            let (e, _) = exact_ground_state(&RabiSpec::new(0.1 * k as f64, 4)).unwrap();
            assert!(e <= last + 1e-12);
            last = e;
        }
        let mut last = f64::INFINITY;
        for d in 2..12 {
            let (e, _) = exact_ground_state(&RabiSpec::new(0.6, d)).unwrap();
            assert!(e <= last + 1e-12);
            last = e;
        }
    }

    #[test]
    fn free_evolution_is_a_phase() {
        let spec = RabiSpec::new(0.0, 4);
        let psi = exact_evolve(&spec, &vacuum(4), 3.7).unwrap();
        assert!((psi[0].norm() - 1.0).abs() < 1e-12);
        let psi = exact_evolve(&RabiSpec::new(0.4, 4), &vacuum(4), 0.0).unwrap();
        assert!((psi - vacuum(4)).norm() < 1e-14);
    }

    #[test]
    fn truncation_is_exact_without_coupling() {
        let e = truncation_error(&RabiSpec::new(0.0, 4), 30, &[1.0, 5.0]).unwrap();
        assert_eq!((e.max_dn, e.max_dsz), (0.0, 0.0));
        assert!(truncation_error(&RabiSpec::new(0.1, 4), 4, &[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(rabi_hamiltonian(&RabiSpec::new(0.1, 1)).is_err());
        assert!(rabi_hamiltonian(&RabiSpec::new(-0.1, 4)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn hamiltonian_is_hermitian_and_parity_symmetric(g in 0.0f64..1.5, d in 2usize..9) {
                let h = rabi_hamiltonian(&RabiSpec::new(g, d)).unwrap();
                prop_assert!(crate::operators::hermiticity_error(&h) < 1e-14);
                let p = parity_operator(d);
                prop_assert!(crate::operators::max_abs(&crate::operators::commutator(&h, &p)) < 1e-12);
            }

            #[test]
            fn evolution_preserves_norm(g in 0.0f64..1.0, t in 0.0f64..10.0) {
                let spec = RabiSpec::new(g, 5);
                let psi = exact_evolve(&spec, &vacuum(5), t).unwrap();
                prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
                let (n, sz) = observables(&psi);
                prop_assert!((0.0..=4.0 + 1e-9).contains(&n));
                prop_assert!(sz.abs() <= 0.5 + 1e-9);
            }
        }
    }
}
