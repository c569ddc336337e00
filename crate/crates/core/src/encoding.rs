//! Placement of the boson-plus-atom model onto hardware levels.
//!
//! Boson level `n` sits on qudit level `m1 = n - S1`; the atom lives on two
//! consecutive levels of the second spin. Hardware states are indexed in
//! label order (see [`crate::hardware::ProductBasis`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::{Label, ProductBasis};
use crate::operators::{c, ComplexMatrix, ComplexVector, Spin};
use crate::target::{self, RabiSpec};

/// Which two levels of a spin-1 carry the atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitLevels {
    /// `m2 ∈ {-1, 0}`: down = -1, up = 0.
    #[default]
    Lower,
    /// `m2 ∈ {0, 1}`: down = 0, up = 1.
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMap {
    pub basis: ProductBasis,
    /// Twice `m2` for atom down and up.
    pub down_m2_twice: i32,
    pub up_m2_twice: i32,
    /// Hardware index of each target basis state (`2n + atom`).
    pub comp: Vec<usize>,
    /// Hardware indices outside the computational subspace.
    pub leakage: Vec<usize>,
}

impl EncodingMap {
    pub fn new(s1: Spin, s2: Spin, levels: QubitLevels) -> Result<Self> {
        let (down, up) = match (s2, levels) {
            (s, _) if s == Spin::HALF => (-1, 1),
            (s, QubitLevels::Lower) if s == Spin::ONE => (-2, 0),
            (s, QubitLevels::Upper) if s == Spin::ONE => (0, 2),
            _ => {
                return Err(Error::HardwareShape(format!(
                    "second spin must be 1/2 or 1, got {s2}"
                )))
            }
        };
        let basis = ProductBasis { s1, s2 };
        let d = s1.dim();
        let mut comp = Vec::with_capacity(2 * d);
        for n in 0..d {
            let m1_twice = 2 * n as i32 - s1.twice() as i32;
            for m2_twice in [down, up] {
                let idx = basis
                    .index(Label { m1_twice, m2_twice })
                    .expect("computational label in basis");
                comp.push(idx);
            }
        }
        let leakage = (0..basis.dim()).filter(|k| !comp.contains(k)).collect();
        Ok(EncodingMap {
            basis,
            down_m2_twice: down,
            up_m2_twice: up,
            comp,
            leakage,
        })
    }

    pub fn for_spec(spec: &crate::hardware::HardwareSpec, levels: QubitLevels) -> Result<Self> {
        Self::new(spec.s1, spec.s2, levels)
    }

    /// Boson truncation `d = 2S1 + 1`.
    pub fn d(&self) -> usize {
        self.basis.s1.dim()
    }

    pub fn n_max(&self) -> usize {
        self.basis.s1.twice() as usize
    }

    pub fn hw_dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn index(&self, n: usize, up: bool) -> usize {
        self.comp[target::index(n, up)]
    }

    /// `(n, up)` for a computational hardware index.
    pub fn logical(&self, hw: usize) -> Option<(usize, bool)> {
        self.comp
            .iter()
            .position(|&k| k == hw)
            .map(|t| (t / 2, t % 2 == 1))
    }

    /// Hardware indices of the atom pair for each boson level.
    pub fn qubit_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.d())
            .map(|n| (self.index(n, false), self.index(n, true)))
            .collect()
    }

    pub fn check_rabi(&self, spec: &RabiSpec) -> Result<()> {
        if spec.d != self.d() {
            return Err(Error::HardwareShape(format!(
                "model truncation d={} does not match qudit dimension {}",
                spec.d,
                self.d()
            )));
        }
        Ok(())
    }

    /// Lifts a target operator into the hardware space (zero on leakage).
    pub fn embed_operator(&self, op: &ComplexMatrix) -> ComplexMatrix {
        let n = self.hw_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        for (i, &hi) in self.comp.iter().enumerate() {
            for (j, &hj) in self.comp.iter().enumerate() {
                out[(hi, hj)] = op[(i, j)];
            }
        }
        out
    }

    /// Restricts a hardware operator to the computational subspace.
    pub fn restrict_operator(&self, op: &ComplexMatrix) -> ComplexMatrix {
        let n = self.comp.len();
        ComplexMatrix::from_fn(n, n, |i, j| op[(self.comp[i], self.comp[j])])
    }
}

pub fn encode_state(psi: &ComplexVector, map: &EncodingMap) -> Result<ComplexVector> {
    if psi.len() != map.comp.len() {
        return Err(Error::HardwareShape(format!(
            "target state length {} does not match encoding ({})",
            psi.len(),
            map.comp.len()
        )));
    }
    let mut out = ComplexVector::zeros(map.hw_dim());
    for (t, &h) in map.comp.iter().enumerate() {
        out[h] = psi[t];
    }
    Ok(out)
}

pub fn decode_state(psi: &ComplexVector, map: &EncodingMap) -> Result<ComplexVector> {
    if psi.len() != map.hw_dim() {
        return Err(Error::HardwareShape(format!(
            "hardware state length {} does not match encoding ({})",
            psi.len(),
            map.hw_dim()
        )));
    }
    Ok(ComplexVector::from_iterator(
        map.comp.len(),
        map.comp.iter().map(|&h| psi[h]),
    ))
}

/// Hardware encoding of the rabi Hamiltonian.
pub fn encoded_hamiltonian(spec: &RabiSpec, map: &EncodingMap) -> Result<ComplexMatrix> {
    map.check_rabi(spec)?;
    Ok(map.embed_operator(&target::rabi_hamiltonian(spec)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub n_photons: f64,
    pub sigma_z: f64,
    /// Population outside the computational subspace.
    pub leakage: f64,
}

/// Photon number and atom polarization of a label-basis density matrix.
///
/// `n = <m1> + S1` over the full space; `σz` is the encoded atom polarization
/// restricted to the computational levels.
pub fn measure_observables(rho: &ComplexMatrix, map: &EncodingMap) -> Result<Observables> {
    if rho.nrows() != map.hw_dim() {
        return Err(Error::HardwareShape(format!(
            "density matrix dim {} does not match encoding ({})",
            rho.nrows(),
            map.hw_dim()
        )));
    }
    let s1 = map.basis.s1.value();
    let mut n = 0.0;
    for k in 0..map.hw_dim() {
        n += rho[(k, k)].re * (map.basis.label(k).m1() + s1);
    }
    let mut sz = 0.0;
    for &(dn, up) in &map.qubit_pairs() {
        sz += 0.5 * (rho[(up, up)].re - rho[(dn, dn)].re);
    }
    let leakage = map.leakage.iter().map(|&k| rho[(k, k)].re).sum();
    Ok(Observables {
        n_photons: n,
        sigma_z: sz,
        leakage,
    })
}

/// `<n>` operator (diagonal, label basis).
pub fn photon_operator(map: &EncodingMap) -> ComplexMatrix {
    let s1 = map.basis.s1.value();
    ComplexMatrix::from_diagonal(&ComplexVector::from_fn(map.hw_dim(), |k, _| {
        c(map.basis.label(k).m1() + s1)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{identity, outer};

    fn map32() -> EncodingMap {
        EncodingMap::new(Spin::THREE_HALVES, Spin::HALF, QubitLevels::Lower).unwrap()
    }

    #[test]
    fn vacuum_maps_to_lowest_labels() {
        let m = map32();
        let hw = encode_state(&target::vacuum(4), &m).unwrap();
        let k = hw.iter().position(|z| z.norm() > 0.5).unwrap();
        assert_eq!(m.basis.label(k), Label::new(-1.5, -0.5));
        assert!(m.leakage.is_empty());
    }

    #[test]
    fn spin_one_leakage() {
        let m = EncodingMap::new(Spin::FIVE_HALVES, Spin::ONE, QubitLevels::Upper).unwrap();
        assert_eq!(m.leakage.len(), 6);
        assert!(m.leakage.iter().all(|&k| m.basis.label(k).m2_twice == -2));
        let m = EncodingMap::new(Spin::FIVE_HALVES, Spin::ONE, QubitLevels::Lower).unwrap();
        assert!(m.leakage.iter().all(|&k| m.basis.label(k).m2_twice == 2));
        assert_eq!(m.basis.label(m.index(0, false)), Label::new(-2.5, -1.0));
    }

    #[test]
    fn round_trip() {
        let m = map32();
        let psi = ComplexVector::from_element(8, c(1.0 / 8f64.sqrt()));
        let hw = encode_state(&psi, &m).unwrap();
        assert!((hw.norm() - 1.0).abs() < 1e-14);
        let back = decode_state(&hw, &m).unwrap();
        assert!((back - psi).norm() < 1e-14);
    }

    #[test]
    fn observables_of_simple_states() {
        let m = map32();
        let rho = outer(&encode_state(&target::vacuum(4), &m).unwrap());
        let o = measure_observables(&rho, &m).unwrap();
        assert_eq!((o.n_photons, o.sigma_z, o.leakage), (0.0, -0.5, 0.0));
        let mixed = identity(8) / c(8.0);
        let o = measure_observables(&mixed, &m).unwrap();
        assert!((o.n_photons - 1.5).abs() < 1e-14);
    }

    #[test]
    fn encoded_hamiltonian_energy() {
        let m = map32();
        let h = encoded_hamiltonian(&RabiSpec::new(0.3, 4), &m).unwrap();
        let v = encode_state(&target::vacuum(4), &m).unwrap();
        let e = (v.adjoint() * &h * &v)[(0, 0)].re;
        assert!((e + 0.25).abs() < 1e-15);
        assert!(encoded_hamiltonian(&RabiSpec::new(0.3, 5), &m).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn map_strategy() -> impl Strategy<Value = EncodingMap> {
            (3u32..=7, prop::bool::ANY, prop::bool::ANY).prop_map(|(s1, one, upper)| {
                let s2 = if one { Spin::ONE } else { Spin::HALF };
                let levels = if upper { QubitLevels::Upper } else { QubitLevels::Lower };
                EncodingMap::new(Spin::from_twice(s1), s2, levels).unwrap()
            })
        }

        proptest! {
            #[test]
            fn encode_decode_round_trip(m in map_strategy(), seed in prop::collection::vec(-1.0f64..1.0, 32)) {
                let n = 2 * m.d();
                let psi = ComplexVector::from_fn(n, |k, _| num_complex::Complex64::new(seed[k % 32], seed[(k + 7) % 32]));
                prop_assume!(psi.norm() > 1e-3);
                let psi = psi.normalize();
                let hw = encode_state(&psi, &m).unwrap();
                prop_assert_eq!(hw.len(), m.hw_dim());
                prop_assert!(m.leakage.iter().all(|&k| hw[k].norm() == 0.0));
                let back = decode_state(&hw, &m).unwrap();
                prop_assert!((back - psi).norm() < 1e-14);
            }

            #[test]
            fn index_and_logical_are_inverse(m in map_strategy()) {
                for n in 0..m.d() {
                    for up in [false, true] {
                        prop_assert_eq!(m.logical(m.index(n, up)), Some((n, up)));
                    }
                }
            }
        }
    }
}
