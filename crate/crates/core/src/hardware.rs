//! The molecular hardware: a spin-S1 qudit coupled to a small spin s2 under a
//! static field. Builds the static Hamiltonian, labels its eigenstates by
//! product quantum numbers, and lists the single-quantum transitions that
//! pulses can address.
//!
//! Energies are in GHz (E/h) throughout; inputs in cm⁻¹ and tesla are
//! converted here.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    c, eig_hermitian, hermiticity_error, identity, kron, spin_matrices, ComplexMatrix, Spin,
};

/// 1 cm⁻¹ in GHz (exact, c is defined).
pub const CM_INV_TO_GHZ: f64 = 29.979_245_8;
/// Bohr magneton over Planck's constant, GHz/T.
pub const MU_B_GHZ_PER_T: f64 = 13.996_244_9;

/// Below this product-state overlap the eigenstates no longer factorize well
/// enough for single-transition addressing.
pub const FACTORIZATION_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareSpec {
    /// Qudit spin.
    pub s1: Spin,
    /// Spin carrying the qubit (1/2 or 1).
    pub s2: Spin,
    pub g1z: f64,
    pub g2z: f64,
    /// Static field, tesla.
    pub b_tesla: f64,
    /// Qudit axial anisotropy, cm⁻¹.
    pub d_cm: f64,
    /// Axial anisotropy of the second spin, cm⁻¹ (only meaningful for s2 = 1).
    #[serde(default)]
    pub d_prime_cm: f64,
    pub jx_cm: f64,
    pub jy_cm: f64,
    pub jz_cm: f64,
    /// Coherence time in µs; `None` means no dephasing.
    #[serde(default)]
    pub t2_us: Option<f64>,
    /// Separate coherence time for the second spin; defaults to `t2_us`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_qubit_us: Option<f64>,
}

impl HardwareSpec {
    pub fn validate(&self) -> Result<()> {
        if self.s1.twice() < 3 {
            return Err(Error::InvalidHardware(format!(
                "qudit spin must be >= 3/2, got {}",
                self.s1
            )));
        }
        if self.s2 != Spin::HALF && self.s2 != Spin::ONE {
            return Err(Error::InvalidHardware(format!(
                "second spin must be 1/2 or 1, got {}",
                self.s2
            )));
        }
        let finite = [
            self.g1z,
            self.g2z,
            self.b_tesla,
            self.d_cm,
            self.d_prime_cm,
            self.jx_cm,
            self.jy_cm,
            self.jz_cm,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHardware("non-finite parameter".into()));
        }
        for t2 in [self.t2_us, self.t2_qubit_us].into_iter().flatten() {
            if !(t2 > 0.0) {
                return Err(Error::InvalidHardware(format!("T2 must be > 0, got {t2}")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.s1.dim() * self.s2.dim()
    }

    /// Axial dipolar coupling `Jz = -2 Jx = -2 Jy`.
    pub fn with_axial_dipolar(mut self, jxy_cm: f64) -> Self {
        self.jx_cm = jxy_cm;
        self.jy_cm = jxy_cm;
        self.jz_cm = -2.0 * jxy_cm;
        self
    }

    /// Dephasing rates (1/ns) for the qudit and the second spin.
    pub fn dephasing_rates_per_ns(&self) -> (f64, f64) {
        let rate = |t2: Option<f64>| t2.map_or(0.0, |us| 1.0 / (us * 1e3));
        let r1 = rate(self.t2_us);
        let r2 = rate(self.t2_qubit_us.or(self.t2_us));
        (r1, r2)
    }

    pub fn with_t2(mut self, t2_us: Option<f64>) -> Self {
        self.t2_us = t2_us;
        self.t2_qubit_us = None;
        self
    }
}

/// Single-ion parameters for the transition-metal ions considered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ion {
    Cr,
    Fe,
    Cu,
    Ni,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonParams {
    pub spin: Spin,
    pub g: f64,
    /// Axial anisotropy, cm⁻¹ (zero for spin 1/2).
    pub d_cm: f64,
}

impl Ion {
    pub fn params(self) -> IonParams {
        match self {
            Ion::Cr => IonParams {
                spin: Spin::THREE_HALVES,
                g: 1.98,
                d_cm: 0.24,
            },
            Ion::Fe => IonParams {
                spin: Spin::FIVE_HALVES,
                g: 2.00,
                d_cm: -0.30,
            },
            Ion::Cu => IonParams {
                spin: Spin::HALF,
                g: 2.3,
                d_cm: 0.0,
            },
            Ion::Ni => IonParams {
                spin: Spin::ONE,
                g: 2.18,
                d_cm: -0.24,
            },
        }
    }
}

pub fn ion_preset(name: &str) -> Result<IonParams> {
    let ion = match name.trim().to_ascii_lowercase().as_str() {
        "cr" | "cr3+" | "criii" => Ion::Cr,
        "fe" | "fe3+" | "feiii" => Ion::Fe,
        "cu" | "cu2+" | "cuii" => Ion::Cu,
        "ni" | "ni2+" | "niii" => Ion::Ni,
        _ => return Err(Error::UnknownPreset(name.to_string())),
    };
    Ok(ion.params())
}

/// Product-state label `(m1, m2)`, stored as twice the quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub m1_twice: i32,
    pub m2_twice: i32,
}

impl Label {
    pub fn new(m1: f64, m2: f64) -> Self {
        Label {
            m1_twice: (2.0 * m1).round() as i32,
            m2_twice: (2.0 * m2).round() as i32,
        }
    }

    pub fn m1(self) -> f64 {
        self.m1_twice as f64 / 2.0
    }

    pub fn m2(self) -> f64 {
        self.m2_twice as f64 / 2.0
    }

    /// Total magnetization `m1 + m2`, the grading used by the rotating frame.
    pub fn total_m(self) -> f64 {
        self.m1() + self.m2()
    }
}

fn fmt_half(f: &mut fmt::Formatter<'_>, twice: i32) -> fmt::Result {
    if twice % 2 == 0 {
        write!(f, "{}", twice / 2)
    } else {
        write!(f, "{}/2", twice)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        fmt_half(f, self.m1_twice)?;
        write!(f, ",")?;
        fmt_half(f, self.m2_twice)?;
        write!(f, ")")
    }
}

/// Index layout of the product basis: qudit factor first, descending `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductBasis {
    pub s1: Spin,
    pub s2: Spin,
}

impl ProductBasis {
    pub fn dim(&self) -> usize {
        self.s1.dim() * self.s2.dim()
    }

    pub fn label(&self, index: usize) -> Label {
        let d2 = self.s2.dim();
        Label::new(self.s1.m(index / d2), self.s2.m(index % d2))
    }

    pub fn index(&self, label: Label) -> Option<usize> {
        let i1 = self.s1.index_of(label.m1())?;
        let i2 = self.s2.index_of(label.m2())?;
        Some(i1 * self.s2.dim() + i2)
    }

    pub fn labels(&self) -> Vec<Label> {
        (0..self.dim()).map(|k| self.label(k)).collect()
    }
}

/// Spin operators embedded in the two-spin product space.
#[derive(Debug, Clone)]
pub struct HardwareOperators {
    pub sx1: ComplexMatrix,
    pub sy1: ComplexMatrix,
    pub sz1: ComplexMatrix,
    pub sx2: ComplexMatrix,
    pub sy2: ComplexMatrix,
    pub sz2: ComplexMatrix,
}

impl HardwareOperators {
    pub fn new(s1: Spin, s2: Spin) -> Self {
        let a = spin_matrices(s1);
        let b = spin_matrices(s2);
        let i1 = identity(s1.dim());
        let i2 = identity(s2.dim());
        HardwareOperators {
            sx1: kron(&a.sx, &i2),
            sy1: kron(&a.sy, &i2),
            sz1: kron(&a.sz, &i2),
            sx2: kron(&i1, &b.sx),
            sy2: kron(&i1, &b.sy),
            sz2: kron(&i1, &b.sz),
        }
    }
}

/// Static spin Hamiltonian in GHz, product basis.
pub fn build_hardware_hamiltonian(spec: &HardwareSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let ops = HardwareOperators::new(spec.s1, spec.s2);
    let zeeman = MU_B_GHZ_PER_T * spec.b_tesla;
    let mut h = &ops.sz1 * c(spec.g1z * zeeman) + &ops.sz2 * c(spec.g2z * zeeman);
    h += &ops.sz1 * &ops.sz1 * c(spec.d_cm * CM_INV_TO_GHZ);
    h += &ops.sz2 * &ops.sz2 * c(spec.d_prime_cm * CM_INV_TO_GHZ);
    h += (&ops.sx1 * &ops.sx2) * c(spec.jx_cm * CM_INV_TO_GHZ);
    h += (&ops.sy1 * &ops.sy2) * c(spec.jy_cm * CM_INV_TO_GHZ);
    h += (&ops.sz1 * &ops.sz2) * c(spec.jz_cm * CM_INV_TO_GHZ);
    debug_assert!(hermiticity_error(&h) < 1e-12);
    Ok(h)
}

/// Drive coupling `g1·Sx1 + g2·sx2` (dimensionless), product basis.
pub fn drive_operator(spec: &HardwareSpec) -> ComplexMatrix {
    let ops = HardwareOperators::new(spec.s1, spec.s2);
    &ops.sx1 * c(spec.g1z) + &ops.sx2 * c(spec.g2z)
}

#[derive(Debug, Clone, Serialize)]
pub struct Level {
    pub label: Label,
    pub energy_ghz: f64,
    /// `|<m1 m2|psi>|²` for the dominant product state.
    pub overlap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelTable {
    /// Eigenstates in ascending energy.
    pub levels: Vec<Level>,
    pub min_overlap: f64,
    /// True when the dominant labels are all distinct.
    pub bijective: bool,
    /// True when `min_overlap` is below [`FACTORIZATION_THRESHOLD`].
    pub factorization_flag: bool,
}

/// Diagonalizes `h` and labels each eigenstate by its dominant product state.
pub fn level_table(h: &ComplexMatrix, spec: &HardwareSpec) -> Result<LevelTable> {
    let basis = ProductBasis {
        s1: spec.s1,
        s2: spec.s2,
    };
    let eig = eig_hermitian(h)?;
    let n = basis.dim();
    let mut levels = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut bijective = true;
    for (k, &energy) in eig.values.iter().enumerate() {
        let (best, weight) = (0..n)
            .map(|i| (i, eig.vectors[(i, k)].norm_sqr()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty basis");
        if seen[best] {
            bijective = false;
        }
        seen[best] = true;
        levels.push(Level {
            label: basis.label(best),
            energy_ghz: energy,
            overlap: weight,
        });
    }
    let min_overlap = levels.iter().map(|l| l.overlap).fold(1.0, f64::min);
    Ok(LevelTable {
        levels,
        min_overlap,
        bijective,
        factorization_flag: min_overlap < FACTORIZATION_THRESHOLD,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    /// Δm1 = ±1, Δm2 = 0.
    Qudit,
    /// Δm1 = 0, Δm2 = ±1.
    Qubit,
}

#[derive(Debug, Clone, Serialize)]
pub struct Transition {
    /// Lower-`m` end of the transition.
    pub from: Label,
    /// Upper-`m` end.
    pub to: Label,
    /// Label-ordered indices (same layout as the product basis).
    pub from_index: usize,
    pub to_index: usize,
    pub kind: TransitionKind,
    pub frequency_ghz: f64,
    /// `E(to) - E(from)`; negative when the higher-`m` level lies lower.
    pub gap_ghz: f64,
    /// `<to| g1·Sx1 + g2·sx2 |from>` between the dressed eigenstates.
    #[serde(serialize_with = "ser_complex")]
    pub matrix_element: Complex64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

impl Transition {
    pub fn name(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }

    /// +1 when the upper-`m` level has higher energy.
    pub fn orientation(&self) -> f64 {
        if self.gap_ghz >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionTable {
    pub transitions: Vec<Transition>,
}

impl TransitionTable {
    pub fn find(&self, a: usize, b: usize) -> Option<&Transition> {
        self.transitions.iter().find(|t| {
            (t.from_index == a && t.to_index == b) || (t.from_index == b && t.to_index == a)
        })
    }

    pub fn max_frequency(&self) -> f64 {
        self.transitions
            .iter()
            .map(|t| t.frequency_ghz)
            .fold(0.0, f64::max)
    }

    /// Smallest |f - f_other| over all other transitions.
    pub fn nearest_spectator(&self, target: &Transition, carrier_ghz: f64) -> f64 {
        self.transitions
            .iter()
            .filter(|t| !(t.from_index == target.from_index && t.to_index == target.to_index))
            .map(|t| (t.frequency_ghz - carrier_ghz).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Diagonalized hardware with eigenstates reordered to label order.
///
/// Column `k` of `vectors` is the dressed state whose dominant component is
/// product state `k`, with that component made real and positive.
#[derive(Debug, Clone)]
pub struct HardwareModel {
    pub spec: HardwareSpec,
    pub basis: ProductBasis,
    pub h0: ComplexMatrix,
    pub energies: Vec<f64>,
    pub vectors: ComplexMatrix,
    pub levels: LevelTable,
    pub transitions: TransitionTable,
    /// `g1·Sx1 + g2·sx2` in the dressed (label) basis.
    pub drive_dressed: ComplexMatrix,
    pub ops: HardwareOperators,
}

impl HardwareModel {
    pub fn new(spec: &HardwareSpec) -> Result<Self> {
        let h0 = build_hardware_hamiltonian(spec)?;
        let levels = level_table(&h0, spec)?;
        if !levels.bijective {
            return Err(Error::Labeling {
                min_overlap: levels.min_overlap,
            });
        }
        let basis = ProductBasis {
            s1: spec.s1,
            s2: spec.s2,
        };
        let eig = eig_hermitian(&h0)?;
        let n = basis.dim();
        let mut vectors = ComplexMatrix::zeros(n, n);
        let mut energies = vec![0.0; n];
        for (k, level) in levels.levels.iter().enumerate() {
            let idx = basis.index(level.label).expect("label in basis");
            let mut col = eig.vectors.column(k).into_owned();
            let lead = col[idx];
            let phase = lead.conj() / lead.norm();
            col *= phase;
            vectors.set_column(idx, &col);
            energies[idx] = eig.values[k];
        }
        let ops = HardwareOperators::new(spec.s1, spec.s2);
        let drive_dressed = vectors.adjoint() * drive_operator(spec) * &vectors;
        let transitions = build_transitions(&basis, &energies, &drive_dressed);
        Ok(HardwareModel {
            spec: spec.clone(),
            basis,
            h0,
            energies,
            vectors,
            levels,
            transitions: TransitionTable { transitions },
            drive_dressed,
            ops,
        })
    }

    /// Like [`HardwareModel::new`] but rejects specs that trip the factorization flag.
    pub fn new_strict(spec: &HardwareSpec) -> Result<Self> {
        let model = Self::new(spec)?;
        if model.levels.factorization_flag {
            return Err(Error::Factorization {
                min_overlap: model.levels.min_overlap,
                threshold: FACTORIZATION_THRESHOLD,
            });
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn label(&self, index: usize) -> Label {
        self.basis.label(index)
    }

    /// `m1 + m2` per label index.
    pub fn total_m(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.label(k).total_m()).collect()
    }

    /// Product-basis operator expressed in the dressed basis.
    pub fn to_dressed(&self, op: &ComplexMatrix) -> ComplexMatrix {
        self.vectors.adjoint() * op * &self.vectors
    }

    pub fn to_product(&self, op: &ComplexMatrix) -> ComplexMatrix {
        &self.vectors * op * self.vectors.adjoint()
    }
}

fn build_transitions(
    basis: &ProductBasis,
    energies: &[f64],
    drive: &ComplexMatrix,
) -> Vec<Transition> {
    let n = basis.dim();
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let la = basis.label(a);
            let lb = basis.label(b);
            let dm1 = lb.m1_twice - la.m1_twice;
            let dm2 = lb.m2_twice - la.m2_twice;
            let kind = match (dm1, dm2) {
                (2, 0) => TransitionKind::Qudit,
                (0, 2) => TransitionKind::Qubit,
                _ => continue,
            };
            let me = drive[(b, a)];
            if me.norm() <= 1e-6 {
                continue;
            }
            let gap = energies[b] - energies[a];
            out.push(Transition {
                from: la,
                to: lb,
                from_index: a,
                to_index: b,
                kind,
                frequency_ghz: gap.abs(),
                gap_ghz: gap,
                matrix_element: me,
            });
        }
    }
    out.sort_by(|x, y| x.frequency_ghz.total_cmp(&y.frequency_ghz));
    out
}

/// Convenience: transition table straight from a spec.
pub fn transition_table(spec: &HardwareSpec) -> Result<TransitionTable> {
    Ok(HardwareModel::new(spec)?.transitions)
}
