//! Logical gate set, its hardware matrices, and the two compiled programs:
//! the variational ansatz and the Trotter step of the Rabi model.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoding::EncodingMap;
use crate::error::{Error, Result};
use crate::operators::{c, identity, max_abs_diff, ComplexMatrix, I};
use crate::target::RabiSpec;

pub type Mat2 = Matrix2<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    /// Azimuth of the axis in the xy plane.
    pub fn phi(self) -> f64 {
        match self {
            Axis::X => 0.0,
            Axis::Y => FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    /// `exp(-i angle s_axis)` on the atom levels, for every boson level.
    QubitRot { axis: Axis, angle: f64 },
    /// Arbitrary 2x2 unitary on (down, up), for every boson level.
    QubitUnitary {
        #[serde(skip)]
        u: Mat2,
    },
    /// Rotation on boson levels `(lower, lower + 1)` regardless of the atom.
    QuditPairRot { lower: usize, axis: Axis, angle: f64 },
    /// As [`Gate::QuditPairRot`] with `+angle` for atom up and `-angle` for down.
    CondQuditPairRot { lower: usize, axis: Axis, angle: f64 },
    /// `U_kk = exp(i phases[k])` per hardware level (label order).
    DiagonalPhase { phases: Vec<f64> },
}

impl Gate {
    /// Short human-readable form, e.g. `cond_pair(1,x,0.4000)`.
    pub fn describe(&self) -> String {
        let ax = |a: &Axis| if *a == Axis::X { "x" } else { "y" };
        match self {
            Gate::QubitRot { axis, angle } => format!("qubit({},{angle:.4})", ax(axis)),
            Gate::QubitUnitary { .. } => "qubit_unitary".to_string(),
            Gate::QuditPairRot { lower, axis, angle } => format!("pair({lower},{},{angle:.4})", ax(axis)),
            Gate::CondQuditPairRot { lower, axis, angle } => {
                format!("cond_pair({lower},{},{angle:.4})", ax(axis))
            }
            Gate::DiagonalPhase { .. } => "diagonal_phase".to_string(),
        }
    }
}

/// `exp(-i θ (cos φ X + sin φ Y) / 2)` in (lower, upper) ordering.
pub fn pair_rotation(phi: f64, theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    Mat2::new(c(co), -I * e.conj() * s, -I * e * s, c(co))
}

/// 2x2 block acting on hardware levels `a` (lower m) and `b` (upper m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub a: usize,
    pub b: usize,
    pub u: Mat2,
}

impl Gate {
    fn qubit_matrix(&self) -> Option<Mat2> {
        match self {
            Gate::QubitRot { axis: Axis::X, angle } => Some(pair_rotation(0.0, *angle)),
            // s_y is -Y/2 in (down, up) ordering.
            Gate::QubitRot { axis: Axis::Y, angle } => Some(pair_rotation(FRAC_PI_2, -angle)),
            Gate::QubitUnitary { u } => Some(*u),
            _ => None,
        }
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self, Gate::DiagonalPhase { .. })
    }

    /// The 2x2 blocks making up a non-diagonal gate.
    pub fn blocks(&self, map: &EncodingMap) -> Result<Vec<Block>> {
        let d = map.d();
        let check = |lower: usize| {
            if lower + 1 >= d {
                Err(Error::HardwareShape(format!(
                    "pair ({lower}, {}) outside boson levels 0..{d}",
                    lower + 1
                )))
            } else {
                Ok(())
            }
        };
        Ok(match self {
            Gate::QubitRot { .. } | Gate::QubitUnitary { .. } => {
                let u = self.qubit_matrix().expect("qubit gate");
                map.qubit_pairs()
                    .into_iter()
                    .map(|(a, b)| Block { a, b, u })
                    .collect()
            }
            Gate::QuditPairRot { lower, axis, angle } => {
                check(*lower)?;
                [false, true]
                    .into_iter()
                    .map(|q| Block {
                        a: map.index(*lower, q),
                        b: map.index(*lower + 1, q),
                        u: pair_rotation(axis.phi(), *angle),
                    })
                    .collect()
            }
            Gate::CondQuditPairRot { lower, axis, angle } => {
                check(*lower)?;
                [false, true]
                    .into_iter()
                    .map(|q| Block {
                        a: map.index(*lower, q),
                        b: map.index(*lower + 1, q),
                        u: pair_rotation(axis.phi(), if q { *angle } else { -angle }),
                    })
                    .collect()
            }
            Gate::DiagonalPhase { .. } => Vec::new(),
        })
    }
}

/// Full hardware matrix of a gate, in label order.
pub fn gate_unitary(gate: &Gate, map: &EncodingMap) -> Result<ComplexMatrix> {
    let n = map.hw_dim();
    if let Gate::DiagonalPhase { phases } = gate {
        if phases.len() != n {
            return Err(Error::HardwareShape(format!(
                "{} phases for {n} hardware levels",
                phases.len()
            )));
        }
        let mut u = ComplexMatrix::zeros(n, n);
        for (k, p) in phases.iter().enumerate() {
            u[(k, k)] = Complex64::from_polar(1.0, *p);
        }
        return Ok(u);
    }
    let mut u = identity(n);
    for blk in gate.blocks(map)? {
        u[(blk.a, blk.a)] = blk.u[(0, 0)];
        u[(blk.a, blk.b)] = blk.u[(0, 1)];
        u[(blk.b, blk.a)] = blk.u[(1, 0)];
        u[(blk.b, blk.b)] = blk.u[(1, 1)];
    }
    Ok(u)
}

/// Product of gate matrices in time order (first gate acts first).
pub fn sequence_unitary(gates: &[Gate], map: &EncodingMap) -> Result<ComplexMatrix> {
    let mut u = identity(map.hw_dim());
    for g in gates {
        u = gate_unitary(g, map)? * u;
    }
    Ok(u)
}

/// Layout of the variational circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsatzVariant {
    /// Atom rotation, then y-axis conditioned rotations on each adjacent
    /// qudit pair, all sandwiched in an x-basis change of the atom so that
    /// the conditioned rotations displace the field along the atom's σx.
    #[default]
    Polaron,
    /// Atom rotation followed by the conditioned rotations, no basis change.
    Direct,
}

pub fn ansatz_parameters(map: &EncodingMap) -> usize {
    map.d()
}

/// Gate list for parameters `theta = (θ_atom, θ_pair0, θ_pair1, ...)`.
pub fn build_vqe_ansatz(theta: &[f64], map: &EncodingMap, variant: AnsatzVariant) -> Result<Vec<Gate>> {
    if map.basis.s2 != crate::operators::Spin::HALF {
        return Err(Error::HardwareShape(
            "variational ansatz needs a spin-1/2 atom carrier".into(),
        ));
    }
    if theta.len() != ansatz_parameters(map) {
        return Err(Error::HardwareShape(format!(
            "ansatz on a {}-level qudit takes {} parameters, got {}",
            map.d(),
            ansatz_parameters(map),
            theta.len()
        )));
    }
    let pairs = (0..map.d() - 1).map(|n| Gate::CondQuditPairRot {
        lower: n,
        axis: Axis::Y,
        angle: theta[n + 1],
    });
    Ok(match variant {
        AnsatzVariant::Direct => std::iter::once(Gate::QubitRot {
            axis: Axis::Y,
            angle: theta[0],
        })
        .chain(pairs)
        .collect(),
        AnsatzVariant::Polaron => std::iter::once(Gate::QubitRot {
            axis: Axis::Y,
            angle: theta[0] + FRAC_PI_2,
        })
        .chain(pairs)
        .chain(std::iter::once(Gate::QubitRot {
            axis: Axis::Y,
            angle: -FRAC_PI_2,
        }))
        .collect(),
    })
}

/// Conditioned rotations realizing `exp(-i φ σz (a + a†))` by splitting the
/// pair terms into odd and even layers (half odd, even, half odd).
pub fn conditioned_displacement(phi: f64, map: &EncodingMap) -> Vec<Gate> {
    let d = map.d();
    let angle = |n: usize| phi * ((n + 1) as f64).sqrt();
    let layer = |parity: usize, scale: f64| {
        (0..d - 1)
            .filter(move |n| n % 2 == parity)
            .map(move |n| Gate::CondQuditPairRot {
                lower: n,
                axis: Axis::X,
                angle: scale * angle(n),
            })
    };
    layer(1, 0.5)
        .chain(layer(0, 1.0))
        .chain(layer(1, 0.5))
        .collect()
}

/// One first-order Trotter step of duration `tau`, in time order:
/// coupling, photon energy, atom energy.
pub fn compile_trotter_step(spec: &RabiSpec, tau: f64, map: &EncodingMap) -> Result<Vec<Gate>> {
    map.check_rabi(spec)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidTarget(format!("Trotter step must be > 0, got {tau}")));
    }
    let n = map.hw_dim();
    let mut gates = vec![Gate::QubitRot {
        axis: Axis::Y,
        angle: -FRAC_PI_2,
    }];
    gates.extend(conditioned_displacement(2.0 * spec.g * tau, map));
    gates.push(Gate::QubitRot {
        axis: Axis::Y,
        angle: FRAC_PI_2,
    });
    let mut photon = vec![0.0; n];
    let mut atom = vec![0.0; n];
    for (k, &hw) in map.comp.iter().enumerate() {
        let (boson, up) = (k / 2, k % 2 == 1);
        photon[hw] = -spec.omega * tau * boson as f64;
        atom[hw] = if up { -0.5 } else { 0.5 } * spec.omega_a * tau;
    }
    gates.push(Gate::DiagonalPhase { phases: photon });
    gates.push(Gate::DiagonalPhase { phases: atom });
    Ok(gates)
}

/// `steps` Trotter steps covering time `t`, simplified.
pub fn compile_trotter(spec: &RabiSpec, t: f64, steps: usize, map: &EncodingMap) -> Result<Vec<Gate>> {
    if steps == 0 {
        return Err(Error::InvalidTarget("need at least one Trotter step".into()));
    }
    let one = compile_trotter_step(spec, t / steps as f64, map)?;
    let mut all = Vec::with_capacity(one.len() * steps);
    for _ in 0..steps {
        all.extend(one.iter().cloned());
    }
    simplify(&all, map)
}

const ANGLE_EPS: f64 = 1e-12;

fn wrap_phase(p: f64) -> f64 {
    let w = p.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

fn is_identity_gate(g: &Gate) -> bool {
    match g {
        Gate::QubitRot { angle, .. }
        | Gate::QuditPairRot { angle, .. }
        | Gate::CondQuditPairRot { angle, .. } => angle.abs() < ANGLE_EPS,
        Gate::DiagonalPhase { phases } => phases.iter().all(|p| wrap_phase(*p).abs() < ANGLE_EPS),
        Gate::QubitUnitary { u } => (u - Mat2::identity()).iter().all(|z| z.norm() < ANGLE_EPS),
    }
}

/// Phases of a diagonal qubit-local gate, if it is one.
fn qubit_local_diagonal(g: &Gate, map: &EncodingMap) -> Option<Mat2> {
    let Gate::DiagonalPhase { phases } = g else {
        return None;
    };
    if map.leakage.iter().any(|&k| wrap_phase(phases[k]).abs() > ANGLE_EPS) {
        return None;
    }
    let (d0, u0) = map.qubit_pairs()[0];
    let same = map.qubit_pairs().iter().all(|&(dn, up)| {
        wrap_phase(phases[dn] - phases[d0]).abs() < ANGLE_EPS
            && wrap_phase(phases[up] - phases[u0]).abs() < ANGLE_EPS
    });
    same.then(|| {
        Mat2::new(
            Complex64::from_polar(1.0, phases[d0]),
            c(0.0),
            c(0.0),
            Complex64::from_polar(1.0, phases[u0]),
        )
    })
}

fn qubit_local(g: &Gate, map: &EncodingMap) -> Option<Mat2> {
    g.qubit_matrix().or_else(|| qubit_local_diagonal(g, map))
}

fn qubit_gate_from(u: Mat2, map: &EncodingMap) -> Gate {
    if u[(0, 1)].norm() < ANGLE_EPS && u[(1, 0)].norm() < ANGLE_EPS {
        let mut phases = vec![0.0; map.hw_dim()];
        for (dn, up) in map.qubit_pairs() {
            phases[dn] = u[(0, 0)].arg();
            phases[up] = u[(1, 1)].arg();
        }
        Gate::DiagonalPhase { phases }
    } else {
        Gate::QubitUnitary { u }
    }
}

fn commutes(a: &Gate, b: &Gate, map: &EncodingMap) -> Result<bool> {
    let ua = gate_unitary(a, map)?;
    let ub = gate_unitary(b, map)?;
    Ok(max_abs_diff(&(&ua * &ub), &(&ub * &ua)) < 1e-12)
}

fn merge_pair(prev: &Gate, next: &Gate) -> Option<Gate> {
    match (prev, next) {
        (
            Gate::QuditPairRot { lower: l1, axis: a1, angle: t1 },
            Gate::QuditPairRot { lower: l2, axis: a2, angle: t2 },
        ) if l1 == l2 && a1 == a2 => Some(Gate::QuditPairRot {
            lower: *l1,
            axis: *a1,
            angle: t1 + t2,
        }),
        (
            Gate::CondQuditPairRot { lower: l1, axis: a1, angle: t1 },
            Gate::CondQuditPairRot { lower: l2, axis: a2, angle: t2 },
        ) if l1 == l2 && a1 == a2 => Some(Gate::CondQuditPairRot {
            lower: *l1,
            axis: *a1,
            angle: t1 + t2,
        }),
        (Gate::DiagonalPhase { phases: p1 }, Gate::DiagonalPhase { phases: p2 }) => {
            Some(Gate::DiagonalPhase {
                phases: p1.iter().zip(p2).map(|(a, b)| wrap_phase(a + b)).collect(),
            })
        }
        _ => None,
    }
}

/// Exact rewrite of a gate list: drops identities, merges adjacent rotations
/// of the same kind, and fuses atom-only gates that can be brought together
/// by commuting past intervening gates. The product of the returned matrices
/// equals that of the input.
pub fn simplify(gates: &[Gate], map: &EncodingMap) -> Result<Vec<Gate>> {
    let mut out: Vec<Gate> = Vec::with_capacity(gates.len());
    for g in gates {
        if is_identity_gate(g) {
            continue;
        }
        if let Some(last) = out.last() {
            if let Some(m) = merge_pair(last, g) {
                out.pop();
                if !is_identity_gate(&m) {
                    out.push(m);
                }
                continue;
            }
        }
        if let Some(ug) = qubit_local(g, map) {
            let mut target = None;
            for k in (0..out.len()).rev() {
                if qubit_local(&out[k], map).is_some() {
                    target = Some(k);
                    break;
                }
                if !commutes(&out[k], g, map)? {
                    break;
                }
            }
            if let Some(k) = target {
                let uq = qubit_local(&out[k], map).expect("qubit-local");
                let fused = qubit_gate_from(ug * uq, map);
                if is_identity_gate(&fused) {
                    out.remove(k);
                } else {
                    out[k] = fused;
                }
                continue;
            }
        }
        out.push(g.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{encode_state, QubitLevels};
    use crate::operators::{
        expm_hermitian, is_unitary, kron, operator_norm, spin_matrices, Spin,
    };
    use crate::target;
    use std::f64::consts::PI;

    fn map32() -> EncodingMap {
        EncodingMap::new(Spin::THREE_HALVES, Spin::HALF, QubitLevels::Lower).unwrap()
    }

    #[test]
    fn qubit_full_turn_is_minus_one() {
        let m = map32();
        for axis in [Axis::X, Axis::Y] {
            let u = gate_unitary(&Gate::QubitRot { axis, angle: 2.0 * PI }, &m).unwrap();
            assert!(max_abs_diff(&u, &(-identity(8))) < 1e-12);
        }
    }

    #[test]
    fn qubit_rotation_matches_spin_operator() {
        let m = map32();
        let s = spin_matrices(Spin::HALF);
        // target ordering is (down, up); spin matrices are (up, down)
        let flip = ComplexMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        for (axis, op) in [(Axis::X, &s.sx), (Axis::Y, &s.sy)] {
            let gen = &flip * op * &flip;
            let expect = kron(&identity(4), &expm_hermitian(&gen, 0.7).unwrap());
            let got = gate_unitary(&Gate::QubitRot { axis, angle: 0.7 }, &m).unwrap();
            // label order for s2=1/2 is (up, down) within each m1; compare in target order
            let got_t = m.restrict_operator(&got);
            assert!(max_abs_diff(&got_t, &expect) < 1e-12, "{axis:?}");
        }
    }

    #[test]
    fn conditioned_sign_convention() {
        let m = map32();
        let cond = gate_unitary(&Gate::CondQuditPairRot { lower: 1, axis: Axis::Y, angle: 0.9 }, &m).unwrap();
        let plain = gate_unitary(&Gate::QuditPairRot { lower: 1, axis: Axis::Y, angle: -0.9 }, &m).unwrap();
        for n in 0..4 {
            for k in 0..4 {
                let (a, b) = (m.index(n, false), m.index(k, false));
                assert!((cond[(a, b)] - plain[(a, b)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_phase_is_identity() {
        let m = map32();
        let u = gate_unitary(&Gate::DiagonalPhase { phases: vec![0.0; 8] }, &m).unwrap();
        assert_eq!(u, identity(8));
        assert!(simplify(&[Gate::DiagonalPhase { phases: vec![0.0; 8] }], &m).unwrap().is_empty());
    }

    #[test]
    fn phase_then_inverse_cancels() {
        let m = map32();
        let p: Vec<f64> = (0..8).map(|k| 0.3 * k as f64).collect();
        let q: Vec<f64> = p.iter().map(|x| -x).collect();
        let out = simplify(&[Gate::DiagonalPhase { phases: p }, Gate::DiagonalPhase { phases: q }], &m).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn ansatz_special_points() {
        let m = map32();
        let vac = encode_state(&target::vacuum(4), &m).unwrap();
        for variant in [AnsatzVariant::Polaron, AnsatzVariant::Direct] {
            let u = sequence_unitary(&build_vqe_ansatz(&[0.0; 4], &m, variant).unwrap(), &m).unwrap();
            assert!((&u * &vac - &vac).norm() < 1e-12);
            let u = sequence_unitary(&build_vqe_ansatz(&[PI, 0.0, 0.0, 0.0], &m, variant).unwrap(), &m).unwrap();
            let out = &u * &vac;
            assert!((out[m.index(0, true)].norm() - 1.0).abs() < 1e-12);
        }
        assert!(build_vqe_ansatz(&[0.0; 3], &m, AnsatzVariant::Direct).is_err());
        let m1 = EncodingMap::new(Spin::THREE_HALVES, Spin::ONE, QubitLevels::Lower).unwrap();
        assert!(build_vqe_ansatz(&[0.0; 4], &m1, AnsatzVariant::Direct).is_err());
    }

    fn sx_times_x(map: &EncodingMap) -> (ComplexMatrix, ComplexMatrix) {
        let d = map.d();
        let b = crate::operators::boson_matrices(d).unwrap();
        let x = &b.a + &b.adag;
        let sz = ComplexMatrix::from_diagonal(&crate::operators::ComplexVector::from_vec(vec![c(-0.5), c(0.5)]));
        let sx = ComplexMatrix::from_row_slice(2, 2, &[c(0.0), c(0.5), c(0.5), c(0.0)]);
        (
            map.embed_operator(&kron(&x, &sz)),
            map.embed_operator(&kron(&x, &sx)),
        )
    }

    #[test]
    fn basis_change_identity() {
        let m = map32();
        let (zx, xx) = sx_times_x(&m);
        let phi = 0.37;
        let seq = [
            Gate::QubitRot { axis: Axis::Y, angle: -FRAC_PI_2 },
            Gate::QubitRot { axis: Axis::Y, angle: 0.0 },
        ];
        let rm = gate_unitary(&seq[0], &m).unwrap();
        let rp = gate_unitary(&Gate::QubitRot { axis: Axis::Y, angle: FRAC_PI_2 }, &m).unwrap();
        let lhs = &rp * expm_hermitian(&zx, phi).unwrap() * &rm;
        let rhs = expm_hermitian(&xx, phi).unwrap();
        assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn pair_splitting_exact_for_single_pair() {
        // a 2-level boson: use only the lowest pair by comparing on d=2 blocks
        let phi = 0.4;
        let u = pair_rotation(0.0, 2.0 * phi);
        let x = ComplexMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let exact = expm_hermitian(&x, phi).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((u[(i, j)] - exact[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pair_splitting_error_is_quadratic() {
        let m = map32();
        let (zx, _) = sx_times_x(&m);
        let mut last = 0.0;
        let mut errs = Vec::new();
        for phi in [0.02, 0.04, 0.08, 0.16] {
            let u = sequence_unitary(&conditioned_displacement(phi, &m), &m).unwrap();
            let e = operator_norm(&(u - expm_hermitian(&zx, phi).unwrap()));
            assert!(e > last);
            last = e;
            errs.push(e);
        }
        // symmetric splitting: error ~ phi^3 locally, certainly bounded by c phi^2
        for (k, phi) in [0.02f64, 0.04, 0.08, 0.16].iter().enumerate() {
            assert!(errs[k] <= 0.5 * phi * phi, "{errs:?}");
        }
    }

    #[test]
    fn trotter_without_coupling_has_no_pair_rotations() {
        let m = map32();
        let gates = compile_trotter_step(&RabiSpec::new(0.0, 4), 0.3, &m).unwrap();
        let simp = simplify(&gates, &m).unwrap();
        assert!(simp.iter().all(|g| g.is_virtual()), "{simp:?}");
    }

    #[test]
    fn simplify_preserves_product() {
        let m = map32();
        let spec = RabiSpec::new(0.6, 4);
        let gates: Vec<Gate> = (0..3)
            .flat_map(|_| compile_trotter_step(&spec, 0.4, &m).unwrap())
            .collect();
        let simp = simplify(&gates, &m).unwrap();
        assert!(simp.len() < gates.len());
        let a = sequence_unitary(&gates, &m).unwrap();
        let b = sequence_unitary(&simp, &m).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-12);
        assert!(is_unitary(&m.restrict_operator(&b)));
    }

    #[test]
    fn trotter_local_error_second_order() {
        let m = map32();
        let spec = RabiSpec::new(0.5, 4);
        let h = target::rabi_hamiltonian(&spec).unwrap();
        let errs: Vec<f64> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&tau| {
                let u = sequence_unitary(&compile_trotter_step(&spec, tau, &m).unwrap(), &m).unwrap();
                operator_norm(&(m.restrict_operator(&u) - expm_hermitian(&h, tau).unwrap()))
            })
            .collect();
        for w in errs.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((slope - 2.0).abs() < 0.25, "slope {slope} from {errs:?}");
        }
    }

    mod props {
        use super::*;
        use crate::operators::{is_unitary, Spin};
        use proptest::prelude::*;

        fn gate() -> impl Strategy<Value = Gate> {
            let axis = prop_oneof![Just(Axis::X), Just(Axis::Y)];
            prop_oneof![
                (axis.clone(), -7.0f64..7.0).prop_map(|(axis, angle)| Gate::QubitRot { axis, angle }),
                (0usize..3, axis.clone(), -7.0f64..7.0)
                    .prop_map(|(lower, axis, angle)| Gate::QuditPairRot { lower, axis, angle }),
                (0usize..3, axis, -7.0f64..7.0)
                    .prop_map(|(lower, axis, angle)| Gate::CondQuditPairRot { lower, axis, angle }),
                prop::collection::vec(-4.0f64..4.0, 8).prop_map(|phases| Gate::DiagonalPhase { phases }),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn gates_are_unitary_and_simplify_exactly(gates in prop::collection::vec(gate(), 0..12)) {
                let m = EncodingMap::new(Spin::THREE_HALVES, Spin::HALF, QubitLevels::Lower).unwrap();
                let u = sequence_unitary(&gates, &m).unwrap();
                prop_assert!(is_unitary(&u));
                let s = simplify(&gates, &m).unwrap();
                prop_assert!(s.len() <= gates.len());
                prop_assert!(max_abs_diff(&sequence_unitary(&s, &m).unwrap(), &u) < 1e-9);
            }
        }
    }
}
