//! Ideal backend: exact gate unitaries on the label basis, optionally with
//! each gate's physical duration spent under the dephasing channel.

use super::{Dephaser, Evolution, Trajectory};
use crate::encoding::EncodingMap;
use crate::error::{Error, Result};
use crate::gates::{gate_unitary, Gate};
use crate::operators::ComplexMatrix;

/// Applies `gates` to `rho0` (label basis). With `durations` and a dephaser,
/// gate `k` is sandwiched between two half-duration dephasing steps.
pub fn evolve_ideal(
    map: &EncodingMap,
    gates: &[Gate],
    rho0: &ComplexMatrix,
    durations_ns: Option<&[f64]>,
    dephaser: Option<&Dephaser>,
) -> Result<Evolution> {
    if let Some(d) = durations_ns {
        if d.len() != gates.len() {
            return Err(Error::HardwareShape(format!(
                "{} durations for {} gates",
                d.len(),
                gates.len()
            )));
        }
    }
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut traj = Trajectory::default();
    traj.record(0.0, &rho, map);
    for (k, gate) in gates.iter().enumerate() {
        let u = gate_unitary(gate, map)?;
        let tau = durations_ns.map_or(0.0, |d| d[k]);
        match dephaser {
            Some(dp) if tau > 0.0 => {
                rho = dp.apply(&rho, 0.5 * tau);
                rho = &u * rho * u.adjoint();
                rho = dp.apply(&rho, 0.5 * tau);
            }
            _ => rho = &u * rho * u.adjoint(),
        }
        t += tau;
        traj.record(t, &rho, map);
    }
    Ok(Evolution {
        rho,
        trajectory: traj,
        duration_ns: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::QubitLevels;
    use crate::gates::Axis;
    use crate::hardware::{HardwareSpec, ProductBasis};
    use crate::operators::{c, outer, ComplexVector};
    use crate::presets;

    #[test]
    fn idle_qubit_coherence_decays_with_t2() {
        let spec: HardwareSpec = presets::fig2().hardware.with_t2(Some(10.0));
        let map = crate::encoding::EncodingMap::new(spec.s1, spec.s2, QubitLevels::Lower).unwrap();
        let basis = ProductBasis { s1: spec.s1, s2: spec.s2 };
        let dp = Dephaser::in_label_basis(&basis, &spec).unwrap();
        let (dn, up) = (map.index(0, false), map.index(0, true));
        let mut psi = ComplexVector::zeros(map.hw_dim());
        psi[dn] = c(0.5f64.sqrt());
        psi[up] = c(0.5f64.sqrt());
        let rho0 = outer(&psi);
        let idle = Gate::QubitRot { axis: Axis::X, angle: 0.0 };
        let t = 4000.0;
        let ev = evolve_ideal(&map, &[idle], &rho0, Some(&[t]), Some(&dp)).unwrap();
        let coh = 2.0 * ev.rho[(dn, up)].norm();
        assert!((coh - (-t / 10_000.0f64).exp()).abs() < 1e-12);
        assert_eq!(ev.trajectory.samples.len(), 2);
    }
}
