//! Lab-frame backend: the full oscillating drive `b(t) cos(2πft + φ) Ṽ`,
//! counter-rotating terms included, integrated with fixed-step RK4.
//!
//! Integration runs in the interaction picture of `H0`, which removes the
//! static energies from the stiff part without approximation. The state is
//! carried as a factor `Ψ` with `ρ = ΨΨ†`; dephasing is applied at chunk
//! boundaries with the exact channel, after which `Ψ` is refactored.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Evolution, Trajectory};
use crate::encoding::EncodingMap;
use crate::error::{Error, Result};
use crate::operators::{eig_hermitian_unchecked, ComplexMatrix};
use crate::schedule::{PulseSchedule, Segment};

use super::rwa::DriveContext;

/// Points per period of the fastest frequency in the problem.
pub const POINTS_PER_PERIOD: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabOptions {
    /// Requested step; `None` picks the largest allowed one.
    pub dt_ns: Option<f64>,
    /// Interval between applications of the dephasing channel.
    pub dephasing_interval_ns: f64,
}

impl Default for LabOptions {
    fn default() -> Self {
        LabOptions {
            dt_ns: None,
            dephasing_interval_ns: 0.25,
        }
    }
}

/// Largest allowed step for a schedule: `1 / (40 f_max)`.
pub fn step_limit(ctx: &DriveContext, schedule: &PulseSchedule) -> (f64, f64) {
    let f_max = schedule
        .segments()
        .map(|s| s.carrier_ghz)
        .fold(ctx.max_bohr_ghz(), f64::max);
    (1.0 / (POINTS_PER_PERIOD * f_max), f_max)
}

fn factor(rho: &ComplexMatrix) -> ComplexMatrix {
    let eig = eig_hermitian_unchecked(rho);
    let top = eig.values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..eig.values.len())
        .filter(|&k| eig.values[k] > 1e-15 * top.max(1e-300))
        .collect();
    let n = rho.nrows();
    ComplexMatrix::from_fn(n, keep.len(), |i, j| {
        eig.vectors[(i, keep[j])] * eig.values[keep[j]].sqrt()
    })
}

fn density(psi: &ComplexMatrix) -> ComplexMatrix {
    psi * psi.adjoint()
}

/// `out = x + a·y`.
fn axpy(out: &mut ComplexMatrix, x: &ComplexMatrix, a: f64, y: &ComplexMatrix) {
    for ((o, x), y) in out.iter_mut().zip(x.iter()).zip(y.iter()) {
        *o = x + y * a;
    }
}

struct Stepper<'a> {
    ctx: &'a DriveContext,
    seg: &'a Segment,
    h: f64,
    /// `e^{i2π ω_c t}` for each coupling at the current time.
    z: Vec<Complex64>,
    half: Vec<Complex64>,
    t: f64,
}

impl<'a> Stepper<'a> {
    fn new(ctx: &'a DriveContext, seg: &'a Segment, h: f64) -> Self {
        let half = ctx
            .couplings
            .iter()
            .map(|c| Complex64::from_polar(1.0, PI * c.3 * h))
            .collect();
        let mut s = Stepper {
            ctx,
            seg,
            h,
            z: Vec::new(),
            half,
            t: seg.start_ns,
        };
        s.resync();
        s
    }

    fn resync(&mut self) {
        let t = self.t;
        self.z = self
            .ctx
            .couplings
            .iter()
            .map(|c| Complex64::from_polar(1.0, 2.0 * PI * c.3 * t))
            .collect();
    }

    /// `-i2π H_I(t) Ψ` with the coupling phases `z`.
    fn rhs(&self, t: f64, z: &[Complex64], psi: &ComplexMatrix, out: &mut ComplexMatrix) {
        out.fill(Complex64::new(0.0, 0.0));
        let tau = t - self.seg.start_ns;
        let amp = self.seg.drive_ghz(tau) * (2.0 * PI * self.seg.carrier_ghz * t + self.seg.phase_rad).cos();
        if amp == 0.0 {
            return;
        }
        let pre = Complex64::new(0.0, -2.0 * PI * amp);
        for (ci, &(j, k, v, _)) in self.ctx.couplings.iter().enumerate() {
            let w = pre * v * z[ci];
            for col in 0..psi.ncols() {
                out[(j, col)] += w * psi[(k, col)];
            }
        }
    }

    fn step(&mut self, psi: &mut ComplexMatrix, k: &mut [ComplexMatrix; 4], tmp: &mut ComplexMatrix) {
        let (t, h) = (self.t, self.h);
        let zm: Vec<Complex64> = self.z.iter().zip(&self.half).map(|(a, b)| a * b).collect();
        let ze: Vec<Complex64> = zm.iter().zip(&self.half).map(|(a, b)| a * b).collect();
        let [k1, k2, k3, k4] = k;
        self.rhs(t, &self.z, psi, k1);
        axpy(tmp, psi, 0.5 * h, k1);
        self.rhs(t + 0.5 * h, &zm, tmp, k2);
        axpy(tmp, psi, 0.5 * h, k2);
        self.rhs(t + 0.5 * h, &zm, tmp, k3);
        axpy(tmp, psi, h, k3);
        self.rhs(t + h, &ze, tmp, k4);
        let w = Complex64::new(h / 6.0, 0.0);
        for i in 0..psi.len() {
            psi[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.t += h;
        self.z = ze;
    }
}

/// Runs a schedule from the interaction-picture state `rho0`.
pub fn evolve_lab(
    ctx: &DriveContext,
    map: &EncodingMap,
    schedule: &PulseSchedule,
    rho0: &ComplexMatrix,
    opts: &LabOptions,
) -> Result<Evolution> {
    let (limit, f_max) = step_limit(ctx, schedule);
    let dt = opts.dt_ns.unwrap_or(limit);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::TimeStepTooLarge {
            dt_ns: dt,
            limit_ns: limit,
            carrier_ghz: f_max,
        });
    }
    if !(opts.dephasing_interval_ns > 0.0) {
        return Err(Error::Config("dephasing interval must be positive".into()));
    }
    let deph = ctx.dephaser.as_ref();
    let mut psi = factor(rho0);
    let mut traj = Trajectory::default();
    traj.record(0.0, &density(&psi), map);
    for seg in schedule.segments() {
        let steps = (seg.duration_ns / dt).ceil().max(1.0) as usize;
        let h = seg.duration_ns / steps as f64;
        let chunk = match deph {
            Some(_) => ((opts.dephasing_interval_ns / h).round() as usize).max(1),
            None => steps,
        };
        let mut st = Stepper::new(ctx, seg, h);
        let (r, cols) = (psi.nrows(), psi.ncols());
        let mut k = [
            ComplexMatrix::zeros(r, cols),
            ComplexMatrix::zeros(r, cols),
            ComplexMatrix::zeros(r, cols),
            ComplexMatrix::zeros(r, cols),
        ];
        let mut tmp = ComplexMatrix::zeros(r, cols);
        let mut done = 0;
        while done < steps {
            let n = chunk.min(steps - done);
            if let Some(d) = deph {
                let rho = d.apply_interaction(&density(&psi), &ctx.energies, st.t, 0.5 * n as f64 * h);
                psi = factor(&rho);
                let c = psi.ncols();
                k = [
                    ComplexMatrix::zeros(r, c),
                    ComplexMatrix::zeros(r, c),
                    ComplexMatrix::zeros(r, c),
                    ComplexMatrix::zeros(r, c),
                ];
                tmp = ComplexMatrix::zeros(r, c);
            }
            for s in 0..n {
                st.step(&mut psi, &mut k, &mut tmp);
                if (done + s + 1) % 512 == 0 {
                    st.resync();
                }
            }
            done += n;
            if let Some(d) = deph {
                let rho = d.apply_interaction(&density(&psi), &ctx.energies, st.t, 0.5 * n as f64 * h);
                psi = factor(&rho);
            }
        }
        traj.record(seg.end_ns(), &density(&psi), map);
    }
    Ok(Evolution {
        rho: schedule.to_logical(&density(&psi)),
        trajectory: traj,
        duration_ns: schedule.total_ns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rwa::{evolve_rwa, RwaOptions};
    use crate::encoding::QubitLevels;
    use crate::gates::{Axis, Gate};
    use crate::hardware::HardwareModel;
    use crate::operators::{basis_vector, outer};
    use crate::presets;
    use crate::schedule::{schedule_pulses, PulsePolicy};

    #[test]
    fn lab_agrees_with_rwa_on_a_qubit_flip() {
        let spec = presets::fig2().hardware;
        let model = HardwareModel::new(&spec).unwrap();
        let map = EncodingMap::for_spec(&spec, QubitLevels::Lower).unwrap();
        let start = map.index(0, false);
        let gates = [Gate::QubitRot { axis: Axis::Y, angle: 1.1 }];
        let sched = schedule_pulses(&gates, &model, &map, PulsePolicy::default(), &[start]).unwrap();
        let ctx = DriveContext::new(&model);
        let rho0 = outer(&basis_vector(model.dim(), start));
        let a = evolve_rwa(&ctx, &map, &sched, &rho0, &RwaOptions::default()).unwrap();
        let b = evolve_lab(&ctx, &map, &sched, &rho0, &LabOptions::default()).unwrap();
        let diff = crate::operators::max_abs_diff(&a.rho, &b.rho);
        assert!(diff < 1e-2, "lab vs rwa {diff}");
    }

    #[test]
    fn oversized_step_is_rejected() {
        let spec = presets::fig2().hardware;
        let model = HardwareModel::new(&spec).unwrap();
        let map = EncodingMap::for_spec(&spec, QubitLevels::Lower).unwrap();
        let start = map.index(0, false);
        let gates = [Gate::QubitRot { axis: Axis::X, angle: 0.5 }];
        let sched = schedule_pulses(&gates, &model, &map, PulsePolicy::default(), &[start]).unwrap();
        let ctx = DriveContext::new(&model);
        let rho0 = outer(&basis_vector(model.dim(), start));
        let opts = LabOptions {
            dt_ns: Some(0.01),
            ..Default::default()
        };
        assert!(matches!(
            evolve_lab(&ctx, &map, &sched, &rho0, &opts),
            Err(Error::TimeStepTooLarge { .. })
        ));
    }
}
