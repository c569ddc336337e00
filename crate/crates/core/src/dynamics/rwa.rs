//! Rotating-frame backend.
//!
//! During a segment with carrier `f`, phase `φ` and orientation `σ` the
//! state is moved to the frame generated by `σN` (`N = m1 + m2`, exactly
//! conserved by `H0`). Dropping counter-rotating terms leaves
//!
//! `H_r(t) = diag(E - fσN) + b(t) W_φ`, `W_φ[j,k] = Ṽ[j,k]/2 · e^{-iφσ(N_j - N_k)}`,
//!
//! with `b = μB B1` and `Ṽ` the drive operator in the dressed basis. The
//! propagator is built from midpoint slices and diagonalization per slice.
//! A segment's interaction-picture propagator only depends on its start
//! time and phase through a diagonal conjugation, so each distinct pulse
//! shape is integrated once.

use std::collections::HashMap;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{rotate_diag, Dephaser, Evolution, Trajectory};
use crate::encoding::EncodingMap;
use crate::error::{Error, Result};
use crate::hardware::HardwareModel;
use crate::operators::{eig_hermitian_unchecked, ComplexMatrix};
use crate::schedule::{slices, Envelope, PulseSchedule, Segment};

type ShapeKey = (usize, usize, u64, u64, u64, u64, u64, Envelope, u64);

/// Static data shared by all segments on one hardware model.
#[derive(Debug)]
pub struct DriveContext {
    pub energies: Vec<f64>,
    pub n_total: Vec<f64>,
    /// Drive operator `g1 Sx1 + g2 sx2` in the dressed basis.
    pub drive: ComplexMatrix,
    pub dephaser: Option<Dephaser>,
    /// Nonzero drive elements `(j, k, Ṽ[j,k], E_j - E_k)`.
    pub couplings: Vec<(usize, usize, Complex64, f64)>,
    cache: Mutex<HashMap<ShapeKey, ComplexMatrix>>,
}

impl DriveContext {
    pub fn new(model: &HardwareModel) -> Self {
        let n = model.dim();
        let mut couplings = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let v = model.drive_dressed[(j, k)];
                if j != k && v.norm() > 1e-12 {
                    couplings.push((j, k, v, model.energies[j] - model.energies[k]));
                }
            }
        }
        DriveContext {
            energies: model.energies.clone(),
            n_total: model.total_m(),
            drive: model.drive_dressed.clone(),
            dephaser: Dephaser::new(model),
            couplings,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Largest Bohr frequency reachable by the drive, GHz.
    pub fn max_bohr_ghz(&self) -> f64 {
        self.couplings.iter().map(|c| c.3.abs()).fold(0.0, f64::max)
    }

    /// Rotating-frame energies `E - fσN`.
    pub fn frame_energies(&self, seg: &Segment) -> Vec<f64> {
        let fs = seg.carrier_ghz * seg.orientation;
        self.energies
            .iter()
            .zip(&self.n_total)
            .map(|(e, n)| e - fs * n)
            .collect()
    }

    fn rwa_hamiltonian(&self, seg: &Segment, k: &[f64], b: f64) -> ComplexMatrix {
        let n = self.dim();
        let mut h = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = Complex64::new(k[i], 0.0);
        }
        let s = seg.orientation;
        for &(i, j, v, _) in &self.couplings {
            let dn = (self.n_total[i] - self.n_total[j]).round();
            if dn.abs() == 1.0 {
                h[(i, j)] += v * 0.5 * b * Complex64::from_polar(1.0, -seg.phase_rad * s * dn);
            }
        }
        h
    }

    /// Rotating-frame propagator over one slice ending at `tau` + dt.
    fn slice_unitary(&self, seg: &Segment, k: &[f64], tau_mid: f64, dt: f64) -> ComplexMatrix {
        let h = self.rwa_hamiltonian(seg, k, seg.drive_ghz(tau_mid));
        let w = -2.0 * std::f64::consts::PI * dt;
        eig_hermitian_unchecked(&h).apply_fn(|e| Complex64::from_polar(1.0, w * e))
    }
}

/// Rotating-frame propagator of a whole segment, `U_r(t1, t0)`.
pub fn rotating_propagator(ctx: &DriveContext, seg: &Segment, slice_ns: f64) -> ComplexMatrix {
    let k = ctx.frame_energies(seg);
    let n = slices(seg.duration_ns, slice_ns);
    let dt = seg.duration_ns / n as f64;
    let mut u = ComplexMatrix::identity(ctx.dim(), ctx.dim());
    for s in 0..n {
        u = ctx.slice_unitary(seg, &k, (s as f64 + 0.5) * dt, dt) * u;
    }
    u
}

/// Interaction-picture propagator `e^{i2πK t1} U_r e^{-i2πK t0}` of a segment.
pub fn segment_propagator(ctx: &DriveContext, seg: &Segment, slice_ns: f64) -> ComplexMatrix {
    let key: ShapeKey = (
        seg.a,
        seg.b,
        seg.carrier_ghz.to_bits(),
        seg.orientation.to_bits(),
        seg.duration_ns.to_bits(),
        seg.sigma_ns.to_bits(),
        seg.amplitude_t.to_bits(),
        seg.envelope,
        slice_ns.to_bits(),
    );
    let cached = ctx.cache.lock().expect("cache lock").get(&key).cloned();
    let p0 = match cached {
        Some(p) => p,
        None => {
            let base = Segment {
                phase_rad: 0.0,
                start_ns: 0.0,
                ..seg.clone()
            };
            let u = rotating_propagator(ctx, &base, slice_ns);
            let k = ctx.frame_energies(&base);
            let n = ctx.dim();
            let tau = 2.0 * std::f64::consts::PI * seg.duration_ns;
            let p = ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)] * Complex64::from_polar(1.0, tau * k[i]));
            ctx.cache.lock().expect("cache lock").insert(key, p.clone());
            p
        }
    };
    // P(φ, t0) = G P0 G†, G = diag(e^{i2πK t0 - iφσN})
    let k = ctx.frame_energies(seg);
    let g: Vec<f64> = (0..ctx.dim())
        .map(|i| {
            2.0 * std::f64::consts::PI * k[i] * seg.start_ns - seg.phase_rad * seg.orientation * ctx.n_total[i]
        })
        .collect();
    let n = ctx.dim();
    ComplexMatrix::from_fn(n, n, |i, j| p0[(i, j)] * Complex64::from_polar(1.0, g[i] - g[j]))
}

/// How dephasing is interleaved with the coherent pulse propagators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DephasingSplit {
    /// Half the channel before and after each segment.
    #[default]
    Segment,
    /// Half the channel before and after each time slice.
    Slice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RwaOptions {
    pub slice_ns: f64,
    pub rwa_ratio_max: f64,
    pub split: DephasingSplit,
}

impl Default for RwaOptions {
    fn default() -> Self {
        RwaOptions {
            slice_ns: 0.25,
            rwa_ratio_max: 0.01,
            split: DephasingSplit::Segment,
        }
    }
}

/// Checks the peak Rabi frequency of every segment against its carrier.
pub fn check_rwa(ctx: &DriveContext, schedule: &PulseSchedule, ratio_max: f64) -> Result<()> {
    for (index, seg) in schedule.segments().enumerate() {
        let rabi = crate::hardware::MU_B_GHZ_PER_T * seg.amplitude_t * ctx.drive[(seg.b, seg.a)].norm();
        let ratio = rabi / seg.carrier_ghz;
        if ratio > ratio_max {
            return Err(Error::RwaInvalid { index, ratio });
        }
    }
    Ok(())
}

/// Runs a schedule from the interaction-picture state `rho0`.
pub fn evolve_rwa(
    ctx: &DriveContext,
    map: &EncodingMap,
    schedule: &PulseSchedule,
    rho0: &ComplexMatrix,
    opts: &RwaOptions,
) -> Result<Evolution> {
    check_rwa(ctx, schedule, opts.rwa_ratio_max)?;
    let mut rho = rho0.clone();
    let mut traj = Trajectory::default();
    traj.record(0.0, &rho, map);
    let deph = ctx.dephaser.as_ref();
    for seg in schedule.segments() {
        rho = match (deph, opts.split) {
            (None, _) => {
                let p = segment_propagator(ctx, seg, opts.slice_ns);
                &p * rho * p.adjoint()
            }
            (Some(d), DephasingSplit::Segment) => {
                let half = 0.5 * seg.duration_ns;
                let p = segment_propagator(ctx, seg, opts.slice_ns);
                let r = d.apply_interaction(&rho, &ctx.energies, seg.start_ns, half);
                let r = &p * r * p.adjoint();
                d.apply_interaction(&r, &ctx.energies, seg.end_ns(), half)
            }
            (Some(d), DephasingSplit::Slice) => dephased_segment(ctx, d, seg, &rho, opts.slice_ns),
        };
        traj.record(seg.end_ns(), &rho, map);
    }
    Ok(Evolution {
        rho: schedule.to_logical(&rho),
        trajectory: traj,
        duration_ns: schedule.total_ns,
    })
}

/// Slice-level splitting in the rotating frame, where the channel acts
/// without time dependence.
fn dephased_segment(ctx: &DriveContext, d: &Dephaser, seg: &Segment, rho_i: &ComplexMatrix, slice_ns: f64) -> ComplexMatrix {
    let k = ctx.frame_energies(seg);
    let n = slices(seg.duration_ns, slice_ns);
    let dt = seg.duration_ns / n as f64;
    let local = Segment {
        start_ns: 0.0,
        ..seg.clone()
    };
    let mut rho = rotate_diag(rho_i, &k, -seg.start_ns);
    // The frame phase e^{-iφσN} is carried by W_φ, so only the K rotation
    // is needed to enter and leave the frame.
    for s in 0..n {
        let u = ctx.slice_unitary(&local, &k, (s as f64 + 0.5) * dt, dt);
        rho = d.apply(&rho, 0.5 * dt);
        rho = &u * rho * u.adjoint();
        rho = d.apply(&rho, 0.5 * dt);
    }
    rotate_diag(&rho, &k, seg.end_ns())
}
