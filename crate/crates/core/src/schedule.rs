//! Pulse scheduling: turns a logical gate list into a timed sequence of
//! microwave segments plus zero-duration frame updates.
//!
//! Every physical rotation is one shaped pulse on a single hardware
//! transition. Its amplitude is calibrated against the simulated
//! rotating-frame propagator, and the residual phases it leaves on the
//! driven pair and on all spectator levels are absorbed into a diagonal
//! software frame `F`: the logical state is `F ρ F†` where `ρ` is the
//! hardware state in the interaction picture of the static Hamiltonian.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::rwa::{segment_propagator, DriveContext};
use crate::encoding::EncodingMap;
use crate::error::{Error, Result};
use crate::gates::{Block, Gate, Mat2};
use crate::hardware::{HardwareModel, Label, Transition, MU_B_GHZ_PER_T};
use crate::operators::{c, ComplexMatrix, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    /// Gaussian truncated at ±3σ with the pedestal removed.
    #[default]
    Gaussian,
    Rectangular,
}

/// How diagonal gates are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    /// Software frame updates only.
    #[default]
    Virtual,
    /// Qudit-pair phase differences imprinted by detuned pulses; the residual
    /// is absorbed in the frame.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulsePolicy {
    pub selectivity_factor: f64,
    pub max_pulse_ns: f64,
    pub base_sigma_ns: f64,
    pub envelope: Envelope,
    /// Largest allowed peak Rabi frequency over carrier.
    pub rwa_ratio_max: f64,
    /// Time slice used by the rotating-frame propagator.
    pub slice_ns: f64,
    pub phase_mode: PhaseMode,
    /// Detuning of phase pulses in units of their spectral width.
    pub phase_pulse_detuning: f64,
}

impl Default for PulsePolicy {
    fn default() -> Self {
        PulsePolicy {
            selectivity_factor: 5.0,
            max_pulse_ns: 400.0,
            base_sigma_ns: 1.0,
            envelope: Envelope::Gaussian,
            rwa_ratio_max: 0.01,
            slice_ns: 0.25,
            phase_mode: PhaseMode::Virtual,
            phase_pulse_detuning: 8.0,
        }
    }
}

impl PulsePolicy {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.selectivity_factor,
            self.max_pulse_ns,
            self.base_sigma_ns,
            self.rwa_ratio_max,
            self.slice_ns,
            self.phase_pulse_detuning,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("pulse policy values must be positive".into()));
        }
        Ok(())
    }
}

/// One microwave tone on one transition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub from: Label,
    pub to: Label,
    /// Label indices of the lower-m and upper-m level.
    pub a: usize,
    pub b: usize,
    pub carrier_ghz: f64,
    pub phase_rad: f64,
    pub start_ns: f64,
    pub duration_ns: f64,
    pub sigma_ns: f64,
    /// Peak oscillating field, tesla.
    pub amplitude_t: f64,
    pub envelope: Envelope,
    /// +1 if the upper-m level lies higher in energy.
    pub orientation: f64,
    /// Intended rotation angle on the pair (0 for phase pulses).
    pub angle_rad: f64,
    pub gate_index: usize,
}

impl Segment {
    /// Normalized envelope at time `tau` after the segment start.
    pub fn shape(&self, tau: f64) -> f64 {
        envelope_value(self.envelope, self.sigma_ns, self.duration_ns, tau)
    }

    /// `μB B1(t) / h` in GHz.
    pub fn drive_ghz(&self, tau: f64) -> f64 {
        MU_B_GHZ_PER_T * self.amplitude_t * self.shape(tau)
    }

    pub fn end_ns(&self) -> f64 {
        self.start_ns + self.duration_ns
    }

    /// Peak Rabi frequency of the addressed transition, GHz.
    pub fn peak_rabi_ghz(&self, model: &HardwareModel) -> f64 {
        MU_B_GHZ_PER_T * self.amplitude_t * model.drive_dressed[(self.b, self.a)].norm()
    }
}

pub fn envelope_value(env: Envelope, sigma: f64, duration: f64, tau: f64) -> f64 {
    if !(0.0..=duration).contains(&tau) {
        return 0.0;
    }
    match env {
        Envelope::Rectangular => 1.0,
        Envelope::Gaussian => {
            let x = (tau - 0.5 * duration) / sigma;
            let floor = (-4.5f64).exp();
            (((-0.5 * x * x).exp() - floor) / (1.0 - floor)).max(0.0)
        }
    }
}

fn duration_for(env: Envelope, sigma: f64) -> f64 {
    match env {
        Envelope::Gaussian => 6.0 * sigma,
        Envelope::Rectangular => 6.0 * sigma,
    }
}

/// Midpoint slicing shared by calibration and the rotating-frame backend.
pub fn slices(duration: f64, slice_ns: f64) -> usize {
    ((duration / slice_ns).ceil() as usize).max(16)
}

/// Integral of the sliced envelope, ns.
pub fn envelope_area(env: Envelope, sigma: f64, duration: f64, slice_ns: f64) -> f64 {
    let n = slices(duration, slice_ns);
    let dt = duration / n as f64;
    (0..n)
        .map(|k| envelope_value(env, sigma, duration, (k as f64 + 0.5) * dt))
        .sum::<f64>()
        * dt
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Item {
    Pulse(Segment),
    /// Zero-duration frame update: `F_k ← exp(i delta_k) F_k`.
    Frame { gate_index: usize, delta: Vec<f64> },
}

#[derive(Debug, Clone, Serialize)]
pub struct PulseSchedule {
    pub dim: usize,
    pub items: Vec<Item>,
    pub total_ns: f64,
    /// Phases of the software frame after the last item.
    pub final_frame: Vec<f64>,
    /// Physical time spent on each input gate.
    pub gate_durations_ns: Vec<f64>,
}

impl PulseSchedule {
    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.items.iter().filter_map(|i| match i {
            Item::Pulse(s) => Some(s),
            Item::Frame { .. } => None,
        })
    }

    pub fn pulse_count(&self) -> usize {
        self.segments().count()
    }

    pub fn frame_matrix(&self) -> ComplexMatrix {
        frame_matrix(&self.final_frame)
    }

    /// Logical density matrix from the interaction-picture hardware state.
    pub fn to_logical(&self, rho_i: &ComplexMatrix) -> ComplexMatrix {
        apply_frame(&self.final_frame, rho_i)
    }
}

pub fn frame_matrix(phases: &[f64]) -> ComplexMatrix {
    let n = phases.len();
    let mut f = ComplexMatrix::zeros(n, n);
    for (k, p) in phases.iter().enumerate() {
        f[(k, k)] = Complex64::from_polar(1.0, *p);
    }
    f
}

/// `F ρ F†` for a diagonal frame given by its phases.
pub fn apply_frame(phases: &[f64], rho: &ComplexMatrix) -> ComplexMatrix {
    let n = phases.len();
    ComplexMatrix::from_fn(n, n, |i, j| {
        rho[(i, j)] * Complex64::from_polar(1.0, phases[i] - phases[j])
    })
}

/// Single-pulse propagator calibrated at zero phase and zero start time.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub amplitude_t: f64,
    pub sigma_ns: f64,
    pub duration_ns: f64,
    pub propagator: ComplexMatrix,
}

/// Compiles gate lists for one hardware model, caching pulse calibrations.
pub struct Scheduler<'a> {
    pub model: &'a HardwareModel,
    pub map: &'a EncodingMap,
    pub policy: PulsePolicy,
    ctx: DriveContext,
    cache: HashMap<(usize, usize, u64, u64), Calibration>,
    sigma_cache: HashMap<(usize, usize, u64), f64>,
}

fn unit(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n < 1e-300 {
        c(1.0)
    } else {
        z / n
    }
}

const ROTATION_EPS: f64 = 1e-9;

impl<'a> Scheduler<'a> {
    pub fn new(model: &'a HardwareModel, map: &'a EncodingMap, policy: PulsePolicy) -> Result<Self> {
        policy.validate()?;
        if map.hw_dim() != model.dim() {
            return Err(Error::HardwareShape(format!(
                "encoding dimension {} does not match hardware {}",
                map.hw_dim(),
                model.dim()
            )));
        }
        Ok(Scheduler {
            model,
            map,
            policy,
            ctx: DriveContext::new(model),
            cache: HashMap::new(),
            sigma_cache: HashMap::new(),
        })
    }

    pub fn context(&self) -> &DriveContext {
        &self.ctx
    }

    /// Mutable access, e.g. to swap the dephasing channel between runs.
    pub fn context_mut(&mut self) -> &mut DriveContext {
        &mut self.ctx
    }

    fn transition(&self, a: usize, b: usize) -> Result<&'a Transition> {
        self.model.transitions.find(a, b).ok_or_else(|| Error::MissingTransition {
            from: self.model.label(a).to_string(),
            to: self.model.label(b).to_string(),
        })
    }

    /// Smallest multiple of the base width meeting selectivity and RWA limits.
    fn choose_sigma(&mut self, tr: &Transition, theta: f64) -> Result<f64> {
        let key = (tr.from_index, tr.to_index, theta.to_bits());
        if let Some(s) = self.sigma_cache.get(&key) {
            return Ok(*s);
        }
        self.sigma_from(tr, theta, 1)
    }

    /// Smallest admissible width of at least `k_min` base widths.
    fn sigma_from(&mut self, tr: &Transition, theta: f64, k_min: usize) -> Result<f64> {
        let key = (tr.from_index, tr.to_index, theta.to_bits());
        let p = self.policy;
        let detuning = self.model.transitions.nearest_spectator(tr, tr.frequency_ghz);
        let mut k = k_min;
        loop {
            let sigma = k as f64 * p.base_sigma_ns;
            let duration = duration_for(p.envelope, sigma);
            if duration > p.max_pulse_ns + 1e-9 {
                return Err(Error::Scheduling {
                    transition: tr.name(),
                    reason: format!(
                        "no pulse up to {} ns is selective (nearest spectator {:.4} GHz) within the RWA limit",
                        p.max_pulse_ns, detuning
                    ),
                });
            }
            let width = 1.0 / (2.0 * PI * sigma);
            let area = envelope_area(p.envelope, sigma, duration, p.slice_ns);
            let peak_rabi = theta / (2.0 * PI * area);
            if detuning >= p.selectivity_factor * width
                && peak_rabi / tr.frequency_ghz < p.rwa_ratio_max
            {
                self.sigma_cache.insert(key, sigma);
                return Ok(sigma);
            }
            k += 1;
        }
    }

    fn propagator(&self, tr: &Transition, sigma: f64, duration: f64, amplitude_t: f64) -> ComplexMatrix {
        let seg = Segment {
            from: tr.from,
            to: tr.to,
            a: tr.from_index,
            b: tr.to_index,
            carrier_ghz: tr.frequency_ghz,
            phase_rad: 0.0,
            start_ns: 0.0,
            duration_ns: duration,
            sigma_ns: sigma,
            amplitude_t,
            envelope: self.policy.envelope,
            orientation: tr.orientation(),
            angle_rad: 0.0,
            gate_index: 0,
        };
        segment_propagator(&self.ctx, &seg, self.policy.slice_ns)
    }

    /// Finds the amplitude whose simulated pulse rotates the pair by `theta`.
    pub fn calibrate(&mut self, tr: &Transition, theta: f64) -> Result<Calibration> {
        let mut sigma = self.choose_sigma(tr, theta)?;
        loop {
            let cal = self.calibrate_at(tr, theta, sigma)?;
            let ratio = MU_B_GHZ_PER_T * cal.amplitude_t * tr.matrix_element.norm() / tr.frequency_ghz;
            if ratio <= self.policy.rwa_ratio_max {
                return Ok(cal);
            }
            // The nominal estimate ignores dressing; widen and retry.
            let k = (sigma / self.policy.base_sigma_ns).round() as usize + 1;
            sigma = self.sigma_from(tr, theta, k)?;
        }
    }

    fn calibrate_at(&mut self, tr: &Transition, theta: f64, sigma: f64) -> Result<Calibration> {
        let key = (tr.from_index, tr.to_index, theta.to_bits(), sigma.to_bits());
        if let Some(cal) = self.cache.get(&key) {
            return Ok(cal.clone());
        }
        let p = self.policy;
        let duration = duration_for(p.envelope, sigma);
        let area = envelope_area(p.envelope, sigma, duration, p.slice_ns);
        let me = tr.matrix_element.norm();
        let (a, b) = (tr.from_index, tr.to_index);
        let achieved = |u: &ComplexMatrix| 2.0 * u[(b, a)].norm().atan2(u[(a, a)].norm());
        let guess = theta / (2.0 * PI * MU_B_GHZ_PER_T * me * area);
        let mut x0 = guess;
        let mut u0 = self.propagator(tr, sigma, duration, x0);
        let mut f0 = achieved(&u0) - theta;
        let mut x1 = guess * (1.0 - 0.5 * f0 / theta.max(1e-3));
        let mut best = (f0.abs(), x0, u0.clone());
        for _ in 0..30 {
            if best.0 < 1e-11 {
                break;
            }
            let u1 = self.propagator(tr, sigma, duration, x1);
            let f1 = achieved(&u1) - theta;
            if f1.abs() < best.0 {
                best = (f1.abs(), x1, u1.clone());
            }
            if (f1 - f0).abs() < 1e-15 {
                break;
            }
            let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
            (x0, f0, u0) = (x1, f1, u1);
            x1 = x2.clamp(0.2 * guess, 5.0 * guess);
        }
        let _ = u0;
        if best.0 > 1e-6 {
            return Err(Error::Scheduling {
                transition: tr.name(),
                reason: format!("amplitude calibration did not converge (residual {:.2e} rad)", best.0),
            });
        }
        let cal = Calibration {
            amplitude_t: best.1,
            sigma_ns: sigma,
            duration_ns: duration,
            propagator: best.2,
        };
        self.cache.insert(key, cal.clone());
        Ok(cal)
    }

    /// Schedules `gates` starting from a state supported on `support`.
    pub fn schedule(&mut self, gates: &[Gate], support: &[usize]) -> Result<PulseSchedule> {
        let n = self.model.dim();
        let mut populated = vec![false; n];
        for &k in support {
            populated[k] = true;
        }
        let mut st = State {
            frame: vec![c(1.0); n],
            items: Vec::new(),
            t: 0.0,
            durations: vec![0.0; gates.len()],
        };
        for (gi, gate) in gates.iter().enumerate() {
            if let Gate::DiagonalPhase { phases } = gate {
                match self.policy.phase_mode {
                    PhaseMode::Virtual => st.virtual_update(gi, phases),
                    PhaseMode::Physical => self.physical_phase(&mut st, gi, phases, &populated)?,
                }
                continue;
            }
            for blk in gate.blocks(self.map)? {
                if !populated[blk.a] && !populated[blk.b] {
                    continue;
                }
                if blk.u[(0, 1)].norm() > ROTATION_EPS || blk.u[(1, 0)].norm() > ROTATION_EPS {
                    populated[blk.a] = true;
                    populated[blk.b] = true;
                }
                self.rotation(&mut st, gi, &blk)?;
            }
        }
        st.flush_zero_updates();
        let total = st.t;
        Ok(PulseSchedule {
            dim: n,
            items: st.items,
            total_ns: total,
            final_frame: st.frame.iter().map(|z| z.arg()).collect(),
            gate_durations_ns: st.durations,
        })
    }

    /// Physical time per gate and pulse count, without calibrating amplitudes.
    ///
    /// Pulse widths only depend on the transition and the rotation angle, so
    /// this matches [`Scheduler::schedule`] at a fraction of the cost. The
    /// one exception is a pulse whose calibrated amplitude breaks the RWA
    /// limit and gets widened; that is only known after calibrating.
    pub fn gate_durations(&mut self, gates: &[Gate], support: &[usize]) -> Result<(Vec<f64>, usize)> {
        let mut populated = vec![false; self.model.dim()];
        for &k in support {
            populated[k] = true;
        }
        let mut out = vec![0.0; gates.len()];
        let mut pulses = 0;
        for (gi, gate) in gates.iter().enumerate() {
            if let Gate::DiagonalPhase { phases } = gate {
                if self.policy.phase_mode == PhaseMode::Physical {
                    for (tr, want) in self.phase_targets(phases, &populated)? {
                        for seg in self.phase_pulses(tr, want, gi)? {
                            out[gi] += seg.duration_ns;
                            pulses += 1;
                        }
                    }
                }
                continue;
            }
            for blk in gate.blocks(self.map)? {
                if !populated[blk.a] && !populated[blk.b] {
                    continue;
                }
                if blk.u[(0, 1)].norm() > ROTATION_EPS || blk.u[(1, 0)].norm() > ROTATION_EPS {
                    populated[blk.a] = true;
                    populated[blk.b] = true;
                }
                let theta = 2.0 * blk.u[(0, 0)].norm().min(1.0).acos();
                if (theta / 2.0).sin() < ROTATION_EPS {
                    continue;
                }
                let tr = self.transition(blk.a, blk.b)?;
                let sigma = self.choose_sigma(tr, theta)?;
                out[gi] += duration_for(self.policy.envelope, sigma);
                pulses += 1;
            }
        }
        Ok((out, pulses))
    }

    /// Populated qudit pairs and the phase difference a diagonal gate asks of each.
    fn phase_targets(&self, phases: &[f64], populated: &[bool]) -> Result<Vec<(&'a Transition, f64)>> {
        let mut out = Vec::new();
        for up in [false, true] {
            for n in 0..self.map.d() - 1 {
                let (a, b) = (self.map.index(n, up), self.map.index(n + 1, up));
                if !populated[a] && !populated[b] {
                    continue;
                }
                let want = wrap(phases[b] - phases[a]);
                if want.abs() >= 1e-9 {
                    out.push((self.transition(a, b)?, want));
                }
            }
        }
        Ok(out)
    }

    fn rotation(&mut self, st: &mut State, gi: usize, blk: &Block) -> Result<()> {
        let u = blk.u;
        let cos_half = u[(0, 0)].norm().min(1.0);
        let theta = 2.0 * cos_half.acos();
        if (theta / 2.0).sin() < ROTATION_EPS {
            let mut delta = vec![0.0; self.model.dim()];
            delta[blk.a] = u[(0, 0)].arg();
            delta[blk.b] = u[(1, 1)].arg();
            st.virtual_update(gi, &delta);
            return Ok(());
        }
        let tr = self.transition(blk.a, blk.b)?;
        let cal = self.calibrate(tr, theta)?;
        let (a, b) = (blk.a, blk.b);
        let p0 = &cal.propagator;
        let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        // P0 on the pair = diag(p, q) · R(θ, 0) · diag(1, r)
        let (p, r, q) = if co > 1e-6 {
            let p = unit(p0[(a, a)]);
            (p, unit(I * p0[(a, b)] / p), unit(I * p0[(b, a)]))
        } else {
            (unit(I * p0[(a, b)]), c(1.0), unit(I * p0[(b, a)]))
        };
        // M = U_L · F_pair · D1⁻¹ must equal diag(Δa, Δb) · R(θ, β)
        let fa = st.frame[a];
        let fb = st.frame[b];
        let m = Mat2::new(u[(0, 0)] * fa, u[(0, 1)] * fb / r, u[(1, 0)] * fa, u[(1, 1)] * fb / r);
        let (da, db, beta) = if co > 1e-6 {
            let da = unit(m[(0, 0)]);
            let db = unit(m[(1, 1)]);
            (da, db, unit(m[(1, 0)] / (db * (-I) * si)).arg())
        } else {
            (unit(m[(0, 1)] / (-I)), unit(m[(1, 0)] / (-I)), 0.0)
        };
        let orientation = tr.orientation();
        let phase = -orientation * beta;
        for k in 0..self.model.dim() {
            if k != a && k != b {
                st.frame[k] /= unit(p0[(k, k)]);
            }
        }
        st.frame[a] = da / p;
        st.frame[b] = db / q;
        st.push_pulse(Segment {
            from: tr.from,
            to: tr.to,
            a: tr.from_index,
            b: tr.to_index,
            carrier_ghz: tr.frequency_ghz,
            phase_rad: phase,
            start_ns: st.t,
            duration_ns: cal.duration_ns,
            sigma_ns: cal.sigma_ns,
            amplitude_t: cal.amplitude_t,
            envelope: self.policy.envelope,
            orientation,
            angle_rad: theta,
            gate_index: gi,
        });
        Ok(())
    }

    /// Imprints the qudit phase differences of a diagonal gate with detuned
    /// pulses on the populated qudit pairs; whatever the pulses do not
    /// produce exactly is absorbed in the frame.
    fn physical_phase(&mut self, st: &mut State, gi: usize, phases: &[f64], populated: &[bool]) -> Result<()> {
        for (tr, want) in self.phase_targets(phases, populated)? {
            for seg in self.phase_pulses(tr, want, gi)? {
                let seg = Segment { start_ns: st.t, ..seg };
                let u = segment_propagator(&self.ctx, &seg, self.policy.slice_ns);
                for k in 0..self.model.dim() {
                    st.frame[k] /= unit(u[(k, k)]);
                }
                st.push_pulse(seg);
            }
        }
        st.virtual_update(gi, phases);
        Ok(())
    }

    /// Detuned pulses next to `tr` whose combined light shift advances the
    /// upper level of the pair by roughly `want` relative to the lower one.
    fn phase_pulses(&mut self, tr: &Transition, want: f64, gi: usize) -> Result<Vec<Segment>> {
        let p = self.policy;
        let mut sigma = self.choose_sigma(tr, PI)?;
        let side = tr.orientation() * want.signum();
        let crowded = |f: f64, width: f64| {
            self.model
                .transitions
                .transitions
                .iter()
                .any(|t| (t.frequency_ghz - f).abs() < width)
        };
        // Widen until the drive is weak enough and a quiet carrier exists.
        let (duration, carrier, rabi, parts) = loop {
            let duration = duration_for(p.envelope, sigma);
            let detuning = p.phase_pulse_detuning / (2.0 * PI * sigma);
            let n = slices(duration, p.slice_ns);
            let dt = duration / n as f64;
            let area2: f64 = (0..n)
                .map(|k| envelope_value(p.envelope, sigma, duration, (k as f64 + 0.5) * dt).powi(2))
                .sum::<f64>()
                * dt;
            // A drive detuned by Δ = K_b - K_a shifts the pair apart by Ω²/(2Δ),
            // so the upper level gains phase π ∫Ω² dt / (-Δ).
            let rabi_sq = want.abs() * detuning / (PI * area2);
            let parts = (rabi_sq / (0.3 * detuning).powi(2)).ceil().max(1.0) as usize;
            let rabi = (rabi_sq / parts as f64).sqrt();
            let width = p.selectivity_factor / (2.0 * PI * sigma);
            let carrier = [1.0, 2.0]
                .map(|m| tr.frequency_ghz + side * m * detuning)
                .into_iter()
                .find(|&f| !crowded(f, width));
            let reason = match carrier {
                Some(f) if rabi / tr.frequency_ghz <= p.rwa_ratio_max => break (duration, f, rabi, parts),
                Some(_) => format!("phase pulse for {want:.3} rad violates the RWA limit"),
                None => "no free frequency for a phase pulse".to_string(),
            };
            if duration_for(p.envelope, 2.0 * sigma) > p.max_pulse_ns {
                return Err(Error::Scheduling {
                    transition: tr.name(),
                    reason,
                });
            }
            sigma *= 2.0;
        };
        let seg = Segment {
            from: tr.from,
            to: tr.to,
            a: tr.from_index,
            b: tr.to_index,
            carrier_ghz: carrier,
            phase_rad: 0.0,
            start_ns: 0.0,
            duration_ns: duration,
            sigma_ns: sigma,
            amplitude_t: rabi / (MU_B_GHZ_PER_T * tr.matrix_element.norm()),
            envelope: p.envelope,
            orientation: tr.orientation(),
            angle_rad: 0.0,
            gate_index: gi,
        };
        Ok(vec![seg; parts])
    }
}

fn wrap(p: f64) -> f64 {
    let w = p.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

struct State {
    frame: Vec<Complex64>,
    items: Vec<Item>,
    t: f64,
    durations: Vec<f64>,
}

impl State {
    fn virtual_update(&mut self, gi: usize, delta: &[f64]) {
        for (f, d) in self.frame.iter_mut().zip(delta) {
            *f *= Complex64::from_polar(1.0, *d);
        }
        if let Some(Item::Frame { delta: prev, gate_index }) = self.items.last_mut() {
            for (p, d) in prev.iter_mut().zip(delta) {
                *p = wrap(*p + d);
            }
            *gate_index = gi;
            return;
        }
        self.items.push(Item::Frame {
            gate_index: gi,
            delta: delta.iter().map(|d| wrap(*d)).collect(),
        });
    }

    fn push_pulse(&mut self, seg: Segment) {
        self.flush_zero_updates();
        self.t = seg.end_ns();
        self.durations[seg.gate_index] += seg.duration_ns;
        self.items.push(Item::Pulse(seg));
    }

    fn flush_zero_updates(&mut self) {
        if let Some(Item::Frame { delta, .. }) = self.items.last() {
            if delta.iter().all(|d| d.abs() < 1e-12) {
                self.items.pop();
            }
        }
    }
}

/// Convenience wrapper: schedules `gates` from a single initial level.
pub fn schedule_pulses(
    gates: &[Gate],
    model: &HardwareModel,
    map: &EncodingMap,
    policy: PulsePolicy,
    support: &[usize],
) -> Result<PulseSchedule> {
    Scheduler::new(model, map, policy)?.schedule(gates, support)
}

/// Inspection dump with amplitudes in mT.
#[derive(Debug, Clone, Serialize)]
pub struct ScheduleDump {
    pub total_ns: f64,
    pub pulses: usize,
    pub segments: Vec<SegmentDump>,
    pub final_frame_rad: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentDump {
    pub transition: String,
    pub carrier_ghz: f64,
    pub phase_rad: f64,
    pub start_ns: f64,
    pub duration_ns: f64,
    pub sigma_ns: f64,
    pub amplitude_mt: f64,
    pub envelope: Envelope,
    pub angle_rad: f64,
    pub gate_index: usize,
}

impl PulseSchedule {
    pub fn dump(&self) -> ScheduleDump {
        ScheduleDump {
            total_ns: self.total_ns,
            pulses: self.pulse_count(),
            segments: self
                .segments()
                .map(|s| SegmentDump {
                    transition: format!("{}->{}", s.from, s.to),
                    carrier_ghz: s.carrier_ghz,
                    phase_rad: s.phase_rad,
                    start_ns: s.start_ns,
                    duration_ns: s.duration_ns,
                    sigma_ns: s.sigma_ns,
                    amplitude_mt: s.amplitude_t * 1e3,
                    envelope: s.envelope,
                    angle_rad: s.angle_rad,
                    gate_index: s.gate_index,
                })
                .collect(),
            final_frame_rad: self.final_frame.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rwa::{evolve_rwa, RwaOptions};
    use crate::encoding::{encode_state, QubitLevels};
    use crate::gates::{build_vqe_ansatz, compile_trotter, sequence_unitary, AnsatzVariant, Axis};
    use crate::operators::{basis_vector, outer};
    use crate::presets;
    use crate::target::{vacuum, RabiSpec};

    fn setup(name: &str) -> (HardwareModel, EncodingMap) {
        let p = presets::get(name).unwrap();
        let model = HardwareModel::new(&p.hardware).unwrap();
        let map = EncodingMap::for_spec(&p.hardware, QubitLevels::Lower).unwrap();
        (model, map)
    }

    fn fidelity_after(gates: &[Gate], model: &HardwareModel, map: &EncodingMap, policy: PulsePolicy) -> (f64, PulseSchedule) {
        let start = map.index(0, false);
        let sched = schedule_pulses(gates, model, map, policy, &[start]).unwrap();
        let sch = Scheduler::new(model, map, policy).unwrap();
        let rho0 = outer(&basis_vector(model.dim(), start));
        let ev = evolve_rwa(sch.context(), map, &sched, &rho0, &RwaOptions::default()).unwrap();
        let psi = sequence_unitary(gates, map).unwrap() * basis_vector(model.dim(), start);
        let f = (psi.adjoint() * &ev.rho * &psi)[(0, 0)].re;
        (f, sched)
    }

    #[test]
    fn empty_program_gives_empty_schedule() {
        let (model, map) = setup("fig2");
        let s = schedule_pulses(&[], &model, &map, PulsePolicy::default(), &[0]).unwrap();
        assert_eq!((s.items.len(), s.total_ns), (0, 0.0));
    }

    #[test]
    fn phase_and_inverse_cancel() {
        let (model, map) = setup("fig2");
        let phases: Vec<f64> = (0..model.dim()).map(|k| 0.1 * k as f64).collect();
        let inv: Vec<f64> = phases.iter().map(|p| -p).collect();
        let gates = [
            Gate::DiagonalPhase { phases },
            Gate::DiagonalPhase { phases: inv },
        ];
        let s = schedule_pulses(&gates, &model, &map, PulsePolicy::default(), &[0]).unwrap();
        assert!(s.items.is_empty());
        assert!(s.final_frame.iter().all(|p| p.abs() < 1e-12));
    }

    #[test]
    fn scheduled_ansatz_reproduces_ideal_state() {
        let (model, map) = setup("fig2");
        let gates = build_vqe_ansatz(&[0.3, -0.4, 0.25, 0.1], &map, AnsatzVariant::Polaron).unwrap();
        let (f, s) = fidelity_after(&gates, &model, &map, PulsePolicy::default());
        assert!(f > 0.999, "fidelity {f}");
        assert!(s.pulse_count() > 0);
    }

    #[test]
    fn scheduled_trotter_step_reproduces_ideal_state() {
        let (model, map) = setup("fig3ab");
        let spec = RabiSpec::new(0.25, 4);
        let gates = compile_trotter(&spec, 1.0, 2, &map).unwrap();
        let (f, _) = fidelity_after(&gates, &model, &map, PulsePolicy::default());
        assert!(f > 0.99, "fidelity {f}");
    }

    #[test]
    fn physical_phases_agree_with_virtual_ones() {
        let (model, map) = setup("fig2");
        let mut gates = vec![Gate::QubitRot { axis: Axis::Y, angle: 0.9 }];
        gates.extend(build_vqe_ansatz(&[0.2, 0.5, 0.4, 0.3], &map, AnsatzVariant::Polaron).unwrap());
        let phases: Vec<f64> = (0..model.dim()).map(|k| 0.3 * (k / 2) as f64).collect();
        gates.push(Gate::DiagonalPhase { phases });
        gates.push(Gate::CondQuditPairRot { lower: 0, axis: Axis::X, angle: 0.7 });
        let (fv, _) = fidelity_after(&gates, &model, &map, PulsePolicy::default());
        let physical = PulsePolicy {
            phase_mode: PhaseMode::Physical,
            ..Default::default()
        };
        let (fp, s) = fidelity_after(&gates, &model, &map, physical);
        assert!(s.segments().any(|seg| seg.angle_rad == 0.0));
        assert!((fv - fp).abs() < 1e-3, "virtual {fv} physical {fp}");
    }

    #[test]
    fn vacuum_support_is_the_encoded_vacuum() {
        let (_, map) = setup("fig2");
        let v = encode_state(&vacuum(4), &map).unwrap();
        assert_eq!(v[map.index(0, false)].re, 1.0);
    }
}
