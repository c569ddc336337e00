//! Ground-state search and Trotterized time evolution on simulated hardware,
//! with fidelity accounting against perfect-gate references.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::ideal::evolve_ideal;
use crate::dynamics::lab::{evolve_lab, LabOptions};
use crate::dynamics::rwa::{evolve_rwa, RwaOptions};
use crate::dynamics::{Backend, Dephaser, Trajectory};
use crate::encoding::{encode_state, encoded_hamiltonian, measure_observables, EncodingMap, QubitLevels};
use crate::error::{Error, Result};
use crate::gates::{build_vqe_ansatz, compile_trotter, gate_unitary, AnsatzVariant, Gate};
use crate::hardware::{HardwareModel, HardwareSpec};
use crate::operators::{basis_vector, eig_hermitian_unchecked, outer, ComplexMatrix, ComplexVector};
use crate::optimize::{minimize_with_restarts, NelderMeadOptions};
use crate::presets::StepRule;
use crate::schedule::{PulsePolicy, Scheduler};
use crate::target::{self, ExactPropagator, RabiSpec};

/// `sqrt(<ψ|ρ|ψ>)`, clipped to `[0, 1]`.
pub fn fidelity(rho: &ComplexMatrix, psi: &ComplexVector) -> Result<f64> {
    if rho.nrows() != psi.len() {
        return Err(Error::HardwareShape(format!(
            "state of dim {} against reference of dim {}",
            rho.nrows(),
            psi.len()
        )));
    }
    let v = (psi.adjoint() * rho * psi)[(0, 0)].re;
    Ok(v.max(0.0).sqrt().min(1.0))
}

/// Finite-shot energy estimation: the diagonal part of the Hamiltonian is
/// sampled in the computational basis, the coupling term in its own
/// eigenbasis, each with `shots` repetitions.
#[derive(Debug)]
pub struct ShotNoise {
    pub shots: u64,
    rng: ChaCha8Rng,
}

impl ShotNoise {
    pub fn new(shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Config("shot count must be positive".into()));
        }
        Ok(ShotNoise {
            shots,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Mean of `shots` draws of the eigenvalue `values[k]` with probability `probs[k]`.
    fn sample_mean(&mut self, probs: &[f64], values: &[f64]) -> f64 {
        use rand::distr::{weighted::WeightedIndex, Distribution};
        let weights: Vec<f64> = probs.iter().map(|p| p.max(0.0)).collect();
        let Ok(dist) = WeightedIndex::new(&weights) else {
            return 0.0;
        };
        let total: f64 = (0..self.shots).map(|_| values[dist.sample(&mut self.rng)]).sum();
        total / self.shots as f64
    }
}

/// `Tr(ρ H)` with the model Hamiltonian placed on the hardware levels.
pub fn energy_expectation(
    rho: &ComplexMatrix,
    map: &EncodingMap,
    spec: &RabiSpec,
    noise: Option<&mut ShotNoise>,
) -> Result<f64> {
    let h = encoded_hamiltonian(spec, map)?;
    if rho.nrows() != h.nrows() {
        return Err(Error::HardwareShape(format!(
            "density matrix dim {} does not match encoding ({})",
            rho.nrows(),
            h.nrows()
        )));
    }
    let Some(noise) = noise else {
        return Ok((rho * &h).trace().re);
    };
    let n = h.nrows();
    let diag: Vec<f64> = (0..n).map(|k| h[(k, k)].re).collect();
    let pops: Vec<f64> = (0..n).map(|k| rho[(k, k)].re).collect();
    let mut e = noise.sample_mean(&pops, &diag);
    let off = &h - ComplexMatrix::from_diagonal(&h.diagonal());
    let eig = eig_hermitian_unchecked(&off);
    let probs: Vec<f64> = (0..n)
        .map(|k| {
            let v = eig.vectors.column(k);
            (v.adjoint() * rho * v)[(0, 0)].re
        })
        .collect();
    let values: Vec<f64> = eig.values.iter().copied().collect();
    e += noise.sample_mean(&probs, &values);
    Ok(e)
}

/// Shared hardware settings of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub hardware: HardwareSpec,
    #[serde(default)]
    pub qubit_levels: QubitLevels,
    #[serde(default)]
    pub policy: PulsePolicy,
    #[serde(default)]
    pub rwa: RwaOptions,
    #[serde(default)]
    pub lab: LabOptions,
    #[serde(default)]
    pub strict_factorization: bool,
}

impl DeviceConfig {
    pub fn new(hardware: HardwareSpec) -> Self {
        DeviceConfig {
            hardware,
            qubit_levels: QubitLevels::default(),
            policy: PulsePolicy::default(),
            rwa: RwaOptions::default(),
            lab: LabOptions::default(),
            strict_factorization: false,
        }
    }
}

/// Diagonalized hardware plus encoding, ready to run gate lists.
#[derive(Debug)]
pub struct Device {
    pub config: DeviceConfig,
    pub model: HardwareModel,
    pub map: EncodingMap,
}

/// Final state and bookkeeping of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Logical state, label basis.
    pub rho: ComplexMatrix,
    pub trajectory: Trajectory,
    pub duration_ns: f64,
    pub pulses: usize,
}

impl Device {
    pub fn new(config: DeviceConfig) -> Result<Self> {
        config.policy.validate()?;
        let model = if config.strict_factorization {
            HardwareModel::new_strict(&config.hardware)?
        } else {
            HardwareModel::new(&config.hardware)?
        };
        let map = EncodingMap::for_spec(&config.hardware, config.qubit_levels)?;
        Ok(Device { config, model, map })
    }

    pub fn scheduler(&self) -> Result<Scheduler<'_>> {
        Scheduler::new(&self.model, &self.map, self.config.policy)
    }

    /// Label index of the encoded vacuum `|n=0, down>`.
    pub fn vacuum_index(&self) -> usize {
        self.map.index(0, false)
    }

    /// Runs `gates` from level `start` with coherence time `t2_us` (both spins).
    pub fn run(
        &self,
        sched: &mut Scheduler<'_>,
        backend: Backend,
        gates: &[Gate],
        t2_us: Option<f64>,
        start: usize,
    ) -> Result<RunOutput> {
        let rho0 = outer(&basis_vector(self.model.dim(), start));
        self.run_state(sched, backend, gates, t2_us, &rho0, &[start])
    }

    /// Runs `gates` from the label-basis state `rho0`, whose populated levels
    /// are listed in `support`.
    pub fn run_state(
        &self,
        sched: &mut Scheduler<'_>,
        backend: Backend,
        gates: &[Gate],
        t2_us: Option<f64>,
        rho0: &ComplexMatrix,
        support: &[usize],
    ) -> Result<RunOutput> {
        let spec = self.config.hardware.clone().with_t2(t2_us);
        match backend {
            Backend::Ideal => {
                let (durations, pulses) = sched.gate_durations(gates, support)?;
                let deph = Dephaser::in_label_basis(&self.model.basis, &spec);
                let ev = evolve_ideal(&self.map, gates, rho0, Some(&durations), deph.as_ref())?;
                Ok(RunOutput {
                    rho: ev.rho,
                    trajectory: ev.trajectory,
                    duration_ns: ev.duration_ns,
                    pulses,
                })
            }
            Backend::Rwa | Backend::Lab => {
                let schedule = sched.schedule(gates, support)?;
                sched.context_mut().dephaser = Dephaser::with_spec(&self.model, &spec);
                let ev = if backend == Backend::Rwa {
                    evolve_rwa(sched.context(), &self.map, &schedule, rho0, &self.config.rwa)?
                } else {
                    evolve_lab(sched.context(), &self.map, &schedule, rho0, &self.config.lab)?
                };
                Ok(RunOutput {
                    rho: ev.rho,
                    trajectory: ev.trajectory,
                    duration_ns: ev.duration_ns,
                    pulses: schedule.pulse_count(),
                })
            }
        }
    }
}

/// Observables of a final state, model units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateSummary {
    pub n_photons: f64,
    pub sigma_z: f64,
    /// Probability of the atom being up.
    pub atom_excitation: f64,
    pub leakage: f64,
}

fn summarize(rho: &ComplexMatrix, map: &EncodingMap) -> Result<StateSummary> {
    let o = measure_observables(rho, map)?;
    let comp: f64 = map.comp.iter().map(|&k| rho[(k, k)].re).sum();
    Ok(StateSummary {
        n_photons: o.n_photons,
        sigma_z: o.sigma_z,
        atom_excitation: o.sigma_z + 0.5 * comp,
        leakage: o.leakage,
    })
}

/// Worst state-validity figures seen along a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Health {
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
}

impl Health {
    fn of(traj: &Trajectory) -> Self {
        Health {
            max_trace_error: traj.worst_trace_error(),
            min_eigenvalue: traj.min_eigenvalue(),
        }
    }

    fn merge(self, other: Health) -> Health {
        Health {
            max_trace_error: self.max_trace_error.max(other.max_trace_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }

    fn clean() -> Health {
        Health {
            max_trace_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeConfig {
    pub device: DeviceConfig,
    pub rabi: RabiSpec,
    pub g_grid: Vec<f64>,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub t2_us: Option<f64>,
    #[serde(default)]
    pub optimizer: NelderMeadOptions,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub variant: AnsatzVariant,
    #[serde(default)]
    pub seed: u64,
}

impl VqeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.g_grid.is_empty() {
            return Err(Error::Config("coupling grid is empty".into()));
        }
        self.optimizer.validate()?;
        self.rabi.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VqePoint {
    pub g: f64,
    pub theta: Vec<f64>,
    pub energy: f64,
    pub exact_energy: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best energy after each evaluation.
    pub trace: Vec<f64>,
    pub observables: StateSummary,
    pub exact_observables: StateSummary,
    pub duration_ns: f64,
    #[serde(skip)]
    pub health: Health,
}

/// Minimizes the ansatz energy for every coupling in the grid.
pub fn run_vqe(cfg: &VqeConfig) -> Result<Vec<VqePoint>> {
    cfg.validate()?;
    let device = Device::new(cfg.device.clone())?;
    cfg.g_grid
        .par_iter()
        .enumerate()
        .map(|(gi, &g)| vqe_point(&device, cfg, g, gi as u64))
        .collect()
}

fn vqe_point(device: &Device, cfg: &VqeConfig, g: f64, index: u64) -> Result<VqePoint> {
    let spec = cfg.rabi.clone().with_g(g);
    device.map.check_rabi(&spec)?;
    let mut sched = device.scheduler()?;
    let start = device.vacuum_index();
    let seed = cfg.seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut noise = cfg.shots.map(|s| ShotNoise::new(s, seed ^ 0x5EED)).transpose()?;
    let d = crate::gates::ansatz_parameters(&device.map);
    let mut objective = |theta: &[f64]| -> Result<f64> {
        let gates = build_vqe_ansatz(theta, &device.map, cfg.variant)?;
        let out = device.run(&mut sched, cfg.backend, &gates, cfg.t2_us, start)?;
        energy_expectation(&out.rho, &device.map, &spec, noise.as_mut())
    };
    let best = minimize_with_restarts(&mut objective, &vec![0.0; d], &cfg.optimizer, seed)?;
    let gates = build_vqe_ansatz(&best.x, &device.map, cfg.variant)?;
    let out = device.run(&mut sched, cfg.backend, &gates, cfg.t2_us, start)?;
    let energy = energy_expectation(&out.rho, &device.map, &spec, None)?;
    let (exact_energy, gs) = target::exact_ground_state(&spec)?;
    let exact_rho = outer(&encode_state(&gs, &device.map)?);
    Ok(VqePoint {
        g,
        theta: best.x,
        energy,
        exact_energy,
        evaluations: best.evaluations,
        converged: best.converged,
        trace: best.trace,
        observables: summarize(&out.rho, &device.map)?,
        exact_observables: summarize(&exact_rho, &device.map)?,
        duration_ns: out.duration_ns,
        health: Health::of(&out.trajectory),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DqsConfig {
    pub device: DeviceConfig,
    pub rabi: RabiSpec,
    pub times: Vec<f64>,
    pub steps: StepRule,
    #[serde(default)]
    pub backend: Backend,
    pub t2_us: Vec<Option<f64>>,
}

impl DqsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Config("time grid must be non-empty and non-negative".into()));
        }
        if self.t2_us.is_empty() {
            return Err(Error::Config("T2 list is empty".into()));
        }
        if self.t2_us.iter().flatten().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("T2 values must be positive".into()));
        }
        self.steps.validate()?;
        self.rabi.validate()
    }
}

/// One time point of a simulation run at one coherence time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DqsPoint {
    pub t: f64,
    pub steps: usize,
    pub fidelity: f64,
    pub duration_ns: f64,
    pub pulses: usize,
    pub hardware: StateSummary,
    /// Perfect gates, same truncation and step count.
    pub digital: StateSummary,
    /// Exact evolution of the truncated model.
    pub exact_n: f64,
    pub exact_sigma_z: f64,
    #[serde(skip)]
    pub health: Health,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub t2_us: Option<f64>,
    pub points: Vec<DqsPoint>,
    pub average_fidelity: f64,
    pub max_duration_ns: f64,
    pub average_duration_ns: f64,
    pub health: Health,
}

fn dqs_time_point(device: &Device, cfg: &DqsConfig, t: f64) -> Result<Vec<DqsPoint>> {
    let mut sched = device.scheduler()?;
    let n = cfg.steps.steps(t);
    let gates = compile_trotter(&cfg.rabi, t, n, &device.map)?;
    let start = device.vacuum_index();
    let mut psi_id = basis_vector(device.model.dim(), start);
    for g in &gates {
        psi_id = gate_unitary(g, &device.map)? * psi_id;
    }
    let digital = summarize(&outer(&psi_id), &device.map)?;
    let exact = ExactPropagator::new(&cfg.rabi)?.evolve(&target::vacuum(cfg.rabi.d), t);
    let (exact_n, exact_sigma_z) = target::observables(&exact);
    cfg.t2_us
        .iter()
        .map(|&t2| {
            let out = device.run(&mut sched, cfg.backend, &gates, t2, start)?;
            Ok(DqsPoint {
                t,
                steps: n,
                fidelity: fidelity(&out.rho, &psi_id)?,
                duration_ns: out.duration_ns,
                pulses: out.pulses,
                hardware: summarize(&out.rho, &device.map)?,
                digital,
                exact_n,
                exact_sigma_z,
                health: Health::of(&out.trajectory),
            })
        })
        .collect()
}

/// Trotterized evolution from the encoded vacuum over the time grid, one
/// report per coherence time.
pub fn run_dqs(cfg: &DqsConfig) -> Result<Vec<FidelityReport>> {
    cfg.validate()?;
    let device = Device::new(cfg.device.clone())?;
    device.map.check_rabi(&cfg.rabi)?;
    let per_time: Vec<Vec<DqsPoint>> = cfg
        .times
        .par_iter()
        .map(|&t| dqs_time_point(&device, cfg, t))
        .collect::<Result<_>>()?;
    Ok(cfg
        .t2_us
        .iter()
        .enumerate()
        .map(|(k, &t2)| {
            let points: Vec<DqsPoint> = per_time.iter().map(|row| row[k].clone()).collect();
            let m = points.len() as f64;
            let health = points.iter().fold(Health::clean(), |h, p| h.merge(p.health));
            FidelityReport {
                t2_us: t2,
                average_fidelity: points.iter().map(|p| p.fidelity).sum::<f64>() / m,
                max_duration_ns: points.iter().map(|p| p.duration_ns).fold(0.0, f64::max),
                average_duration_ns: points.iter().map(|p| p.duration_ns).sum::<f64>() / m,
                health,
                points,
            }
        })
        .collect())
}

/// Per-gate comparison of scheduled pulses against the ideal unitary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCheck {
    pub index: usize,
    pub gate: String,
    pub pulses: usize,
    pub duration_ns: f64,
    /// Over the computational basis states and their uniform superposition.
    pub min_fidelity: f64,
    pub mean_fidelity: f64,
}

/// Runs every gate on its own from each computational basis state and from
/// their uniform superposition.
pub fn check_gates(device: &Device, gates: &[Gate], backend: Backend, t2_us: Option<f64>) -> Result<Vec<GateCheck>> {
    let dim = device.model.dim();
    let comp = &device.map.comp;
    let mut inputs: Vec<ComplexVector> = comp.iter().map(|&k| basis_vector(dim, k)).collect();
    let mut uniform = ComplexVector::zeros(dim);
    for &k in comp {
        uniform[k] = num_complex::Complex64::new(1.0, 0.0);
    }
    inputs.push(uniform.normalize());
    gates
        .par_iter()
        .enumerate()
        .map(|(index, gate)| {
            let mut sched = device.scheduler()?;
            let u = gate_unitary(gate, &device.map)?;
            let one = std::slice::from_ref(gate);
            let mut fids = Vec::with_capacity(inputs.len());
            let mut last = None;
            for psi in &inputs {
                let out = device.run_state(&mut sched, backend, one, t2_us, &outer(psi), comp)?;
                fids.push(fidelity(&out.rho, &(&u * psi))?);
                last = Some(out);
            }
            let last = last.expect("at least one input");
            Ok(GateCheck {
                index,
                gate: gate.describe(),
                pulses: last.pulses,
                duration_ns: last.duration_ns,
                min_fidelity: fids.iter().copied().fold(1.0, f64::min),
                mean_fidelity: fids.iter().sum::<f64>() / fids.len() as f64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationRow {
    pub g: f64,
    pub d: usize,
    pub d_ref: usize,
    /// Largest `|<n>_d - <n>_ref|` over the grid.
    pub max_dn: f64,
    pub max_dsz: f64,
    /// Largest `<n>` of the truncated model.
    pub max_n: f64,
}

/// Exact evolution at each truncation against a large reference truncation.
pub fn truncation_study(rabi: &RabiSpec, truncations: &[usize], d_ref: usize, t_grid: &[f64]) -> Result<Vec<TruncationRow>> {
    truncations
        .iter()
        .map(|&d| {
            let spec = rabi.clone().with_d(d);
            let err = target::truncation_error(&spec, d_ref, t_grid)?;
            let prop = ExactPropagator::new(&spec)?;
            let v = target::vacuum(d);
            let max_n = t_grid
                .iter()
                .map(|&t| target::observables(&prop.evolve(&v, t)).0)
                .fold(0.0, f64::max);
            Ok(TruncationRow {
                g: rabi.g,
                d,
                d_ref,
                max_dn: err.max_dn,
                max_dsz: err.max_dsz,
                max_n,
            })
        })
        .collect()
}

/// Dense grid `0, dt, ..., t_max`, rounded to 12 decimals.
pub fn dense_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|k| (k as f64 * dt * 1e12).round() / 1e12).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{c, identity};
    use crate::presets;

    fn fig2_device() -> Device {
        Device::new(DeviceConfig::new(presets::fig2().hardware)).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let psi = basis_vector(8, 0);
        assert!((fidelity(&outer(&psi), &psi).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&outer(&basis_vector(8, 3)), &psi).unwrap(), 0.0);
        let mixed = identity(8) / c(8.0);
        assert!((fidelity(&mixed, &psi).unwrap() - 0.353_553_390_593_273_8).abs() < 1e-12);
    }

    #[test]
    fn energy_of_encoded_states() {
        let dev = fig2_device();
        let spec = RabiSpec::new(0.6, 4);
        let vac = outer(&basis_vector(8, dev.vacuum_index()));
        assert!((energy_expectation(&vac, &dev.map, &spec, None).unwrap() + 0.25).abs() < 1e-14);
        let (e0, gs) = target::exact_ground_state(&spec).unwrap();
        let rho = outer(&encode_state(&gs, &dev.map).unwrap());
        assert!((energy_expectation(&rho, &dev.map, &spec, None).unwrap() - e0).abs() < 1e-10);
    }

    #[test]
    fn shot_noise_error_scales_with_inverse_sqrt_shots() {
        let dev = fig2_device();
        let spec = RabiSpec::new(0.6, 4);
        let (e0, gs) = target::exact_ground_state(&spec).unwrap();
        let rho = outer(&encode_state(&gs, &dev.map).unwrap());
        let spread = |shots: u64| {
            let mut noise = ShotNoise::new(shots, 11).unwrap();
            let errs: Vec<f64> = (0..200)
                .map(|_| energy_expectation(&rho, &dev.map, &spec, Some(&mut noise)).unwrap() - e0)
                .collect();
            (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt()
        };
        let ratio = spread(100) / spread(10_000);
        assert!((ratio - 10.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn trotter_fidelity_is_perfect_with_ideal_gates() {
        let p = presets::fig3ab();
        let cfg = DqsConfig {
            device: DeviceConfig::new(p.hardware.clone()),
            rabi: p.rabi.clone(),
            times: vec![1.0, 6.0],
            steps: p.steps,
            backend: Backend::Ideal,
            t2_us: vec![None],
        };
        let reports = run_dqs(&cfg).unwrap();
        for pt in &reports[0].points {
            assert!((pt.fidelity - 1.0).abs() < 1e-9);
        }
        assert!(reports[0].max_duration_ns > 0.0);
    }
}
