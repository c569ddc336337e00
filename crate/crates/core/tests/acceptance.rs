//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Tolerances are pinned below.

use std::time::Instant;

use num_complex::Complex64;
use spinqudit::dynamics::{lindblad_rhs, Backend, Dephaser};
use spinqudit::encoding::decode_state;
use spinqudit::experiments::{
    dense_grid, run_dqs, run_vqe, Device, DeviceConfig, DqsConfig, FidelityReport, VqeConfig, VqePoint,
};
use spinqudit::gates::{compile_trotter, sequence_unitary};
use spinqudit::hardware::{HardwareSpec, ProductBasis};
use spinqudit::operators::{
    basis_vector, boson_matrices, commutator, identity, max_abs_diff, spin_matrices,
    ComplexMatrix, Spin,
};
use spinqudit::optimize::NelderMeadOptions;
use spinqudit::presets::{self, Preset, StepRule};
use spinqudit::target::{self, ExactPropagator, RabiSpec};

const ALGEBRA_TOL: f64 = 1e-12;
const ALGEBRA_MAX_SECONDS: f64 = 1.0;
const DEPHASING_REL_TOL: f64 = 1e-3;
const HEALTH_TOL: f64 = 1e-7;
const LAB_RWA_MIN_FIDELITY: f64 = 0.995;
const TROTTER_RATIO: f64 = 0.6;
const VARIATIONAL_SLACK: f64 = 1e-9;
const G0_ENERGY_TOL: f64 = 1e-6;
const NOISY_VQE_MAX_GAP: f64 = 0.05;
const NOISY_VQE_OBS_TOL: f64 = 0.1;
const FIG3AB_F50: f64 = 0.984;
const FIG3AB_F10: f64 = 0.951;
const FIG3AB_TOL: f64 = 0.03;
const FIG3CD_F10_MIN: f64 = 0.89;
const FIG3EF_F10: f64 = 0.84;
const FIG3EF_TOL: f64 = 0.05;
const CLOSURE_TOL: f64 = 1e-9;
const TRUNCATION_FACTOR: f64 = 10.0;
/// Max-over-t photon-number deviation from d_ref = 30 at G = 0.7 on a 0.05 grid up to t = 10.
const TRUNCATION_D4_DN: f64 = 0.522_94;
const TRUNCATION_D6_DN: f64 = 0.113_16;
const REGRESSION_TOL: f64 = 1e-4;
const USC_MIN_N: f64 = 0.1;
const USC_G0_MAX_N: f64 = 1e-3;
const DURATION_FACTOR: f64 = 2.0;
const FIG3AB_LONGEST_NS: f64 = 1700.0;
const FIG3CD_AVERAGE_NS: f64 = 900.0;
const FIG3EF_AVERAGE_NS: f64 = 1600.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Shared expensive runs, computed once.
struct Runs {
    dqs: Vec<(&'static str, Vec<FidelityReport>)>,
    vqe_ideal: Vec<VqePoint>,
    vqe_noisy: VqePoint,
}

fn dqs_config(p: &Preset, backend: Backend, t2: Vec<Option<f64>>) -> DqsConfig {
    DqsConfig {
        device: DeviceConfig::new(p.hardware.clone()),
        rabi: p.rabi,
        times: presets::default_time_grid(),
        steps: p.steps,
        backend,
        t2_us: t2,
    }
}

fn vqe_config(backend: Backend, grid: Vec<f64>, t2: Option<f64>) -> VqeConfig {
    let p = presets::fig2();
    VqeConfig {
        device: DeviceConfig::new(p.hardware),
        rabi: p.rabi,
        g_grid: grid,
        backend,
        t2_us: t2,
        optimizer: NelderMeadOptions::default(),
        shots: None,
        variant: Default::default(),
        seed: 0,
    }
}

fn report<'a>(runs: &'a Runs, preset: &str, t2: f64) -> &'a FidelityReport {
    let (_, reps) = runs.dqs.iter().find(|(n, _)| *n == preset).expect("preset run");
    reps.iter().find(|r| r.t2_us == Some(t2)).expect("t2 run")
}

fn c1_operator_algebra() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for twice in 1..=10 {
        let s = Spin::from_twice(twice);
        let o = spin_matrices(s);
        let i = Complex64::i();
        worst = worst.max(max_abs_diff(&commutator(&o.sx, &o.sy), &(&o.sz * i)));
        worst = worst.max(max_abs_diff(&commutator(&o.sy, &o.sz), &(&o.sx * i)));
        worst = worst.max(max_abs_diff(&commutator(&o.sz, &o.sx), &(&o.sy * i)));
        let v = s.value();
        let cas = &o.sx * &o.sx + &o.sy * &o.sy + &o.sz * &o.sz;
        worst = worst.max(max_abs_diff(&cas, &(identity(s.dim()) * c(v * (v + 1.0)))));
        // Descending-m basis: <m+1|S+|m> sits at (k-1, k).
        for k in 1..s.dim() {
            let m = s.m(k);
            let expect = (v * (v + 1.0) - m * (m + 1.0)).sqrt();
            worst = worst.max((o.splus[(k - 1, k)] - c(expect)).norm());
        }
    }
    for d in 2..=30 {
        let b = boson_matrices(d).unwrap();
        let mut expect = identity(d);
        expect[(d - 1, d - 1)] = c(1.0 - d as f64);
        worst = worst.max(max_abs_diff(&commutator(&b.a, &b.adag), &expect));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= ALGEBRA_TOL && secs < ALGEBRA_MAX_SECONDS,
        format!("max residual {worst:.1e} (tol {ALGEBRA_TOL:.0e}), {secs:.3} s"),
    )
}

fn c2_dephasing_law() -> Outcome {
    let t2_us = 2.0;
    let spec = HardwareSpec {
        s1: Spin::THREE_HALVES,
        s2: Spin::ONE,
        ..presets::fig3cd().hardware.with_t2(Some(t2_us))
    };
    let basis = ProductBasis { s1: spec.s1, s2: spec.s2 };
    let n = basis.dim();
    let zero = ComplexMatrix::zeros(n, n);
    let rho0 = ComplexMatrix::from_element(n, n, c(1.0 / n as f64));
    // Independent integration of the generator with H = 0.
    let (t_end, steps) = (1000.0, 4000);
    let h = t_end / steps as f64;
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = lindblad_rhs(&rho, &zero, &spec);
        let k2 = lindblad_rhs(&(&rho + &k1 * c(0.5 * h)), &zero, &spec);
        let k3 = lindblad_rhs(&(&rho + &k2 * c(0.5 * h)), &zero, &spec);
        let k4 = lindblad_rhs(&(&rho + &k3 * c(h)), &zero, &spec);
        rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(h / 6.0);
    }
    let channel = Dephaser::in_label_basis(&basis, &spec).unwrap().apply(&rho0, t_end);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (basis.label(i), basis.label(j));
            let dm2 = (a.m1() - b.m1()).powi(2) + (a.m2() - b.m2()).powi(2);
            if dm2 == 0.0 {
                continue;
            }
            let expect = dm2 / (t2_us * 1e3);
            for r in [&rho, &channel] {
                let measured = -(r[(i, j)].norm() / rho0[(i, j)].norm()).ln() / t_end;
                worst = worst.max((measured / expect - 1.0).abs());
            }
            pairs += 1;
        }
    }
    outcome(
        worst <= DEPHASING_REL_TOL,
        format!("{pairs} coherences, worst relative exponent error {worst:.1e} (tol {DEPHASING_REL_TOL:.0e})"),
    )
}

fn c3_health(runs: &Runs) -> Outcome {
    let mut trace: f64 = 0.0;
    let mut eig = f64::INFINITY;
    for (_, reps) in &runs.dqs {
        for r in reps {
            trace = trace.max(r.health.max_trace_error);
            eig = eig.min(r.health.min_eigenvalue);
        }
    }
    for p in runs.vqe_ideal.iter().chain(std::iter::once(&runs.vqe_noisy)) {
        trace = trace.max(p.health.max_trace_error);
        eig = eig.min(p.health.min_eigenvalue);
    }
    outcome(
        trace <= HEALTH_TOL && eig >= -HEALTH_TOL,
        format!("max |Tr rho - 1| {trace:.1e}, min eigenvalue {eig:.1e} (tol {HEALTH_TOL:.0e})"),
    )
}

fn c4_lab_vs_rwa() -> Outcome {
    let start = Instant::now();
    let p = presets::fig3ab();
    let device = Device::new(DeviceConfig::new(p.hardware.clone())).unwrap();
    let mut worst: f64 = 1.0;
    let mut steps_note = String::new();
    for t in [5.0, 10.0] {
        let n = p.steps.steps(t);
        let gates = compile_trotter(&p.rabi, t, n, &device.map).unwrap();
        let mut sched = device.scheduler().unwrap();
        let start_idx = device.vacuum_index();
        let lab = device.run(&mut sched, Backend::Lab, &gates, None, start_idx).unwrap();
        let rwa = device.run(&mut sched, Backend::Rwa, &gates, None, start_idx).unwrap();
        // Both states are pure here, so sqrt(Tr rho sigma) is the state fidelity.
        let f = (&lab.rho * &rwa.rho).trace().re.max(0.0).sqrt();
        worst = worst.min(f);
        steps_note.push_str(&format!(" t={t}: F={f:.5} ({:.0} ns);", lab.duration_ns));
    }
    outcome(
        worst >= LAB_RWA_MIN_FIDELITY,
        format!("fig3ab T2=inf{steps_note} min {worst:.5} >= {LAB_RWA_MIN_FIDELITY}, {:.0} s", start.elapsed().as_secs_f64()),
    )
}

fn trotter_error(spec: &RabiSpec, hw: &HardwareSpec, t: f64, n: usize) -> f64 {
    let map = spinqudit::encoding::EncodingMap::for_spec(hw, Default::default()).unwrap();
    let gates = compile_trotter(spec, t, n, &map).unwrap();
    let start = basis_vector(map.hw_dim(), map.index(0, false));
    let digital = decode_state(&(sequence_unitary(&gates, &map).unwrap() * start), &map).unwrap();
    let exact = ExactPropagator::new(spec).unwrap().evolve(&target::vacuum(spec.d), t);
    let (a, b) = (target::observables(&digital), target::observables(&exact));
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn c5_trotter_scaling() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for p in [presets::fig3ab(), presets::fig3cd()] {
        let errs: Vec<f64> = [4, 8, 16, 32]
            .iter()
            .map(|&n| trotter_error(&p.rabi, &p.hardware, 5.0, n))
            .collect();
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
        ok &= ratios.iter().all(|r| *r <= TROTTER_RATIO);
        detail.push_str(&format!(
            " G={}: err(N=4..32) {} ratios {};",
            p.rabi.g,
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join("/"),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join("/")
        ));
    }
    outcome(ok, format!("t=5{detail} need <= {TROTTER_RATIO}"))
}

fn c6_variational_bound(runs: &Runs) -> Outcome {
    let below = runs
        .vqe_ideal
        .iter()
        .map(|p| p.exact_energy - p.energy)
        .fold(f64::NEG_INFINITY, f64::max);
    let g0 = runs.vqe_ideal.iter().find(|p| p.g == 0.0).unwrap();
    let g0_err = (g0.energy - g0.exact_energy).abs();
    let worst_gap = runs
        .vqe_ideal
        .iter()
        .map(|p| p.energy - p.exact_energy)
        .fold(0.0, f64::max);
    outcome(
        below <= VARIATIONAL_SLACK && g0_err <= G0_ENERGY_TOL,
        format!(
            "{} couplings, max (E_exact - E_vqe) {below:.1e}, |E(0) + 0.25| {g0_err:.1e}, largest gap {worst_gap:.1e}",
            runs.vqe_ideal.len()
        ),
    )
}

fn c7_noisy_vqe(runs: &Runs) -> Outcome {
    let ideal = runs.vqe_ideal.iter().find(|p| (p.g - 0.6).abs() < 1e-12).unwrap();
    let noisy = &runs.vqe_noisy;
    let gap = noisy.energy - ideal.energy;
    let dn = (noisy.observables.n_photons - ideal.observables.n_photons).abs();
    let da = (noisy.observables.atom_excitation - ideal.observables.atom_excitation).abs();
    let pass = gap >= -VARIATIONAL_SLACK
        && gap <= NOISY_VQE_MAX_GAP
        && noisy.energy >= noisy.exact_energy - VARIATIONAL_SLACK
        && dn <= NOISY_VQE_OBS_TOL
        && da <= NOISY_VQE_OBS_TOL;
    outcome(
        pass,
        format!(
            "G=0.6 T2=10us rwa: E={:.5} ideal {:.5} exact {:.5} gap {gap:.4}; |dn| {dn:.3} |d atom| {da:.3}",
            noisy.energy, ideal.energy, noisy.exact_energy
        ),
    )
}

fn c8_dqs_fidelity(runs: &Runs) -> Outcome {
    let ab50 = report(runs, "fig3ab", 50.0).average_fidelity;
    let ab10 = report(runs, "fig3ab", 10.0).average_fidelity;
    let cd50 = report(runs, "fig3cd", 50.0).average_fidelity;
    let cd10 = report(runs, "fig3cd", 10.0).average_fidelity;
    let ef50 = report(runs, "fig3ef", 50.0).average_fidelity;
    let ef10 = report(runs, "fig3ef", 10.0).average_fidelity;
    let checks = [
        ("fig3ab@50", (ab50 - FIG3AB_F50).abs() <= FIG3AB_TOL),
        ("fig3ab@10", (ab10 - FIG3AB_F10).abs() <= FIG3AB_TOL),
        ("fig3cd@10", cd10 >= FIG3CD_F10_MIN),
        ("fig3ef@10", (ef10 - FIG3EF_F10).abs() <= FIG3EF_TOL),
        ("F50>F10", ab50 > ab10 && cd50 > cd10 && ef50 > ef10),
    ];
    let missed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        missed.is_empty(),
        format!(
            "fig3ab {ab50:.4}/{ab10:.4} (target {FIG3AB_F50}/{FIG3AB_F10} +-{FIG3AB_TOL}); fig3cd {cd50:.4}/{cd10:.4} (>= {FIG3CD_F10_MIN}); \
             fig3ef {ef50:.4}/{ef10:.4} (target {FIG3EF_F10} +-{FIG3EF_TOL}){}",
            if missed.is_empty() { String::new() } else { format!("; soft targets missed: {}", missed.join(", ")) }
        ),
    )
}

fn c9_closure() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for p in presets::all() {
        let reps = run_dqs(&dqs_config(&p, Backend::Ideal, vec![None])).unwrap();
        for pt in &reps[0].points {
            worst = worst.max((1.0 - pt.fidelity).abs());
            points += 1;
        }
    }
    outcome(
        worst <= CLOSURE_TOL,
        format!("{points} time points over 5 presets, max |1 - F| {worst:.1e} (tol {CLOSURE_TOL:.0e})"),
    )
}

fn c10_truncation() -> Outcome {
    let p = presets::fig3gh();
    let rows = spinqudit::experiments::truncation_study(&p.rabi, &[4, 6], p.d_ref, &dense_grid(10.0, 0.05)).unwrap();
    let (d4, d6) = (rows[0].max_dn, rows[1].max_dn);
    let regression = (d4 - TRUNCATION_D4_DN).abs() <= REGRESSION_TOL && (d6 - TRUNCATION_D6_DN).abs() <= REGRESSION_TOL;
    let ratio = d4 / d6;
    outcome(
        ratio >= TRUNCATION_FACTOR && regression,
        format!(
            "G=0.7 max|dn| d=4 {d4:.5} d=6 {d6:.5} vs d_ref=30 (recorded {TRUNCATION_D4_DN}/{TRUNCATION_D6_DN}, {}); \
             ratio {ratio:.2} needs >= {TRUNCATION_FACTOR}",
            if regression { "matches" } else { "DRIFTED" }
        ),
    )
}

fn c11_usc_signature(runs: &Runs) -> Outcome {
    let grid = dense_grid(10.0, 0.05);
    let oracle_max = |spec: &RabiSpec| {
        let prop = ExactPropagator::new(spec).unwrap();
        let v = target::vacuum(spec.d);
        grid.iter().map(|&t| target::observables(&prop.evolve(&v, t)).0).fold(0.0, f64::max)
    };
    let mut ok = true;
    let mut detail = String::new();
    for name in ["fig3ab", "fig3cd", "fig3ef"] {
        let p = presets::get(name).unwrap();
        let o = oracle_max(&p.rabi);
        let hw = report(runs, name, 10.0)
            .points
            .iter()
            .map(|pt| pt.hardware.n_photons)
            .fold(0.0, f64::max);
        ok &= o >= USC_MIN_N && hw >= USC_MIN_N;
        detail.push_str(&format!(" G={}: oracle {o:.3} hw {hw:.3};", p.rabi.g));
    }
    let free = presets::fig3ab();
    let o0 = oracle_max(&free.rabi.with_g(0.0));
    let mut cfg = dqs_config(&free, Backend::Rwa, vec![None]);
    cfg.rabi = cfg.rabi.with_g(0.0);
    cfg.steps = StepRule::Constant(4);
    let hw0 = run_dqs(&cfg).unwrap()[0]
        .points
        .iter()
        .map(|pt| pt.hardware.n_photons)
        .fold(0.0, f64::max);
    ok &= o0 < USC_G0_MAX_N && hw0 < USC_G0_MAX_N;
    outcome(
        ok,
        format!("max<n>{detail} G=0: oracle {o0:.1e} hw {hw0:.1e} (need >= {USC_MIN_N}, G=0 < {USC_G0_MAX_N:.0e})"),
    )
}

fn c12_durations(runs: &Runs) -> Outcome {
    let within = |x: f64, target: f64| x >= target / DURATION_FACTOR && x <= target * DURATION_FACTOR;
    let ab = report(runs, "fig3ab", 10.0).max_duration_ns;
    let cd = report(runs, "fig3cd", 10.0).average_duration_ns;
    let ef = report(runs, "fig3ef", 10.0).average_duration_ns;
    outcome(
        within(ab, FIG3AB_LONGEST_NS) && within(cd, FIG3CD_AVERAGE_NS) && within(ef, FIG3EF_AVERAGE_NS),
        format!(
            "fig3ab longest {ab:.0} ns (vs {FIG3AB_LONGEST_NS}), fig3cd average {cd:.0} ns (vs {FIG3CD_AVERAGE_NS}), \
             fig3ef average {ef:.0} ns (vs {FIG3EF_AVERAGE_NS}); factor {DURATION_FACTOR}"
        ),
    )
}

fn main() {
    let t0 = Instant::now();
    let runs = Runs {
        dqs: ["fig3ab", "fig3cd", "fig3ef"]
            .into_iter()
            .map(|name| {
                let p = presets::get(name).unwrap();
                let cfg = dqs_config(&p, Backend::Rwa, vec![Some(50.0), Some(10.0)]);
                (name, run_dqs(&cfg).unwrap())
            })
            .collect(),
        vqe_ideal: run_vqe(&vqe_config(Backend::Ideal, presets::fig2().g_grid, None)).unwrap(),
        vqe_noisy: run_vqe(&vqe_config(Backend::Rwa, vec![0.6], Some(10.0)))
            .unwrap()
            .remove(0),
    };
    println!("shared runs ready in {:.0} s", t0.elapsed().as_secs_f64());

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("operator algebra", Box::new(c1_operator_algebra)),
        ("dephasing law", Box::new(c2_dephasing_law)),
        ("trace and positivity", Box::new(|| c3_health(&runs))),
        ("lab vs rotating frame", Box::new(c4_lab_vs_rwa)),
        ("Trotter scaling", Box::new(c5_trotter_scaling)),
        ("variational bound", Box::new(|| c6_variational_bound(&runs))),
        ("noisy VQE convergence", Box::new(|| c7_noisy_vqe(&runs))),
        ("DQS fidelity targets", Box::new(|| c8_dqs_fidelity(&runs))),
        ("pipeline closure", Box::new(c9_closure)),
        ("truncation study", Box::new(c10_truncation)),
        ("USC signature", Box::new(|| c11_usc_signature(&runs))),
        ("sequence durations", Box::new(|| c12_durations(&runs))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} [{:>2}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!(
        "acceptance: {}/{} passed in {:.0} s",
        criteria.len() - failed,
        criteria.len(),
        t0.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
