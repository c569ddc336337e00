//! Command-line front end: resolve a config from a preset or file, run it,
//! and write CSV tables plus a JSON summary into the output directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::dynamics::Backend;
use crate::error::{Error, Result};
use crate::experiments::{self, check_gates, Device, FidelityReport};
use crate::gates::{build_vqe_ansatz, compile_trotter, gate_unitary};
use crate::hardware::HardwareModel;
use crate::operators::{basis_vector, Spin};
use crate::presets;
use crate::target::{self, ExactPropagator};

/// Default output directory when neither `--out` nor the config sets one.
pub const OUT_DIR_ENV: &str = "SPINQUDIT_OUT";

#[derive(Debug, Parser)]
#[command(name = "spinqudit", version, about = "Pulse-level spin-qudit simulator for the quantum Rabi model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write its results.
    Run(RunArgs),
    /// Print the resolved config as JSON without running it.
    Config(RunArgs),
    /// List the shipped presets.
    ListPresets,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// spectrum, vqe, dqs, truncation or gates-check; optional with --config.
    pub kind: Option<ExperimentKind>,
    /// JSON experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from a shipped preset (see list-presets).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub backend: Option<Backend>,
    /// Comma-separated coherence times in µs; `inf` disables dephasing.
    #[arg(long, value_delimiter = ',', value_parser = parse_t2)]
    pub t2: Option<Vec<Option<f64>>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: $SPINQUDIT_OUT, else ./results].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Treat poorly factorized eigenstates as an error.
    #[arg(long)]
    pub strict_factorization: bool,
    /// Coupling sweep `start:stop:step` or a comma-separated list.
    #[arg(long, value_parser = parse_grid)]
    pub g: Option<Grid>,
    /// Time grid `start:stop:step` or a comma-separated list, units of 1/Omega.
    #[arg(long, value_parser = parse_grid)]
    pub times: Option<Grid>,
    /// Finite-shot energy estimates.
    #[arg(long)]
    pub shots: Option<u64>,
}

fn parse_t2(s: &str) -> std::result::Result<Option<f64>, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "none" | "null" => Ok(None),
        v => v
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0 && t.is_finite())
            .map(Some)
            .ok_or_else(|| format!("`{s}` is not a positive T2 in µs or `inf`")),
    }
}

/// Parsed `--g` / `--times` value.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    grid_values(s).map(Grid)
}

/// `a:b:h` (inclusive) or `x,y,z`.
pub fn grid_values(s: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, h] => {
            let (a, b, h) = (num(a)?, num(b)?, num(h)?);
            if !(h > 0.0) || b < a {
                return Err(format!("range `{s}` needs start <= stop and step > 0"));
            }
            let n = ((b - a) / h + 1e-9).floor() as usize;
            // Rounded to suppress accumulated binary noise like 0.30000000000000004.
            Ok((0..=n).map(|k| ((a + k as f64 * h) * 1e12).round() / 1e12).collect())
        }
        [_] => s.split(',').map(num).collect(),
        _ => Err(format!("`{s}` is neither start:stop:step nor a list")),
    }
}

/// Entry point shared by the binary and tests; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match cli.command {
        Command::ListPresets => {
            print!("{}", list_presets());
            0
        }
        Command::Config(args) => report(&args, resolve(&args).map(|c| println!("{}", c.to_json()))),
        Command::Run(args) => report(
            &args,
            resolve(&args).and_then(|cfg| {
                let out = output_dir(&args, &cfg);
                let summary = run(&cfg, &out)?;
                println!("{summary}");
                Ok(())
            }),
        ),
    }
}

fn report(args: &RunArgs, r: Result<()>) -> i32 {
    match r {
        Ok(()) => 0,
        Err(e) => {
            match &args.config {
                Some(p) => eprintln!("error: {}: {e}", p.display()),
                None => eprintln!("error: {e}"),
            }
            e.exit_code()
        }
    }
}

/// Preset names with their parameter notes, one per line.
pub fn list_presets() -> String {
    presets::all()
        .iter()
        .map(|p| format!("{:<8} {}\n", p.name, p.note))
        .collect()
}

/// Builds the config from the file or preset, then applies flag overrides.
pub fn resolve(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let cfg: ExperimentConfig = serde_json::from_str(&text)?;
            if let Some(k) = args.kind.filter(|k| *k != cfg.kind) {
                return Err(Error::Config(format!("command asks for {k} but the file is a {} config", cfg.kind)));
            }
            cfg
        }
        (None, Some(name)) => {
            let kind = args
                .kind
                .ok_or_else(|| Error::Config("an experiment kind is required with --preset".into()))?;
            ExperimentConfig::from_preset(kind, &presets::get(name)?)
        }
        (None, None) => return Err(Error::Config("give --config or --preset".into())),
    };
    if let Some(b) = args.backend {
        cfg.backend = b;
    }
    if let Some(t2) = &args.t2 {
        cfg.t2_us = t2.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(Grid(g)) = &args.g {
        cfg.g_grid = g.clone();
    }
    if let Some(Grid(t)) = &args.times {
        cfg.times = t.clone();
    }
    if args.shots.is_some() {
        cfg.shots = args.shots;
    }
    if args.strict_factorization {
        cfg.device.strict_factorization = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(args: &RunArgs, cfg: &ExperimentConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::io("csv", std::io::Error::other(e)))?;
    }
    w.into_inner()
        .map_err(|e| Error::io("csv", std::io::Error::other(e.to_string())))
}

/// File-name tag for a coherence time, e.g. `t2_10us` or `t2_inf`.
pub fn t2_tag(t2: Option<f64>) -> String {
    match t2 {
        Some(v) => format!("t2_{v}us"),
        None => "t2_inf".to_string(),
    }
}

/// Runs the experiment, writes every artifact into `out`, and returns the
/// JSON summary that was written.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    cfg.validate()?;
    let body = match cfg.kind {
        ExperimentKind::Spectrum => run_spectrum(cfg, out)?,
        ExperimentKind::Vqe => run_vqe(cfg, out)?,
        ExperimentKind::Dqs => run_dqs(cfg, out)?,
        ExperimentKind::Truncation => run_truncation(cfg, out)?,
        ExperimentKind::GatesCheck => run_gates_check(cfg, out)?,
    };
    let summary = json!({
        "kind": cfg.kind,
        "preset": cfg.preset,
        "backend": cfg.backend,
        "seed": cfg.seed,
        "config_hash": cfg.hash(),
        "results": body,
    });
    write_atomic(&out.join("config.json"), cfg.to_json().as_bytes())?;
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    write_atomic(&out.join("summary.json"), text.as_bytes())?;
    Ok(summary)
}

#[derive(Serialize)]
struct LevelRow {
    index: usize,
    m1: f64,
    m2: f64,
    energy_ghz: f64,
    overlap: f64,
}

#[derive(Serialize)]
struct TransitionRow {
    from: String,
    to: String,
    kind: crate::hardware::TransitionKind,
    frequency_ghz: f64,
    gap_ghz: f64,
    matrix_element_re: f64,
    matrix_element_im: f64,
    nearest_spectator_ghz: f64,
}

fn run_spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    let spec = &cfg.device.hardware;
    let model = if cfg.device.strict_factorization {
        HardwareModel::new_strict(spec)?
    } else {
        HardwareModel::new(spec)?
    };
    if model.levels.factorization_flag {
        eprintln!(
            "warning: eigenstates are poorly factorized (min overlap {:.4})",
            model.levels.min_overlap
        );
    }
    let levels: Vec<LevelRow> = model
        .levels
        .levels
        .iter()
        .map(|l| LevelRow {
            index: model.basis.index(l.label).expect("label in basis"),
            m1: l.label.m1(),
            m2: l.label.m2(),
            energy_ghz: l.energy_ghz,
            overlap: l.overlap,
        })
        .collect();
    let table = &model.transitions;
    let transitions: Vec<TransitionRow> = table
        .transitions
        .iter()
        .map(|t| TransitionRow {
            from: t.from.to_string(),
            to: t.to.to_string(),
            kind: t.kind,
            frequency_ghz: t.frequency_ghz,
            gap_ghz: t.gap_ghz,
            matrix_element_re: t.matrix_element.re,
            matrix_element_im: t.matrix_element.im,
            nearest_spectator_ghz: table.nearest_spectator(t, t.frequency_ghz),
        })
        .collect();
    write_atomic(&out.join("levels.csv"), &csv_bytes(&levels)?)?;
    write_atomic(&out.join("transitions.csv"), &csv_bytes(&transitions)?)?;
    Ok(json!({
        "dim": model.dim(),
        "min_overlap": model.levels.min_overlap,
        "factorization_flag": model.levels.factorization_flag,
        "max_frequency_ghz": table.max_frequency(),
        "transitions": transitions.len(),
    }))
}

#[derive(Serialize)]
struct VqeRow {
    g: f64,
    energy: f64,
    exact_energy: f64,
    energy_gap: f64,
    n_photons: f64,
    atom_excitation: f64,
    exact_n_photons: f64,
    exact_atom_excitation: f64,
    evaluations: usize,
    converged: bool,
    duration_ns: f64,
    theta: String,
}

#[derive(Serialize)]
struct TraceRow {
    g: f64,
    evaluation: usize,
    best_energy: f64,
}

fn run_vqe(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    let mut runs = Vec::new();
    for &t2 in &cfg.t2_us {
        let points = experiments::run_vqe(&cfg.vqe_config(t2))?;
        let rows: Vec<VqeRow> = points
            .iter()
            .map(|p| VqeRow {
                g: p.g,
                energy: p.energy,
                exact_energy: p.exact_energy,
                energy_gap: p.energy - p.exact_energy,
                n_photons: p.observables.n_photons,
                atom_excitation: p.observables.atom_excitation,
                exact_n_photons: p.exact_observables.n_photons,
                exact_atom_excitation: p.exact_observables.atom_excitation,
                evaluations: p.evaluations,
                converged: p.converged,
                duration_ns: p.duration_ns,
                theta: p.theta.iter().map(|t| format!("{t}")).collect::<Vec<_>>().join(";"),
            })
            .collect();
        let trace: Vec<TraceRow> = points
            .iter()
            .flat_map(|p| {
                p.trace.iter().enumerate().map(|(k, &e)| TraceRow {
                    g: p.g,
                    evaluation: k + 1,
                    best_energy: e,
                })
            })
            .collect();
        let tag = t2_tag(t2);
        write_atomic(&out.join(format!("vqe_{tag}.csv")), &csv_bytes(&rows)?)?;
        write_atomic(&out.join(format!("vqe_{tag}_trace.csv")), &csv_bytes(&trace)?)?;
        runs.push(json!({
            "t2_us": t2,
            "points": points.iter().map(|p| json!({
                "g": p.g,
                "energy": p.energy,
                "exact_energy": p.exact_energy,
                "converged": p.converged,
                "duration_ns": p.duration_ns,
            })).collect::<Vec<_>>(),
            "all_converged": points.iter().all(|p| p.converged),
        }));
    }
    Ok(json!({ "runs": runs }))
}

#[derive(Serialize)]
struct DqsRow {
    t: f64,
    steps: usize,
    fidelity: f64,
    duration_ns: f64,
    pulses: usize,
    n_hardware: f64,
    sigma_z_hardware: f64,
    leakage_hardware: f64,
    n_digital: f64,
    sigma_z_digital: f64,
    n_exact: f64,
    sigma_z_exact: f64,
}

fn dqs_summary(r: &FidelityReport) -> serde_json::Value {
    json!({
        "t2_us": r.t2_us,
        "average_fidelity": r.average_fidelity,
        "max_duration_ns": r.max_duration_ns,
        "average_duration_ns": r.average_duration_ns,
        "max_trace_error": r.health.max_trace_error,
        "min_eigenvalue": r.health.min_eigenvalue,
    })
}

fn run_dqs(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    let reports = experiments::run_dqs(&cfg.dqs_config())?;
    for r in &reports {
        let rows: Vec<DqsRow> = r
            .points
            .iter()
            .map(|p| DqsRow {
                t: p.t,
                steps: p.steps,
                fidelity: p.fidelity,
                duration_ns: p.duration_ns,
                pulses: p.pulses,
                n_hardware: p.hardware.n_photons,
                sigma_z_hardware: p.hardware.sigma_z,
                leakage_hardware: p.hardware.leakage,
                n_digital: p.digital.n_photons,
                sigma_z_digital: p.digital.sigma_z,
                n_exact: p.exact_n,
                sigma_z_exact: p.exact_sigma_z,
            })
            .collect();
        write_atomic(&out.join(format!("dqs_{}.csv", t2_tag(r.t2_us))), &csv_bytes(&rows)?)?;
    }
    // Pulse-resolved record of the longest sequence.
    let device = Device::new(cfg.device.clone())?;
    let t_last = cfg.times.iter().copied().fold(0.0, f64::max);
    let n = cfg.steps.steps(t_last);
    let gates = compile_trotter(&cfg.rabi, t_last, n, &device.map)?;
    let start = device.vacuum_index();
    let mut sched = device.scheduler()?;
    if cfg.backend != Backend::Ideal {
        let schedule = sched.schedule(&gates, &[start])?;
        let dump = serde_json::to_string_pretty(&schedule.dump())? + "\n";
        write_atomic(&out.join("schedule.json"), dump.as_bytes())?;
    }
    let psi_id = crate::gates::sequence_unitary(&gates, &device.map)? * basis_vector(device.model.dim(), start);
    for &t2 in &cfg.t2_us {
        let mut run = device.run(&mut sched, cfg.backend, &gates, t2, start)?;
        if let Some(last) = run.trajectory.samples.last_mut() {
            last.fidelity_vs_ideal = Some(experiments::fidelity(&run.rho, &psi_id)?);
        }
        let mut buf = Vec::new();
        run.trajectory
            .write_csv(&mut buf)
            .map_err(|e| Error::io("trajectory", e))?;
        write_atomic(&out.join(format!("trajectory_{}.csv", t2_tag(t2))), &buf)?;
    }
    Ok(json!({
        "reports": reports.iter().map(dqs_summary).collect::<Vec<_>>(),
        "longest_sequence": { "t": t_last, "steps": n },
    }))
}

fn run_truncation(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    let rows = experiments::truncation_study(&cfg.rabi, &cfg.truncations, cfg.d_ref, &cfg.times)?;
    write_atomic(&out.join("truncation.csv"), &csv_bytes(&rows)?)?;
    let mut ds = cfg.truncations.clone();
    ds.push(cfg.d_ref);
    let curves: Vec<Vec<(f64, f64)>> = ds
        .iter()
        .map(|&d| {
            let spec = cfg.rabi.with_d(d);
            let prop = ExactPropagator::new(&spec)?;
            let v = target::vacuum(d);
            Ok(cfg.times.iter().map(|&t| target::observables(&prop.evolve(&v, t))).collect())
        })
        .collect::<Result<_>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for d in &ds {
        header.push(format!("n_d{d}"));
        header.push(format!("sigma_z_d{d}"));
    }
    let csv_err = |e: csv::Error| Error::io("truncation_curves.csv", std::io::Error::other(e));
    w.write_record(&header).map_err(csv_err)?;
    for (k, t) in cfg.times.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        for c in &curves {
            rec.push(c[k].0.to_string());
            rec.push(c[k].1.to_string());
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::io("truncation_curves.csv", std::io::Error::other(e.to_string())))?;
    write_atomic(&out.join("truncation_curves.csv"), &bytes)?;
    Ok(serde_json::to_value(&rows)?)
}

fn run_gates_check(cfg: &ExperimentConfig, out: &Path) -> Result<serde_json::Value> {
    let device = Device::new(cfg.device.clone())?;
    let t_last = cfg.times.iter().copied().fold(0.0, f64::max);
    let n = cfg.steps.steps(t_last);
    let tau = if t_last > 0.0 { t_last / n as f64 } else { 1.0 };
    let mut gates = compile_trotter(&cfg.rabi, tau, 1, &device.map)?;
    if device.map.basis.s2 == Spin::HALF {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let k = crate::gates::ansatz_parameters(&device.map);
        let theta: Vec<f64> = (0..k).map(|_| rng.random_range(-1.5..1.5)).collect();
        gates.extend(build_vqe_ansatz(&theta, &device.map, cfg.variant)?);
    }
    for g in &gates {
        gate_unitary(g, &device.map)?;
    }
    let mut worst = Vec::new();
    for &t2 in &cfg.t2_us {
        let rows = check_gates(&device, &gates, cfg.backend, t2)?;
        write_atomic(&out.join(format!("gates_{}.csv", t2_tag(t2))), &csv_bytes(&rows)?)?;
        worst.push(json!({
            "t2_us": t2,
            "min_fidelity": rows.iter().map(|r| r.min_fidelity).fold(1.0, f64::min),
            "total_duration_ns": rows.iter().map(|r| r.duration_ns).sum::<f64>(),
        }));
    }
    Ok(json!({ "gates": gates.len(), "trotter_tau": tau, "runs": worst }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn grids_parse() {
        assert_eq!(grid_values("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let g = grid_values("0.0:1.0:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(grid_values("0.6").unwrap(), vec![0.6]);
        assert_eq!(grid_values("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert!(grid_values("1:0:0.1").is_err());
        assert!(grid_values("a:b").is_err());
    }

    #[test]
    fn t2_values_parse() {
        assert_eq!(parse_t2("inf").unwrap(), None);
        assert_eq!(parse_t2("10").unwrap(), Some(10.0));
        assert!(parse_t2("-3").is_err());
        assert_eq!(t2_tag(Some(10.0)), "t2_10us");
        assert_eq!(t2_tag(Some(12.5)), "t2_12.5us");
        assert_eq!(t2_tag(None), "t2_inf");
    }

    #[test]
    fn presets_are_listed() {
        let text = list_presets();
        for name in ["fig2", "fig3ab", "fig3cd", "fig3ef", "fig3gh"] {
            assert!(text.contains(name));
        }
        assert!(text.contains("B=0.08 T"));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("spinqudit-cli-{}", std::process::id()));
        let p = dir.join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 1);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
