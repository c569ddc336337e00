//! Time evolution under the dephasing master equation
//!
//! `dρ/dt = -i2π[H0 + H1(t), ρ] + Σ_L γ_L (2LρL - L²ρ - ρL²)`, `L ∈ {Sz1, sz2}`,
//!
//! with energies in GHz, time in ns and `γ = 1/T2`. Three backends share
//! the same inputs: a lab-frame RK4 integrator, a per-pulse rotating-frame
//! propagator, and an ideal gate applier.
//!
//! States handed between backends are density matrices in the dressed
//! (label-ordered) eigenbasis of `H0`, in the interaction picture of `H0`.

pub mod ideal;
pub mod lab;
pub mod rwa;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hardware::{HardwareModel, HardwareSpec, ProductBasis};
use crate::operators::{c, commutator, eig_hermitian_unchecked, trace, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Lab,
    #[default]
    Rwa,
    Ideal,
}

impl std::str::FromStr for Backend {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lab" => Ok(Backend::Lab),
            "rwa" => Ok(Backend::Rwa),
            "ideal" => Ok(Backend::Ideal),
            _ => Err(crate::Error::Config(format!(
                "unknown backend `{s}` (expected lab, rwa or ideal)"
            ))),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Lab => "lab",
            Backend::Rwa => "rwa",
            Backend::Ideal => "ideal",
        })
    }
}

/// Right-hand side of the master equation in the product basis.
pub fn lindblad_rhs(rho: &ComplexMatrix, h_ghz: &ComplexMatrix, spec: &HardwareSpec) -> ComplexMatrix {
    let ops = crate::hardware::HardwareOperators::new(spec.s1, spec.s2);
    let (r1, r2) = spec.dephasing_rates_per_ns();
    let mut out = commutator(h_ghz, rho) * Complex64::new(0.0, -2.0 * std::f64::consts::PI);
    for (l, rate) in [(&ops.sz1, r1), (&ops.sz2, r2)] {
        if rate > 0.0 {
            let l2 = l * l;
            out += (l * rho * l * c(2.0) - &l2 * rho - rho * &l2) * c(rate);
        }
    }
    out
}

/// Exact pure-dephasing channel: coherences between product states decay as
/// `exp(-[γ1 Δm1² + γ2 Δm2²] t)`.
#[derive(Debug, Clone)]
pub struct Dephaser {
    /// Decay rate (1/ns) of each product-basis coherence.
    rates: Vec<f64>,
    dim: usize,
    /// Dressed-to-product change of basis; `None` means act in the label basis.
    vectors: Option<ComplexMatrix>,
}

impl Dephaser {
    fn rates_for(basis: &ProductBasis, spec: &HardwareSpec) -> Vec<f64> {
        let (r1, r2) = spec.dephasing_rates_per_ns();
        let n = basis.dim();
        let mut rates = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (basis.label(i), basis.label(j));
                let dm1 = a.m1() - b.m1();
                let dm2 = a.m2() - b.m2();
                rates[j * n + i] = r1 * dm1 * dm1 + r2 * dm2 * dm2;
            }
        }
        rates
    }

    /// Channel on dressed-basis states, applied in the product basis.
    pub fn new(model: &HardwareModel) -> Option<Self> {
        Self::with_spec(model, &model.spec)
    }

    /// As [`Dephaser::new`] with coherence times taken from `spec`.
    pub fn with_spec(model: &HardwareModel, spec: &HardwareSpec) -> Option<Self> {
        let rates = Self::rates_for(&model.basis, spec);
        rates.iter().any(|r| *r > 0.0).then(|| Dephaser {
            rates,
            dim: model.dim(),
            vectors: Some(model.vectors.clone()),
        })
    }

    /// Channel acting directly on label indices (ideal product hardware).
    pub fn in_label_basis(basis: &ProductBasis, spec: &HardwareSpec) -> Option<Self> {
        let rates = Self::rates_for(basis, spec);
        rates.iter().any(|r| *r > 0.0).then(|| Dephaser {
            rates,
            dim: basis.dim(),
            vectors: None,
        })
    }

    fn damp(&self, rho: &mut ComplexMatrix, t_ns: f64) {
        let n = self.dim;
        for (k, z) in rho.as_mut_slice().iter_mut().enumerate() {
            let r = self.rates[k];
            if r > 0.0 {
                *z *= (-r * t_ns).exp();
            }
        }
        debug_assert_eq!(n * n, self.rates.len());
    }

    /// Applies the channel for `t_ns` to a state written in the basis the
    /// dephaser was built for.
    pub fn apply(&self, rho: &ComplexMatrix, t_ns: f64) -> ComplexMatrix {
        match &self.vectors {
            None => {
                let mut out = rho.clone();
                self.damp(&mut out, t_ns);
                out
            }
            Some(v) => {
                let mut p = v * rho * v.adjoint();
                self.damp(&mut p, t_ns);
                v.adjoint() * p * v
            }
        }
    }

    /// Channel on an interaction-picture state at lab time `t_ns`.
    pub fn apply_interaction(&self, rho_i: &ComplexMatrix, energies: &[f64], t_ns: f64, dt_ns: f64) -> ComplexMatrix {
        let lab = rotate_diag(rho_i, energies, -t_ns);
        let out = self.apply(&lab, dt_ns);
        rotate_diag(&out, energies, t_ns)
    }
}

/// `e^{i2πEt} ρ e^{-i2πEt}` for diagonal `E` (GHz) and `t` in ns.
pub fn rotate_diag(rho: &ComplexMatrix, energies: &[f64], t_ns: f64) -> ComplexMatrix {
    let n = rho.nrows();
    let tau = 2.0 * std::f64::consts::PI * t_ns;
    ComplexMatrix::from_fn(n, n, |i, j| {
        rho[(i, j)] * Complex64::from_polar(1.0, tau * (energies[i] - energies[j]))
    })
}

/// Trace error and smallest eigenvalue of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateHealth {
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

pub fn state_health(rho: &ComplexMatrix) -> StateHealth {
    let eig = eig_hermitian_unchecked(rho);
    StateHealth {
        trace_error: (trace(rho) - c(1.0)).norm(),
        min_eigenvalue: eig.values.first().copied().unwrap_or(0.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t_ns: f64,
    pub n_photons: f64,
    pub sigma_z: f64,
    pub leakage: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    /// Filled where an ideal reference exists (end of a sequence).
    pub fidelity_vs_ideal: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn record(&mut self, t_ns: f64, rho: &ComplexMatrix, map: &crate::encoding::EncodingMap) {
        let obs = crate::encoding::measure_observables(rho, map).expect("state matches encoding");
        let health = state_health(rho);
        self.samples.push(Sample {
            t_ns,
            n_photons: obs.n_photons,
            sigma_z: obs.sigma_z,
            leakage: obs.leakage,
            trace: trace(rho).re,
            min_eigenvalue: health.min_eigenvalue,
            fidelity_vs_ideal: None,
        });
    }

    pub fn worst_trace_error(&self) -> f64 {
        self.samples.iter().map(|s| (s.trace - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.samples.iter().map(|s| s.min_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_ns,n_photons,sigma_z,leakage,trace,min_eigenvalue,fidelity_vs_ideal")?;
        for s in &self.samples {
            let f = s.fidelity_vs_ideal.map(|f| format!("{f:.10}")).unwrap_or_default();
            writeln!(
                w,
                "{:.6},{:.10},{:.10},{:.10},{:.12},{:.3e},{}",
                s.t_ns, s.n_photons, s.sigma_z, s.leakage, s.trace, s.min_eigenvalue, f
            )?;
        }
        Ok(())
    }
}

/// Result of one backend run.
#[derive(Debug, Clone)]
pub struct Evolution {
    /// Final logical state (label basis, software frame applied).
    pub rho: ComplexMatrix,
    pub trajectory: Trajectory,
    pub duration_ns: f64,
}
