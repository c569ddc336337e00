//! Named hardware/model configurations for the shipped experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardware::HardwareSpec;
use crate::operators::Spin;
use crate::target::RabiSpec;

/// Number of Trotter steps as a function of simulated time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum StepRule {
    Constant(usize),
    /// `below` steps for `t <= t_split`, `above` otherwise.
    Split {
        t_split: f64,
        below: usize,
        above: usize,
    },
}

impl StepRule {
    pub fn steps(&self, t: f64) -> usize {
        match *self {
            StepRule::Constant(n) => n,
            StepRule::Split {
                t_split,
                below,
                above,
            } => {
                if t <= t_split + 1e-12 {
                    below
                } else {
                    above
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepRule::Constant(n) => n >= 1,
            StepRule::Split { below, above, .. } => below >= 1 && above >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("Trotter step count must be >= 1".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub note: &'static str,
    pub hardware: HardwareSpec,
    pub rabi: RabiSpec,
    pub steps: StepRule,
    /// Coherence times (µs) swept by default; `None` means no dephasing.
    pub t2_us: Vec<Option<f64>>,
    /// Coupling sweep for ground-state searches.
    pub g_grid: Vec<f64>,
    /// Truncations compared against `d_ref` in the truncation study.
    pub truncations: Vec<usize>,
    pub d_ref: usize,
}

/// Dipolar coupling shared by every configuration, cm⁻¹.
pub const JXY_CM: f64 = 0.008;

fn cr_cu(b_tesla: f64) -> HardwareSpec {
    HardwareSpec {
        s1: Spin::THREE_HALVES,
        s2: Spin::HALF,
        g1z: 1.98,
        g2z: 2.3,
        b_tesla,
        d_cm: 0.24,
        d_prime_cm: 0.0,
        jx_cm: 0.0,
        jy_cm: 0.0,
        jz_cm: 0.0,
        t2_us: None,
        t2_qubit_us: None,
    }
    .with_axial_dipolar(JXY_CM)
}

fn g_sweep() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

pub fn fig2() -> Preset {
    Preset {
        name: "fig2",
        note: "VQE on Cr(III) S1=3/2 + Cu(II) s2=1/2; g1=1.98, g2=2.3, D=0.24 cm^-1, Jxy=0.008 cm^-1, Jz=-0.016 cm^-1, B=0.4 T; G/Omega in 0..1",
        hardware: cr_cu(0.4),
        rabi: RabiSpec::new(0.6, 4),
        steps: StepRule::Constant(1),
        t2_us: vec![None, Some(10.0)],
        g_grid: g_sweep(),
        truncations: vec![],
        d_ref: 30,
    }
}

pub fn fig3ab() -> Preset {
    Preset {
        name: "fig3ab",
        note: "DQS G/Omega=0.25 on Cr(III) S1=3/2 + Cu(II) s2=1/2; g1=1.98, g2=2.3, D=0.24 cm^-1, B=0.4 T; N=4 for t<=5, N=6 beyond",
        hardware: cr_cu(0.4),
        rabi: RabiSpec::new(0.25, 4),
        steps: StepRule::Split {
            t_split: 5.0,
            below: 4,
            above: 6,
        },
        t2_us: vec![Some(50.0), Some(10.0)],
        g_grid: vec![],
        truncations: vec![],
        d_ref: 30,
    }
}

pub fn fig3cd() -> Preset {
    Preset {
        name: "fig3cd",
        note: "DQS G/Omega=0.5 on Cr(III) S1=3/2 + Ni(II) s2=1; g1=1.98, g2=2.18, D=0.24 cm^-1, D'=-0.24 cm^-1, B=0.2 T; N=7",
        hardware: HardwareSpec {
            s2: Spin::ONE,
            g2z: 2.18,
            d_prime_cm: -0.24,
            ..cr_cu(0.2)
        },
        rabi: RabiSpec::new(0.5, 4),
        steps: StepRule::Constant(7),
        t2_us: vec![Some(50.0), Some(10.0)],
        g_grid: vec![],
        truncations: vec![],
        d_ref: 30,
    }
}

fn fe_ni() -> HardwareSpec {
    HardwareSpec {
        s1: Spin::FIVE_HALVES,
        s2: Spin::ONE,
        g1z: 2.0,
        g2z: 2.18,
        b_tesla: 0.08,
        d_cm: -0.30,
        d_prime_cm: -0.24,
        jx_cm: 0.0,
        jy_cm: 0.0,
        jz_cm: 0.0,
        t2_us: None,
        t2_qubit_us: None,
    }
    .with_axial_dipolar(JXY_CM)
}

pub fn fig3ef() -> Preset {
    Preset {
        name: "fig3ef",
        note: "DQS G/Omega=0.7 on Fe(III) S1=5/2 + Ni(II) s2=1; g1=2, g2=2.18, D=-0.30 cm^-1, D'=-0.24 cm^-1, B=0.08 T; N=8",
        hardware: fe_ni(),
        rabi: RabiSpec::new(0.7, 6),
        steps: StepRule::Constant(8),
        t2_us: vec![Some(50.0), Some(10.0)],
        g_grid: vec![],
        truncations: vec![],
        d_ref: 30,
    }
}

pub fn fig3gh() -> Preset {
    Preset {
        name: "fig3gh",
        note: "Truncation study at G/Omega=0.7: boson space cut to d=4 (n_M=3) and d=6 (n_M=5) against d_ref=30",
        hardware: fe_ni(),
        rabi: RabiSpec::new(0.7, 6),
        steps: StepRule::Constant(8),
        t2_us: vec![None],
        g_grid: vec![],
        truncations: vec![4, 6],
        d_ref: 30,
    }
}

pub fn all() -> Vec<Preset> {
    vec![fig2(), fig3ab(), fig3cd(), fig3ef(), fig3gh()]
}

pub fn get(name: &str) -> Result<Preset> {
    all()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Default time grid: 0.5, 1.0, ..., 10.0 (units of 1/Omega).
pub fn default_time_grid() -> Vec<f64> {
    (1..=20).map(|k| 0.5 * k as f64).collect()
}
