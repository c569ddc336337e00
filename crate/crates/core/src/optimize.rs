//! Derivative-free minimization with the Nelder-Mead simplex.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Converged when the spread of simplex values falls below this.
    pub f_tolerance: f64,
    /// Converged also requires every vertex within this of the best one.
    pub x_tolerance: f64,
    pub max_evaluations: usize,
    /// Extra runs from random starting points; the best result is kept.
    pub restarts: usize,
    /// Half-width of the box random restarts are drawn from.
    pub restart_range: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.3,
            f_tolerance: 1e-10,
            x_tolerance: 1e-6,
            max_evaluations: 2000,
            restarts: 3,
            restart_range: std::f64::consts::FRAC_PI_2,
        }
    }
}

impl NelderMeadOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0 && self.f_tolerance > 0.0 && self.x_tolerance > 0.0) {
            return Err(Error::Config("optimizer step and tolerances must be positive".into()));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Config("optimizer needs at least one evaluation".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value seen after each evaluation.
    pub trace: Vec<f64>,
}

struct Counter<'f, F> {
    f: &'f mut F,
    trace: Vec<f64>,
    best: f64,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Counter<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x)?;
        self.best = self.best.min(v);
        self.trace.push(self.best);
        Ok(v)
    }
}

/// Minimizes `f` from `x0` with reflection 1, expansion 2, contraction 0.5
/// and shrink 0.5.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    opts.validate()?;
    let n = x0.len();
    let mut ctr = Counter {
        f: &mut f,
        trace: Vec::new(),
        best: f64::INFINITY,
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), ctr.eval(x0)?));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = ctr.eval(&x)?;
        simplex.push((x, v));
    }
    let mut converged = false;
    while ctr.trace.len() < opts.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= opts.f_tolerance && size <= opts.x_tolerance {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = toward(1.0);
        let fr = ctr.eval(&xr)?;
        if fr < simplex[0].1 {
            let xe = toward(2.0);
            let fe = ctr.eval(&xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = toward(0.5);
            let fc = ctr.eval(&xc)?;
            (xc, fc)
        } else {
            let xc = toward(-0.5);
            let fc = ctr.eval(&xc)?;
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&v.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
            let fx = ctr.eval(&x)?;
            *v = (x, fx);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        value,
        evaluations: ctr.trace.len(),
        converged,
        trace: ctr.trace,
    })
}

/// Runs from `x0`, then from `opts.restarts` seeded random points, and keeps
/// the lowest minimum. The returned trace concatenates all runs.
pub fn minimize_with_restarts<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions, seed: u64) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = nelder_mead(&mut f, x0, opts)?;
    let mut trace = best.trace.clone();
    let mut evaluations = best.evaluations;
    for _ in 0..opts.restarts {
        let start: Vec<f64> = x0
            .iter()
            .map(|_| rng.random_range(-opts.restart_range..=opts.restart_range))
            .collect();
        let run = nelder_mead(&mut f, &start, opts)?;
        let floor = trace.last().copied().unwrap_or(f64::INFINITY);
        trace.extend(run.trace.iter().map(|v| v.min(floor)));
        evaluations += run.evaluations;
        if run.value < best.value {
            best = run;
        }
    }
    best.trace = trace;
    best.evaluations = evaluations;
    Ok(best)
}
