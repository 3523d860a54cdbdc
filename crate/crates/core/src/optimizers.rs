//! Derivative-free and finite-difference minimisers.
//!
//! Every optimiser tracks the best point it has evaluated and returns that
//! point, so `f_best` never exceeds `f(x0)`. A non-finite objective value
//! aborts the run with [`Error::NonFiniteObjective`].

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::stats::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub max_iter: usize,
    pub max_evals: usize,
    /// Stop when the simplex values span less than this...
    pub f_tol: f64,
    /// ...and the vertices lie this close to the best one.
    pub x_tol: f64,
    /// Offset of the initial vertices from `x0` along each axis.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            max_evals: 4000,
            f_tol: 1e-6,
            x_tol: 1e-6,
            initial_step: 0.1,
        }
    }
}

/// Simultaneous-perturbation stochastic approximation with
/// `step_k = a / (A + k + 1)^α`, `A = 0.01·n_iter`, and
/// `ε_k = c / (k + 1)^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    pub n_iter: usize,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.1,
            c: 0.1,
            n_iter: 100,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

impl SpsaConfig {
    /// Step size and perturbation size at iteration `k` (zero-based).
    pub fn gains(&self, k: usize) -> (f64, f64) {
        let stability = 0.01 * self.n_iter as f64;
        let k = k as f64;
        (
            self.a / (stability + k + 1.0).powf(self.alpha),
            self.c / (k + 1.0).powf(self.gamma),
        )
    }
}

/// BFGS with central-difference gradients and a backtracking line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiNewtonConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for QuasiNewtonConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            max_iter: 200,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerConfig {
    NelderMead(NelderMeadConfig),
    Spsa(SpsaConfig),
    FdQuasiNewton(QuasiNewtonConfig),
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::NelderMead(_) => "nelder-mead",
            Self::Spsa(_) => "spsa",
            Self::FdQuasiNewton(_) => "fd-quasi-newton",
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::NelderMead(NelderMeadConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub evaluations: usize,
    pub iterations: usize,
    /// Best value seen after each iteration.
    pub trace: Vec<f64>,
}

/// Objective wrapper that counts calls and remembers the best point.
pub struct Tracked<F> {
    f: F,
    evaluations: usize,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> f64> Tracked<F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            evaluations: 0,
            best_x: Vec::new(),
            best_f: f64::INFINITY,
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x);
        self.evaluations += 1;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective {
                value: v,
                evaluation: self.evaluations,
            });
        }
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        Ok(v)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn best(&self) -> f64 {
        self.best_f
    }

    fn finish(self, iterations: usize, trace: Vec<f64>) -> OptResult {
        OptResult {
            x_best: self.best_x,
            f_best: self.best_f,
            evaluations: self.evaluations,
            iterations,
            trace,
        }
    }
}

/// Minimises `f` from `x0`; `seed` drives the stochastic methods.
pub fn minimize<F>(f: F, x0: &[f64], config: &OptimizerConfig, seed: u64) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> f64,
{
    if x0.is_empty() {
        return Err(invalid("empty parameter vector"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite starting point"));
    }
    match config {
        OptimizerConfig::NelderMead(c) => nelder_mead(f, x0, c),
        OptimizerConfig::Spsa(c) => spsa(f, x0, c, seed),
        OptimizerConfig::FdQuasiNewton(c) => fd_quasi_newton(f, x0, c),
    }
}

pub fn nelder_mead<F>(f: F, x0: &[f64], cfg: &NelderMeadConfig) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> f64,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut obj = Tracked::new(f);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += cfg.initial_step;
        simplex.push(v);
    }
    let mut values = simplex
        .iter()
        .map(|v| obj.eval(v))
        .collect::<Result<Vec<f64>>>()?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };

    while iterations < cfg.max_iter && obj.evaluations() < cfg.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let f_spread = values.iter().map(|v| (v - values[0]).abs()).fold(0.0, f64::max);
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread <= cfg.f_tol && x_spread <= cfg.x_tol {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let xr = lerp(&centroid, &worst, -REFLECT);
        let fr = obj.eval(&xr)?;
        if fr < values[0] {
            let xe = lerp(&centroid, &worst, -EXPAND);
            let fe = obj.eval(&xe)?;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = lerp(&centroid, &xr, CONTRACT);
                let fc = obj.eval(&xc)?;
                (xc, fc)
            } else {
                let xc = lerp(&centroid, &worst, CONTRACT);
                let fc = obj.eval(&xc)?;
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    simplex[i] = lerp(&simplex[0], &simplex[i], SHRINK);
                    values[i] = obj.eval(&simplex[i])?;
                }
            }
        }
        trace.push(obj.best());
    }
    Ok(obj.finish(iterations, trace))
}

/// One SPSA update in place; exactly two objective evaluations.
pub fn spsa_step<F, R>(
    obj: &mut Tracked<F>,
    x: &mut [f64],
    k: usize,
    cfg: &SpsaConfig,
    rng: &mut R,
) -> Result<()>
where
    F: FnMut(&[f64]) -> f64,
    R: Rng,
{
    let (step, eps) = cfg.gains(k);
    let delta: Vec<f64> = (0..x.len())
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();
    let plus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v + eps * d).collect();
    let minus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v - eps * d).collect();
    let diff = obj.eval(&plus)? - obj.eval(&minus)?;
    for (v, d) in x.iter_mut().zip(&delta) {
        *v -= step * diff / (2.0 * eps * d);
    }
    Ok(())
}

pub fn spsa<F>(f: F, x0: &[f64], cfg: &SpsaConfig, seed: u64) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut obj = Tracked::new(f);
    let mut rng = rng_from_seed(seed);
    let mut x = x0.to_vec();
    obj.eval(&x)?;
    let mut trace = Vec::with_capacity(cfg.n_iter);
    for k in 0..cfg.n_iter {
        spsa_step(&mut obj, &mut x, k, cfg, &mut rng)?;
        trace.push(obj.best());
    }
    obj.eval(&x)?;
    Ok(obj.finish(cfg.n_iter, trace))
}

fn central_gradient<F>(obj: &mut Tracked<F>, x: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let fp = obj.eval(&probe)?;
        probe[i] = x[i] - eps;
        let fm = obj.eval(&probe)?;
        probe[i] = x[i];
        g[i] = (fp - fm) / (2.0 * eps);
    }
    Ok(g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn fd_quasi_newton<F>(f: F, x0: &[f64], cfg: &QuasiNewtonConfig) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> f64,
{
    const ARMIJO: f64 = 1e-4;
    const MAX_BACKTRACKS: usize = 40;

    let n = x0.len();
    let mut obj = Tracked::new(f);
    let mut x = x0.to_vec();
    let mut fx = obj.eval(&x)?;
    let mut g = central_gradient(&mut obj, &x, cfg.epsilon)?;
    let identity = |scale: f64| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect()
    };
    let mut h = identity(1.0);
    let mut fresh = true;
    let mut trace = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < cfg.grad_tol {
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            h = identity(1.0);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        // Unscaled metric: cap the first trial at unit length.
        let mut t = if fresh {
            1.0f64.min(1.0 / dot(&d, &d).sqrt())
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let ft = obj.eval(&trial)?;
            if ft <= fx + ARMIJO * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                trace.push(obj.best());
                break;
            }
            h = identity(1.0);
            fresh = true;
            trace.push(obj.best());
            continue;
        };
        let g_new = central_gradient(&mut obj, &x_new, cfg.epsilon)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            if fresh {
                h = identity(sy / dot(&y, &y));
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        trace.push(obj.best());
    }
    Ok(obj.finish(iterations, trace))
}
