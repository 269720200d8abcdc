//! Derivative-free local minimizers.
//!
//! L-BFGS uses central finite-difference gradients and a backtracking Armijo
//! line search; Nelder–Mead is the simplex fallback. Both count objective
//! evaluations against a shared budget. Non-finite objective values are
//! treated as infeasible points during the search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Lbfgs,
    NelderMead,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "lbfgs" | "l_bfgs" => Ok(Method::Lbfgs),
            "nelder_mead" | "simplex" => Ok(Method::NelderMead),
            other => Err(Error::invalid(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub method: Method,
    pub fd_step: f64,
    pub grad_tol: f64,
    /// Relative objective change below which L-BFGS stops.
    pub f_tol: f64,
    pub max_evals: usize,
    pub memory: usize,
    /// Initial simplex edge for Nelder–Mead.
    pub simplex_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            method: Method::Lbfgs,
            fd_step: 1e-6,
            grad_tol: 1e-8,
            f_tol: 1e-14,
            max_evals: 2000,
            memory: 10,
            simplex_step: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fd_step > 0.0) || !(self.grad_tol >= 0.0) || !(self.f_tol >= 0.0) {
            return Err(Error::invalid("optimizer tolerances must be positive"));
        }
        if self.max_evals == 0 || self.memory == 0 || !(self.simplex_step > 0.0) {
            return Err(Error::invalid("optimizer budgets must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evals: usize,
    max: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        (self.f)(x)
    }

    fn left(&self) -> usize {
        self.max.saturating_sub(self.evals)
    }
}

pub fn minimize<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    match cfg.method {
        Method::Lbfgs => lbfgs(f, x0, cfg),
        Method::NelderMead => nelder_mead(f, x0, cfg),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn gradient<F: FnMut(&[f64]) -> f64>(c: &mut Counted<F>, x: &[f64], h: f64) -> Option<Vec<f64>> {
    if c.left() < 2 * x.len() {
        return None;
    }
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = c.call(&xp);
        xp[i] = xi - h;
        let fm = c.call(&xp);
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
        if !g[i].is_finite() {
            return None;
        }
    }
    Some(g)
}

pub fn lbfgs<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut c = Counted {
        f,
        evals: 0,
        max: cfg.max_evals,
    };
    let mut x = x0.to_vec();
    let mut fx = c.call(&x);
    if !fx.is_finite() {
        return Err(Error::Optimizer(format!("objective is {fx} at the starting point")));
    }
    if x.is_empty() {
        return Ok(Minimum {
            x,
            f: fx,
            evals: c.evals,
            iterations: 0,
            converged: true,
        });
    }
    let mut g = match gradient(&mut c, &x, cfg.fd_step) {
        Some(g) => g,
        None => {
            return Ok(Minimum {
                x,
                f: fx,
                evals: c.evals,
                iterations: 0,
                converged: false,
            })
        }
    };
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    let mut converged = false;

    loop {
        if inf_norm(&g) <= cfg.grad_tol {
            converged = true;
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match hist.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / inf_norm(&g).max(1.0),
        };
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += si * (a - b);
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v / inf_norm(&g).max(1.0)).collect();
            slope = dot(&g, &d);
        }

        // backtracking Armijo search
        let mut t = 1.0;
        let mut accepted = None;
        while c.left() > 0 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let fnew = c.call(&xn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                break;
            }
        }
        let Some((xn, fnew)) = accepted else { break };
        iterations += 1;
        let Some(gn) = gradient(&mut c, &xn, cfg.fd_step) else {
            x = xn;
            fx = fnew;
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        let df = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;
        if df <= cfg.f_tol * fx.abs().max(1.0) {
            converged = inf_norm(&g) <= cfg.grad_tol.max(1e-5);
            break;
        }
    }
    Ok(Minimum {
        x,
        f: fx,
        evals: c.evals,
        iterations,
        converged,
    })
}

pub fn nelder_mead<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut c = Counted {
        f,
        evals: 0,
        max: cfg.max_evals,
    };
    let n = x0.len();
    let f0 = c.call(x0);
    if !f0.is_finite() {
        return Err(Error::Optimizer(format!("objective is {f0} at the starting point")));
    }
    let key = |v: f64| if v.is_finite() { v } else { f64::INFINITY };
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        if c.left() == 0 {
            break;
        }
        let mut xi = x0.to_vec();
        xi[i] += cfg.simplex_step;
        let fi = key(c.call(&xi));
        simplex.push((xi, fi));
    }
    let mut iterations = 0;
    let mut converged = n == 0;
    while simplex.len() == n + 1 && n > 0 && c.left() > 0 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .map(|(v, _)| inf_norm(&v.iter().zip(&simplex[0].0).map(|(a, b)| a - b).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        if spread <= cfg.f_tol.max(1e-12) * simplex[0].1.abs().max(1.0) && size <= 1e-8 {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            centroid.iter().zip(worst).map(|(cj, wj)| cj + t * (cj - wj)).collect()
        };
        let worst = simplex[n].0.clone();
        let xr = along(1.0, &worst);
        let fr = key(c.call(&xr));
        if fr < simplex[0].1 {
            let xe = along(2.0, &worst);
            let fe = key(c.call(&xe));
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(0.5, &worst);
                let fc = key(c.call(&xc));
                (xc, fc)
            } else {
                let xc = along(-0.5, &worst);
                let fc = key(c.call(&xc));
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    if c.left() == 0 {
                        break;
                    }
                    let xs: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fs = key(c.call(&xs));
                    *vertex = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Ok(Minimum {
        x,
        f,
        evals: c.evals,
        iterations,
        converged,
    })
}
