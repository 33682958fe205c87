//! Derivative-free minimization: Nelder-Mead simplex with restarts, and a
//! deterministic multi-start driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Converged once every vertex is within `x_tol` of the best one (max norm)...
    pub x_tol: f64,
    /// ...and every vertex value within `f_tol` of the best value.
    pub f_tol: f64,
    /// Iteration budget of a single simplex run.
    pub max_iter: usize,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            x_tol: 1e-8,
            f_tol: 1e-8,
            max_iter: 2000,
            restarts: 2,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.reflection > 0.0
            && self.expansion > 1.0
            && self.expansion > self.reflection
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.x_tol > 0.0
            && self.f_tol > 0.0
            && self.max_iter >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid simplex configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    /// Simplex iterations summed over the initial run and all restarts.
    pub iterations: usize,
    pub converged: bool,
    /// Index of the winning start in a multi-start run (0 otherwise).
    pub start_index: usize,
}

/// NaN is treated as +inf so that ordering stays total.
fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

struct Run {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

fn initial_simplex(x0: &[f64]) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] = if v[i] != 0.0 { 1.05 * v[i] } else { 0.00025 };
        simplex.push(v);
    }
    simplex
}

fn simplex_run<F, O>(objective: &F, x0: &[f64], cfg: &SimplexConfig, observe: &mut O) -> Run
where
    F: Fn(&[f64]) -> f64,
    O: FnMut(f64),
{
    let n = x0.len();
    let mut pts = initial_simplex(x0);
    let mut vals: Vec<f64> = pts.iter().map(|p| key(objective(p))).collect();

    let order = |pts: &mut Vec<Vec<f64>>, vals: &mut Vec<f64>| {
        let mut idx: Vec<usize> = (0..pts.len()).collect();
        // stable: ties keep their current order
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        *pts = idx.iter().map(|&i| pts[i].clone()).collect();
        *vals = idx.iter().map(|&i| vals[i]).collect();
    };
    let point = |c: &[f64], d: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(d).map(|(ci, di)| ci + t * (di - ci)).collect()
    };

    order(&mut pts, &mut vals);
    observe(vals[0]);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let f_spread = vals.iter().map(|v| (v - vals[0]).abs()).fold(0.0, f64::max);
        let x_spread = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if f_spread < cfg.f_tol && x_spread < cfg.x_tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = pts[n].clone();
        let xr = point(&centroid, &worst, -cfg.reflection);
        let fr = key(objective(&xr));
        if fr < vals[0] {
            let xe = point(&centroid, &xr, cfg.expansion);
            let fe = key(objective(&xe));
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc, accept) = if fr < vals[n] {
                let xc = point(&centroid, &xr, cfg.contraction);
                let fc = key(objective(&xc));
                (xc, fc, fc <= fr)
            } else {
                let xc = point(&centroid, &worst, cfg.contraction);
                let fc = key(objective(&xc));
                (xc, fc, fc < vals[n])
            };
            if accept {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = point(&pts[0], &pts[i], cfg.shrink);
                    vals[i] = key(objective(&pts[i]));
                }
            }
        }
        order(&mut pts, &mut vals);
        observe(vals[0]);
    }
    Run {
        x: pts.swap_remove(0),
        f: vals[0],
        iterations,
        converged,
    }
}

/// Minimize `objective` from `x0`, calling `observe` with the incumbent best
/// value after every iteration.
pub fn nelder_mead_observed<F, O>(
    objective: F,
    x0: &[f64],
    config: &SimplexConfig,
    mut observe: O,
) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
    O: FnMut(f64),
{
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::Config("cannot optimize over zero parameters".into()));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("non-finite start point {x0:?}")));
    }
    let mut best = simplex_run(&objective, x0, config, &mut observe);
    let mut iterations = best.iterations;
    let mut restarts = 0;
    while best.converged && restarts < config.restarts {
        restarts += 1;
        let incumbent = best.f;
        let run = simplex_run(
            &objective,
            &best.x.clone(),
            config,
            &mut |v: f64| observe(v.min(incumbent)),
        );
        iterations += run.iterations;
        if run.f < best.f {
            best = run;
        } else {
            best.converged = run.converged;
        }
    }
    Ok(OptimResult {
        best_params: best.x,
        best_value: best.f,
        iterations,
        converged: best.converged,
        start_index: 0,
    })
}

pub fn nelder_mead<F>(objective: F, x0: &[f64], config: &SimplexConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64,
{
    nelder_mead_observed(objective, x0, config, |_| {})
}

/// Run Nelder-Mead from every start (in parallel) and keep the lowest value;
/// ties go to the earliest start, so the result does not depend on scheduling.
pub fn multi_start<F>(objective: F, starts: &[Vec<f64>], config: &SimplexConfig) -> Result<OptimResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if starts.is_empty() {
        return Err(Error::Config("multi-start needs at least one start".into()));
    }
    let results: Vec<OptimResult> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            nelder_mead(&objective, x0, config).map(|mut r| {
                r.start_index = i;
                r
            })
        })
        .collect::<Result<_>>()?;
    Ok(results
        .into_iter()
        .min_by(|a, b| {
            a.best_value
                .total_cmp(&b.best_value)
                .then(a.start_index.cmp(&b.start_index))
        })
        .expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn minimizes_rosenbrock() {
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &SimplexConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.best_params[0] - 1.0).abs() < 1e-4);
        assert!((r.best_params[1] - 1.0).abs() < 1e-4);
        assert!(r.best_value < 1e-8);
    }

    #[test]
    fn simple_examples() {
        let f = |p: &[f64]| (p[0] - 1.0).powi(2) + (p[1] - 2.0).powi(2);
        let r = nelder_mead(f, &[0.0, 0.0], &SimplexConfig::default()).unwrap();
        assert!(r.best_value <= 1e-12, "{}", r.best_value);
        assert!((r.best_params[0] - 1.0).abs() < 1e-5 && (r.best_params[1] - 2.0).abs() < 1e-5);

        let r = nelder_mead(|p: &[f64]| p[0].abs(), &[5.0], &SimplexConfig::default()).unwrap();
        assert!(r.best_value <= 1e-8);

        let single = multi_start(f, &[vec![3.0, -1.0]], &SimplexConfig::default()).unwrap();
        assert_eq!(single, nelder_mead(f, &[3.0, -1.0], &SimplexConfig::default()).unwrap());
    }

    #[test]
    fn symmetric_tie_goes_to_first_start() {
        let f = |p: &[f64]| (p[0] * p[0] - 1.0).powi(2);
        let r = multi_start(f, &[vec![0.5], vec![-0.5]], &SimplexConfig::default()).unwrap();
        assert_eq!(r.start_index, 0);
        assert!((r.best_params[0] - 1.0).abs() < 1e-4);
        let r = multi_start(f, &[vec![-0.5], vec![0.5]], &SimplexConfig::default()).unwrap();
        assert_eq!(r.start_index, 0);
        assert!((r.best_params[0] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn rosenbrock_value() {
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &SimplexConfig::default()).unwrap();
        assert!(rosenbrock(&r.best_params) < 1e-8);
        assert_eq!(rosenbrock(&r.best_params), r.best_value);
    }

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (v - i as f64).powi(2)).sum::<f64>();
        let r = nelder_mead(f, &[0.0, 0.0, 0.0, 0.0], &SimplexConfig::default()).unwrap();
        assert!(r.converged);
        for (i, v) in r.best_params.iter().enumerate() {
            assert!((v - i as f64).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn best_value_is_monotone() {
        let mut trace = Vec::new();
        nelder_mead_observed(rosenbrock, &[-1.2, 1.0], &SimplexConfig::default(), |v| trace.push(v)).unwrap();
        assert!(trace.len() > 10);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn iteration_budget() {
        let cfg = SimplexConfig {
            max_iter: 5,
            ..Default::default()
        };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(nelder_mead(rosenbrock, &[], &SimplexConfig::default()).is_err());
        let cfg = SimplexConfig {
            contraction: 1.5,
            ..Default::default()
        };
        assert!(nelder_mead(rosenbrock, &[0.0, 0.0], &cfg).is_err());
        assert!(multi_start(rosenbrock, &[], &SimplexConfig::default()).is_err());
    }

    #[test]
    fn nan_objective_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) };
        let r = nelder_mead(f, &[3.0], &SimplexConfig::default()).unwrap();
        assert!((r.best_params[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn multi_start_is_deterministic() {
        // two equal minima at ±1; the first start that reaches one wins ties
        let f = |x: &[f64]| (x[0] * x[0] - 1.0).powi(2);
        let starts = vec![vec![3.0], vec![-3.0], vec![0.5]];
        let a = multi_start(f, &starts, &SimplexConfig::default()).unwrap();
        let b = multi_start(f, &starts, &SimplexConfig::default()).unwrap();
        assert_eq!(a, b);
        for (i, s) in starts.iter().enumerate() {
            let single = nelder_mead(f, s, &SimplexConfig::default()).unwrap();
            assert!(a.best_value <= single.best_value);
            if single.best_value == a.best_value {
                assert!(a.start_index <= i);
            }
        }
    }
}
