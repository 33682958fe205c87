//! Regression models of inflation y against unemployment x.
//!
//! ```text
//! power        y = b·x^c - a
//! exponential  y = b·e^(c·x) - a
//! ML           y = C·x^(β-1)·E_{α,β}(a·x^α)
//! Phillips     y = b·x^c - a          (original 1958 fit)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ml_two, CompensatedSum, MLTwoParams, SeriesPolicy};

/// Largest exponent c·x accepted by the exponential model.
pub const EXP_MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MLModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhillipsOriginalParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for PhillipsOriginalParams {
    fn default() -> Self {
        Self {
            a: 0.900,
            b: 9.638,
            c: -1.394,
        }
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("unemployment must be positive, got {x}")))
    }
}

fn finite(v: f64, what: &'static str, x: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow { what, x })
    }
}

pub fn eval_power(p: &PowerParams, x: f64) -> Result<f64> {
    check_x(x)?;
    finite(p.b * x.powf(p.c) - p.a, "power model", x)
}

pub fn eval_exponential(p: &ExpParams, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite unemployment {x}")));
    }
    if p.c * x > EXP_MAX_EXPONENT {
        return Err(Error::Overflow {
            what: "exponential model",
            x,
        });
    }
    finite(p.b * (p.c * x).exp() - p.a, "exponential model", x)
}

pub fn eval_ml_model(p: &MLModelParams, x: f64, policy: &SeriesPolicy) -> Result<f64> {
    check_x(x)?;
    let ml = MLTwoParams::new(p.alpha, p.beta)?;
    let z = p.a * x.powf(p.alpha);
    let e = ml_two(ml, z, policy)?;
    let scale = ((p.beta - 1.0) * x.ln()).exp();
    finite(p.c * scale * e, "Mittag-Leffler model", x)
}

pub fn eval_phillips_original(p: &PhillipsOriginalParams, x: f64) -> Result<f64> {
    check_x(x)?;
    finite(p.b * x.powf(p.c) - p.a, "Phillips model", x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    MittagLeffler,
    Exponential,
    Power,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::MittagLeffler, ModelKind::Exponential, ModelKind::Power];

    pub fn n_params(self) -> usize {
        match self {
            ModelKind::MittagLeffler => 4,
            ModelKind::Exponential | ModelKind::Power => 3,
        }
    }

    /// Short name used on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::MittagLeffler => "ml",
            ModelKind::Exponential => "exp",
            ModelKind::Power => "power",
        }
    }

    pub fn from_short_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.short_name() == s)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::MittagLeffler => "Mittag-Leffler",
            ModelKind::Exponential => "exponential",
            ModelKind::Power => "power",
        })
    }
}

/// Parameters of any fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelParams {
    MittagLeffler(MLModelParams),
    Exponential(ExpParams),
    Power(PowerParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::MittagLeffler(_) => ModelKind::MittagLeffler,
            ModelParams::Exponential(_) => ModelKind::Exponential,
            ModelParams::Power(_) => ModelKind::Power,
        }
    }

    /// Parameter vector in optimizer order: (α, β, a, C) or (a, b, c).
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            ModelParams::MittagLeffler(p) => vec![p.alpha, p.beta, p.a, p.c],
            ModelParams::Exponential(p) => vec![p.a, p.b, p.c],
            ModelParams::Power(p) => vec![p.a, p.b, p.c],
        }
    }

    pub fn from_slice(kind: ModelKind, v: &[f64]) -> Result<Self> {
        if v.len() != kind.n_params() {
            return Err(Error::Config(format!(
                "{kind} model takes {} parameters, got {}",
                kind.n_params(),
                v.len()
            )));
        }
        Ok(match kind {
            ModelKind::MittagLeffler => ModelParams::MittagLeffler(MLModelParams {
                alpha: v[0],
                beta: v[1],
                a: v[2],
                c: v[3],
            }),
            ModelKind::Exponential => ModelParams::Exponential(ExpParams {
                a: v[0],
                b: v[1],
                c: v[2],
            }),
            ModelKind::Power => ModelParams::Power(PowerParams {
                a: v[0],
                b: v[1],
                c: v[2],
            }),
        })
    }

    /// Named parameters for display, in optimizer order.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        let names: &[&'static str] = match self {
            ModelParams::MittagLeffler(_) => &["alpha", "beta", "a", "C"],
            _ => &["a", "b", "c"],
        };
        names.iter().copied().zip(self.to_vec()).collect()
    }

    pub fn eval(&self, x: f64, policy: &SeriesPolicy) -> Result<f64> {
        match self {
            ModelParams::MittagLeffler(p) => eval_ml_model(p, x, policy),
            ModelParams::Exponential(p) => eval_exponential(p, x),
            ModelParams::Power(p) => eval_power(p, x),
        }
    }
}

/// Sum of squared residuals of `model` over (x, y) points.
pub fn sse<F>(model: F, points: &[(f64, f64)]) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut acc = CompensatedSum::new();
    for &(x, y) in points {
        let r = y - model(x)?;
        acc.add(r * r);
    }
    let s = acc.value();
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::Overflow { what: "sum of squares", x: s })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_example() {
        let p = PowerParams { a: 1.7578, b: 1933.2, c: -2.6297 };
        assert_relative_eq!(eval_power(&p, 1.0).unwrap(), 1931.4422, max_relative = 1e-15);
        assert!((eval_power(&p, 6.349).unwrap() - 13.21).abs() < 1e-2);
        let id = PowerParams { a: 0.0, b: 1.0, c: 1.0 };
        assert_eq!(eval_power(&id, 7.5).unwrap(), 7.5);
        assert!(matches!(eval_power(&p, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn exponential_example() {
        let p = ExpParams { a: 0.0, b: 1.0, c: 0.0 };
        assert_eq!(eval_exponential(&p, 5.0).unwrap(), 1.0);
        let p = ExpParams { a: -0.1507, b: 220.3057, c: -0.4449 };
        assert_relative_eq!(eval_exponential(&p, 0.0).unwrap(), 220.4564, max_relative = 1e-14);
        let p = ExpParams { a: 0.0381, b: 12.1022, c: -0.2007 };
        // 12.1022·e^(-1.6056) - 0.0381
        assert_relative_eq!(eval_exponential(&p, 8.0).unwrap(), 2.391_647_285_621_242, max_relative = 1e-13);
        let p = ExpParams { a: 0.0, b: 1.0, c: 100.0 };
        assert!(matches!(eval_exponential(&p, 8.0), Err(Error::Overflow { .. })));
    }

    #[test]
    fn ml_model_reduces_to_exponential() {
        // α = β = 1: C·e^(a·x)
        let p = MLModelParams { alpha: 1.0, beta: 1.0, a: -0.5, c: 2.0 };
        let v = eval_ml_model(&p, 3.0, &SeriesPolicy::default()).unwrap();
        assert_relative_eq!(v, 2.0 * (-1.5f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn ml_model_rejects_bad_params() {
        let p = MLModelParams { alpha: -1.0, beta: 1.0, a: -0.5, c: 2.0 };
        assert!(eval_ml_model(&p, 3.0, &SeriesPolicy::default()).is_err());
        let p = MLModelParams { alpha: 1.0, beta: 1.0, a: -0.5, c: 2.0 };
        assert!(eval_ml_model(&p, -3.0, &SeriesPolicy::default()).is_err());
    }

    #[test]
    fn phillips_defaults() {
        let p = PhillipsOriginalParams::default();
        assert_relative_eq!(eval_phillips_original(&p, 1.0).unwrap(), 8.738, max_relative = 1e-14);
        assert!((eval_phillips_original(&p, 2.0).unwrap() - 2.767).abs() < 5e-4);
        for &x in &[0.5, 1.7, 4.0, 11.0] {
            let y = eval_phillips_original(&p, x).unwrap();
            assert_relative_eq!((y + p.a).ln(), p.b.ln() + p.c * x.ln(), max_relative = 1e-13);
        }
    }

    #[test]
    fn sse_counts_and_sums() {
        let calls = std::cell::Cell::new(0);
        let s = sse(
            |x| {
                calls.set(calls.get() + 1);
                Ok(x)
            },
            &[(1.0, 2.0), (2.0, 2.0), (3.0, 1.0)],
        )
        .unwrap();
        assert_eq!(s, 5.0);
        assert_eq!(calls.get(), 3);
        assert_eq!(sse(|x| Ok(x), &[]).unwrap(), 0.0);
    }

    #[test]
    fn params_round_trip() {
        for kind in ModelKind::ALL {
            let v: Vec<f64> = (1..=kind.n_params()).map(|i| i as f64).collect();
            let p = ModelParams::from_slice(kind, &v).unwrap();
            assert_eq!(p.kind(), kind);
            assert_eq!(p.to_vec(), v);
            assert_eq!(ModelKind::from_short_name(kind.short_name()), Some(kind));
        }
        assert!(ModelParams::from_slice(ModelKind::Power, &[1.0]).is_err());
    }
}
