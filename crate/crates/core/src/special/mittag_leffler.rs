use super::gamma::{is_gamma_pole, ln_gamma, ln_gamma_signed, reciprocal_gamma};
use super::kahan::CompensatedSum;
use super::multiprec;
use super::{MLTwoParams, PrabhakarParams, SeriesPolicy, ShuklaParams};
use crate::error::{Error, Result};

/// Relative error bound below which the double-precision sum is returned as is.
const DOUBLE_TARGET: f64 = 1e-13;
/// Without the multiprecision fallback, sums with a larger error bound are rejected.
const DOUBLE_ACCEPT: f64 = 1e-8;

/// Per-term weight multiplying z^k / Γ(αk+β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(super) enum Weight {
    /// 1
    Unit,
    /// (γ)_k / k!
    Rising { gamma: f64 },
    /// (γ)_{qk} / k! for a positive integer q
    IntegerStep { gamma: f64, q: u32 },
    /// Γ(γ+qk) / (Γ(γ) k!) for q in (0, 1)
    Fractional { gamma: f64, q: f64 },
}

impl Weight {
    /// True when every weight is strictly positive.
    fn all_positive(&self) -> bool {
        match *self {
            Weight::Unit => true,
            Weight::Rising { gamma }
            | Weight::IntegerStep { gamma, .. }
            | Weight::Fractional { gamma, .. } => gamma > 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(super) struct MlSeries {
    pub alpha: f64,
    pub beta: f64,
    pub z: f64,
    pub weight: Weight,
}

/// Weight value for the current k, kept both directly and in log form so the
/// direct value may overflow without losing the term.
struct WeightState {
    kind: Weight,
    val: f64,
    ln: f64,
    sign: f64,
}

impl WeightState {
    fn new(kind: Weight) -> Self {
        Self {
            kind,
            val: 1.0,
            ln: 0.0,
            sign: 1.0,
        }
    }

    fn mul_factor(&mut self, f: f64) {
        self.val *= f;
        if f == 0.0 {
            self.sign = 0.0;
            self.ln = f64::NEG_INFINITY;
        } else {
            self.sign *= f.signum();
            self.ln += f.abs().ln();
        }
    }

    /// Move from the weight of `k` to that of `k + 1`.
    fn advance(&mut self, k: usize) -> Result<()> {
        let kf = k as f64;
        match self.kind {
            Weight::Unit => {}
            Weight::Rising { gamma } => {
                self.mul_factor(gamma + kf);
                self.mul_factor(1.0 / (kf + 1.0));
            }
            Weight::IntegerStep { gamma, q } => {
                let base = gamma + f64::from(q) * kf;
                for j in 0..q {
                    self.mul_factor(base + f64::from(j));
                }
                self.mul_factor(1.0 / (kf + 1.0));
            }
            Weight::Fractional { gamma, q } => {
                let next = kf + 1.0;
                let top = gamma + q * next;
                if is_gamma_pole(top) {
                    return Err(Error::Pole { x: top });
                }
                let (ln_top, s_top) = ln_gamma_signed(top)?;
                let (ln_bot, s_bot) = ln_gamma_signed(gamma)?;
                self.ln = ln_top - ln_bot - ln_gamma(next + 1.0)?;
                self.sign = s_top * s_bot;
                self.val = self.sign * self.ln.exp();
            }
        }
        Ok(())
    }
}

/// Result of the double-precision pass.
#[derive(Debug, Clone, Copy)]
pub(super) struct DoublePass {
    pub value: f64,
    /// Running bound on the absolute rounding error.
    pub err_bound: f64,
    /// Largest ln|term| seen.
    pub max_ln_term: f64,
    /// A term overflowed f64.
    pub overflowed: bool,
}

impl MlSeries {
    /// ln|z^k / Γ(αk+β)| + ln|weight| and the resulting term.
    fn term(&self, k: usize, ln_abs_z: f64, w: &WeightState) -> Result<(f64, f64, f64)> {
        let kf = k as f64;
        let x = self.alpha.mul_add(kf, self.beta);
        let eps_factor = 8.0 + 2.0 * (kf + 1.0).log2() + x * x.ln().abs();
        if w.sign == 0.0 {
            return Ok((0.0, f64::NEG_INFINITY, 0.0));
        }
        let ln_pow = kf * ln_abs_z;
        let weight_ok = w.val.is_finite() && w.val.is_normal();
        if weight_ok && x <= 170.0 && ln_pow.abs() < 690.0 && k <= i32::MAX as usize {
            let t = w.val * self.z.powi(k as i32) * reciprocal_gamma(x);
            let weight_err = if matches!(self.weight, Weight::Unit) { 0.0 } else { 2.0 * kf };
            return Ok((t, t.abs().ln(), eps_factor + weight_err));
        }
        let ln_t = w.ln + ln_pow - ln_gamma(x)?;
        let odd = k % 2 == 1;
        let sign = if self.z < 0.0 && odd { -w.sign } else { w.sign };
        Ok((sign * ln_t.exp(), ln_t, eps_factor + ln_t.abs() + 2.0 * kf))
    }

    pub(super) fn double_pass(&self, policy: &SeriesPolicy) -> Result<DoublePass> {
        let ln_abs_z = self.z.abs().ln();
        let mut sum = CompensatedSum::new();
        let mut err = 0.0;
        let mut max_ln = f64::NEG_INFINITY;
        let mut weight = WeightState::new(self.weight);
        let mut prev_small = false;
        for k in 0..policy.max_terms {
            let (t, ln_t, eps_factor) = self.term(k, ln_abs_z, &weight)?;
            max_ln = max_ln.max(ln_t);
            if !t.is_finite() {
                return Ok(DoublePass {
                    value: t,
                    err_bound: f64::INFINITY,
                    max_ln_term: max_ln,
                    overflowed: true,
                });
            }
            sum.add(t);
            err += t.abs() * eps_factor * f64::EPSILON;
            let threshold = policy.rel_tol * sum.value().abs() + policy.abs_tol;
            let small = t.abs() < threshold;
            if k >= 2 && small && prev_small {
                let value = sum.value();
                return Ok(DoublePass {
                    value,
                    err_bound: err + 2.0 * f64::EPSILON * value.abs(),
                    max_ln_term: max_ln,
                    overflowed: false,
                });
            }
            prev_small = small;
            weight.advance(k)?;
        }
        Err(Error::NonConvergence {
            terms: policy.max_terms,
        })
    }

    /// Sum the series, escalating to multiprecision when cancellation makes
    /// the double-precision sum unreliable.
    pub(super) fn evaluate(&self, policy: &SeriesPolicy) -> Result<f64> {
        policy.validate()?;
        if self.z.is_nan() {
            return Err(Error::Domain("argument z is NaN".into()));
        }
        if self.z.abs() > policy.max_abs_arg {
            return Err(Error::ArgumentGuard {
                z_abs: self.z.abs(),
                limit: policy.max_abs_arg,
            });
        }
        if self.z == 0.0 {
            return Ok(reciprocal_gamma(self.beta));
        }
        let pass = self.double_pass(policy)?;
        if pass.overflowed && self.z > 0.0 && self.weight.all_positive() {
            // every term is positive, so the sum itself exceeds f64::MAX
            return Ok(f64::INFINITY);
        }
        if !pass.overflowed && pass.err_bound <= DOUBLE_TARGET * pass.value.abs() {
            return Ok(pass.value);
        }
        let fallback_allowed = policy.max_precision_bits > 53;
        if fallback_allowed {
            match multiprec::evaluate(self, policy, &pass) {
                Ok(v) => return Ok(v),
                Err(Error::PrecisionLoss { .. }) if !pass.overflowed => {}
                Err(e) => return Err(e),
            }
        }
        if !pass.overflowed && pass.err_bound <= DOUBLE_ACCEPT * pass.value.abs() {
            return Ok(pass.value);
        }
        Err(Error::PrecisionLoss {
            bits_needed: multiprec::bits_for(pass.max_ln_term, pass.value),
            limit: policy.max_precision_bits,
        })
    }
}

/// One-parameter function E_α(z) = E_{α,1}(z).
pub fn ml_one(alpha: f64, z: f64, policy: &SeriesPolicy) -> Result<f64> {
    ml_two(MLTwoParams { alpha, beta: 1.0 }, z, policy)
}

/// Two-parameter function E_{α,β}(z).
pub fn ml_two(params: MLTwoParams, z: f64, policy: &SeriesPolicy) -> Result<f64> {
    params.validate()?;
    MlSeries {
        alpha: params.alpha,
        beta: params.beta,
        z,
        weight: Weight::Unit,
    }
    .evaluate(policy)
}

/// Three-parameter (Prabhakar) function E^γ_{α,β}(z).
pub fn ml_prabhakar(params: PrabhakarParams, z: f64, policy: &SeriesPolicy) -> Result<f64> {
    params.validate()?;
    MlSeries {
        alpha: params.alpha,
        beta: params.beta,
        z,
        weight: Weight::Rising {
            gamma: params.gamma,
        },
    }
    .evaluate(policy)
}

/// Four-parameter function E^{γ,q}_{α,β}(z) with weight (γ)_{qk} / k!.
pub fn ml_shukla(params: ShuklaParams, z: f64, policy: &SeriesPolicy) -> Result<f64> {
    params.validate()?;
    // term ratio grows like q^q k^(q-1-α) z / α^α
    if z != 0.0 && params.alpha <= params.q - 1.0 {
        let radius = if params.alpha < params.q - 1.0 {
            0.0
        } else {
            params.alpha.powf(params.alpha) / params.q.powf(params.q)
        };
        if z.abs() >= radius {
            return Err(Error::Domain(format!(
                "series diverges for alpha = {}, q = {} at |z| = {} (radius of convergence {radius})",
                params.alpha,
                params.q,
                z.abs()
            )));
        }
    }
    let weight = if params.q == 1.0 {
        // (γ)_{1·k} = (γ)_k
        Weight::Rising {
            gamma: params.gamma,
        }
    } else if params.q >= 1.0 {
        Weight::IntegerStep {
            gamma: params.gamma,
            q: params.q as u32,
        }
    } else {
        Weight::Fractional {
            gamma: params.gamma,
            q: params.q,
        }
    };
    MlSeries {
        alpha: params.alpha,
        beta: params.beta,
        z,
        weight,
    }
    .evaluate(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn pol() -> SeriesPolicy {
        SeriesPolicy::default()
    }

    #[test]
    fn one_parameter_examples() {
        assert_relative_eq!(ml_one(1.0, 1.0, &pol()).unwrap(), E, max_relative = 1e-15);
        assert_relative_eq!(
            ml_one(2.0, -1.0, &pol()).unwrap(),
            1.0_f64.cos(),
            max_relative = 1e-14
        );
        assert_eq!(ml_one(0.5, 0.0, &pol()).unwrap(), 1.0);
    }

    #[test]
    fn two_parameter_examples() {
        let p = |a, b| MLTwoParams::new(a, b).unwrap();
        assert_relative_eq!(ml_two(p(1.0, 1.0), 1.0, &pol()).unwrap(), E, max_relative = 1e-15);
        assert_relative_eq!(
            ml_two(p(1.0, 2.0), 1.0, &pol()).unwrap(),
            E - 1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            ml_two(p(2.0, 1.0), 1.0, &pol()).unwrap(),
            1.0_f64.cosh(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn prabhakar_examples() {
        let v = ml_prabhakar(PrabhakarParams::new(1.0, 1.0, 1.0).unwrap(), 1.0, &pol()).unwrap();
        assert_relative_eq!(v, E, max_relative = 1e-15);
        let a = ml_prabhakar(PrabhakarParams::new(0.7, 1.3, 1.0).unwrap(), -2.0, &pol()).unwrap();
        let b = ml_two(MLTwoParams::new(0.7, 1.3).unwrap(), -2.0, &pol()).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-14);
        // (2)_k / k! = k + 1, so the series is Σ (k+1) z^k / k! = e^z (1 + z)
        let v = ml_prabhakar(PrabhakarParams::new(1.0, 1.0, 2.0).unwrap(), 1.0, &pol()).unwrap();
        assert_relative_eq!(v, 2.0 * E, max_relative = 1e-15);
    }

    #[test]
    fn shukla_reduces_to_prabhakar() {
        let v = ml_shukla(ShuklaParams::new(1.0, 1.0, 1.0, 1.0).unwrap(), 1.0, &pol()).unwrap();
        assert_relative_eq!(v, E, max_relative = 1e-15);
        let s = ml_shukla(ShuklaParams::new(0.8, 1.7, 2.5, 1.0).unwrap(), -3.0, &pol()).unwrap();
        let p = ml_prabhakar(PrabhakarParams::new(0.8, 1.7, 2.5).unwrap(), -3.0, &pol()).unwrap();
        assert_eq!(s, p);
    }

    #[test]
    fn shukla_integer_q_matches_direct_series() {
        // direct sum of Γ(γ+qk)/(Γ(γ) k! Γ(αk+β)) z^k for (α,β,γ,q) = (1.5, 2, 2, 2), z = 0.5
        let direct: f64 = (0..40)
            .map(|k| {
                let k = k as f64;
                let w = crate::special::generalized_pochhammer(2.0, 2.0, k as u32).unwrap();
                w * 0.5_f64.powi(k as i32)
                    / crate::special::gamma(k + 1.0).unwrap()
                    / crate::special::gamma(1.5 * k + 2.0).unwrap()
            })
            .sum();
        let v = ml_shukla(ShuklaParams::new(1.5, 2.0, 2.0, 2.0).unwrap(), 0.5, &pol()).unwrap();
        assert_relative_eq!(v, direct, max_relative = 1e-13);
    }

    #[test]
    fn shukla_fractional_q() {
        // q = 1/2, γ = 1: Γ(1 + k/2) / k!
        let direct: f64 = (0..60)
            .map(|k| {
                let k = k as f64;
                crate::special::gamma(1.0 + 0.5 * k).unwrap() / crate::special::gamma(k + 1.0).unwrap()
                    * 1.3_f64.powf(k)
                    / crate::special::gamma(0.9 * k + 1.1).unwrap()
            })
            .sum();
        let v = ml_shukla(ShuklaParams::new(0.9, 1.1, 1.0, 0.5).unwrap(), 1.3, &pol()).unwrap();
        assert_relative_eq!(v, direct, max_relative = 1e-13);
    }

    #[test]
    fn shukla_divergent_region() {
        let p = ShuklaParams::new(0.5, 1.0, 1.5, 2.0).unwrap();
        assert!(matches!(ml_shukla(p, 0.5, &pol()), Err(Error::Domain(_))));
        assert_eq!(ml_shukla(p, 0.0, &pol()).unwrap(), 1.0);
        // α = q - 1 = 1: terms are C(2k, k) z^k, radius 1/4, sum 1/sqrt(1 - 4z)
        let p = ShuklaParams::new(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!(matches!(ml_shukla(p, 0.3, &pol()), Err(Error::Domain(_))));
        assert_relative_eq!(ml_shukla(p, 0.1, &pol()).unwrap(), 1.0 / 0.6_f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(ml_shukla(p, -0.2, &pol()).unwrap(), 1.0 / 1.8_f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(ml_one(0.0, 1.0, &pol()), Err(Error::Domain(_))));
        assert!(matches!(ml_one(-1.0, 1.0, &pol()), Err(Error::Domain(_))));
        assert!(matches!(
            ml_two(MLTwoParams { alpha: 1.0, beta: -0.5 }, 1.0, &pol()),
            Err(Error::Domain(_))
        ));
        assert!(PrabhakarParams::new(1.0, 1.0, 0.0).is_err());
        assert!(ShuklaParams::new(1.0, 1.0, 1.0, 1.5).is_err());
        assert!(ShuklaParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(ShuklaParams::new(1.0, 1.0, 1.0, 0.25).is_ok());
        assert!(ShuklaParams::new(1.0, 1.0, 1.0, 3.0).is_ok());
    }

    #[test]
    fn argument_guard() {
        let err = ml_one(1.0, 150.0, &pol()).unwrap_err();
        assert!(matches!(err, Error::ArgumentGuard { .. }));
        assert!(err.is_numeric_guard());
    }

    #[test]
    fn non_convergence() {
        let policy = SeriesPolicy {
            max_terms: 5,
            ..SeriesPolicy::default()
        };
        assert_eq!(
            ml_one(1.0, 10.0, &policy),
            Err(Error::NonConvergence { terms: 5 })
        );
    }

    #[test]
    fn cancellation_without_fallback_is_reported() {
        // E_1(-40) = e^-40 needs ~60 extra bits over the largest term
        let err = ml_one(1.0, -40.0, &SeriesPolicy::double_only()).unwrap_err();
        assert!(matches!(err, Error::PrecisionLoss { .. }), "{err:?}");
    }

    #[test]
    fn cancellation_with_fallback() {
        let v = ml_one(1.0, -40.0, &pol()).unwrap();
        assert_relative_eq!(v, (-40.0_f64).exp(), max_relative = 1e-13);
    }

    #[test]
    fn large_positive_argument_overflows_to_infinity() {
        let v = ml_one(0.1, 90.0, &pol()).unwrap();
        assert_eq!(v, f64::INFINITY);
    }

    #[test]
    fn two_parameter_at_gamma_pole_terms() {
        // β small: 1/Γ(β) is finite and no term hits a pole for β > 0
        let v = ml_two(MLTwoParams::new(1.0, 1e-9).unwrap(), 0.0, &pol()).unwrap();
        assert!(v.abs() < 1e-8);
    }
}
