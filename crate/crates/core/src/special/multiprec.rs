//! Multiprecision re-summation of Mittag-Leffler series.
//!
//! Used only when the double-precision pass reports that rounding error
//! dominates the result. The series is summed at a working precision chosen
//! from the ratio between the largest term and the sum, with Γ evaluated by
//! Stirling's series after an upward shift of the argument.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_bigint::BigUint;

use super::mittag_leffler::{DoublePass, MlSeries, Weight};
use super::SeriesPolicy;
use crate::error::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;
const LN2: f64 = std::f64::consts::LN_2;
/// Extra bits carried on top of the requested precision.
const GUARD_BITS: usize = 64;
/// Accepted relative error bound of the multiprecision sum.
const TARGET_LN: f64 = -36.841_361_487_904_734; // ln(1e-16)

/// Precision estimate (bits) for resolving a sum of magnitude `value` from
/// terms as large as exp(`max_ln_term`).
pub(super) fn bits_for(max_ln_term: f64, value: f64) -> u64 {
    let ratio = if value != 0.0 && value.is_finite() {
        (max_ln_term - value.abs().ln()) / LN2
    } else {
        max_ln_term / LN2 + 64.0
    };
    (53.0 + 32.0 + ratio.max(0.0)).ceil() as u64
}

fn initial_bits(pass: &DoublePass) -> usize {
    if pass.overflowed {
        return bits_for(pass.max_ln_term, 1.0) as usize;
    }
    let v = pass.value.abs();
    let reliable = v > 0.0 && pass.err_bound < 0.5 * v;
    let guess = if reliable { v } else { pass.err_bound * 1e-6 };
    let lost = (pass.err_bound / (f64::EPSILON * guess)).log2().max(0.0);
    (53.0 + 48.0 + lost).ceil() as usize
}

pub(super) fn evaluate(series: &MlSeries, policy: &SeriesPolicy, pass: &DoublePass) -> Result<f64> {
    let cap = policy.max_precision_bits as usize;
    let mut bits = initial_bits(pass);
    let mut tried_cap = false;
    loop {
        if bits > cap {
            if tried_cap {
                return Err(Error::PrecisionLoss {
                    bits_needed: bits as u64,
                    limit: policy.max_precision_bits,
                });
            }
            bits = cap;
        }
        tried_cap |= bits == cap;
        let r = sum_series(series, policy, bits)?;
        if r.value == 0.0 && r.ln_abs_sum == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if r.ln_err <= TARGET_LN + r.ln_abs_value {
            return Ok(r.value);
        }
        let needed = 53.0 + 32.0 + (r.ln_err - TARGET_LN - r.ln_abs_value) / LN2 + bits as f64;
        bits = (needed.ceil() as usize).max(bits + bits / 2);
    }
}

struct MpSum {
    value: f64,
    ln_abs_value: f64,
    ln_abs_sum: f64,
    /// ln of the absolute rounding-error bound
    ln_err: f64,
}

fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Natural log of |x|, from the binary exponent and leading mantissa word.
fn ln_abs(x: &BigFloat) -> f64 {
    match x.as_raw_parts() {
        Some((m, _, _, e, _)) if !x.is_zero() => {
            let top = *m.last().expect("non-empty mantissa") as f64 / 2f64.powi(64);
            top.ln() + f64::from(e) * LN2
        }
        _ => f64::NEG_INFINITY,
    }
}

/// Round a multiprecision value to the nearest-ish f64 (truncates below the
/// second mantissa word).
pub(super) fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    let Some((m, _, sign, e, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    if x.is_zero() {
        return 0.0;
    }
    let n = m.len();
    let hi = m[n - 1] as f64;
    let lo = if n > 1 { m[n - 2] as f64 / 2f64.powi(64) } else { 0.0 };
    let mant = (hi + lo) / 2f64.powi(64);
    // split the scaling so intermediate powers stay representable
    let e = i64::from(e);
    let half = (e / 2) as i32;
    let rest = (e - e / 2) as i32;
    let v = mant * 2f64.powi(half) * 2f64.powi(rest);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// Stirling coefficients B_{2n} / (2n (2n-1)) at a fixed working precision.
struct StirlingTable {
    bits: usize,
    x_min: f64,
    coeffs: Vec<BigFloat>,
    half_ln_2pi: BigFloat,
}

/// Tangent numbers T_1..T_n (Brent-Harvey recurrence), shared across precisions.
fn tangent_numbers(n: usize) -> Vec<BigUint> {
    static CACHE: OnceLock<Mutex<Vec<BigUint>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut t = cache.lock().expect("tangent cache poisoned");
    if t.len() < n {
        let mut v: Vec<BigUint> = vec![BigUint::from(0u32); n + 1];
        v[1] = BigUint::from(1u32);
        for k in 2..=n {
            v[k] = &v[k - 1] * BigUint::from((k - 1) as u64);
        }
        for k in 2..=n {
            for j in k..=n {
                v[j] = &v[j - 1] * BigUint::from((j - k) as u64) + &v[j] * BigUint::from((j - k + 2) as u64);
            }
        }
        *t = v.into_iter().skip(1).collect();
    }
    t[..n].to_vec()
}

impl StirlingTable {
    fn get(bits: usize) -> Arc<StirlingTable> {
        static TABLES: OnceLock<Mutex<HashMap<usize, Arc<StirlingTable>>>> = OnceLock::new();
        let tables = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(t) = tables.lock().expect("table cache poisoned").get(&bits) {
            return t.clone();
        }
        let table = Arc::new(Self::build(bits));
        tables
            .lock()
            .expect("table cache poisoned")
            .insert(bits, table.clone());
        table
    }

    fn build(bits: usize) -> Self {
        let x_min = (0.5 * bits as f64).max(16.0);
        // number of terms until |b_n| x_min^{1-2n} < 2^-bits, with
        // |B_2n| ≈ 2 (2n)! / (2π)^{2n}
        let target = -(bits as f64) * LN2;
        let mut n_terms = 1;
        loop {
            let n = n_terms as f64;
            let ln_b = LN2 + super::gamma::ln_gamma(2.0 * n + 1.0).unwrap_or(f64::MAX)
                - 2.0 * n * (2.0 * std::f64::consts::PI).ln()
                - (2.0 * n * (2.0 * n - 1.0)).ln();
            if ln_b - (2.0 * n - 1.0) * x_min.ln() < target {
                break;
            }
            n_terms += 1;
        }
        let mut cc = Consts::new().expect("astro-float constants");
        let tangents = tangent_numbers(n_terms);
        let coeffs = tangents
            .iter()
            .enumerate()
            .map(|(i, t)| {
                // b_n = (-1)^{n-1} T_n / ((2n-1) 4^n (4^n - 1))
                let n = i + 1;
                let four_n = BigUint::from(1u32) << (2 * n);
                let den = (&four_n - BigUint::from(1u32)) * &four_n * BigUint::from((2 * n - 1) as u64);
                let num = BigFloat::parse(&t.to_string(), Radix::Dec, bits, RM, &mut cc);
                let den = BigFloat::parse(&den.to_string(), Radix::Dec, bits, RM, &mut cc);
                let b = num.div(&den, bits, RM);
                if n % 2 == 0 {
                    b.neg()
                } else {
                    b
                }
            })
            .collect();
        let two_pi = cc.pi(bits, RM).mul(&BigFloat::from_u8(2, bits), bits, RM);
        let half_ln_2pi = two_pi.ln(bits, RM, &mut cc).div(&BigFloat::from_u8(2, bits), bits, RM);
        Self {
            bits,
            x_min,
            coeffs,
            half_ln_2pi,
        }
    }

    /// Returns (L, M) with Γ(x) = exp(L) / M, for x > 0.
    fn ln_gamma_parts(&self, x: &BigFloat, x_f64: f64, cc: &mut Consts) -> (BigFloat, BigFloat) {
        let p = self.bits;
        let mut shift = BigFloat::from_u8(1, p);
        let mut y = x.clone();
        if x_f64 < self.x_min {
            let m = (self.x_min - x_f64).ceil() as u64;
            let one = BigFloat::from_u8(1, p);
            for _ in 0..m {
                shift = shift.mul(&y, p, RM);
                y = y.add(&one, p, RM);
            }
        }
        let ln_y = y.ln(p, RM, cc);
        let half = BigFloat::from_f64(0.5, p);
        let mut l = y
            .sub(&half, p, RM)
            .mul(&ln_y, p, RM)
            .sub(&y, p, RM)
            .add(&self.half_ln_2pi, p, RM);
        let inv = BigFloat::from_u8(1, p).div(&y, p, RM);
        let inv2 = inv.mul(&inv, p, RM);
        let mut pw = inv;
        let floor_exp = -(p as i64);
        for b in &self.coeffs {
            let t = b.mul(&pw, p, RM);
            if t.is_zero() || i64::from(t.exponent().unwrap_or(0)) < floor_exp {
                break;
            }
            l = l.add(&t, p, RM);
            pw = pw.mul(&inv2, p, RM);
        }
        (l, shift)
    }

    /// ln Γ(x) for x > 0.
    fn ln_gamma(&self, x: &BigFloat, x_f64: f64, cc: &mut Consts) -> BigFloat {
        let (l, m) = self.ln_gamma_parts(x, x_f64, cc);
        l.sub(&m.ln(self.bits, RM, cc), self.bits, RM)
    }
}

fn sum_series(s: &MlSeries, policy: &SeriesPolicy, bits: usize) -> Result<MpSum> {
    let p = bits + GUARD_BITS;
    let table = StirlingTable::get(p.div_ceil(64) * 64);
    let p = table.bits;
    let mut cc = Consts::new().expect("astro-float constants");

    let alpha = BigFloat::from_f64(s.alpha, p);
    let beta = BigFloat::from_f64(s.beta, p);
    let ln_abs_z = BigFloat::from_f64(s.z.abs(), p).ln(p, RM, &mut cc);
    let ln_abs_z_f64 = s.z.abs().ln();
    let one = BigFloat::from_u8(1, p);

    // weight state for recurrences
    let mut weight = BigFloat::from_u8(1, p);
    let (frac_gamma, ln_gamma_of_gamma) = match s.weight {
        Weight::Fractional { gamma, .. } => {
            if !(gamma > 0.0) {
                return Err(Error::PrecisionLoss {
                    bits_needed: bits as u64,
                    limit: policy.max_precision_bits,
                });
            }
            let g = BigFloat::from_f64(gamma, p);
            let lg = table.ln_gamma(&g, gamma, &mut cc);
            (Some(g), Some(lg))
        }
        _ => (None, None),
    };

    let mut sum = BigFloat::new(p);
    let mut ln_abs_sum = f64::NEG_INFINITY;
    let mut ln_err_sum = f64::NEG_INFINITY;
    let mut prev_small = false;
    let small_margin = 72i64;

    for k in 0..policy.max_terms {
        let kf = k as f64;
        let kb = BigFloat::from_u64(k as u64, p);
        let x = alpha.mul(&kb, p, RM).add(&beta, p, RM);
        let x_f64 = s.alpha.mul_add(kf, s.beta);
        let (l, m) = table.ln_gamma_parts(&x, x_f64, &mut cc);
        let mut exponent = ln_abs_z.mul(&kb, p, RM).sub(&l, p, RM);
        let mut mag_factor = m;
        match s.weight {
            Weight::Unit => {}
            Weight::Rising { .. } | Weight::IntegerStep { .. } => {
                mag_factor = mag_factor.mul(&weight, p, RM);
            }
            Weight::Fractional { q, .. } => {
                if k > 0 {
                    let g = frac_gamma.as_ref().expect("fractional gamma");
                    let top = g.add(&BigFloat::from_f64(q, p).mul(&kb, p, RM), p, RM);
                    let top_f64 = match s.weight {
                        Weight::Fractional { gamma, q } => gamma + q * kf,
                        _ => unreachable!(),
                    };
                    let k1 = kb.add(&one, p, RM);
                    let ln_w = table
                        .ln_gamma(&top, top_f64, &mut cc)
                        .sub(ln_gamma_of_gamma.as_ref().expect("ln Γ(γ)"), p, RM)
                        .sub(&table.ln_gamma(&k1, kf + 1.0, &mut cc), p, RM);
                    exponent = exponent.add(&ln_w, p, RM);
                }
            }
        }
        let mut term = exponent.exp(p, RM, &mut cc).mul(&mag_factor, p, RM);
        if s.z < 0.0 && k % 2 == 1 {
            term = term.neg();
        }
        sum = sum.add(&term, p, RM);

        let ln_t = ln_abs(&term);
        ln_abs_sum = ln_add(ln_abs_sum, ln_t);
        let cost = (16.0 + 4.0 * kf + (kf * ln_abs_z_f64).abs() + x_f64 * x_f64.max(1.0).ln()).ln();
        ln_err_sum = ln_add(ln_err_sum, ln_t + cost);

        let small = term.is_zero()
            || (!sum.is_zero()
                && i64::from(term.exponent().unwrap_or(0))
                    < i64::from(sum.exponent().unwrap_or(0)) - small_margin);
        if k >= 2 && small && prev_small {
            let value = to_f64(&sum);
            let ln_err = ln_err_sum - (p as f64) * LN2;
            return Ok(MpSum {
                value,
                ln_abs_value: ln_abs(&sum),
                ln_abs_sum,
                ln_err,
            });
        }
        prev_small = small;

        match s.weight {
            Weight::Rising { gamma } => {
                let f = BigFloat::from_f64(gamma, p).add(&kb, p, RM);
                weight = weight.mul(&f, p, RM).div(&kb.add(&one, p, RM), p, RM);
            }
            Weight::IntegerStep { gamma, q } => {
                let base = BigFloat::from_f64(gamma, p)
                    .add(&BigFloat::from_u64(u64::from(q), p).mul(&kb, p, RM), p, RM);
                for j in 0..q {
                    let f = base.add(&BigFloat::from_u32(j, p), p, RM);
                    weight = weight.mul(&f, p, RM);
                }
                weight = weight.div(&kb.add(&one, p, RM), p, RM);
            }
            _ => {}
        }
    }
    Err(Error::NonConvergence {
        terms: policy.max_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_round_trips() {
        for &v in &[1.0, -2.5, 1e-300, 3.7e250, std::f64::consts::PI, -1e-5] {
            let b = BigFloat::from_f64(v, 256);
            assert_eq!(to_f64(&b), v);
        }
        assert_eq!(to_f64(&BigFloat::new(128)), 0.0);
    }

    #[test]
    fn tangent_numbers_small() {
        let t: Vec<u64> = tangent_numbers(5)
            .iter()
            .map(|x| x.to_u64_digits().first().copied().unwrap_or(0))
            .collect();
        assert_eq!(t, vec![1, 2, 16, 272, 7936]);
    }

    #[test]
    fn multiprecision_ln_gamma() {
        let table = StirlingTable::get(256);
        let mut cc = Consts::new().unwrap();
        for &x in &[0.5, 1.0, 2.5, 10.0, 150.25] {
            let b = BigFloat::from_f64(x, 256);
            let lg = to_f64(&table.ln_gamma(&b, x, &mut cc));
            let expected = super::super::gamma::ln_gamma(x).unwrap();
            assert!((lg - expected).abs() <= 1e-13 * expected.abs().max(1.0), "x={x}: {lg} vs {expected}");
        }
        // ln Γ(1/2) = ln √π to full double precision
        let b = BigFloat::from_f64(0.5, 256);
        let lg = to_f64(&table.ln_gamma(&b, 0.5, &mut cc));
        assert!((lg - 0.572_364_942_924_700_1).abs() < 1e-16);
    }
}
