use approx::assert_relative_eq;
use proptest::prelude::*;

use mlphillips::dataio::{bin_average, DataSet, EconRecord};
use mlphillips::models::{eval_ml_model, eval_phillips_original, sse, MLModelParams, PhillipsOriginalParams};
use mlphillips::optimizer::{multi_start, nelder_mead, SimplexConfig};
use mlphillips::special::*;

fn policy() -> SeriesPolicy {
    SeriesPolicy::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_reduction(z in -20.0f64..20.0) {
        let v = ml_two(MLTwoParams::new(1.0, 1.0).unwrap(), z, &policy()).unwrap();
        prop_assert!((v - z.exp()).abs() <= 1e-11 * z.exp().max(1.0), "{v} vs {}", z.exp());
    }

    #[test]
    fn beta_one_is_ml_one(alpha in 0.5f64..3.0, z in -10.0f64..10.0) {
        let a = ml_two(MLTwoParams::new(alpha, 1.0).unwrap(), z, &policy());
        let b = ml_one(alpha, z, &policy());
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn gamma_one_reduction(alpha in 0.5f64..3.0, beta in 0.5f64..3.0, z in -10.0f64..10.0) {
        let two = ml_two(MLTwoParams::new(alpha, beta).unwrap(), z, &policy()).unwrap();
        let three = ml_prabhakar(PrabhakarParams::new(alpha, beta, 1.0).unwrap(), z, &policy()).unwrap();
        prop_assert!((three - two).abs() <= 1e-12 * (1.0 + two.abs()), "{three} vs {two}");
    }

    #[test]
    fn q_one_reduction(alpha in 0.5f64..3.0, beta in 0.5f64..3.0, gamma in 0.2f64..3.0, z in -10.0f64..10.0) {
        let three = ml_prabhakar(PrabhakarParams::new(alpha, beta, gamma).unwrap(), z, &policy()).unwrap();
        let four = ml_shukla(ShuklaParams::new(alpha, beta, gamma, 1.0).unwrap(), z, &policy()).unwrap();
        prop_assert!((four - three).abs() <= 1e-12 * three.abs().max(f64::MIN_POSITIVE), "{four} vs {three}");
    }

    #[test]
    fn trig_identities(z in 0.0f64..5.0) {
        let c = ml_two(MLTwoParams::new(2.0, 1.0).unwrap(), -z * z, &policy()).unwrap();
        prop_assert!((c - z.cos()).abs() <= 1e-10);
        let s = z * ml_two(MLTwoParams::new(2.0, 2.0).unwrap(), -z * z, &policy()).unwrap();
        prop_assert!((s - z.sin()).abs() <= 1e-10);
    }

    #[test]
    fn hyperbolic_identities(z in 0.01f64..5.0) {
        let c = ml_two(MLTwoParams::new(2.0, 1.0).unwrap(), z * z, &policy()).unwrap();
        prop_assert!((c - z.cosh()).abs() <= 1e-12 * z.cosh());
        let s = ml_two(MLTwoParams::new(2.0, 2.0).unwrap(), z * z, &policy()).unwrap();
        prop_assert!((s - z.sinh() / z).abs() <= 1e-12 * z.sinh() / z);
    }

    #[test]
    fn pochhammer_recurrence(gamma in -5.0f64..5.0, k in 0u32..40) {
        prop_assert_eq!(pochhammer(gamma, k + 1), pochhammer(gamma, k) * (gamma + f64::from(k)));
    }

    #[test]
    fn gamma_functional_equation(x in 0.5f64..20.0) {
        let g1 = gamma(x + 1.0).unwrap();
        prop_assert!((g1 - x * gamma(x).unwrap()).abs() <= 1e-12 * g1);
    }

    #[test]
    fn ml_model_contains_exponential(x in 0.01f64..15.0, a in -2.0f64..0.5, c in -20.0f64..20.0) {
        let p = MLModelParams { alpha: 1.0, beta: 1.0, a, c };
        let want = c * (a * x).exp();
        let got = eval_ml_model(&p, x, &policy()).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()));
    }

    #[test]
    fn phillips_log_form(x in 0.1f64..20.0) {
        let p = PhillipsOriginalParams::default();
        let y = eval_phillips_original(&p, x).unwrap();
        prop_assert!(((y + p.a).ln() - (p.b.ln() + p.c * x.ln())).abs() <= 1e-12);
    }

    #[test]
    fn sse_permutation_and_sign(pts in prop::collection::vec((0.1f64..20.0, -5.0f64..15.0), 1..30), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let model = |x: f64| Ok(10.0 / x);
        let s = sse(model, &pts).unwrap();
        prop_assert!(s >= 0.0);
        let mut shuffled = pts.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let t = sse(model, &shuffled).unwrap();
        prop_assert!((s - t).abs() <= 1e-12 * s.max(1e-300));
        let exact: Vec<(f64, f64)> = pts.iter().map(|&(x, _)| (x, 10.0 / x)).collect();
        prop_assert_eq!(sse(model, &exact).unwrap(), 0.0);
    }

    #[test]
    fn binning_partitions(us in prop::collection::vec(0.1f64..25.0, 1..60), width in 0.2f64..3.0) {
        let records: Vec<EconRecord> = us.iter().enumerate()
            .map(|(i, &u)| EconRecord { year: 1900 + i as i32, unemployment: u, inflation: u.sin() })
            .collect();
        let ds = DataSet::new("p", records).unwrap();
        let bins = bin_average(&ds, width).unwrap();
        prop_assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), us.len());
        let weighted: f64 = bins.iter().map(|b| b.mean_unemployment * b.count as f64).sum::<f64>() / us.len() as f64;
        let overall = us.iter().sum::<f64>() / us.len() as f64;
        prop_assert!((weighted - overall).abs() <= 1e-12 * overall);
        for &u in &us {
            let n = bins.iter().filter(|b| b.level_low <= u && u < b.level_high).count();
            prop_assert_eq!(n, 1);
        }
    }

    #[test]
    fn quadratics_converge(
        x0 in prop::collection::vec(-5.0f64..5.0, 1..=4),
        diag in prop::collection::vec(0.5f64..10.0, 4),
        centre in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let n = x0.len();
        let f = |x: &[f64]| (0..n).map(|i| diag[i] * (x[i] - centre[i]).powi(2)).sum::<f64>();
        let r = nelder_mead(f, &x0, &SimplexConfig::default()).unwrap();
        prop_assert!(r.best_value <= 1e-10, "{}", r.best_value);
    }

    #[test]
    fn nelder_mead_is_deterministic(x0 in prop::collection::vec(-3.0f64..3.0, 2)) {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let a = nelder_mead(rosen, &x0, &SimplexConfig::default()).unwrap();
        let b = nelder_mead(rosen, &x0, &SimplexConfig::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn multi_start_order_independent(starts in prop::collection::vec(prop::collection::vec(-4.0f64..4.0, 2), 1..6), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        // several local minima
        let f = |x: &[f64]| (x[0] * x[0] - 1.0).powi(2) + (x[1] - 0.5 * x[0]).powi(2) + 0.1 * x[0];
        let cfg = SimplexConfig::default();
        let a = multi_start(f, &starts, &cfg).unwrap();
        let mut order: Vec<usize> = (0..starts.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let permuted: Vec<Vec<f64>> = order.iter().map(|&i| starts[i].clone()).collect();
        let b = multi_start(f, &permuted, &cfg).unwrap();
        prop_assert_eq!(a.best_value, b.best_value);
        // each winner is the earliest start, in its own order, that attains the minimum
        let singles: Vec<f64> = starts.iter().map(|s| nelder_mead(f, s, &cfg).unwrap().best_value).collect();
        let first = |idx: &[usize]| idx.iter().position(|&i| singles[i] == a.best_value).unwrap();
        let identity: Vec<usize> = (0..starts.len()).collect();
        prop_assert_eq!(a.start_index, first(&identity));
        prop_assert_eq!(b.start_index, first(&order));
    }
}

#[test]
fn gamma_spot_values() {
    assert_relative_eq!(gamma(10.0).unwrap(), 362_880.0, max_relative = 1e-15);
}
