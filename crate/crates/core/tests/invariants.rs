use autoconv_core::certify::{exact_c, RationalHeights};
use autoconv_core::gradient::grad_objective;
use autoconv_core::refine::{trim_zeros, upsample};
use autoconv_core::{autoconvolve, objective_c, StepFunction};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Nonnegative heights with at least one clearly positive entry.
fn heights(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![3 => 0.0f64..2.0, 1 => Just(0.0)], 1..max_len).prop_map(
        |mut v| {
            v[0] += 0.25;
            v
        },
    )
}

fn sf(h: &[f64]) -> StepFunction {
    StepFunction::new(h.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn holder_bound(h in heights(60)) {
        prop_assert!(objective_c(&sf(&h)).unwrap() <= 1.0);
    }

    #[test]
    fn scale_invariance(h in heights(60), lambda in prop::sample::select(vec![1e-3, 1.0, 1e3])) {
        let scaled: Vec<f64> = h.iter().map(|x| x * lambda).collect();
        prop_assert!(rel(objective_c(&sf(&h)).unwrap(), objective_c(&sf(&scaled)).unwrap()) <= 1e-12);
    }

    #[test]
    fn reflection_invariance(h in heights(60)) {
        let f = sf(&h);
        prop_assert!(rel(objective_c(&f).unwrap(), objective_c(&f.reversed()).unwrap()) <= 1e-12);
    }

    #[test]
    fn zero_padding_invariance(h in heights(60), left in 0usize..8, right in 0usize..8) {
        let mut padded = vec![0.0; left];
        padded.extend(&h);
        padded.extend(vec![0.0; right]);
        prop_assert!(rel(objective_c(&sf(&h)).unwrap(), objective_c(&sf(&padded)).unwrap()) <= 1e-12);
    }

    #[test]
    fn l1_identity(h in heights(80)) {
        let total: f64 = h.iter().sum();
        let conv_sum: f64 = autoconvolve(&sf(&h)).values.iter().sum();
        prop_assert!(rel(conv_sum, total * total) <= 1e-12);
    }

    #[test]
    fn palindromes_convolve_to_palindromes(half in heights(30)) {
        let mut h = half.clone();
        h.extend(half.iter().rev());
        let v = autoconvolve(&sf(&h)).values;
        let m = v.len();
        for k in 0..m {
            prop_assert!((v[k] - v[m - 1 - k]).abs() <= 1e-14 * v[k].abs().max(1.0));
        }
    }

    #[test]
    fn float_matches_exact(h in heights(120)) {
        let c = objective_c(&sf(&h)).unwrap();
        let exact = exact_c(&RationalHeights::from_f64(&h).unwrap()).unwrap().0.to_f64().unwrap();
        prop_assert!(rel(c, exact) <= 1e-10);
    }

    #[test]
    fn euler_orthogonality(h in proptest::collection::vec(0.05f64..1.5, 2..60)) {
        let g = grad_objective(&sf(&h)).unwrap().gradient;
        let dot: f64 = h.iter().zip(&g).map(|(a, b)| a * b).sum();
        let scale: f64 = h.iter().zip(&g).map(|(a, b)| (a * b).abs()).sum();
        prop_assert!(dot.abs() <= 1e-9 * scale);
    }

    #[test]
    fn gradient_reflection_equivariance(h in proptest::collection::vec(0.05f64..1.5, 2..40)) {
        let f = sf(&h);
        let a = grad_objective(&f).unwrap();
        let b = grad_objective(&f.reversed()).unwrap();
        prop_assume!(!a.argmax_tied && !b.argmax_tied);
        let scale = a.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        for (x, y) in a.gradient.iter().zip(b.gradient.iter().rev()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn upsample_preserves_range(h in proptest::collection::vec(0.0f64..3.0, 2..50), factor in 2usize..5) {
        let up = upsample(&sf(&h), factor).unwrap();
        let lo = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = h.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(up.len(), factor * h.len());
        prop_assert!(up.heights().iter().all(|&v| lo <= v && v <= hi));
    }

    #[test]
    fn trim_preserves_objective(h in heights(60), left in 0usize..6, right in 0usize..6) {
        let mut padded = vec![0.0; left];
        padded.extend(&h);
        padded.extend(vec![0.0; right]);
        let f = sf(&padded);
        let t = trim_zeros(&f).unwrap();
        prop_assert!(t.heights().first() != Some(&0.0) && t.heights().last() != Some(&0.0));
        prop_assert!(rel(objective_c(&f).unwrap(), objective_c(&t).unwrap()) <= 1e-12);
    }

    #[test]
    fn exact_scale_invariance(h in proptest::collection::vec(0u64..50, 1..30), num in 1i64..1000, den in 1i64..1000) {
        prop_assume!(h.iter().any(|&v| v > 0));
        let base = RationalHeights::from_integers(&h);
        let factor = num_rational::BigRational::new(num.into(), den.into());
        prop_assert_eq!(exact_c(&base).unwrap().0, exact_c(&base.scaled(&factor)).unwrap().0);
    }

    #[test]
    fn exact_holder_and_reflection(h in proptest::collection::vec(0u64..50, 1..30)) {
        prop_assume!(h.iter().any(|&v| v > 0));
        let base = RationalHeights::from_integers(&h);
        let c = exact_c(&base).unwrap().0;
        prop_assert!(c <= num_rational::BigRational::from_integer(1.into()));
        prop_assert_eq!(c, exact_c(&base.reversed()).unwrap().0);
    }
}
