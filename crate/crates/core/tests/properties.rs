use proptest::prelude::*;

use smallball::distortion::tail_corrected_product;
use smallball::process::{demean_kernel, kernel, Family, ProcessSpec};
use smallball::quadrature::GaussLegendre;
use smallball::smallball::{quadform_cdf, quadform_mc, QuadFormDist};
use smallball::special::hurwitz_zeta;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::Wiener),
        Just(Family::BrownianBridge),
        (-0.9f64..3.0).prop_map(|alpha| Family::Xalpha { alpha }),
        (0.1f64..4.0).prop_map(|beta| Family::OU { beta }),
        (0.1f64..4.0).prop_map(|beta| Family::OUZero { beta }),
        (0.1f64..4.0).prop_map(|beta| Family::IntegratedOU { beta }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_symmetric(f in family(), d in any::<bool>(), t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let k = kernel(&ProcessSpec::new(f, d).unwrap()).unwrap();
        let (a, b) = (k.eval(t, s), k.eval(s, t));
        prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
    }

    #[test]
    fn demeaned_rows_integrate_to_zero(f in family(), t in 0.0f64..1.0) {
        let k = kernel(&ProcessSpec::new(f, true).unwrap()).unwrap();
        let row = GaussLegendre::standard().integrate_split(0.0, 1.0, &[t], |s| k.eval(t, s));
        let scale = k.eval(t, t).abs() + k.eval(0.0, 0.0).abs() + 1e-3;
        prop_assert!(row.abs() < 1e-12 * scale, "row {row}");
    }

    #[test]
    fn demeaning_is_idempotent(f in family(), t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let once = kernel(&ProcessSpec::new(f, true).unwrap()).unwrap();
        let twice = demean_kernel(&once);
        prop_assert_eq!(once.eval(t, s), twice.eval(t, s));
    }

    #[test]
    fn cdf_is_monotone(
        mut w in prop::collection::vec(0.01f64..1.0, 3..12),
        x1 in 0.05f64..4.0,
        dx in 0.01f64..2.0,
    ) {
        w.sort_by(|a, b| b.total_cmp(a));
        let d = QuadFormDist::from_weights(w, 0).unwrap();
        let lo = quadform_cdf(&d, x1).unwrap().p;
        let hi = quadform_cdf(&d, x1 + dx).unwrap().p;
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(hi >= lo - 1e-10);
    }

    #[test]
    fn hurwitz_shift_identity(s in 1.5f64..6.0, a in 0.2f64..50.0) {
        let lhs = hurwitz_zeta(s, a);
        let rhs = a.powf(-s) + hurwitz_zeta(s, a + 1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * lhs);
    }

    #[test]
    fn tail_model_recovers_two_term_products(a in -2.0f64..2.0, b in -2.0f64..2.0, kk in 50usize..400) {
        let r: Vec<f64> = (1..=kk)
            .map(|k| {
                let k = k as f64;
                (a / (k * k) + b / (k * k * k)).exp()
            })
            .collect();
        let est = tail_corrected_product(&r).unwrap();
        let exact_log: f64 = (1..2_000_000)
            .map(|k| {
                let k = k as f64;
                a / (k * k) + b / (k * k * k)
            })
            .sum::<f64>()
            + a / 2_000_000.0;
        prop_assert!((est.estimate.ln() - exact_log).abs() < 1e-7 * (1.0 + a.abs() + b.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn mc_is_reproducible(seed in any::<u64>(), x in 0.1f64..2.0) {
        let d = QuadFormDist::from_weights(vec![0.5, 0.3, 0.1], seed).unwrap();
        let a = quadform_mc(&d, x, 20_000).unwrap();
        let b = quadform_mc(&d, x, 20_000).unwrap();
        prop_assert_eq!(a.p.to_bits(), b.p.to_bits());
    }
}
