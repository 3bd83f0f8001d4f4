use ols_core::eval::{rmse, spearman};
use proptest::prelude::*;

fn series() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..40).prop_flat_map(|n| {
        (
            proptest::collection::vec(-100.0f64..100.0, n),
            proptest::collection::vec(-100.0f64..100.0, n),
        )
    })
}

proptest! {
    #[test]
    fn spearman_is_bounded_and_symmetric((a, b) in series()) {
        let r = spearman(&a, &b).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        prop_assert!((r - spearman(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn spearman_ignores_monotone_maps((a, b) in series()) {
        let r = spearman(&a, &b).unwrap();
        let a2: Vec<f64> = a.iter().map(|x| (x / 50.0).exp()).collect();
        let b2: Vec<f64> = b.iter().map(|x| -x).collect();
        prop_assert!((spearman(&a2, &b).unwrap() - r).abs() < 1e-9);
        prop_assert!((spearman(&a, &b2).unwrap() + r).abs() < 1e-9);
    }

    #[test]
    fn rmse_is_a_scaled_distance((a, b) in series()) {
        let d = rmse(&a, &b).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        prop_assert!((d - rmse(&b, &a).unwrap()).abs() < 1e-12);
        let shifted: Vec<f64> = a.iter().map(|x| x + 3.0).collect();
        prop_assert!((rmse(&shifted, &a).unwrap() - 3.0).abs() < 1e-9);
    }
}
