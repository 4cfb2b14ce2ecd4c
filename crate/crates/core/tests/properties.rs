use proptest::prelude::*;

use wkde::bandwidth::{h_exp_ref, h_normal_ref, h_plugin};
use wkde::density::{survival_from_density, wkde_eval, Grid};
use wkde::metrics::l1_values;
use wkde::weights::km_weights;
use wkde::{Kernel, WeightedSample};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn spread_sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..50.0, 8..60).prop_filter("needs spread", |v| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo > 1.0
    })
}

proptest! {
    #[test]
    fn selectors_are_scale_equivariant(x in spread_sample(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = WeightedSample::uniform(x.clone()).unwrap();
        let b = WeightedSample::uniform(scaled.clone()).unwrap();
        prop_assert!(rel_close(h_normal_ref(&b).unwrap().h, c * h_normal_ref(&a).unwrap().h, 1e-9));
        prop_assert!(rel_close(h_exp_ref(&b).unwrap().h, c * h_exp_ref(&a).unwrap().h, 1e-9));
        prop_assert!(rel_close(h_plugin(&scaled).unwrap().h, c * h_plugin(&x).unwrap().h, 1e-9));
    }

    #[test]
    fn censored_exp_reference_is_scale_equivariant(
        x in spread_sample(),
        flags in prop::collection::vec(any::<bool>(), 60),
        c in 0.01f64..100.0,
    ) {
        let mut d: Vec<bool> = flags[..x.len()].to_vec();
        d[0] = true;
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = WeightedSample::censored_uniform(x, d.clone()).unwrap();
        let b = WeightedSample::censored_uniform(scaled, d).unwrap();
        let wa = km_weights(a.x(), &a.events()).unwrap();
        let wb = km_weights(b.x(), &b.events()).unwrap();
        let a = a.reweighted(wa).unwrap();
        let b = b.reweighted(wb).unwrap();
        prop_assert!(rel_close(h_exp_ref(&b).unwrap().h, c * h_exp_ref(&a).unwrap().h, 1e-9));
    }

    #[test]
    fn estimate_does_not_depend_on_input_order(x in spread_sample(), seed in any::<u64>()) {
        let mut shuffled = x.clone();
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let grid = Grid::linspace(-5.0, 55.0, 200).unwrap();
        let a = wkde_eval(&WeightedSample::uniform(x).unwrap(), 1.0, &grid, Kernel::Gaussian).unwrap();
        let b = wkde_eval(&WeightedSample::uniform(shuffled).unwrap(), 1.0, &grid, Kernel::Gaussian).unwrap();
        prop_assert_eq!(a.f, b.f);
    }

    #[test]
    fn estimate_integrates_to_total_weight(
        x in prop::collection::vec(-5.0f64..5.0, 1..30),
        scale in 0.1f64..3.0,
        h in 0.2f64..2.0,
    ) {
        let n = x.len();
        let s = WeightedSample::new(x, vec![scale / n as f64; n]).unwrap();
        let grid = Grid::linspace(-5.0 - 9.0 * h, 5.0 + 9.0 * h, 4001).unwrap();
        for k in [Kernel::Gaussian, Kernel::Epanechnikov] {
            let est = wkde_eval(&s, h, &grid, k).unwrap();
            prop_assert!((est.integral() - scale).abs() < 1e-4 * scale);
            prop_assert!(est.f.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn survival_is_monotone_and_bounded(x in prop::collection::vec(0.0f64..10.0, 2..30), h in 0.1f64..2.0) {
        let s = WeightedSample::uniform(x).unwrap();
        let grid = Grid::linspace(-2.0, 20.0, 300).unwrap();
        let curve = survival_from_density(&wkde_eval(&s, h, &grid, Kernel::Gaussian).unwrap());
        prop_assert!(curve.s.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(curve.s.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn l1_is_symmetric_and_bounded(c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, s1 in 0.3f64..2.0, s2 in 0.3f64..2.0) {
        let y: Vec<f64> = (0..2001).map(|k| -20.0 + 0.02 * k as f64).collect();
        let pdf = |c: f64, s: f64| y.iter().map(|t| (-0.5 * ((t - c) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())).collect::<Vec<f64>>();
        let a = pdf(c1, s1);
        let b = pdf(c2, s2);
        let ab = l1_values(&y, &a, &b).unwrap();
        prop_assert_eq!(ab, l1_values(&y, &b, &a).unwrap());
        prop_assert!(ab >= 0.0 && ab <= 2.0 + 1e-9);
    }

    #[test]
    fn l1_refinement_is_stable(c in -1.0f64..1.0, s in 0.5f64..2.0) {
        let run = |m: usize| {
            let y: Vec<f64> = (0..m).map(|k| -10.0 + 20.0 * k as f64 / (m - 1) as f64).collect();
            let f = |t: f64, c: f64, s: f64| (-0.5 * ((t - c) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            let a: Vec<f64> = y.iter().map(|t| f(*t, c, s)).collect();
            let b: Vec<f64> = y.iter().map(|t| f(*t, 0.0, 1.0)).collect();
            l1_values(&y, &a, &b).unwrap()
        };
        prop_assert!((run(1024) - run(2048)).abs() < 1e-3);
    }
}
