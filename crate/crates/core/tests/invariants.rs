// SPDX-License-Identifier: Apache-2.0

use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use sdmor::discretize::build_switched_model;
use sdmor::generate::{random_grid, random_stable_plant};
use sdmor::matops::{expm, max_abs, zoh_integral};
use sdmor::simulate::{bfr_outputs, simulate_ls, trial_rng, InputSequence, SwitchingSequence};
use sdmor::stability::stability_preserving_left_inverse;
use sdmor::{Matrix, SampledDataSystem};

fn trace(values: &[f64]) -> Vec<DVector<f64>> {
    values.iter().map(|&v| DVector::from_element(1, v)).collect()
}

fn traces() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..30).prop_flat_map(|len| {
        (
            prop::collection::vec(-10.0f64..10.0, len),
            prop::collection::vec(-10.0f64..10.0, len),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bfr_is_scale_and_shift_invariant((y, ybar) in traces(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
        prop_assume!(y.iter().any(|v| (v - y[0]).abs() > 1e-3));
        let base = bfr_outputs(&trace(&y), &trace(&ybar)).unwrap();
        let map = |v: &[f64]| v.iter().map(|x| scale * x + shift).collect::<Vec<_>>();
        let moved = bfr_outputs(&trace(&map(&y)), &trace(&map(&ybar))).unwrap();
        prop_assert!((base - moved).abs() <= 1e-8, "{base} vs {moved}");
        prop_assert!((0.0..=100.0).contains(&base));
    }

    #[test]
    fn bfr_of_identical_traces_is_100(y in prop::collection::vec(-10.0f64..10.0, 2..40)) {
        prop_assume!(y.iter().any(|v| *v != y[0]));
        prop_assert_eq!(bfr_outputs(&trace(&y), &trace(&y)).unwrap(), 100.0);
    }

    #[test]
    fn simulation_is_linear_in_input(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut g = trial_rng(seed, 0);
        let n = g.random_range(1..=6);
        let m = g.random_range(1..=2);
        let d = g.random_range(1..=3);
        let plant = random_stable_plant(&mut g, n, m, 2);
        let grid = random_grid(&mut g, d, 0.05, 2.0).unwrap();
        let ls = build_switched_model(&SampledDataSystem::new(plant, grid).unwrap()).unwrap();
        let len = 25;
        let sigma = SwitchingSequence((0..len).map(|_| g.random_range(0..d)).collect());
        let mut input = || InputSequence((0..len).map(|_| DVector::from_fn(m, |_, _| g.sample(StandardNormal))).collect());
        let (u1, u2) = (input(), input());
        let mix = InputSequence(u1.0.iter().zip(&u2.0).map(|(a, b)| a * alpha + b * beta).collect());
        let y1 = simulate_ls(&ls, &u1, &sigma, None).unwrap().outputs;
        let y2 = simulate_ls(&ls, &u2, &sigma, None).unwrap().outputs;
        let y = simulate_ls(&ls, &mix, &sigma, None).unwrap().outputs;
        for k in 0..len {
            let expected = &y1[k] * alpha + &y2[k] * beta;
            prop_assert!((&y[k] - &expected).norm() <= 1e-10 * (1.0 + expected.norm()));
        }
    }

    #[test]
    fn weighted_inverse_is_a_left_inverse(seed in any::<u64>()) {
        let mut g = trial_rng(seed, 1);
        let n = g.random_range(2..=15);
        let r = g.random_range(1..=n);
        let v = Matrix::from_fn(n, r, |_, _| g.sample(StandardNormal));
        let l = Matrix::from_fn(n, n, |_, _| g.sample(StandardNormal));
        let p = &l * l.transpose() + Matrix::identity(n, n);
        let w = stability_preserving_left_inverse(&v, &p).unwrap();
        prop_assert!(max_abs(&(&w * &v - Matrix::identity(r, r))) <= 1e-9);
    }

    #[test]
    fn exponential_identity_holds(seed in any::<u64>(), h in 0.01f64..5.0) {
        let mut g = trial_rng(seed, 2);
        let n = g.random_range(1..=12);
        let a = Matrix::from_fn(n, n, |_, _| g.sample::<f64, _>(StandardNormal) / (n as f64).sqrt());
        let phi = expm(&a, h).unwrap();
        let theta = zoh_integral(&a, h).unwrap();
        let resid = max_abs(&(&phi - (Matrix::identity(n, n) + &a * theta)));
        prop_assert!(resid <= 1e-10 * (1.0 + max_abs(&phi)));
    }
}
