//! Property tests over randomized inputs: derivative correctness, batch
//! invariances, wrapping, and interpolation reproduction.

use proptest::prelude::*;

use nsl_core::characteristics::{self, BoundaryKind, Domain};
use nsl_core::classical;
use nsl_core::network::{self, ActivationKind, NetworkSpec, ParamVector};
use nsl_core::numerics::{DenseMatrix, RngStream};

fn activation_strategy() -> impl Strategy<Value = ActivationKind> {
    prop_oneof![
        Just(ActivationKind::Tanh),
        Just(ActivationKind::Sin),
        Just(ActivationKind::RegularizedHat),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn jacobians_match_finite_differences(
        seed in 0u64..1000,
        width1 in 2usize..6,
        width2 in 2usize..5,
        act in activation_strategy(),
        x0 in -1.0f64..1.0,
        x1 in -1.0f64..1.0,
    ) {
        let spec = NetworkSpec::new(2, vec![width1, width2], act).unwrap();
        let theta = network::init_params(&spec, &mut RngStream::new(seed, 0));
        let batch = DenseMatrix::from_vec(1, 2, vec![x0, x1]).unwrap();
        let jac = network::param_jacobian(&spec, &theta, &batch).unwrap();
        let grad = network::input_gradient(&spec, &theta, &batch).unwrap();
        let h = 1e-6;
        for p in 0..spec.dof_count() {
            let mut tp = theta.clone();
            tp.0[p] += h;
            let mut tm = theta.clone();
            tm.0[p] -= h;
            let fd = (network::forward(&spec, &tp, &batch).unwrap()[0]
                - network::forward(&spec, &tm, &batch).unwrap()[0]) / (2.0 * h);
            let an = jac.get(0, p);
            let scale = fd.abs().max(an.abs()).max(1.0);
            prop_assert!((fd - an).abs() / scale < 1e-5, "param {}: {} vs {}", p, fd, an);
        }
        for c in 0..2 {
            let mut xp = batch.clone();
            xp.set(0, c, xp.get(0, c) + h);
            let mut xm = batch.clone();
            xm.set(0, c, xm.get(0, c) - h);
            let fd = (network::forward(&spec, &theta, &xp).unwrap()[0]
                - network::forward(&spec, &theta, &xm).unwrap()[0]) / (2.0 * h);
            let an = grad.get(0, c);
            let scale = fd.abs().max(an.abs()).max(1.0);
            prop_assert!((fd - an).abs() / scale < 1e-5);
        }
    }

    #[test]
    fn forward_is_permutation_invariant(
        seed in 0u64..1000,
        order in Just(()),
    ) {
        let _ = order;
        let spec = NetworkSpec::new(2, vec![5, 4], ActivationKind::Tanh).unwrap();
        let theta = network::init_params(&spec, &mut RngStream::new(seed, 0));
        let mut rng = RngStream::new(seed, 1);
        let k = 16;
        let data = rng.uniform(2 * k, -1.0, 1.0).unwrap();
        let batch = DenseMatrix::from_vec(k, 2, data.clone()).unwrap();
        // reversed batch
        let mut reversed = Vec::with_capacity(2 * k);
        for i in (0..k).rev() {
            reversed.extend_from_slice(&data[2 * i..2 * i + 2]);
        }
        let rev_batch = DenseMatrix::from_vec(k, 2, reversed).unwrap();
        let out = network::forward(&spec, &theta, &batch).unwrap();
        let out_rev = network::forward(&spec, &theta, &rev_batch).unwrap();
        for i in 0..k {
            prop_assert_eq!(out[i], out_rev[k - 1 - i]);
        }
        let jac = network::param_jacobian(&spec, &theta, &batch).unwrap();
        let jac_rev = network::param_jacobian(&spec, &theta, &rev_batch).unwrap();
        for i in 0..k {
            prop_assert_eq!(jac.row(i), jac_rev.row(k - 1 - i));
        }
    }

    #[test]
    fn wrap_periodic_is_idempotent_and_in_range(
        x0 in -10.0f64..10.0,
        x1 in -10.0f64..10.0,
        lower in -2.0f64..2.0,
        extent in 0.5f64..4.0,
    ) {
        let domain = Domain::aligned_box(vec![lower, lower], vec![extent, extent], BoundaryKind::Periodic);
        let once = characteristics::wrap_periodic(&domain, &[x0, x1]);
        let twice = characteristics::wrap_periodic(&domain, &once);
        prop_assert_eq!(&once, &twice);
        for v in &once {
            prop_assert!(*v >= lower && *v < lower + extent);
        }
    }

    #[test]
    fn lagrange_reproduces_random_cubics(
        c0 in -2.0f64..2.0,
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        c3 in -2.0f64..2.0,
        s in 0.0f64..3.0,
    ) {
        let poly = |x: f64| c0 + c1 * x + c2 * x * x + c3 * x * x * x;
        let v = classical::lagrange3_interp([poly(0.0), poly(1.0), poly(2.0), poly(3.0)], s);
        prop_assert!((v - poly(s)).abs() < 1e-10 * (1.0 + poly(s).abs()));
    }

    #[test]
    fn smooth_activations_stay_finite(
        act in activation_strategy(),
        x in -50.0f64..50.0,
    ) {
        prop_assert!(act.eval(x).is_finite());
        prop_assert!(act.deriv(x).is_finite());
    }

    #[test]
    fn forward_finite_for_finite_inputs(
        seed in 0u64..1000,
        scale in 0.1f64..5.0,
    ) {
        let spec = NetworkSpec::new(3, vec![6], ActivationKind::RegularizedHat).unwrap();
        let mut theta = network::init_params(&spec, &mut RngStream::new(seed, 0));
        theta.0.iter_mut().for_each(|v| *v *= scale);
        let theta = ParamVector(theta.0);
        let batch = DenseMatrix::from_vec(2, 3, vec![scale, -scale, 0.0, 10.0, -10.0, 5.0]).unwrap();
        let out = network::forward(&spec, &theta, &batch).unwrap();
        prop_assert!(out.iter().all(|v| v.is_finite()));
    }
}
