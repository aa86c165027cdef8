mod common;

use common::*;
use kmslab_core::algebra::evaluate_trace;
use kmslab_core::catalog::cuntz;
use kmslab_core::correspondence::{induced_trace, left_action, tensor};
use kmslab_core::transfer::{apply_f, heat_kernel, spectral_radius, transfer_matrix};
use kmslab_core::{AlgebraElement, TraceVector};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_f_matches_definition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = small_instance(seed);
        let x = &inst.correspondence;
        let beta = r.gen_range(0.0..2.0);
        let tau = trace(&mut r, x.num_blocks());
        let z = transfer_matrix(x, &inst.generator, beta).unwrap();
        let ft = apply_f(&tau, &z).unwrap();
        let hk = heat_kernel(&inst.generator, beta).embed(x);
        for a in AlgebraElement::matrix_units(x.algebra()) {
            let lhs = evaluate_trace(&ft, &a).unwrap();
            let rhs = induced_trace(&tau, &left_action(x, &a).unwrap().compose(&hk)).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm().max(1.0));
        }
    }

    #[test]
    fn composition_law(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = small_instance(seed);
        let x = &inst.correspondence;
        let beta = r.gen_range(0.0..2.0);
        let tp = tensor(x, x).unwrap();
        let d2 = inst.generator.tensor(&tp, x, x, &inst.generator);
        let z = transfer_matrix(x, &inst.generator, beta).unwrap();
        let z2 = transfer_matrix(tp.correspondence(), &d2, beta).unwrap();
        let tau = trace(&mut r, x.num_blocks());
        let twice = apply_f(&apply_f(&tau, &z).unwrap(), &z).unwrap();
        let once = apply_f(&tau, &z2).unwrap();
        for (a, b) in twice.coeffs().iter().zip(once.coeffs()) {
            prop_assert!((a - b).abs() <= 1e-11 * a.abs().max(1.0));
        }
    }

    #[test]
    fn monotone_in_beta(seed in any::<u64>()) {
        let inst = small_instance(seed);
        let x = &inst.correspondence;
        let mut last_r = f64::INFINITY;
        let mut last_z: Option<ndarray::Array2<f64>> = None;
        for k in 0..12 {
            let beta = 0.25 * k as f64;
            let z = transfer_matrix(x, &inst.generator, beta).unwrap();
            let rad = spectral_radius(&z).radius;
            prop_assert!(rad <= last_r * (1.0 + 1e-12));
            if let Some(prev) = &last_z {
                prop_assert!(z.matrix().iter().zip(prev.iter()).all(|(a, b)| a <= b));
            }
            last_r = rad;
            last_z = Some(z.matrix().clone());
        }
    }
}

#[test]
fn cooling_bound() {
    let (x, d) = cuntz(2, 1.0).unwrap();
    let beta0 = 2f64.ln();
    let beta = beta0 + 0.3;
    let t = TraceVector::new(vec![1.0]).unwrap();
    let dims = x.algebra().dim_weights();
    let mass = |t: &TraceVector| t.coeffs().iter().zip(&dims).map(|(a, b)| a * b).sum::<f64>();
    let z0 = transfer_matrix(&x, &d, beta0).unwrap();
    assert!(apply_f(&t, &z0).unwrap().coeffs()[0] <= t.coeffs()[0] + 1e-15);
    let z = transfer_matrix(&x, &d, beta).unwrap();
    let mut cur = t.clone();
    for n in 0..=20 {
        assert!(mass(&cur) <= (-0.3 * n as f64).exp() * mass(&t) * (1.0 + 1e-12));
        cur = apply_f(&cur, &z).unwrap();
    }
}

#[test]
fn cooling_bound_random() {
    for seed in 0..40 {
        let mut r = rng(seed);
        let inst = small_instance(seed);
        let x = &inst.correspondence;
        let c = inst.generator.min_energy().unwrap();
        let Some(bc) = kmslab_core::transfer::critical_beta(x, &inst.generator, 1e-12).unwrap() else { continue };
        let beta0 = bc + r.gen_range(0.0..0.5);
        let z0 = transfer_matrix(x, &inst.generator, beta0).unwrap();
        let Some(t) = kmslab_core::transfer::subinvariant_solver(&z0, x.algebra()) else { continue };
        let beta = beta0 + r.gen_range(0.1..1.0);
        let z = transfer_matrix(x, &inst.generator, beta).unwrap();
        let dims = x.algebra().dim_weights();
        let mass = |t: &TraceVector| t.coeffs().iter().zip(&dims).map(|(a, b)| a * b).sum::<f64>();
        let mut cur = t.clone();
        for n in 0..=20 {
            let bound = (-(n as f64) * (beta - beta0) * c).exp() * mass(&t);
            assert!(mass(&cur) <= bound * (1.0 + 1e-9) + 1e-12, "seed {seed} n {n}");
            cur = apply_f(&cur, &z).unwrap();
        }
    }
}
