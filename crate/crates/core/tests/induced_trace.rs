mod common;

use common::*;
use kmslab_core::algebra::evaluate_trace;
use kmslab_core::correspondence::{
    induced_trace, induced_trace_functional, inner_product, tensor, tensor_operator, theta,
};
use kmslab_core::linalg;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn traciality(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = small_instance(seed).correspondence;
        let tau = trace(&mut r, x.num_blocks());
        let (a, b) = (element(&mut r, &x), element(&mut r, &x));
        let lhs = evaluate_trace(&tau, &(&a * &b)).unwrap();
        let rhs = evaluate_trace(&tau, &(&b * &a)).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * a.norm() * b.norm());
    }

    #[test]
    fn theta_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = small_instance(seed).correspondence;
        let tau = trace(&mut r, x.num_blocks());
        let (xi, eta) = (vector(&mut r, &x), vector(&mut r, &x));
        let lhs = induced_trace(&tau, &theta(&xi, &eta).unwrap()).unwrap();
        let rhs = evaluate_trace(&tau, &inner_product(&eta, &xi).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm().max(1.0));
    }

    #[test]
    fn trace_property(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = small_instance(seed).correspondence;
        let tau = trace(&mut r, x.num_blocks());
        let (s, t) = (operator(&mut r, &x), operator(&mut r, &x));
        let lhs = induced_trace(&tau, &s.compose(&t)).unwrap();
        let rhs = induced_trace(&tau, &t.compose(&s)).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * s.norm() * t.norm());
    }

    #[test]
    fn nested_frames_increase_to_the_trace(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = small_instance(seed).correspondence;
        let tau = trace(&mut r, x.num_blocks());
        let t = positive_operator(&mut r, &x);
        let frame = x.frame();
        let mut partial = 0.0;
        for xi in &frame {
            let step = evaluate_trace(&tau, &inner_product(xi, &t.apply(xi)).unwrap()).unwrap();
            prop_assert!(step.re >= -1e-14 && step.im.abs() < 1e-12);
            partial += step.re;
        }
        let full = induced_trace(&tau, &t).unwrap();
        prop_assert!((partial - full.re).abs() <= 1e-11 * full.re.max(1.0));
    }

    #[test]
    fn induction_in_stages(seed in any::<u64>()) {
        let mut r = rng(seed ^ 0x5eed);
        let x = small_instance(seed).correspondence;
        let y = same_algebra_module(&mut r, &x);
        let tau = trace(&mut r, x.num_blocks());
        let s = positive_operator(&mut r, &x);
        let t = positive_bimodule(&mut r, &y);
        let tp = tensor(&x, &y).unwrap();
        let lhs = induced_trace(&tau, &tensor_operator(&tp, &x, &y, &s, &t).unwrap()).unwrap();
        let tau_t = induced_trace_functional(&tau, &t, &y).unwrap();
        let rhs = induced_trace(&tau_t, &s).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm().max(1.0));
    }

    #[test]
    fn tensor_is_associative(seed in any::<u64>()) {
        let x = small_instance(seed).correspondence;
        let xx = tensor(&x, &x).unwrap();
        let left = tensor(xx.correspondence(), &x).unwrap();
        let right = tensor(&x, xx.correspondence()).unwrap();
        prop_assert_eq!(left.correspondence().mult(), right.correspondence().mult());
    }
}

fn same_algebra_module(
    r: &mut rand_chacha::ChaCha8Rng,
    x: &kmslab_core::Correspondence,
) -> kmslab_core::Correspondence {
    let n = x.num_blocks();
    let mut mult: Vec<Vec<usize>> = (0..n).map(|_| (0..n).map(|_| r.gen_range(0..=2)).collect()).collect();
    for (w, row) in mult.iter_mut().enumerate() {
        if row.iter().all(|&m| m == 0) {
            row[w] = 1;
        }
    }
    kmslab_core::Correspondence::new(x.algebra().clone(), mult).unwrap()
}

#[test]
fn frame_partial_sums_are_monotone() {
    let mut r = rng(5);
    let x = small_instance(11).correspondence;
    let tau = trace(&mut r, x.num_blocks());
    let t = positive_operator(&mut r, &x);
    let mut last = 0.0;
    for xi in x.frame() {
        let step = evaluate_trace(&tau, &inner_product(&xi, &t.apply(&xi)).unwrap()).unwrap().re;
        assert!(last + step >= last - 1e-15);
        last += step;
    }
    let full = induced_trace(&tau, &t).unwrap().re;
    assert!((last - full).abs() < 1e-12 * full.max(1.0));
    assert!(linalg::max_abs(&t.blocks()[0]) > 0.0);
}
