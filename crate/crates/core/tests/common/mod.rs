#![allow(dead_code)]

use kmslab_core::catalog::random_instance;
use kmslab_core::correspondence::{BimoduleOperator, Correspondence, ModuleOperator, ModuleVector};
use kmslab_core::linalg::{self, CMatrix};
use kmslab_core::toeplitz::MonomialWord;
use kmslab_core::{AlgebraElement, RandomInstance, TraceVector, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_instance(seed: u64) -> RandomInstance {
    random_instance(seed, 3, 2, 2).unwrap()
}

pub fn matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
    let mut m = linalg::zeros(r, c);
    m.mapv_inplace(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m
}

pub fn positive(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let a = matrix(rng, n, n);
    a.dot(&linalg::dagger(&a))
}

pub fn vector(rng: &mut ChaCha8Rng, x: &Correspondence) -> ModuleVector {
    let blocks = (0..x.num_blocks()).map(|w| matrix(rng, x.row_dim(w), x.algebra().dim(w))).collect();
    ModuleVector::new(x, blocks).unwrap()
}

pub fn element(rng: &mut ChaCha8Rng, x: &Correspondence) -> AlgebraElement {
    let blocks = x.algebra().dims().iter().map(|&d| matrix(rng, d, d)).collect();
    AlgebraElement::new(x.algebra(), blocks).unwrap()
}

pub fn operator(rng: &mut ChaCha8Rng, x: &Correspondence) -> ModuleOperator {
    let blocks = (0..x.num_blocks()).map(|w| matrix(rng, x.row_dim(w), x.row_dim(w))).collect();
    ModuleOperator::new(x, blocks).unwrap()
}

pub fn positive_operator(rng: &mut ChaCha8Rng, x: &Correspondence) -> ModuleOperator {
    let blocks = (0..x.num_blocks()).map(|w| positive(rng, x.row_dim(w))).collect();
    ModuleOperator::new(x, blocks).unwrap()
}

pub fn positive_bimodule(rng: &mut ChaCha8Rng, x: &Correspondence) -> BimoduleOperator {
    BimoduleOperator::from_fn(x, |_, _, m| positive(rng, m))
}

pub fn trace(rng: &mut ChaCha8Rng, n: usize) -> TraceVector {
    TraceVector::new((0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

pub fn word(rng: &mut ChaCha8Rng, x: &Correspondence, max: usize) -> MonomialWord {
    let m = rng.gen_range(0..=max);
    let n = rng.gen_range(0..=max);
    MonomialWord::new((0..m).map(|_| vector(rng, x)).collect(), (0..n).map(|_| vector(rng, x)).collect())
}

/// Word with total degree at most `max`.
pub fn word_total(rng: &mut ChaCha8Rng, x: &Correspondence, max: usize) -> MonomialWord {
    let total = rng.gen_range(0..=max);
    let m = rng.gen_range(0..=total);
    MonomialWord::new((0..m).map(|_| vector(rng, x)).collect(), (0..total - m).map(|_| vector(rng, x)).collect())
}
