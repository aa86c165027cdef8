//! Fixtures shared by the benchmarks.

use kmslab_core::catalog::{catalog_instance, random_instance};
use kmslab_core::{Correspondence, Generator};

/// A catalog entry by name.
pub fn named(name: &str) -> (Correspondence, Generator) {
    let inst = catalog_instance(name).expect("known catalog instance");
    (inst.correspondence, inst.generator)
}

/// Random instance with up to `blocks` blocks of size at most 2.
pub fn random(seed: u64, blocks: usize) -> (Correspondence, Generator) {
    let inst = random_instance(seed, blocks, 2, 2).expect("valid random instance");
    (inst.correspondence, inst.generator)
}
