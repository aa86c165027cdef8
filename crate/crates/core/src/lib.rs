//! KMS equilibrium states for quasi-free dynamics on Toeplitz–Pimsner and
//! Cuntz–Pimsner algebras of correspondences over finite-dimensional
//! C*-algebras.

pub mod algebra;
pub mod catalog;
pub mod correspondence;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod lp;
pub mod powers;
pub mod states;
pub mod toeplitz;
pub mod transfer;
pub mod weights;

pub use algebra::{AlgebraElement, BlockAlgebra, CoeffDynamics, KmsFunctional, TraceVector};
pub use catalog::{ExelLacaInstance, Instance, RandomInstance};
pub use correspondence::{BimoduleOperator, Correspondence, ModuleOperator, ModuleVector, TensorProduct};
pub use error::{KmsError, Result};
pub use fock::{FockOperator, FockState, FockTruncation, TailBound};
pub use linalg::CMatrix;
pub use num_complex::Complex64 as C64;
pub use states::{
    Beta, KmsState, QuasiFreeSpec, QuasiFreeState, StateEvaluator, StateType, TailRule, WoldDecomposition,
};
pub use toeplitz::{Letter, MonomialWord, ToeplitzElement};
pub use transfer::{Generator, PerronRoot, TransferMatrix};
pub use weights::{InducedWeight, TwistedIsometryGroup};
