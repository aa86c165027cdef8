//! Finite-dimensional coefficient algebras `A = ⊕_v M_{d_v}`, their traces,
//! inner dynamics and KMS functionals.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;

use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix, HermitianEigen};

/// Block structure of `A = ⊕_v M_{d_v}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAlgebra {
    dims: Vec<usize>,
}

impl BlockAlgebra {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(KmsError::Invalid("algebra needs at least one block".into()));
        }
        if dims.contains(&0) {
            return Err(KmsError::Invalid("block dimensions must be >= 1".into()));
        }
        Ok(BlockAlgebra { dims })
    }

    /// `ℂ^n`, i.e. `n` one-dimensional blocks.
    pub fn commutative(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, v: usize) -> usize {
        self.dims[v]
    }

    /// Block dimensions as reals, the weights of the state normalisation
    /// `Σ t_v d_v = 1`.
    pub fn dim_weights(&self) -> Vec<f64> {
        self.dims.iter().map(|&d| d as f64).collect()
    }
}

/// An element of `A`, stored block by block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    blocks: Vec<CMatrix>,
}

impl AlgebraElement {
    pub fn new(algebra: &BlockAlgebra, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(KmsError::Shape(format!(
                "{} blocks given for an algebra with {}",
                blocks.len(),
                algebra.num_blocks()
            )));
        }
        for (v, b) in blocks.iter().enumerate() {
            let d = algebra.dim(v);
            if b.dim() != (d, d) {
                return Err(KmsError::Shape(format!("block {v} has shape {:?}, expected {d}x{d}", b.dim())));
            }
        }
        Ok(AlgebraElement { blocks })
    }

    pub(crate) fn from_blocks_unchecked(blocks: Vec<CMatrix>) -> Self {
        AlgebraElement { blocks }
    }

    pub fn zero(algebra: &BlockAlgebra) -> Self {
        AlgebraElement { blocks: algebra.dims().iter().map(|&d| linalg::zeros(d, d)).collect() }
    }

    pub fn identity(algebra: &BlockAlgebra) -> Self {
        AlgebraElement { blocks: algebra.dims().iter().map(|&d| linalg::identity(d)).collect() }
    }

    /// Central projection onto block `v`.
    pub fn block_unit(algebra: &BlockAlgebra, v: usize) -> Self {
        let mut a = Self::zero(algebra);
        a.blocks[v] = linalg::identity(algebra.dim(v));
        a
    }

    /// Matrix unit `E_{ij}` in block `v`.
    pub fn matrix_unit(algebra: &BlockAlgebra, v: usize, i: usize, j: usize) -> Self {
        let mut e = Self::zero(algebra);
        e.blocks[v][[i, j]] = C64::new(1.0, 0.0);
        e
    }

    /// All matrix units, block by block.
    pub fn matrix_units(algebra: &BlockAlgebra) -> Vec<Self> {
        let mut out = Vec::new();
        for (v, &d) in algebra.dims().iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    out.push(Self::matrix_unit(algebra, v, i, j));
                }
            }
        }
        out
    }

    /// Scalar function on the blocks, `a_v = f_v · 1`.
    pub fn central(algebra: &BlockAlgebra, values: &[C64]) -> Self {
        AlgebraElement {
            blocks: algebra.dims().iter().zip(values).map(|(&d, &x)| linalg::identity(d).mapv(|z| z * x)).collect(),
        }
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, v: usize) -> &CMatrix {
        &self.blocks[v]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn check_shape(&self, algebra: &BlockAlgebra) -> Result<()> {
        if self.blocks.len() != algebra.num_blocks()
            || self.blocks.iter().zip(algebra.dims()).any(|(b, &d)| b.dim() != (d, d))
        {
            return Err(KmsError::Shape("algebra element does not match the block algebra".into()));
        }
        Ok(())
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.dim() == b.dim())
    }

    pub fn adjoint(&self) -> Self {
        AlgebraElement { blocks: self.blocks.iter().map(linalg::dagger).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        AlgebraElement { blocks: self.blocks.iter().map(|b| b.mapv(|z| z * s)).collect() }
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| linalg::is_hermitian(b, tol))
    }

    /// Positive semidefinite in every block (Hermitian, min eigenvalue >= -tol).
    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_self_adjoint(tol) && self.blocks.iter().all(|b| linalg::min_eigenvalue(b) >= -tol)
    }

    /// C*-norm: the largest blockwise operator norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::operator_norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max)
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert!(self.same_shape(rhs), "algebra element shape mismatch");
        AlgebraElement { blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert!(self.same_shape(rhs), "algebra element shape mismatch");
        AlgebraElement { blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert!(self.same_shape(rhs), "algebra element shape mismatch");
        AlgebraElement { blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a.dot(b)).collect() }
    }
}

/// A trace `τ(a) = Σ_v t_v tr(a_v)` with unnormalised matrix traces.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceVector {
    coeffs: Vec<f64>,
}

impl TraceVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(x) = coeffs.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(KmsError::Invalid(format!("trace coefficients must be finite and >= 0, got {x}")));
        }
        Ok(TraceVector { coeffs })
    }

    /// Clamps tiny negative rounding noise to zero.
    pub(crate) fn from_raw(coeffs: Vec<f64>) -> Self {
        TraceVector { coeffs: coeffs.into_iter().map(|x| if x < 0.0 { 0.0 } else { x }).collect() }
    }

    pub fn zero(n: usize) -> Self {
        TraceVector { coeffs: vec![0.0; n] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `τ(1) = Σ t_v d_v`.
    pub fn mass(&self, algebra: &BlockAlgebra) -> f64 {
        self.coeffs.iter().zip(algebra.dims()).map(|(t, &d)| t * d as f64).sum()
    }

    pub fn is_state(&self, algebra: &BlockAlgebra, tol: f64) -> bool {
        (self.mass(algebra) - 1.0).abs() <= tol
    }

    /// Rescales to a state; `None` for the zero trace.
    pub fn normalized(&self, algebra: &BlockAlgebra) -> Option<Self> {
        let m = self.mass(algebra);
        (m > 0.0).then(|| TraceVector { coeffs: self.coeffs.iter().map(|t| t / m).collect() })
    }

    pub fn scaled(&self, s: f64) -> Self {
        TraceVector::from_raw(self.coeffs.iter().map(|t| t * s).collect())
    }
}

pub fn evaluate_trace(tau: &TraceVector, a: &AlgebraElement) -> Result<C64> {
    if tau.len() != a.num_blocks() {
        return Err(KmsError::Shape(format!(
            "trace has {} coefficients, element {} blocks",
            tau.len(),
            a.num_blocks()
        )));
    }
    Ok(tau.coeffs.iter().zip(a.blocks()).map(|(&t, b)| linalg::trace(b) * t).sum())
}

/// Block-preserving inner dynamics `σ_z(a)_v = e^{izH_v} a_v e^{-izH_v}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffDynamics {
    hamiltonians: Vec<CMatrix>,
}

impl CoeffDynamics {
    pub fn new(algebra: &BlockAlgebra, hamiltonians: Vec<CMatrix>) -> Result<Self> {
        AlgebraElement::new(algebra, hamiltonians.clone())?;
        for (v, h) in hamiltonians.iter().enumerate() {
            if !linalg::is_hermitian(h, 1e-10) {
                return Err(KmsError::NotHermitian(format!("coefficient Hamiltonian of block {v}")));
            }
        }
        let hamiltonians = hamiltonians.iter().map(|h| (h + &linalg::dagger(h)).mapv(|z| z * 0.5)).collect();
        Ok(CoeffDynamics { hamiltonians })
    }

    pub fn trivial(algebra: &BlockAlgebra) -> Self {
        CoeffDynamics { hamiltonians: algebra.dims().iter().map(|&d| linalg::zeros(d, d)).collect() }
    }

    pub fn hamiltonians(&self) -> &[CMatrix] {
        &self.hamiltonians
    }

    pub fn hamiltonian(&self, v: usize) -> &CMatrix {
        &self.hamiltonians[v]
    }

    pub fn is_trivial(&self) -> bool {
        self.hamiltonians.iter().all(|h| linalg::max_abs(h) == 0.0)
    }

    /// `e^{izH_v}` for every block.
    pub fn unitaries(&self, z: C64) -> Vec<CMatrix> {
        self.hamiltonians.iter().map(|h| linalg::expm_hermitian(h, C64::i() * z)).collect()
    }

    /// Densities `e^{-βH_v}`.
    pub fn gibbs_densities(&self, beta: f64) -> Vec<CMatrix> {
        self.hamiltonians.iter().map(|h| linalg::expm_hermitian(h, C64::new(-beta, 0.0))).collect()
    }

    /// Normalisation weights `tr e^{-βH_v}` of the KMS-functional cone.
    pub fn partition_weights(&self, beta: f64) -> Vec<f64> {
        self.gibbs_densities(beta).iter().map(|g| linalg::trace(g).re).collect()
    }
}

pub fn sigma_apply(dynamics: &CoeffDynamics, z: C64, a: &AlgebraElement) -> Result<AlgebraElement> {
    if dynamics.hamiltonians.len() != a.num_blocks()
        || dynamics.hamiltonians.iter().zip(a.blocks()).any(|(h, b)| h.dim() != b.dim())
    {
        return Err(KmsError::Shape("dynamics and element blocks differ".into()));
    }
    let forward = dynamics.unitaries(z);
    let backward = dynamics.unitaries(-z);
    Ok(AlgebraElement::from_blocks_unchecked(
        a.blocks().iter().zip(forward.iter().zip(&backward)).map(|(b, (f, g))| f.dot(b).dot(g)).collect(),
    ))
}

/// `φ(a) = Σ_v c_v tr(a_v e^{-βH_v})`, the general `(σ,β)`-KMS functional
/// on a finite-dimensional algebra with inner dynamics.
#[derive(Clone, Debug)]
pub struct KmsFunctional {
    beta: f64,
    dynamics: CoeffDynamics,
    coeffs: Vec<f64>,
    densities: Vec<CMatrix>,
}

impl KmsFunctional {
    pub fn new(beta: f64, dynamics: CoeffDynamics, coeffs: Vec<f64>) -> Result<Self> {
        if !beta.is_finite() {
            return Err(KmsError::Invalid("KMS functionals need a finite β".into()));
        }
        if coeffs.len() != dynamics.hamiltonians.len() {
            return Err(KmsError::Shape("one coefficient per block required".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(KmsError::Invalid("KMS functional coefficients must be >= 0".into()));
        }
        let densities = dynamics.gibbs_densities(beta);
        Ok(KmsFunctional { beta, dynamics, coeffs, densities })
    }

    /// The trace `τ` viewed as a KMS functional for trivial dynamics.
    pub fn from_trace(algebra: &BlockAlgebra, tau: &TraceVector, beta: f64) -> Result<Self> {
        Self::new(beta, CoeffDynamics::trivial(algebra), tau.coeffs().to_vec())
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dynamics(&self) -> &CoeffDynamics {
        &self.dynamics
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn densities(&self) -> &[CMatrix] {
        &self.densities
    }

    /// `φ(1)`.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().zip(&self.densities).map(|(c, g)| c * linalg::trace(g).re).sum()
    }

    pub fn eval(&self, a: &AlgebraElement) -> Result<C64> {
        if a.num_blocks() != self.coeffs.len()
            || a.blocks().iter().zip(&self.densities).any(|(b, g)| b.dim() != g.dim())
        {
            return Err(KmsError::Shape("element does not match the functional".into()));
        }
        Ok(a.blocks()
            .iter()
            .zip(&self.densities)
            .zip(&self.coeffs)
            .map(|((b, g), &c)| linalg::trace(&b.dot(g)) * c)
            .sum())
    }

    /// The density `ρ` with `φ = tr(ρ ·)`.
    pub fn density(&self) -> AlgebraElement {
        AlgebraElement::from_blocks_unchecked(
            self.densities.iter().zip(&self.coeffs).map(|(g, &c)| g.mapv(|z| z * c)).collect(),
        )
    }
}

pub fn kms_functional_eval(phi: &KmsFunctional, a: &AlgebraElement) -> Result<C64> {
    phi.eval(a)
}

/// Modular group of `Φ = tr(ρ ·)`: `σ^Φ_z(y) = ρ^{iz} y ρ^{-iz}`.
pub fn modular_apply(density: &AlgebraElement, z: C64, y: &AlgebraElement) -> Result<AlgebraElement> {
    check_faithful(density)?;
    let blocks = density
        .blocks()
        .iter()
        .zip(y.blocks())
        .map(|(rho, yb)| {
            let eig = HermitianEigen::new(rho);
            let fwd = eig.apply(|l| (C64::i() * z * l.ln()).exp());
            let bwd = eig.apply(|l| (-C64::i() * z * l.ln()).exp());
            fwd.dot(yb).dot(&bwd)
        })
        .collect();
    Ok(AlgebraElement::from_blocks_unchecked(blocks))
}

fn check_faithful(density: &AlgebraElement) -> Result<()> {
    for (v, rho) in density.blocks().iter().enumerate() {
        if !linalg::is_hermitian(rho, 1e-10) {
            return Err(KmsError::NotHermitian(format!("density block {v}")));
        }
        let scale = linalg::operator_norm(rho).max(f64::MIN_POSITIVE);
        if linalg::min_eigenvalue(rho) <= 1e-14 * scale {
            return Err(KmsError::Singular(format!("density block {v} is not strictly positive")));
        }
    }
    Ok(())
}

/// `(x, y)_Φ = Φ(x σ^Φ_{-i/2}(y)) = Σ_v tr(ρ_v^{1/2} x_v ρ_v^{1/2} y_v)`.
pub fn kms_pairing(density: &AlgebraElement, x: &AlgebraElement, y: &AlgebraElement) -> Result<C64> {
    if x.num_blocks() != density.num_blocks() || y.num_blocks() != density.num_blocks() {
        return Err(KmsError::Shape("pairing arguments do not match the density".into()));
    }
    check_faithful(density)?;
    Ok(density
        .blocks()
        .iter()
        .zip(x.blocks().iter().zip(y.blocks()))
        .map(|(rho, (xb, yb))| {
            let half = linalg::sqrt_psd(rho);
            linalg::trace(&half.dot(xb).dot(&half).dot(yb))
        })
        .sum())
}

/// Largest `|φ(xy) − φ(y σ_{iβ}(x))|` over the given pairs.
pub fn verify_kms_functional(phi: &KmsFunctional, pairs: &[(AlgebraElement, AlgebraElement)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let z = C64::new(0.0, phi.beta);
    for (x, y) in pairs {
        let lhs = phi.eval(&(x * y))?;
        let sx = sigma_apply(&phi.dynamics, z, x)?;
        let rhs = phi.eval(&(y * &sx))?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}
