//! Truncated Fock module `A ⊕ X ⊕ … ⊕ X^{⊗N}` with operators stored by
//! level pair.

use std::collections::BTreeMap;

use ndarray::{s, Array2};
use num_complex::Complex64 as C64;

use crate::algebra::{AlgebraElement, TraceVector};
use crate::correspondence::{elementary_tensor, Correspondence, ModuleVector};
use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix};
use crate::powers::{TensorPowers, DEFAULT_DIMENSION_CAP};
use crate::states::gamma_apply;
use crate::toeplitz::ToeplitzElement;
use crate::transfer::{self, Generator};
use crate::weights::TwistedIsometryGroup;

const ENVELOPE_GAP: f64 = 1e-7;
const ENVELOPE_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct FockTruncation {
    powers: TensorPowers,
}

pub fn build_fock(x: &Correspondence, n: usize) -> Result<FockTruncation> {
    build_fock_with_cap(x, n, DEFAULT_DIMENSION_CAP)
}

pub fn build_fock_with_cap(x: &Correspondence, n: usize, cap: usize) -> Result<FockTruncation> {
    Ok(FockTruncation { powers: TensorPowers::with_cap(x, n, cap)? })
}

impl FockTruncation {
    pub fn truncation(&self) -> usize {
        self.powers.max_level()
    }

    pub fn powers(&self) -> &TensorPowers {
        &self.powers
    }

    pub fn correspondence(&self) -> &Correspondence {
        self.powers.base()
    }

    pub fn num_blocks(&self) -> usize {
        self.correspondence().num_blocks()
    }

    /// Row dimension of level `n` in block `u`.
    pub fn level_dim(&self, n: usize, u: usize) -> usize {
        self.powers.level(n).row_dim(u)
    }

    /// `Σ_u k^{(n)}_u`.
    pub fn level_total(&self, n: usize) -> usize {
        self.powers.level(n).row_dims().iter().sum()
    }

    /// `K_u = Σ_n k^{(n)}_u`.
    pub fn block_sizes(&self) -> Vec<usize> {
        (0..self.num_blocks()).map(|u| (0..=self.truncation()).map(|n| self.level_dim(n, u)).sum()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.block_sizes().iter().sum()
    }

    fn zero_blocks(&self, m: usize, n: usize) -> Vec<CMatrix> {
        (0..self.num_blocks()).map(|u| linalg::zeros(self.level_dim(m, u), self.level_dim(n, u))).collect()
    }
}

/// Right-module operator on the truncation; component `(m, n)` maps level
/// `n` into level `m`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockOperator {
    comps: BTreeMap<(usize, usize), Vec<CMatrix>>,
}

impl FockOperator {
    pub fn zero() -> Self {
        FockOperator::default()
    }

    pub fn identity(f: &FockTruncation) -> Self {
        let mut out = FockOperator::zero();
        for n in 0..=f.truncation() {
            let blocks = (0..f.num_blocks()).map(|u| linalg::identity(f.level_dim(n, u))).collect();
            out.comps.insert((n, n), blocks);
        }
        out
    }

    pub fn from_component(f: &FockTruncation, m: usize, n: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        let top = f.truncation();
        if m > top || n > top {
            return Err(KmsError::Shape(format!("levels ({m},{n}) exceed the truncation {top}")));
        }
        if blocks.len() != f.num_blocks() {
            return Err(KmsError::Shape("one block per coefficient block required".into()));
        }
        for (u, b) in blocks.iter().enumerate() {
            if b.dim() != (f.level_dim(m, u), f.level_dim(n, u)) {
                return Err(KmsError::Shape(format!("block {u} of component ({m},{n}) has the wrong size")));
            }
        }
        let mut out = FockOperator::zero();
        out.comps.insert((m, n), blocks);
        Ok(out)
    }

    pub fn component(&self, m: usize, n: usize) -> Option<&[CMatrix]> {
        self.comps.get(&(m, n)).map(|v| v.as_slice())
    }

    pub fn components(&self) -> impl Iterator<Item = ((usize, usize), &[CMatrix])> {
        self.comps.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.comps {
            match out.comps.get_mut(k) {
                Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a += b),
                None => {
                    out.comps.insert(*k, v.clone());
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        FockOperator {
            comps: self.comps.iter().map(|(k, v)| (*k, v.iter().map(|b| b.mapv(|z| z * s)).collect())).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        FockOperator {
            comps: self.comps.iter().map(|(&(m, n), v)| ((n, m), v.iter().map(linalg::dagger).collect())).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = FockOperator::zero();
        for (&(m, l), a) in &self.comps {
            for (&(l2, n), b) in other.comps.range((l, 0)..=(l, usize::MAX)) {
                debug_assert_eq!(l, l2);
                let prod: Vec<CMatrix> = a.iter().zip(b).map(|(x, y)| x.dot(y)).collect();
                match out.comps.get_mut(&(m, n)) {
                    Some(acc) => acc.iter_mut().zip(&prod).for_each(|(x, y)| *x += y),
                    None => {
                        out.comps.insert((m, n), prod);
                    }
                }
            }
        }
        out
    }

    /// Keeps the components with both levels `≤ top`.
    pub fn compress(&self, top: usize) -> Self {
        FockOperator {
            comps: self
                .comps
                .iter()
                .filter(|(&(m, n), _)| m <= top && n <= top)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Keeps the components whose source level is `≤ top`.
    pub fn restrict_source(&self, top: usize) -> Self {
        FockOperator {
            comps: self.comps.iter().filter(|(&(_, n), _)| n <= top).map(|(k, v)| (*k, v.clone())).collect(),
        }
    }

    /// Dense matrix of block `u` with levels stacked in increasing order.
    pub fn dense_block(&self, f: &FockTruncation, u: usize) -> CMatrix {
        let mut offs = vec![0];
        for n in 0..=f.truncation() {
            offs.push(offs[n] + f.level_dim(n, u));
        }
        let total = offs[f.truncation() + 1];
        let mut out = linalg::zeros(total, total);
        for (&(m, n), blocks) in &self.comps {
            out.slice_mut(s![offs[m]..offs[m + 1], offs[n]..offs[n + 1]]).assign(&blocks[u]);
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).comps.values().flatten().map(linalg::max_abs).fold(0.0, f64::max)
    }
}

/// `T_ξ`: level `n` into level `n + 1` for `n < N`, and zero on level `N`.
pub fn creation_matrix(xi: &ModuleVector, f: &FockTruncation) -> Result<FockOperator> {
    let x = f.correspondence();
    xi.check(x)?;
    let p = &f.powers;
    let mut out = FockOperator::zero();
    for n in 0..f.truncation() {
        let tp = p.product(n + 1).expect("level ≥ 1 has a product");
        let level = p.level(n);
        let mut blocks = f.zero_blocks(n + 1, n);
        for (u, block) in blocks.iter_mut().enumerate() {
            for r in 0..level.row_dim(u) {
                let e = ModuleVector::basis(level, u, r, 0);
                let image = elementary_tensor(tp, x, level, xi, &e)?;
                block.column_mut(r).assign(&image.block(u).column(0));
            }
        }
        out = out.add(&FockOperator::from_component(f, n + 1, n, blocks)?);
    }
    Ok(out)
}

pub fn annihilation_matrix(xi: &ModuleVector, f: &FockTruncation) -> Result<FockOperator> {
    Ok(creation_matrix(xi, f)?.adjoint())
}

/// `π_F(a)`, diagonal across levels.
pub fn left_action_matrix(a: &AlgebraElement, f: &FockTruncation) -> Result<FockOperator> {
    a.check_shape(f.correspondence().algebra())?;
    let mut out = FockOperator::zero();
    for n in 0..=f.truncation() {
        out = out.add(&FockOperator::from_component(f, n, n, f.powers.left_action(n, a)?.into_blocks())?);
    }
    Ok(out)
}

pub fn vacuum_projection(f: &FockTruncation) -> FockOperator {
    let blocks = (0..f.num_blocks()).map(|u| linalg::identity(f.level_dim(0, u))).collect();
    FockOperator::from_component(f, 0, 0, blocks).expect("level 0 fits")
}

/// `π_F(a) P₀`.
pub fn defect(a: &AlgebraElement, f: &FockTruncation) -> Result<FockOperator> {
    a.check_shape(f.correspondence().algebra())?;
    FockOperator::from_component(f, 0, 0, a.blocks().to_vec())
}

/// Image of a normal-ordered element: `K_{m,n}` acts as `K ⊗ 1_k` from level
/// `n + k` to level `m + k`.
pub fn represent(x: &ToeplitzElement, f: &FockTruncation) -> Result<FockOperator> {
    let top = f.truncation();
    let mut out = FockOperator::zero();
    for ((m, n), blocks) in x.components() {
        for k in 0..=top.saturating_sub(m.max(n)) {
            if m.max(n) + k > top {
                break;
            }
            let ext = f.powers.extend_right(blocks, m, n, k)?;
            out = out.add(&FockOperator::from_component(f, m + k, n + k, ext)?);
        }
    }
    Ok(out)
}

/// `Γ_N(e^{-βD}) = Σ_n (e^{-βD})^{⊗n}`.
pub fn gamma_density(d: &Generator, beta: f64, f: &FockTruncation) -> Result<FockOperator> {
    let edge = transfer::heat_kernel(d, beta);
    let mut out = FockOperator::zero();
    for n in 0..=f.truncation() {
        let s = f.powers.power_bimodule(&edge, n)?.embed(f.powers.level(n));
        out = out.add(&FockOperator::from_component(f, n, n, s.into_blocks())?);
    }
    Ok(out)
}

/// `Φ_N = Tr_{τ₀}(· Γ_N(e^{-βD}))`.
#[derive(Clone, Debug)]
pub struct FockState {
    tau0: TraceVector,
    gamma: FockOperator,
    generator: Generator,
    beta: f64,
    radius: f64,
}

pub fn fock_state(tau0: &TraceVector, f: &FockTruncation, d: &Generator, beta: f64) -> Result<FockState> {
    let x = f.correspondence();
    if tau0.len() != x.num_blocks() {
        return Err(KmsError::Shape("trace length differs from the block count".into()));
    }
    let z = transfer::transfer_matrix(x, d, beta)?;
    let r = transfer::spectral_radius(&z).radius;
    if r >= 1.0 {
        return Err(KmsError::SpectralRadius(r));
    }
    Ok(FockState { tau0: tau0.clone(), gamma: gamma_density(d, beta, f)?, generator: d.clone(), beta, radius: r })
}

impl FockState {
    pub fn tau0(&self) -> &TraceVector {
        &self.tau0
    }

    pub fn gamma(&self) -> &FockOperator {
        &self.gamma
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn evaluate(&self, x: &FockOperator) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for ((m, n), blocks) in x.components() {
            if m != n {
                continue;
            }
            let g = self.gamma.component(n, n).expect("Γ covers every level");
            for ((b, gb), &t) in blocks.iter().zip(g).zip(self.tau0.coeffs()) {
                if t != 0.0 {
                    total += linalg::trace(&b.dot(gb)) * t;
                }
            }
        }
        total
    }

    /// `|Φ_N(xy) − Φ_N(y γ_{iβ}(x))|` with products taken in normal form.
    pub fn kms_residual(&self, f: &FockTruncation, x: &ToeplitzElement, y: &ToeplitzElement) -> Result<f64> {
        let p = f.powers();
        let group = TwistedIsometryGroup::untwisted(f.correspondence(), self.generator.clone());
        let gx = gamma_apply(x, C64::new(0.0, self.beta), &group, p)?;
        let lhs = self.evaluate(&represent(&x.mul(y, p)?, f)?);
        let rhs = self.evaluate(&represent(&y.mul(&gx, p)?, f)?);
        Ok((lhs - rhs).norm())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    pub bound: f64,
    /// Certified upper bound for `r(Z(β))`.
    pub rho_upper: f64,
}

/// Upper bound for `Σ_{n>N} ⟨(Z^T)^n t₀, d⟩` from the positive vector
/// `y = (ρI − Z)^{-1} 1`, which satisfies `Z y ≤ ρ y`.
pub fn tail_bound(tau0: &TraceVector, x: &Correspondence, d: &Generator, beta: f64, n: usize) -> Result<TailBound> {
    let z = transfer::transfer_matrix(x, d, beta)?;
    let zm = z.matrix();
    let k = zm.nrows();
    let root = transfer::spectral_radius(&z);
    let r = root.radius.max(root.upper);
    if r >= 1.0 {
        return Err(KmsError::SpectralRadius(r));
    }
    let mut gap = ENVELOPE_GAP;
    loop {
        let rho = (r * (1.0 + gap)).max(ENVELOPE_FLOOR);
        let m = Array2::from_shape_fn((k, k), |(i, j)| if i == j { rho - zm[[i, j]] } else { -zm[[i, j]] });
        let y = linalg::solve_real(&m, &vec![1.0; k]);
        if let Some(y) = y.filter(|y| y.iter().all(|&v| v > 0.0 && v.is_finite())) {
            let zy: Vec<f64> = (0..k).map(|i| (0..k).map(|j| zm[[i, j]] * y[j]).sum()).collect();
            // recomputed ratio plus a rounding margin
            let cert = zy.iter().zip(&y).map(|(a, b)| a / b).fold(0.0, f64::max) * (1.0 + 1e-12);
            if cert < 1.0 {
                let dims = x.algebra().dim_weights();
                let c = dims.iter().zip(&y).map(|(a, b)| a / b).fold(0.0, f64::max);
                let ty: f64 = tau0.coeffs().iter().zip(&y).map(|(a, b)| a * b).sum();
                let bound = c * ty * cert.powi(n as i32 + 1) / (1.0 - cert);
                return Ok(TailBound { bound, rho_upper: cert });
            }
        }
        gap *= 10.0;
        if r * (1.0 + gap) >= 1.0 {
            return Err(KmsError::SpectralRadius(r));
        }
    }
}

/// `Σ_{n≤N} F^n τ₀`.
pub fn partial_trace_sum(
    tau0: &TraceVector,
    x: &Correspondence,
    d: &Generator,
    beta: f64,
    n: usize,
) -> Result<TraceVector> {
    let z = transfer::transfer_matrix(x, d, beta)?;
    let mut term = tau0.clone();
    let mut acc = tau0.coeffs().to_vec();
    for _ in 0..n {
        term = transfer::apply_f(&term, &z)?;
        acc.iter_mut().zip(term.coeffs()).for_each(|(a, b)| *a += b);
    }
    Ok(TraceVector::from_raw(acc))
}
