//! Hilbert bimodules over `A = ⊕_v M_{d_v}` described by block multiplicities.
//!
//! The right block `w` of `X` is the space of `k_w × d_w` matrices, where
//! `k_w = Σ_v M[w][v]·d_v`. Rows of block `w` are ordered canonically by
//! `(v ascending, copy μ < M[w][v], inner index i < d_v)`; the left action
//! of `a` acts on row `(v, μ, i)` through `a_v` on `i`.
//!
//! Tensor products `X ⊗_A Y` index the `(u, v)` multiplicity slot by triples
//! `(w, μ_X, μ_Y)` in lexicographic order: an `X`-edge from `v` into `w`
//! followed by a `Y`-edge from `w` into `u`.

use num_complex::Complex64 as C64;

use crate::algebra::{AlgebraElement, BlockAlgebra, TraceVector};
use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence {
    algebra: BlockAlgebra,
    mult: Vec<Vec<usize>>,
    row_dims: Vec<usize>,
    offsets: Vec<Vec<usize>>,
}

impl Correspondence {
    /// `mult[w][v]` is the multiplicity of left block `v` inside right block `w`.
    pub fn new(algebra: BlockAlgebra, mult: Vec<Vec<usize>>) -> Result<Self> {
        let n = algebra.num_blocks();
        if mult.len() != n || mult.iter().any(|row| row.len() != n) {
            return Err(KmsError::Shape(format!("multiplicity matrix must be {n}x{n}")));
        }
        let mut row_dims = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for row in &mult {
            let mut acc = 0;
            let mut off = Vec::with_capacity(n);
            for (v, &m) in row.iter().enumerate() {
                off.push(acc);
                acc += m * algebra.dim(v);
            }
            row_dims.push(acc);
            offsets.push(off);
        }
        Ok(Correspondence { algebra, mult, row_dims, offsets })
    }

    /// `A` as a bimodule over itself.
    pub fn identity(algebra: &BlockAlgebra) -> Self {
        let n = algebra.num_blocks();
        let mult = (0..n).map(|w| (0..n).map(|v| usize::from(v == w)).collect()).collect();
        Self::new(algebra.clone(), mult).expect("identity multiplicities are square")
    }

    pub fn algebra(&self) -> &BlockAlgebra {
        &self.algebra
    }

    pub fn mult(&self) -> &[Vec<usize>] {
        &self.mult
    }

    pub fn multiplicity(&self, w: usize, v: usize) -> usize {
        self.mult[w][v]
    }

    pub fn num_blocks(&self) -> usize {
        self.algebra.num_blocks()
    }

    /// `k_w`.
    pub fn row_dim(&self, w: usize) -> usize {
        self.row_dims[w]
    }

    pub fn row_dims(&self) -> &[usize] {
        &self.row_dims
    }

    /// Row of `(v, copy, inner)` inside right block `w`.
    pub fn row(&self, w: usize, v: usize, copy: usize, inner: usize) -> usize {
        debug_assert!(copy < self.mult[w][v] && inner < self.algebra.dim(v));
        self.offsets[w][v] + copy * self.algebra.dim(v) + inner
    }

    /// Inverse of [`Correspondence::row`].
    pub fn row_label(&self, w: usize, row: usize) -> (usize, usize, usize) {
        for v in (0..self.num_blocks()).rev() {
            if self.mult[w][v] > 0 && row >= self.offsets[w][v] {
                let rel = row - self.offsets[w][v];
                let d = self.algebra.dim(v);
                return (v, rel / d, rel % d);
            }
        }
        panic!("row {row} out of range for block {w}");
    }

    /// Full: `⟨X, X⟩` spans `A`, i.e. every right block is present.
    pub fn is_full(&self) -> bool {
        self.row_dims.iter().all(|&k| k > 0)
    }

    pub fn check_full(&self) -> Result<()> {
        match self.row_dims.iter().position(|&k| k == 0) {
            Some(w) => Err(KmsError::NotFull(format!("right block {w} is empty, so ⟨X,X⟩ misses it"))),
            None => Ok(()),
        }
    }

    pub fn same_algebra(&self, other: &Self) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(KmsError::Shape("correspondences live over different algebras".into()));
        }
        Ok(())
    }

    /// Canonical Parseval frame: `e_r ⊗ e_0^*` in every right block.
    pub fn frame(&self) -> Vec<ModuleVector> {
        let mut out = Vec::new();
        for w in 0..self.num_blocks() {
            for r in 0..self.row_dims[w] {
                out.push(ModuleVector::basis(self, w, r, 0));
            }
        }
        out
    }

    /// Every matrix unit `e_r ⊗ e_j^*`.
    pub fn matrix_units(&self) -> Vec<ModuleVector> {
        let mut out = Vec::new();
        for w in 0..self.num_blocks() {
            for r in 0..self.row_dims[w] {
                for j in 0..self.algebra.dim(w) {
                    out.push(ModuleVector::basis(self, w, r, j));
                }
            }
        }
        out
    }
}

/// `ξ ∈ X`: block `w` is a `k_w × d_w` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleVector {
    blocks: Vec<CMatrix>,
}

impl ModuleVector {
    pub fn new(x: &Correspondence, blocks: Vec<CMatrix>) -> Result<Self> {
        let v = ModuleVector { blocks };
        v.check(x)?;
        Ok(v)
    }

    pub fn zero(x: &Correspondence) -> Self {
        ModuleVector { blocks: (0..x.num_blocks()).map(|w| linalg::zeros(x.row_dim(w), x.algebra.dim(w))).collect() }
    }

    /// Matrix unit at row `row`, column `col` of right block `w`.
    pub fn basis(x: &Correspondence, w: usize, row: usize, col: usize) -> Self {
        let mut v = Self::zero(x);
        v.blocks[w][[row, col]] = C64::new(1.0, 0.0);
        v
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, w: usize) -> &CMatrix {
        &self.blocks[w]
    }

    #[cfg(test)]
    pub(crate) fn block_mut(&mut self, w: usize) -> &mut CMatrix {
        &mut self.blocks[w]
    }

    pub fn check(&self, x: &Correspondence) -> Result<()> {
        if self.blocks.len() != x.num_blocks()
            || self.blocks.iter().enumerate().any(|(w, b)| b.dim() != (x.row_dim(w), x.algebra.dim(w)))
        {
            return Err(KmsError::Shape("module vector does not match the correspondence".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Self {
        ModuleVector { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        ModuleVector { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        ModuleVector { blocks: self.blocks.iter().map(|b| b.mapv(|z| z * s)).collect() }
    }

    /// Right action `(ξ a)_w = ξ_w a_w`.
    pub fn right_act(&self, a: &AlgebraElement) -> Self {
        ModuleVector { blocks: self.blocks.iter().zip(a.blocks()).map(|(b, ab)| b.dot(ab)).collect() }
    }

    /// `‖⟨ξ, ξ⟩‖^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::operator_norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max)
    }
}

/// Adjointable operators, `B(X) = ⊕_w M_{k_w}` acting by left multiplication.
/// Rectangular blocks describe right-module maps between two
/// correspondences over the same algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleOperator {
    blocks: Vec<CMatrix>,
}

impl ModuleOperator {
    pub fn new(x: &Correspondence, blocks: Vec<CMatrix>) -> Result<Self> {
        let op = ModuleOperator { blocks };
        op.check(x)?;
        Ok(op)
    }

    pub fn from_blocks(blocks: Vec<CMatrix>) -> Self {
        ModuleOperator { blocks }
    }

    pub fn identity(x: &Correspondence) -> Self {
        ModuleOperator { blocks: x.row_dims.iter().map(|&k| linalg::identity(k)).collect() }
    }

    pub fn zero(x: &Correspondence) -> Self {
        ModuleOperator { blocks: x.row_dims.iter().map(|&k| linalg::zeros(k, k)).collect() }
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, w: usize) -> &CMatrix {
        &self.blocks[w]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    pub fn check(&self, x: &Correspondence) -> Result<()> {
        if self.blocks.len() != x.num_blocks() || self.blocks.iter().zip(&x.row_dims).any(|(b, &k)| b.dim() != (k, k)) {
            return Err(KmsError::Shape("operator does not match the correspondence".into()));
        }
        Ok(())
    }

    pub fn apply(&self, xi: &ModuleVector) -> ModuleVector {
        ModuleVector { blocks: self.blocks.iter().zip(&xi.blocks).map(|(t, b)| t.dot(b)).collect() }
    }

    pub fn compose(&self, other: &Self) -> Self {
        ModuleOperator { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.dot(b)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        ModuleOperator { blocks: self.blocks.iter().map(linalg::dagger).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        ModuleOperator { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        ModuleOperator { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        ModuleOperator { blocks: self.blocks.iter().map(|b| b.mapv(|z| z * s)).collect() }
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| b.is_empty() || (linalg::is_hermitian(b, tol) && linalg::min_eigenvalue(b) >= -tol))
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::operator_norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| linalg::max_abs(&(a - b))).fold(0.0, f64::max)
    }
}

/// Bimodule maps `B_A(X)`: one `M[w][v] × M[w][v]` matrix per nonzero slot,
/// acting as `S^{(w,v)} ⊗ 1_{d_v}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BimoduleOperator {
    slots: Vec<Vec<CMatrix>>,
}

impl BimoduleOperator {
    pub fn new(x: &Correspondence, slots: Vec<Vec<CMatrix>>) -> Result<Self> {
        let n = x.num_blocks();
        if slots.len() != n || slots.iter().any(|r| r.len() != n) {
            return Err(KmsError::Shape(format!("bimodule operator needs {n}x{n} slots")));
        }
        for w in 0..n {
            for v in 0..n {
                let m = x.mult[w][v];
                if slots[w][v].dim() != (m, m) {
                    return Err(KmsError::Shape(format!("slot ({w},{v}) must be {m}x{m}")));
                }
            }
        }
        Ok(BimoduleOperator { slots })
    }

    pub fn from_fn(x: &Correspondence, mut f: impl FnMut(usize, usize, usize) -> CMatrix) -> Self {
        let n = x.num_blocks();
        BimoduleOperator { slots: (0..n).map(|w| (0..n).map(|v| f(w, v, x.mult[w][v])).collect()).collect() }
    }

    pub fn identity(x: &Correspondence) -> Self {
        Self::from_fn(x, |_, _, m| linalg::identity(m))
    }

    pub fn zero(x: &Correspondence) -> Self {
        Self::from_fn(x, |_, _, m| linalg::zeros(m, m))
    }

    pub fn slots(&self) -> &[Vec<CMatrix>] {
        &self.slots
    }

    pub fn slot(&self, w: usize, v: usize) -> &CMatrix {
        &self.slots[w][v]
    }

    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        BimoduleOperator {
            slots: self
                .slots
                .iter()
                .map(|r| r.iter().map(|s| if s.is_empty() { s.clone() } else { f(s) }).collect())
                .collect(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        BimoduleOperator {
            slots: self
                .slots
                .iter()
                .zip(&other.slots)
                .map(|(r, q)| r.iter().zip(q).map(|(a, b)| a.dot(b)).collect())
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.map(linalg::dagger)
    }

    pub fn add(&self, other: &Self) -> Self {
        BimoduleOperator {
            slots: self
                .slots
                .iter()
                .zip(&other.slots)
                .map(|(r, q)| r.iter().zip(q).map(|(a, b)| a + b).collect())
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|m| m.mapv(|z| z * s))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.slots.iter().flatten().all(|s| linalg::is_hermitian(s, tol))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.slots
            .iter()
            .flatten()
            .zip(other.slots.iter().flatten())
            .map(|(a, b)| if a.is_empty() { 0.0 } else { linalg::max_abs(&(a - b)) })
            .fold(0.0, f64::max)
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.slots
            .iter()
            .flatten()
            .all(|s| s.is_empty() || (linalg::is_hermitian(s, tol) && linalg::min_eigenvalue(s) >= -tol))
    }

    /// `⊕_v S^{(w,v)} ⊗ 1_{d_v}` in each right block.
    pub fn embed(&self, x: &Correspondence) -> ModuleOperator {
        let n = x.num_blocks();
        let blocks = (0..n)
            .map(|w| {
                let mut out = linalg::zeros(x.row_dim(w), x.row_dim(w));
                for v in 0..n {
                    let m = x.mult[w][v];
                    if m == 0 {
                        continue;
                    }
                    let d = x.algebra.dim(v);
                    let piece = linalg::kron(&self.slots[w][v], &linalg::identity(d));
                    let off = x.offsets[w][v];
                    out.slice_mut(ndarray::s![off..off + m * d, off..off + m * d]).assign(&piece);
                }
                out
            })
            .collect();
        ModuleOperator { blocks }
    }

    /// Recovers slots from an operator, rejecting anything that does not
    /// commute with the left action.
    pub fn from_module_operator(x: &Correspondence, t: &ModuleOperator, tol: f64) -> Result<Self> {
        t.check(x)?;
        let n = x.num_blocks();
        let mut slots = Vec::with_capacity(n);
        for w in 0..n {
            let mut row = Vec::with_capacity(n);
            for v in 0..n {
                let m = x.mult[w][v];
                let mut s = linalg::zeros(m, m);
                for a in 0..m {
                    for b in 0..m {
                        s[[a, b]] = t.blocks[w][[x.row(w, v, a, 0), x.row(w, v, b, 0)]];
                    }
                }
                row.push(s);
            }
            slots.push(row);
        }
        let candidate = BimoduleOperator { slots };
        if candidate.embed(x).max_abs_diff(t) > tol {
            return Err(KmsError::Invalid("operator does not commute with the left action".into()));
        }
        Ok(candidate)
    }
}

pub fn inner_product(xi: &ModuleVector, eta: &ModuleVector) -> Result<AlgebraElement> {
    if xi.blocks.len() != eta.blocks.len() || xi.blocks.iter().zip(&eta.blocks).any(|(a, b)| a.dim() != b.dim()) {
        return Err(KmsError::Shape("inner product of vectors from different modules".into()));
    }
    Ok(AlgebraElement::from_blocks_unchecked(
        xi.blocks.iter().zip(&eta.blocks).map(|(a, b)| linalg::dagger(a).dot(b)).collect(),
    ))
}

/// `π(a)` as an element of `B(X)`.
pub fn left_action(x: &Correspondence, a: &AlgebraElement) -> Result<ModuleOperator> {
    a.check_shape(&x.algebra)?;
    let n = x.num_blocks();
    let blocks = (0..n)
        .map(|w| {
            let mut out = linalg::zeros(x.row_dim(w), x.row_dim(w));
            for v in 0..n {
                let d = x.algebra.dim(v);
                for mu in 0..x.mult[w][v] {
                    let off = x.row(w, v, mu, 0);
                    out.slice_mut(ndarray::s![off..off + d, off..off + d]).assign(a.block(v));
                }
            }
            out
        })
        .collect();
    Ok(ModuleOperator { blocks })
}

pub fn left_act(x: &Correspondence, a: &AlgebraElement, xi: &ModuleVector) -> Result<ModuleVector> {
    xi.check(x)?;
    Ok(left_action(x, a)?.apply(xi))
}

/// `θ_{ξ,η} ζ = ξ ⟨η, ζ⟩`.
pub fn theta(xi: &ModuleVector, eta: &ModuleVector) -> Result<ModuleOperator> {
    if xi.blocks.len() != eta.blocks.len() {
        return Err(KmsError::Shape("θ of vectors from different modules".into()));
    }
    let mut blocks = Vec::with_capacity(xi.blocks.len());
    for (a, b) in xi.blocks.iter().zip(&eta.blocks) {
        if a.ncols() != b.ncols() {
            return Err(KmsError::Shape("θ of vectors with different right blocks".into()));
        }
        blocks.push(a.dot(&linalg::dagger(b)));
    }
    Ok(ModuleOperator { blocks })
}

/// `Tr_τ(T) = Σ_w t_w tr(T_w)`.
pub fn induced_trace(tau: &TraceVector, t: &ModuleOperator) -> Result<C64> {
    if tau.len() != t.blocks.len() {
        return Err(KmsError::Shape("trace and operator have different block counts".into()));
    }
    Ok(tau.coeffs().iter().zip(&t.blocks).map(|(&c, b)| linalg::trace(b) * c).sum())
}

/// `τ_T(a) = Tr_τ(π(a) T)`, coefficientwise `(τ_T)_v = Σ_w t_w tr T^{(w,v)}`.
pub fn induced_trace_functional(tau: &TraceVector, t: &BimoduleOperator, x: &Correspondence) -> Result<TraceVector> {
    let n = x.num_blocks();
    if tau.len() != n || t.slots.len() != n {
        return Err(KmsError::Shape("trace, operator and module disagree on block count".into()));
    }
    if !t.is_positive(1e-10) {
        return Err(KmsError::NotPositive("induced traces need a positive bimodule operator".into()));
    }
    let coeffs = (0..n).map(|v| (0..n).map(|w| tau.coeffs()[w] * linalg::trace(&t.slots[w][v]).re).sum()).collect();
    Ok(TraceVector::from_raw(coeffs))
}

/// `X ⊗_A Y` together with its slot layout.
#[derive(Clone, Debug)]
pub struct TensorProduct {
    corr: Correspondence,
    left_mult: Vec<Vec<usize>>,
    right_mult: Vec<Vec<usize>>,
    // base[u][v][w] = first slot index of the paths through w
    base: Vec<Vec<Vec<usize>>>,
}

impl TensorProduct {
    pub fn correspondence(&self) -> &Correspondence {
        &self.corr
    }

    /// Slot index of the path `v -(μ_X)-> w -(μ_Y)-> u`.
    pub fn slot_index(&self, u: usize, v: usize, w: usize, mu_x: usize, mu_y: usize) -> usize {
        debug_assert!(mu_x < self.left_mult[w][v] && mu_y < self.right_mult[u][w]);
        self.base[u][v][w] + mu_x * self.right_mult[u][w] + mu_y
    }

    /// All `(w, μ_X, μ_Y)` of slot `(u, v)` in layout order.
    pub fn slot_paths(&self, u: usize, v: usize) -> Vec<(usize, usize, usize)> {
        let n = self.corr.num_blocks();
        let mut out = Vec::new();
        for w in 0..n {
            for a in 0..self.left_mult[w][v] {
                for b in 0..self.right_mult[u][w] {
                    out.push((w, a, b));
                }
            }
        }
        out
    }
}

pub fn tensor(x: &Correspondence, y: &Correspondence) -> Result<TensorProduct> {
    x.same_algebra(y)?;
    let n = x.num_blocks();
    let mut mult = vec![vec![0; n]; n];
    let mut base = vec![vec![vec![0; n]; n]; n];
    for u in 0..n {
        for v in 0..n {
            let mut acc = 0;
            for w in 0..n {
                base[u][v][w] = acc;
                acc += x.mult[w][v] * y.mult[u][w];
            }
            mult[u][v] = acc;
        }
    }
    Ok(TensorProduct {
        corr: Correspondence::new(x.algebra.clone(), mult)?,
        left_mult: x.mult.clone(),
        right_mult: y.mult.clone(),
        base,
    })
}

/// `ξ ⊗ η ∈ X ⊗_A Y`.
pub fn elementary_tensor(
    tp: &TensorProduct,
    x: &Correspondence,
    y: &Correspondence,
    xi: &ModuleVector,
    eta: &ModuleVector,
) -> Result<ModuleVector> {
    xi.check(x)?;
    eta.check(y)?;
    let xy = &tp.corr;
    let alg = &x.algebra;
    let n = x.num_blocks();
    let mut out = ModuleVector::zero(xy);
    for u in 0..n {
        let du = alg.dim(u);
        for w in 0..n {
            let dw = alg.dim(w);
            for mu_y in 0..y.mult[u][w] {
                let r0 = y.row(u, w, mu_y, 0);
                let piece = xi.blocks[w].dot(&eta.blocks[u].slice(ndarray::s![r0..r0 + dw, ..]));
                for v in 0..n {
                    let dv = alg.dim(v);
                    for mu_x in 0..x.mult[w][v] {
                        let c = tp.slot_index(u, v, w, mu_x, mu_y);
                        let src = x.row(w, v, mu_x, 0);
                        let dst = xy.row(u, v, c, 0);
                        for i in 0..dv {
                            for j in 0..du {
                                out.blocks[u][[dst + i, j]] = piece[[src + i, j]];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `S ⊗ T` on `X ⊗_A Y` for `S ∈ B(X)` and a bimodule map `T ∈ B_A(Y)`.
pub fn tensor_operator(
    tp: &TensorProduct,
    x: &Correspondence,
    y: &Correspondence,
    s: &ModuleOperator,
    t: &BimoduleOperator,
) -> Result<ModuleOperator> {
    s.check(x)?;
    if t.slots.len() != y.num_blocks() {
        return Err(KmsError::Shape("bimodule operator does not match Y".into()));
    }
    let xy = &tp.corr;
    let alg = &x.algebra;
    let n = x.num_blocks();
    let mut blocks = Vec::with_capacity(n);
    for u in 0..n {
        let mut out = linalg::zeros(xy.row_dim(u), xy.row_dim(u));
        for w in 0..n {
            let my = y.mult[u][w];
            if my == 0 {
                continue;
            }
            let tw = &t.slots[u][w];
            let sw = &s.blocks[w];
            for v in 0..n {
                for vp in 0..n {
                    let (dv, dvp) = (alg.dim(v), alg.dim(vp));
                    for a in 0..x.mult[w][v] {
                        for ap in 0..x.mult[w][vp] {
                            for b in 0..my {
                                for bp in 0..my {
                                    let coeff = tw[[b, bp]];
                                    if coeff == C64::new(0.0, 0.0) {
                                        continue;
                                    }
                                    let r = xy.row(u, v, tp.slot_index(u, v, w, a, b), 0);
                                    let c = xy.row(u, vp, tp.slot_index(u, vp, w, ap, bp), 0);
                                    let sr = x.row(w, v, a, 0);
                                    let sc = x.row(w, vp, ap, 0);
                                    for i in 0..dv {
                                        for j in 0..dvp {
                                            out[[r + i, c + j]] += coeff * sw[[sr + i, sc + j]];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        blocks.push(out);
    }
    Ok(ModuleOperator { blocks })
}

/// `S ⊗ T` for two bimodule maps, again a bimodule map of `X ⊗_A Y`.
pub fn tensor_bimodule(tp: &TensorProduct, s: &BimoduleOperator, t: &BimoduleOperator) -> BimoduleOperator {
    let xy = &tp.corr;
    let n = xy.num_blocks();
    let slots = (0..n)
        .map(|u| {
            (0..n)
                .map(|v| {
                    let m = xy.mult[u][v];
                    let mut out = linalg::zeros(m, m);
                    for w in 0..n {
                        let (mx, my) = (tp.left_mult[w][v], tp.right_mult[u][w]);
                        for a in 0..mx {
                            for ap in 0..mx {
                                let sa = s.slots[w][v][[a, ap]];
                                for b in 0..my {
                                    for bp in 0..my {
                                        out[[tp.slot_index(u, v, w, a, b), tp.slot_index(u, v, w, ap, bp)]] =
                                            sa * t.slots[u][w][[b, bp]];
                                    }
                                }
                            }
                        }
                    }
                    out
                })
                .collect()
        })
        .collect();
    BimoduleOperator { slots }
}
