//! Tensor powers `X^{⊗n}` with explicit path bases.
//!
//! `X^{⊗n}` is built as `X ⊗ X^{⊗(n-1)}`, so a slot of block pair `(u, v)`
//! is a path of `n` edges starting at `v` and ending at `u`, listed in
//! lexicographic order. An edge is `(target block, copy)`.

use std::collections::HashMap;

use crate::algebra::AlgebraElement;
use crate::correspondence::{
    elementary_tensor, left_action, tensor, tensor_bimodule, BimoduleOperator, Correspondence, ModuleOperator,
    ModuleVector, TensorProduct,
};
use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix};

pub type Edge = (usize, usize);

/// Default cap on `Σ_n Σ_u k^{(n)}_u`.
pub const DEFAULT_DIMENSION_CAP: usize = 10_000;

#[derive(Clone, Debug)]
pub struct TensorPowers {
    base: Correspondence,
    levels: Vec<Correspondence>,
    products: Vec<Option<TensorProduct>>,
    paths: Vec<Vec<Vec<Vec<Vec<Edge>>>>>,
    lookup: Vec<HashMap<(usize, Vec<Edge>), usize>>,
}

impl TensorPowers {
    pub fn new(x: &Correspondence, max_level: usize) -> Result<Self> {
        Self::with_cap(x, max_level, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(x: &Correspondence, max_level: usize, cap: usize) -> Result<Self> {
        let alg = x.algebra();
        let nb = x.num_blocks();
        let id = Correspondence::identity(alg);
        let mut total: usize = id.row_dims().iter().sum();
        let mut paths0 = vec![vec![Vec::new(); nb]; nb];
        let mut lookup0 = HashMap::new();
        for v in 0..nb {
            paths0[v][v].push(Vec::new());
            lookup0.insert((v, Vec::new()), 0);
        }
        let mut out = TensorPowers {
            base: x.clone(),
            levels: vec![id],
            products: vec![None],
            paths: vec![paths0],
            lookup: vec![lookup0],
        };
        for n in 1..=max_level {
            let prev = &out.levels[n - 1];
            let tp = tensor(x, prev)?;
            total += tp.correspondence().row_dims().iter().sum::<usize>();
            if total > cap {
                return Err(KmsError::Resource(format!(
                    "tensor powers up to level {n} need dimension {total} > cap {cap}"
                )));
            }
            let mut paths = vec![vec![Vec::new(); nb]; nb];
            let mut lookup = HashMap::new();
            for u in 0..nb {
                for v in 0..nb {
                    let list: &mut Vec<Vec<Edge>> = &mut paths[u][v];
                    for w in 0..nb {
                        for mu in 0..x.multiplicity(w, v) {
                            for rest in &out.paths[n - 1][u][w] {
                                let mut p = Vec::with_capacity(n);
                                p.push((w, mu));
                                p.extend_from_slice(rest);
                                lookup.insert((v, p.clone()), list.len());
                                list.push(p);
                            }
                        }
                    }
                    debug_assert_eq!(list.len(), tp.correspondence().multiplicity(u, v));
                }
            }
            out.levels.push(tp.correspondence().clone());
            out.products.push(Some(tp));
            out.paths.push(paths);
            out.lookup.push(lookup);
        }
        Ok(out)
    }

    pub fn base(&self) -> &Correspondence {
        &self.base
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &Correspondence {
        &self.levels[n]
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        if n > self.max_level() {
            return Err(KmsError::Resource(format!(
                "level {n} exceeds the prepared tensor powers (max {})",
                self.max_level()
            )));
        }
        Ok(())
    }

    /// `X ⊗ X^{⊗(n-1)}` layout for `n ≥ 1`.
    pub fn product(&self, n: usize) -> Option<&TensorProduct> {
        self.products.get(n).and_then(|p| p.as_ref())
    }

    pub fn paths(&self, n: usize, u: usize, v: usize) -> &[Vec<Edge>] {
        &self.paths[n][u][v]
    }

    /// Slot index of `path` (starting at `v`) inside level `n`.
    pub fn slot_of(&self, v: usize, path: &[Edge]) -> Option<usize> {
        self.lookup.get(path.len())?.get(&(v, path.to_vec())).copied()
    }

    fn end(v: usize, path: &[Edge]) -> usize {
        path.last().map_or(v, |e| e.0)
    }

    /// `ξ₁ ⊗ … ⊗ ξ_n`; the empty product is the unit of `A` as a module.
    pub fn elementary(&self, factors: &[ModuleVector]) -> Result<ModuleVector> {
        let n = factors.len();
        self.check_level(n)?;
        if n == 0 {
            let alg = self.base.algebra();
            return ModuleVector::new(&self.levels[0], alg.dims().iter().map(|&d| linalg::identity(d)).collect());
        }
        let mut acc = factors[n - 1].clone();
        acc.check(&self.base)?;
        for (i, xi) in factors.iter().enumerate().rev().skip(1) {
            let k = n - i;
            let tp = self.products[k].as_ref().expect("level ≥ 1 has a product");
            acc = elementary_tensor(tp, &self.base, &self.levels[k - 1], xi, &acc)?;
        }
        Ok(acc)
    }

    /// `K ⊗ 1_k`: a map from level `n` to level `m` extended to a map from
    /// level `n + k` to level `m + k`.
    pub fn extend_right(&self, blocks: &[CMatrix], m: usize, n: usize, k: usize) -> Result<Vec<CMatrix>> {
        if k == 0 {
            return Ok(blocks.to_vec());
        }
        self.check_level(m + k)?;
        self.check_level(n + k)?;
        let alg = self.base.algebra();
        let nb = alg.num_blocks();
        let (lm, ln) = (&self.levels[m], &self.levels[n]);
        let (lmk, lnk) = (&self.levels[m + k], &self.levels[n + k]);
        let mut out: Vec<CMatrix> = (0..nb).map(|u| linalg::zeros(lmk.row_dim(u), lnk.row_dim(u))).collect();
        for u in 0..nb {
            for w in 0..nb {
                let kw = &blocks[w];
                if kw.dim() != (lm.row_dim(w), ln.row_dim(w)) {
                    return Err(KmsError::Shape(format!("component block {w} has the wrong size")));
                }
                for tail in &self.paths[k][u][w] {
                    debug_assert_eq!(Self::end(w, tail), u);
                    for v in 0..nb {
                        let dv = alg.dim(v);
                        for (c, head) in self.paths[m][w][v].iter().enumerate() {
                            let src_r = lm.row(w, v, c, 0);
                            let joined: Vec<Edge> = head.iter().chain(tail).copied().collect();
                            let dst_r = lmk.row(u, v, self.lookup[m + k][&(v, joined)], 0);
                            for vp in 0..nb {
                                let dvp = alg.dim(vp);
                                for (cp, headp) in self.paths[n][w][vp].iter().enumerate() {
                                    let src_c = ln.row(w, vp, cp, 0);
                                    let joinedp: Vec<Edge> = headp.iter().chain(tail).copied().collect();
                                    let dst_c = lnk.row(u, vp, self.lookup[n + k][&(vp, joinedp)], 0);
                                    for i in 0..dv {
                                        for j in 0..dvp {
                                            out[u][[dst_r + i, dst_c + j]] = kw[[src_r + i, src_c + j]];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// `S₁ ⊗ … ⊗ S_n` for bimodule maps of `X`, leftmost factor first.
    pub fn tensor_bimodules(&self, ops: &[BimoduleOperator]) -> Result<BimoduleOperator> {
        let n = ops.len();
        self.check_level(n)?;
        if n == 0 {
            return Ok(BimoduleOperator::identity(&self.levels[0]));
        }
        let mut acc = ops[n - 1].clone();
        for (i, s) in ops.iter().enumerate().rev().skip(1) {
            let k = n - i;
            acc = tensor_bimodule(self.products[k].as_ref().expect("product"), s, &acc);
        }
        Ok(acc)
    }

    /// `(e^{zD})^{⊗n}` for a bimodule map `e^{zD}` already exponentiated.
    pub fn power_bimodule(&self, op: &BimoduleOperator, n: usize) -> Result<BimoduleOperator> {
        self.check_level(n)?;
        let mut acc = BimoduleOperator::identity(&self.levels[0]);
        for k in 1..=n {
            acc = tensor_bimodule(self.products[k].as_ref().expect("product"), op, &acc);
        }
        Ok(acc)
    }

    /// Left action of `a` on level `n`.
    pub fn left_action(&self, n: usize, a: &AlgebraElement) -> Result<ModuleOperator> {
        self.check_level(n)?;
        left_action(&self.levels[n], a)
    }

    /// `e^{zD^{(n)}} · π_n(e^{zH})` given the slotwise `e^{zD}` and the
    /// blockwise `e^{zH}`.
    pub fn level_exponential(
        &self,
        n: usize,
        edge: &BimoduleOperator,
        coeff: &AlgebraElement,
    ) -> Result<ModuleOperator> {
        let e = self.power_bimodule(edge, n)?.embed(&self.levels[n]);
        Ok(e.compose(&self.left_action(n, coeff)?))
    }
}
