//! Normal-ordered calculus in the Toeplitz algebra of `X`.
//!
//! An element is stored through its components `K_{m,n} ∈ K(X^{⊗n}, X^{⊗m})`:
//! the word `T_{ξ₁}…T_{ξ_m} T*_{η_n}…T*_{η₁}` has the single component
//! `(ξ₁⊗…⊗ξ_m)(η₁⊗…⊗η_n)^*`, and `π(a)` sits in component `(0, 0)`.
//! Products are computed with `T*_ξ T_ζ = π(⟨ξ,ζ⟩)`, which on components
//! reads `K_{m,n} L_{p,q} = (K ⊗ 1)L` or `K(L ⊗ 1)`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::algebra::AlgebraElement;
use crate::correspondence::ModuleVector;
use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix};
use crate::powers::TensorPowers;

/// `T_{ξ₁}…T_{ξ_m} T*_{η_n}…T*_{η₁}`; `right` holds `η₁..η_n`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MonomialWord {
    pub left: Vec<ModuleVector>,
    pub right: Vec<ModuleVector>,
}

impl MonomialWord {
    pub fn new(left: Vec<ModuleVector>, right: Vec<ModuleVector>) -> Self {
        MonomialWord { left, right }
    }

    pub fn unit() -> Self {
        Self::default()
    }

    pub fn degree(&self) -> i64 {
        self.left.len() as i64 - self.right.len() as i64
    }

    pub fn is_balanced(&self) -> bool {
        self.left.len() == self.right.len()
    }

    pub fn adjoint(&self) -> Self {
        MonomialWord { left: self.right.clone(), right: self.left.clone() }
    }

    /// Letters in reading order.
    pub fn letters(&self) -> Vec<Letter> {
        let mut out: Vec<Letter> = self.left.iter().cloned().map(Letter::Create).collect();
        out.extend(self.right.iter().rev().cloned().map(Letter::Annihilate));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Letter {
    Coefficient(AlgebraElement),
    Create(ModuleVector),
    Annihilate(ModuleVector),
}

impl Letter {
    pub fn element(&self) -> ToeplitzElement {
        match self {
            Letter::Coefficient(a) => ToeplitzElement::from_algebra(a),
            Letter::Create(xi) => ToeplitzElement::creation(xi),
            Letter::Annihilate(eta) => ToeplitzElement::annihilation(eta),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ToeplitzElement {
    comps: BTreeMap<(usize, usize), Vec<CMatrix>>,
}

impl ToeplitzElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(p: &TensorPowers) -> Self {
        Self::from_algebra(&AlgebraElement::identity(p.base().algebra()))
    }

    pub fn from_algebra(a: &AlgebraElement) -> Self {
        let mut comps = BTreeMap::new();
        comps.insert((0, 0), a.blocks().to_vec());
        ToeplitzElement { comps }
    }

    /// `T_ξ`.
    pub fn creation(xi: &ModuleVector) -> Self {
        let mut comps = BTreeMap::new();
        comps.insert((1, 0), xi.blocks().to_vec());
        ToeplitzElement { comps }
    }

    /// `T*_η`.
    pub fn annihilation(eta: &ModuleVector) -> Self {
        let mut comps = BTreeMap::new();
        comps.insert((0, 1), eta.blocks().iter().map(linalg::dagger).collect());
        ToeplitzElement { comps }
    }

    pub fn from_component(p: &TensorPowers, m: usize, n: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        p.check_level(m.max(n))?;
        let (lm, ln) = (p.level(m), p.level(n));
        if blocks.len() != lm.num_blocks()
            || blocks.iter().enumerate().any(|(u, b)| b.dim() != (lm.row_dim(u), ln.row_dim(u)))
        {
            return Err(KmsError::Shape(format!("component ({m},{n}) has the wrong block sizes")));
        }
        let mut comps = BTreeMap::new();
        comps.insert((m, n), blocks);
        Ok(ToeplitzElement { comps })
    }

    pub fn from_word(word: &MonomialWord, p: &TensorPowers) -> Result<Self> {
        let l = p.elementary(&word.left)?;
        let r = p.elementary(&word.right)?;
        let blocks = l.blocks().iter().zip(r.blocks()).map(|(a, b)| a.dot(&linalg::dagger(b))).collect();
        Self::from_component(p, word.left.len(), word.right.len(), blocks)
    }

    pub fn component(&self, m: usize, n: usize) -> Option<&[CMatrix]> {
        self.comps.get(&(m, n)).map(|v| v.as_slice())
    }

    pub fn components(&self) -> impl Iterator<Item = ((usize, usize), &[CMatrix])> {
        self.comps.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Highest tensor level touched by any component.
    pub fn max_level(&self) -> usize {
        self.comps.keys().map(|&(m, n)| m.max(n)).max().unwrap_or(0)
    }

    fn accumulate(&mut self, key: (usize, usize), blocks: Vec<CMatrix>) {
        match self.comps.get_mut(&key) {
            Some(existing) => {
                for (e, b) in existing.iter_mut().zip(blocks) {
                    *e += &b;
                }
            }
            None => {
                self.comps.insert(key, blocks);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.comps {
            out.accumulate(*k, v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        ToeplitzElement {
            comps: self.comps.iter().map(|(k, v)| (*k, v.iter().map(|b| b.mapv(|z| z * s)).collect())).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        ToeplitzElement {
            comps: self.comps.iter().map(|(&(m, n), v)| ((n, m), v.iter().map(linalg::dagger).collect())).collect(),
        }
    }

    pub fn mul(&self, other: &Self, p: &TensorPowers) -> Result<Self> {
        let mut out = ToeplitzElement::zero();
        for (&(m, n), k) in &self.comps {
            for (&(pp, q), l) in &other.comps {
                let (key, blocks) = if n == pp {
                    ((m, q), compose(k, l))
                } else if n < pp {
                    let ext = p.extend_right(k, m, n, pp - n)?;
                    ((m + pp - n, q), compose(&ext, l))
                } else {
                    let ext = p.extend_right(l, pp, q, n - pp)?;
                    ((m, q + n - pp), compose(k, &ext))
                };
                out.accumulate(key, blocks);
            }
        }
        Ok(out)
    }

    /// Largest entrywise difference over the union of components.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, v) in &self.comps {
            match other.comps.get(k) {
                Some(w) => {
                    for (a, b) in v.iter().zip(w) {
                        if !a.is_empty() {
                            worst = worst.max(linalg::max_abs(&(a - b)));
                        }
                    }
                }
                None => worst = worst.max(v.iter().map(linalg::max_abs).fold(0.0, f64::max)),
            }
        }
        for (k, w) in &other.comps {
            if !self.comps.contains_key(k) {
                worst = worst.max(w.iter().map(linalg::max_abs).fold(0.0, f64::max));
            }
        }
        worst
    }

    pub fn norm_bound(&self) -> f64 {
        self.comps.values().flatten().map(linalg::operator_norm).sum()
    }
}

fn compose(a: &[CMatrix], b: &[CMatrix]) -> Vec<CMatrix> {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).collect()
}

/// Multiplies letters left to right into normal-ordered form.
pub fn normal_order(letters: &[Letter], p: &TensorPowers) -> Result<ToeplitzElement> {
    let mut acc = ToeplitzElement::unit(p);
    for l in letters {
        acc = acc.mul(&l.element(), p)?;
    }
    Ok(acc)
}
