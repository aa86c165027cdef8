//! Word files: JSON arrays of `{"xi": [...], "eta": [...]}` entries.
//!
//! Each entry denotes `T_{ξ₁}…T_{ξ_m} T*_{η_n}…T*_{η₁}`. A vector literal
//! is a list of terms `{w, v, copy, inner, col, c}` naming the basis vector
//! with row `(v, copy, inner)` and column `col` in right block `w`.

use kmslab_core::{Correspondence, ModuleVector, MonomialWord, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub w: usize,
    pub v: usize,
    pub copy: usize,
    #[serde(default)]
    pub inner: usize,
    #[serde(default)]
    pub col: usize,
    #[serde(default = "one")]
    pub c: [f64; 2],
}

fn one() -> [f64; 2] {
    [1.0, 0.0]
}

pub type VectorLiteral = Vec<Term>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordLiteral {
    #[serde(default)]
    pub xi: Vec<VectorLiteral>,
    #[serde(default)]
    pub eta: Vec<VectorLiteral>,
}

pub fn parse_words(text: &str) -> Result<Vec<WordLiteral>, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("words: {e}")))
}

fn vector(x: &Correspondence, lit: &VectorLiteral, at: &str) -> Result<ModuleVector, CliError> {
    let mut out = ModuleVector::zero(x);
    for (k, t) in lit.iter().enumerate() {
        let n = x.num_blocks();
        let bad = |what: &str| CliError::Input(format!("{at}[{k}]: {what}"));
        if t.w >= n || t.v >= n {
            return Err(bad("block index out of range"));
        }
        if t.copy >= x.multiplicity(t.w, t.v) {
            return Err(bad("copy index out of range"));
        }
        if t.inner >= x.algebra().dim(t.v) {
            return Err(bad("inner index out of range"));
        }
        if t.col >= x.algebra().dim(t.w) {
            return Err(bad("col index out of range"));
        }
        if !t.c[0].is_finite() || !t.c[1].is_finite() {
            return Err(bad("coefficient is not finite"));
        }
        let e = ModuleVector::basis(x, t.w, x.row(t.w, t.v, t.copy, t.inner), t.col);
        out = out.add(&e.scale(C64::new(t.c[0], t.c[1])));
    }
    Ok(out)
}

impl WordLiteral {
    pub fn word(&self, x: &Correspondence, index: usize) -> Result<MonomialWord, CliError> {
        let left = self
            .xi
            .iter()
            .enumerate()
            .map(|(k, l)| vector(x, l, &format!("words[{index}].xi[{k}]")))
            .collect::<Result<_, _>>()?;
        let right = self
            .eta
            .iter()
            .enumerate()
            .map(|(k, l)| vector(x, l, &format!("words[{index}].eta[{k}]")))
            .collect::<Result<_, _>>()?;
        Ok(MonomialWord::new(left, right))
    }

    pub fn len(&self) -> usize {
        self.xi.len().max(self.eta.len())
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty() && self.eta.is_empty()
    }
}
