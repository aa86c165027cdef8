//! `kms-lab/1` instance files.

use std::collections::BTreeMap;

use kmslab_core::linalg::{self, CMatrix};
use kmslab_core::{BlockAlgebra, CoeffDynamics, Correspondence, Generator, TraceVector, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT: &str = "kms-lab/1";
const HERMITIAN_TOL: f64 = 1e-10;

/// Matrix as rows of `[re, im]` pairs.
pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format: String,
    pub algebra: AlgebraSection,
    pub module: ModuleSection,
    pub generator: GeneratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_dynamics: Option<DynamicsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraSection {
    pub block_dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSection {
    pub mult: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSection {
    pub slots: BTreeMap<String, MatrixLiteral>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(rename = "H")]
    pub h: Vec<MatrixLiteral>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub t: Vec<f64>,
}

/// Validated model built from a file.
#[derive(Clone, Debug)]
pub struct Model {
    pub correspondence: Correspondence,
    pub generator: Generator,
    pub dynamics: Option<CoeffDynamics>,
    pub beta: Option<f64>,
    pub trace: Option<TraceVector>,
}

pub fn slot_key(w: usize, v: usize) -> String {
    format!("({w},{v})")
}

fn parse_key(key: &str) -> Option<(usize, usize)> {
    let inner = key.trim().strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn matrix_from_literal(lit: &MatrixLiteral, n: usize, key: &str) -> Result<CMatrix, CliError> {
    if lit.len() != n || lit.iter().any(|r| r.len() != n) {
        return Err(CliError::Input(format!("{key}: expected a {n}x{n} matrix")));
    }
    let mut m = linalg::zeros(n, n);
    for (i, row) in lit.iter().enumerate() {
        for (j, [re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(CliError::Input(format!("{key}: entry ({i},{j}) is not finite")));
            }
            m[[i, j]] = C64::new(*re, *im);
        }
    }
    if !linalg::is_hermitian(&m, HERMITIAN_TOL) {
        return Err(CliError::Input(format!("{key}: matrix is not Hermitian within {HERMITIAN_TOL:e}")));
    }
    Ok(m)
}

pub fn matrix_literal(m: &CMatrix) -> MatrixLiteral {
    m.rows().into_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| CliError::Input(format!("instance: {e}")))?;
        if file.format != FORMAT {
            return Err(CliError::Input(format!("format: expected \"{FORMAT}\", found \"{}\"", file.format)));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files serialize")
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let alg = BlockAlgebra::new(self.algebra.block_dims.clone())
            .map_err(|e| CliError::Input(format!("algebra.block_dims: {e}")))?;
        let x = Correspondence::new(alg.clone(), self.module.mult.clone())
            .map_err(|e| CliError::Input(format!("module.mult: {e}")))?;
        let n = x.num_blocks();
        let mut slots: Vec<Vec<CMatrix>> = (0..n)
            .map(|w| (0..n).map(|v| linalg::zeros(x.multiplicity(w, v), x.multiplicity(w, v))).collect())
            .collect();
        for (key, lit) in &self.generator.slots {
            let (w, v) = parse_key(key)
                .filter(|&(w, v)| w < n && v < n)
                .ok_or_else(|| CliError::Input(format!("generator.slots: bad key \"{key}\"")))?;
            let m = x.multiplicity(w, v);
            if m == 0 {
                return Err(CliError::Input(format!("generator.slots.{key}: block pair has multiplicity 0")));
            }
            slots[w][v] = matrix_from_literal(lit, m, &format!("generator.slots.{key}"))?;
        }
        for w in 0..n {
            for v in 0..n {
                if x.multiplicity(w, v) > 0 && !self.generator.slots.keys().any(|k| parse_key(k) == Some((w, v))) {
                    return Err(CliError::Input(format!("generator.slots: missing key \"{}\"", slot_key(w, v))));
                }
            }
        }
        let generator = Generator::new(&x, slots).map_err(|e| CliError::Input(format!("generator.slots: {e}")))?;
        let dynamics = match &self.coeff_dynamics {
            None => None,
            Some(sec) => {
                if sec.h.len() != n {
                    return Err(CliError::Input(format!("coeff_dynamics.H: expected {n} blocks")));
                }
                let hs = sec
                    .h
                    .iter()
                    .enumerate()
                    .map(|(v, lit)| matrix_from_literal(lit, alg.dim(v), &format!("coeff_dynamics.H[{v}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(CoeffDynamics::new(&alg, hs).map_err(|e| CliError::Input(format!("coeff_dynamics.H: {e}")))?)
            }
        };
        if let Some(b) = self.beta {
            if !b.is_finite() || b < 0.0 {
                return Err(CliError::Input("beta: must be finite and >= 0".into()));
            }
        }
        let trace = match &self.trace {
            None => None,
            Some(t) => {
                if t.t.len() != n {
                    return Err(CliError::Input(format!("trace.t: expected {n} entries")));
                }
                Some(TraceVector::new(t.t.clone()).map_err(|e| CliError::Input(format!("trace.t: {e}")))?)
            }
        };
        Ok(Model { correspondence: x, generator, dynamics, beta: self.beta, trace })
    }

    /// File for a correspondence and generator.
    pub fn from_parts(x: &Correspondence, d: &Generator, h: Option<&CoeffDynamics>) -> Self {
        let n = x.num_blocks();
        let mut slots = BTreeMap::new();
        for w in 0..n {
            for v in 0..n {
                if x.multiplicity(w, v) > 0 {
                    slots.insert(slot_key(w, v), matrix_literal(d.slot(w, v)));
                }
            }
        }
        InstanceFile {
            format: FORMAT.to_string(),
            algebra: AlgebraSection { block_dims: x.algebra().dims().to_vec() },
            module: ModuleSection { mult: x.mult().to_vec() },
            generator: GeneratorSection { slots },
            coeff_dynamics: h.map(|h| DynamicsSection { h: h.hamiltonians().iter().map(matrix_literal).collect() }),
            beta: None,
            trace: None,
        }
    }
}
