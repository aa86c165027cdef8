//! Example instances: Cuntz, Cuntz–Krieger / Exel–Laca, identity bimodule,
//! acyclic chains and seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{BlockAlgebra, CoeffDynamics, TraceVector};
use crate::correspondence::{BimoduleOperator, Correspondence};
use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix};
use crate::transfer::{self, Generator};

/// Largest index set enumerated without sampling.
pub const EL_ENUMERATION_LIMIT: usize = 12;
const EL_TOL: f64 = 1e-12;

/// Named instance with a positive-energy generator.
#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub correspondence: Correspondence,
    pub generator: Generator,
    pub dynamics: Option<CoeffDynamics>,
}

impl Instance {
    fn new(name: &str, (x, d): (Correspondence, Generator)) -> Self {
        Instance { name: name.to_string(), correspondence: x, generator: d, dynamics: None }
    }
}

/// `A = ℂ`, `X = ℂ^n`, `D = λ·1`.
pub fn cuntz(n: usize, lambda: f64) -> Result<(Correspondence, Generator)> {
    if n == 0 {
        return Err(KmsError::Invalid("cuntz needs n >= 1".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(KmsError::Invalid("cuntz needs a finite λ > 0".into()));
    }
    let x = Correspondence::new(BlockAlgebra::new(vec![1])?, vec![vec![n]])?;
    let d = Generator::scalar(&x, lambda);
    Ok((x, d))
}

/// 0-1 matrix `T` over a finite index set with weights `N_j > 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExelLacaInstance {
    t: Vec<Vec<bool>>,
    weights: Vec<f64>,
}

impl ExelLacaInstance {
    pub fn new(t: Vec<Vec<bool>>, weights: Vec<f64>) -> Result<Self> {
        let inst = Self::graph(t, weights)?;
        let (t, n) = (&inst.t, inst.size());
        for a in 0..n {
            for b in a + 1..n {
                if (0..n).all(|l| t[l][a] == t[l][b]) {
                    return Err(KmsError::Invalid(format!(
                        "columns {a} and {b} of T coincide; the rows of T would generate a proper subalgebra of C^{n}"
                    )));
                }
            }
        }
        Ok(inst)
    }

    /// Cuntz–Krieger graph data over the vertex algebra `ℂ^{|I|}`; repeated
    /// columns are allowed. The inequality report still assumes the rows
    /// generate `ℂ^{|I|}`.
    pub fn graph(t: Vec<Vec<bool>>, weights: Vec<f64>) -> Result<Self> {
        let n = t.len();
        if n == 0 || t.iter().any(|r| r.len() != n) || weights.len() != n {
            return Err(KmsError::Shape("T must be square with one weight per index".into()));
        }
        if let Some(j) = (0..n).find(|&j| !t[j].iter().any(|&b| b)) {
            return Err(KmsError::Invalid(format!("row {j} of T is zero")));
        }
        if let Some(j) = (0..n).find(|&j| !t.iter().any(|r| r[j])) {
            return Err(KmsError::Invalid(format!("column {j} of T is zero")));
        }
        if let Some(j) = weights.iter().position(|&w| !(w > 1.0) || !w.is_finite()) {
            return Err(KmsError::Invalid(format!("weight N_{j} must be finite and > 1")));
        }
        Ok(ExelLacaInstance { t, weights })
    }

    pub fn from_ints(t: &[Vec<u8>], weights: Vec<f64>) -> Result<Self> {
        Self::new(t.iter().map(|r| r.iter().map(|&b| b != 0).collect()).collect(), weights)
    }

    pub fn size(&self) -> usize {
        self.t.len()
    }

    pub fn entry(&self, j: usize, k: usize) -> bool {
        self.t[j][k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `T(Y,Z,j) = Π_{l∈Y} T(l,j) Π_{k∈Z} (1 − T(k,j))`.
    pub fn indicator(&self, y: &[usize], z: &[usize], j: usize) -> bool {
        y.iter().all(|&l| self.t[l][j]) && z.iter().all(|&k| !self.t[k][j])
    }
}

/// `T = [[1,1],[1,0]]`, `N = (e, e)`.
pub fn fibonacci() -> ExelLacaInstance {
    let e = std::f64::consts::E;
    ExelLacaInstance::from_ints(&[vec![1, 1], vec![1, 0]], vec![e, e]).expect("valid instance")
}

/// `A = ℂ^{|I|}`, `M[w][v] = T(v,w)`, `D^{(w,v)} = log N_v`.
pub fn cuntz_krieger(inst: &ExelLacaInstance) -> Result<(Correspondence, Generator)> {
    let n = inst.size();
    let mult = (0..n).map(|w| (0..n).map(|v| inst.t[v][w] as usize).collect()).collect();
    let x = Correspondence::new(BlockAlgebra::commutative(n)?, mult)?;
    let logs: Vec<f64> = inst.weights.iter().map(|w| w.ln()).collect();
    let d = Generator::diagonal(&x, |_, v, _| logs[v]);
    Ok((x, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElMode {
    Enumerate,
    Sampled { seed: u64, samples: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElViolation {
    pub y: Vec<usize>,
    pub z: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElReport {
    pub checked: usize,
    pub sampled: bool,
    pub violations: Vec<ElViolation>,
    /// Smallest `rhs − lhs` seen; zero means some inequality is tight.
    pub min_slack: f64,
}

impl ElReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `Σ_j N_j^{-β} T(Y,Z,j) τ(q_j) ≤ τ(q(Y,Z))` for disjoint `Y, Z`.
pub fn el_inequalities(inst: &ExelLacaInstance, beta: f64, tau: &TraceVector, mode: ElMode) -> Result<ElReport> {
    let n = inst.size();
    if tau.len() != n {
        return Err(KmsError::Shape("trace length differs from |I|".into()));
    }
    let t = tau.coeffs();
    // τ(q_j) = Σ_i T(j,i) t_i
    let tq: Vec<f64> = (0..n).map(|j| (0..n).filter(|&i| inst.t[j][i]).map(|i| t[i]).sum()).collect();
    let coef: Vec<f64> = (0..n).map(|j| inst.weights[j].powf(-beta) * tq[j]).collect();
    let mut report = ElReport { checked: 0, sampled: false, violations: Vec::new(), min_slack: f64::INFINITY };
    let check = |labels: &[u8], report: &mut ElReport| {
        let y: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
        let z: Vec<usize> = (0..n).filter(|&i| labels[i] == 2).collect();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for j in 0..n {
            if inst.indicator(&y, &z, j) {
                lhs += coef[j];
                rhs += t[j];
            }
        }
        report.checked += 1;
        report.min_slack = report.min_slack.min(rhs - lhs);
        if lhs > rhs + EL_TOL * rhs.max(1.0) {
            report.violations.push(ElViolation { y, z, lhs, rhs });
        }
    };
    match mode {
        ElMode::Enumerate => {
            if n > EL_ENUMERATION_LIMIT {
                return Err(KmsError::Resource(format!(
                    "|I| = {n} exceeds the enumeration limit {EL_ENUMERATION_LIMIT}; use sampling"
                )));
            }
            let mut labels = vec![0u8; n];
            loop {
                check(&labels, &mut report);
                let mut i = 0;
                while i < n && labels[i] == 2 {
                    labels[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                labels[i] += 1;
            }
        }
        ElMode::Sampled { seed, samples } => {
            report.sampled = true;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            check(&vec![0u8; n], &mut report);
            for _ in 0..samples {
                let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3)).collect();
                check(&labels, &mut report);
            }
        }
    }
    Ok(report)
}

/// `Z^T t ≤ t` for the Cuntz–Krieger transfer matrix.
pub fn blockwise_subinvariant(inst: &ExelLacaInstance, beta: f64, tau: &TraceVector) -> Result<bool> {
    let (x, d) = cuntz_krieger(inst)?;
    let z = transfer::transfer_matrix(&x, &d, beta)?;
    let ft = transfer::apply_f(tau, &z)?;
    Ok(ft.coeffs().iter().zip(tau.coeffs()).all(|(a, b)| *a <= b + EL_TOL * b.max(1.0)))
}

/// `A` over itself with `D = 0`.
pub fn identity_bimodule(alg: &BlockAlgebra) -> (Correspondence, Generator) {
    let x = Correspondence::identity(alg);
    let d = Generator::scalar(&x, 0.0);
    (x, d)
}

/// Chain `0 → 1 → … → n−1` over `ℂ^n` with `D = 1`; `Z` is nilpotent.
pub fn acyclic(n: usize) -> Result<(Correspondence, Generator)> {
    if n == 0 {
        return Err(KmsError::Invalid("acyclic needs n >= 1".into()));
    }
    let mult = (0..n).map(|w| (0..n).map(|v| usize::from(v + 1 == w)).collect()).collect();
    let x = Correspondence::new(BlockAlgebra::commutative(n)?, mult)?;
    let d = Generator::scalar(&x, 1.0);
    Ok((x, d))
}

#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub correspondence: Correspondence,
    pub generator: Generator,
    pub dynamics: Option<CoeffDynamics>,
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMatrix {
    let mut a = linalg::zeros(n, n);
    for i in 0..n {
        a[[i, i]] = linalg::real(rng.gen_range(-scale..scale));
        for j in i + 1..n {
            let z = num_complex::Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
            a[[i, j]] = z;
            a[[j, i]] = z.conj();
        }
    }
    a
}

/// Hermitian with spectrum drawn from `[lo, hi]`.
fn random_spectrum(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> CMatrix {
    let u = linalg::expm_hermitian(&random_hermitian(rng, n, 1.0), num_complex::Complex64::i());
    let mut diag = linalg::zeros(n, n);
    for i in 0..n {
        diag[[i, i]] = linalg::real(rng.gen_range(lo..=hi));
    }
    u.dot(&diag).dot(&linalg::dagger(&u))
}

/// Deterministic instance with every row and column of `M` nonzero, `D`
/// eigenvalues in `[0.1, 2]` and, half of the time, a coefficient dynamics.
pub fn random_instance(seed: u64, v_max: usize, d_max: usize, mult_max: usize) -> Result<RandomInstance> {
    if v_max == 0 || d_max == 0 || mult_max == 0 {
        return Err(KmsError::Invalid("random_instance bounds must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(1..=v_max);
    let dims: Vec<usize> = (0..nb).map(|_| rng.gen_range(1..=d_max)).collect();
    let mut mult: Vec<Vec<usize>> = (0..nb).map(|_| (0..nb).map(|_| rng.gen_range(0..=mult_max)).collect()).collect();
    for w in 0..nb {
        if mult[w].iter().all(|&m| m == 0) {
            let v = rng.gen_range(0..nb);
            mult[w][v] = 1;
        }
    }
    for v in 0..nb {
        if (0..nb).all(|w| mult[w][v] == 0) {
            let w = rng.gen_range(0..nb);
            mult[w][v] = 1;
        }
    }
    let x = Correspondence::new(BlockAlgebra::new(dims.clone())?, mult)?;
    let op = BimoduleOperator::from_fn(&x, |_, _, m| random_spectrum(&mut rng, m, 0.1, 2.0));
    let generator = Generator::from_operator(op)?;
    let dynamics = if rng.gen_bool(0.5) {
        let hs = dims.iter().map(|&d| random_hermitian(&mut rng, d, 1.0)).collect();
        Some(CoeffDynamics::new(x.algebra(), hs)?)
    } else {
        None
    };
    Ok(RandomInstance { correspondence: x, generator, dynamics })
}

/// Instances used by the command line and the residual suites.
pub fn catalog_instances() -> Vec<Instance> {
    let mut out = Vec::new();
    for n in 2..=4 {
        out.push(Instance::new(&format!("cuntz{n}"), cuntz(n, 1.0).expect("valid")));
    }
    out.push(Instance::new("fibonacci", cuntz_krieger(&fibonacci()).expect("valid")));
    let golden_mean = ExelLacaInstance::from_ints(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]], vec![2.0, 3.0, 2.5])
        .expect("valid instance");
    out.push(Instance::new("cuntz-krieger3", cuntz_krieger(&golden_mean).expect("valid")));
    let x =
        Correspondence::new(BlockAlgebra::new(vec![1, 2]).expect("dims"), vec![vec![1, 1], vec![2, 1]]).expect("valid");
    let d = Generator::diagonal(&x, |w, v, c| 0.5 + 0.25 * (w + 2 * v + c) as f64);
    out.push(Instance::new("matrix-blocks", (x, d)));
    out
}

pub fn catalog_instance(name: &str) -> Option<Instance> {
    catalog_instances().into_iter().find(|i| i.name == name)
}
