//! Generators of quasi-free dynamics and the transfer matrix
//! `Z_{wv}(β) = tr e^{-βD^{(w,v)}}` acting on trace coefficients by
//! `(Fτ)_v = Σ_w Z_{wv} t_w`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::algebra::{BlockAlgebra, TraceVector};
use crate::correspondence::{tensor_bimodule, BimoduleOperator, Correspondence, TensorProduct};
use crate::error::{KmsError, Result};
use crate::linalg::{self, CMatrix};
use crate::lp::{self, LpOutcome};

/// Default tolerance for feasibility and fixed-point checks.
pub const DEFAULT_TOL: f64 = 1e-9;

const POWER_MAX_ITER: usize = 5000;
const POWER_REL_GAP: f64 = 1e-14;
const SQUARING_STEPS: usize = 64;
// radii closer than this (relative) are treated as equal
const RADIUS_TIE: f64 = 1e-10;

/// Hermitian slots `D^{(w,v)}`; `U_t = e^{itD}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    slots: BimoduleOperator,
}

impl Generator {
    pub fn new(x: &Correspondence, slots: Vec<Vec<CMatrix>>) -> Result<Self> {
        let op = BimoduleOperator::new(x, slots)?;
        Self::from_operator(op)
    }

    pub fn from_operator(op: BimoduleOperator) -> Result<Self> {
        if !op.is_hermitian(1e-12) {
            return Err(KmsError::NotHermitian("generator slots must be Hermitian".into()));
        }
        Ok(Generator { slots: op.map(|s| (s + &linalg::dagger(s)).mapv(|z| z * 0.5)) })
    }

    /// `D = c·1`.
    pub fn scalar(x: &Correspondence, c: f64) -> Self {
        Generator { slots: BimoduleOperator::from_fn(x, |_, _, m| linalg::identity(m).mapv(|z| z * c)) }
    }

    /// Diagonal slots from `energy(w, v, copy)`.
    pub fn diagonal(x: &Correspondence, energy: impl Fn(usize, usize, usize) -> f64) -> Self {
        Generator {
            slots: BimoduleOperator::from_fn(x, |w, v, m| {
                let mut s = linalg::zeros(m, m);
                for c in 0..m {
                    s[[c, c]] = linalg::real(energy(w, v, c));
                }
                s
            }),
        }
    }

    pub fn operator(&self) -> &BimoduleOperator {
        &self.slots
    }

    pub fn slot(&self, w: usize, v: usize) -> &CMatrix {
        self.slots.slot(w, v)
    }

    /// Smallest eigenvalue over all nonempty slots.
    pub fn min_energy(&self) -> Option<f64> {
        self.slots.slots().iter().flatten().filter(|s| !s.is_empty()).map(linalg::min_eigenvalue).reduce(f64::min)
    }

    pub fn positive_energy(&self) -> bool {
        self.min_energy().is_none_or(|e| e > 0.0)
    }

    pub fn check_positive_energy(&self) -> Result<()> {
        match self.min_energy() {
            Some(e) if e <= 0.0 => Err(KmsError::PositiveEnergy(format!("smallest generator eigenvalue is {e}"))),
            _ => Ok(()),
        }
    }

    /// `e^{zD}` slotwise.
    pub fn exp(&self, z: C64) -> BimoduleOperator {
        self.slots.map(|s| linalg::expm_hermitian(s, z))
    }

    pub fn unitary(&self, t: f64) -> BimoduleOperator {
        self.exp(C64::new(0.0, t))
    }

    /// Generator of `U ⊗ U'` on `X ⊗ Y`: `D ⊗ 1 + 1 ⊗ D'`.
    pub fn tensor(&self, tp: &TensorProduct, x: &Correspondence, y: &Correspondence, other: &Generator) -> Generator {
        let left = tensor_bimodule(tp, &self.slots, &BimoduleOperator::identity(y));
        let right = tensor_bimodule(tp, &BimoduleOperator::identity(x), &other.slots);
        Generator { slots: left.add(&right) }
    }
}

/// `e^{-βD}`.
pub fn heat_kernel(d: &Generator, beta: f64) -> BimoduleOperator {
    d.exp(linalg::real(-beta))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    beta: f64,
    z: Array2<f64>,
}

impl TransferMatrix {
    /// Wraps a raw nonnegative matrix.
    pub fn from_matrix(beta: f64, z: Array2<f64>) -> Result<Self> {
        if z.nrows() != z.ncols() {
            return Err(KmsError::Shape("transfer matrix must be square".into()));
        }
        if z.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(KmsError::Invalid("transfer matrix entries must be finite and nonnegative".into()));
        }
        Ok(TransferMatrix { beta, z })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    pub fn entry(&self, w: usize, v: usize) -> f64 {
        self.z[[w, v]]
    }

    /// Matrix of `F` applied twice, i.e. `Z·Z`.
    pub fn compose(&self, other: &Self) -> Self {
        TransferMatrix { beta: self.beta, z: self.z.dot(&other.z) }
    }
}

pub fn transfer_matrix(x: &Correspondence, d: &Generator, beta: f64) -> Result<TransferMatrix> {
    let n = x.num_blocks();
    if d.slots.slots().len() != n {
        return Err(KmsError::Shape("generator does not match the correspondence".into()));
    }
    let mut z = Array2::zeros((n, n));
    for w in 0..n {
        for v in 0..n {
            let s = d.slot(w, v);
            if s.dim() != (x.multiplicity(w, v), x.multiplicity(w, v)) {
                return Err(KmsError::Shape(format!("generator slot ({w},{v}) has the wrong size")));
            }
            if s.is_empty() {
                continue;
            }
            let eig = linalg::HermitianEigen::new(s);
            z[[w, v]] = eig.values.iter().map(|&l| (-beta * l).exp()).sum();
        }
    }
    Ok(TransferMatrix { beta, z })
}

/// `(Fτ)_v = Σ_w Z_{wv} t_w`.
pub fn apply_f(tau: &TraceVector, z: &TransferMatrix) -> Result<TraceVector> {
    Ok(TraceVector::from_raw(apply_transpose(z.matrix(), tau.coeffs())?))
}

pub(crate) fn apply_transpose(z: &Array2<f64>, t: &[f64]) -> Result<Vec<f64>> {
    let n = z.nrows();
    if t.len() != n {
        return Err(KmsError::Shape(format!("vector of length {} against {n} blocks", t.len())));
    }
    Ok((0..n).map(|v| (0..n).map(|w| z[[w, v]] * t[w]).sum()).collect())
}

/// Spectral radius with two-sided bounds and a nonnegative left eigenvector
/// (`Z^T y = r y`, `Σ y = 1`) when one exists at `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerronRoot {
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub vector: Option<Vec<f64>>,
}

/// Strongly connected components of the pattern `Z_{wv} > 0` in
/// topological order (sources first).
pub fn communicating_classes(z: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = z.nrows();
    // Tarjan, iterative
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if top.1 < n {
                let w = top.1;
                top.1 += 1;
                if z[[v, w]] > 0.0 {
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.reverse();
    comps
}

fn submatrix(z: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), idx.len()), |(i, j)| z[[idx[i], idx[j]]])
}

/// Radius, bounds and left Perron vector of an irreducible block.
fn irreducible_perron(b: &Array2<f64>) -> (f64, f64, f64, Vec<f64>) {
    let n = b.nrows();
    if n == 1 {
        return (b[[0, 0]], b[[0, 0]], b[[0, 0]], vec![1.0]);
    }
    let shift = 0.5 * (0..n).map(|i| b.row(i).sum()).fold(0.0, f64::max);
    let shifted = b + &(Array2::<f64>::eye(n) * shift);
    let bounds = |x: &[f64]| -> (f64, f64, Vec<f64>) {
        let y = apply_transpose(&shifted, x).expect("square");
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            let ratio = y[i] / x[i];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        (lo, hi, y)
    };
    let mut x = vec![1.0 / n as f64; n];
    let mut converged = false;
    for _ in 0..POWER_MAX_ITER {
        let (lo, hi, y) = bounds(&x);
        let s: f64 = y.iter().sum();
        x = y.iter().map(|v| v / s).collect();
        if hi - lo <= POWER_REL_GAP * hi {
            converged = true;
            break;
        }
    }
    if !converged {
        // stalled: repeated squaring of the shifted block, rescaled each step
        let mut p = shifted.clone();
        for _ in 0..SQUARING_STEPS {
            p = p.dot(&p);
            let m = p.iter().copied().fold(0.0, f64::max);
            p.mapv_inplace(|v| v / m);
        }
        let col: Vec<f64> = (0..n).map(|j| p.column(j).sum()).collect();
        let s: f64 = col.iter().sum();
        x = col.iter().map(|v| (v / s).max(f64::MIN_POSITIVE)).collect();
        for _ in 0..8 {
            let (_, _, y) = bounds(&x);
            let s: f64 = y.iter().sum();
            x = y.iter().map(|v| v / s).collect();
        }
    }
    let (lo, hi, _) = bounds(&x);
    let r = 0.5 * (lo + hi) - shift;
    ((r).max(0.0), (lo - shift).max(0.0), (hi - shift).max(0.0), x)
}

struct ClassData {
    classes: Vec<Vec<usize>>,
    radius: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    perron: Vec<Vec<f64>>,
    class_of: Vec<usize>,
}

fn class_data(z: &Array2<f64>) -> ClassData {
    let classes = communicating_classes(z);
    let mut class_of = vec![0; z.nrows()];
    let mut radius = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut perron = Vec::new();
    for (k, c) in classes.iter().enumerate() {
        for &v in c {
            class_of[v] = k;
        }
        let (r, lo, hi, x) = irreducible_perron(&submatrix(z, c));
        radius.push(r);
        lower.push(lo);
        upper.push(hi);
        perron.push(x);
    }
    ClassData { classes, radius, lower, upper, perron, class_of }
}

fn downstream(z: &Array2<f64>, start: &[usize]) -> Vec<usize> {
    let n = z.nrows();
    let mut seen = vec![false; n];
    let mut todo: Vec<usize> = start.to_vec();
    for &s in start {
        seen[s] = true;
    }
    while let Some(w) = todo.pop() {
        for v in 0..n {
            if z[[w, v]] > 0.0 && !seen[v] {
                seen[v] = true;
                todo.push(v);
            }
        }
    }
    (0..n).filter(|&v| seen[v] && !start.contains(&v)).collect()
}

/// Nonnegative solution of `Z^T y = λ y` supported on class `c` and its
/// descendants, assuming every descendant class has radius `< λ`.
fn eigenvector_from_class(z: &Array2<f64>, data: &ClassData, c: usize, lambda: f64) -> Option<Vec<f64>> {
    let n = z.nrows();
    let cls = &data.classes[c];
    let desc = downstream(z, cls);
    let mut y = vec![0.0; n];
    for (i, &v) in cls.iter().enumerate() {
        y[v] = data.perron[c][i];
    }
    if !desc.is_empty() {
        let m = desc.len();
        let mut a = Array2::zeros((m, m));
        let mut rhs = vec![0.0; m];
        for (i, &v) in desc.iter().enumerate() {
            a[[i, i]] = lambda;
            for (j, &w) in desc.iter().enumerate() {
                a[[i, j]] -= z[[w, v]];
            }
            rhs[i] = cls.iter().map(|&w| z[[w, v]] * y[w]).sum();
        }
        let sol = linalg::solve_real(&a, &rhs)?;
        for (i, &v) in desc.iter().enumerate() {
            y[v] = sol[i].max(0.0);
        }
    }
    let s: f64 = y.iter().sum();
    (s > 0.0).then(|| y.iter().map(|v| v / s).collect())
}

fn descendants_below(z: &Array2<f64>, data: &ClassData, c: usize, bound: f64) -> bool {
    let desc = downstream(z, &data.classes[c]);
    let mut classes: Vec<usize> = desc.iter().map(|&v| data.class_of[v]).collect();
    classes.dedup();
    classes.iter().all(|&k| data.radius[k] < bound)
}

pub fn spectral_radius(z: &TransferMatrix) -> PerronRoot {
    spectral_radius_of(z.matrix())
}

pub fn spectral_radius_of(z: &Array2<f64>) -> PerronRoot {
    if z.is_empty() {
        return PerronRoot { radius: 0.0, lower: 0.0, upper: 0.0, vector: None };
    }
    let data = class_data(z);
    let k = (0..data.classes.len()).max_by(|&a, &b| data.radius[a].total_cmp(&data.radius[b])).expect("nonempty");
    let r = data.radius[k];
    let lower = data.lower.iter().copied().fold(0.0, f64::max);
    let upper = data.upper.iter().copied().fold(0.0, f64::max);
    if r == 0.0 {
        return PerronRoot { radius: 0.0, lower: 0.0, upper: 0.0, vector: None };
    }
    let tie = RADIUS_TIE * r;
    let vector = (0..data.classes.len())
        .filter(|&c| (data.radius[c] - r).abs() <= tie)
        .find(|&c| descendants_below(z, &data, c, r - tie))
        .and_then(|c| eigenvector_from_class(z, &data, c, data.radius[c]));
    PerronRoot { radius: r, lower, upper, vector }
}

/// Bisection on `β ↦ r(Z(β))` for the unique `β_c ≥ 0` with `r = 1`.
pub fn critical_beta(x: &Correspondence, d: &Generator, tol: f64) -> Result<Option<f64>> {
    d.check_positive_energy()?;
    let r = |beta: f64| -> Result<f64> { Ok(spectral_radius(&transfer_matrix(x, d, beta)?).radius) };
    let r0 = r(0.0)?;
    if r0 == 0.0 || r0 < 1.0 - tol {
        return Ok(None);
    }
    if (r0 - 1.0).abs() <= tol {
        return Ok(Some(0.0));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut steps = 0;
    while r(hi)? > 1.0 {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > 60 {
            return Ok(None);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if r(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    let beta = 0.5 * (lo + hi);
    Ok(((r(beta)? - 1.0).abs() <= tol.max(1e-12)).then_some(beta))
}

/// Solves `min s` subject to `Z^T t − t ≤ s`, `Σ weights_v t_v = 1`,
/// `t ≥ 0`. Returns the minimiser when `s* ≤ tol`.
pub fn subinvariant_lp(z: &Array2<f64>, weights: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = z.nrows();
    assert_eq!(weights.len(), n);
    // variables: t (n), s+, s-, slack (n)
    let cols = 2 * n + 2;
    let mut a = Array2::zeros((n + 1, cols));
    let mut b = vec![0.0; n + 1];
    for v in 0..n {
        for w in 0..n {
            a[[v, w]] = z[[w, v]];
        }
        a[[v, v]] -= 1.0;
        a[[v, n]] = -1.0;
        a[[v, n + 1]] = 1.0;
        a[[v, n + 2 + v]] = 1.0;
    }
    for v in 0..n {
        a[[n, v]] = weights[v];
    }
    b[n] = 1.0;
    let mut c = vec![0.0; cols];
    c[n] = 1.0;
    c[n + 1] = -1.0;
    match lp::minimize(&c, &a, &b) {
        LpOutcome::Optimal { x, value } if value <= tol => Some(x[..n].to_vec()),
        _ => None,
    }
}

/// State-normalised `t ≥ 0` with `Z^T t ≤ t`.
pub fn subinvariant_solver(z: &TransferMatrix, algebra: &BlockAlgebra) -> Option<TraceVector> {
    subinvariant_solver_tol(z, algebra, DEFAULT_TOL)
}

pub fn subinvariant_solver_tol(z: &TransferMatrix, algebra: &BlockAlgebra, tol: f64) -> Option<TraceVector> {
    if z.dim() != algebra.num_blocks() {
        return None;
    }
    let t = subinvariant_lp(z.matrix(), &algebra.dim_weights(), tol)?;
    TraceVector::from_raw(t).normalized(algebra)
}

/// Nonnegative fixed vector of `Z^T` for any eigenvalue `λ`, weighted so
/// that `Σ weights_v t_v = 1`.
pub fn fixed_vector(z: &Array2<f64>, lambda: f64, weights: &[f64], tol: f64) -> Option<Vec<f64>> {
    if z.is_empty() {
        return None;
    }
    let data = class_data(z);
    let candidate = (0..data.classes.len())
        .filter(|&c| (data.radius[c] - lambda).abs() <= tol)
        .find(|&c| descendants_below(z, &data, c, lambda - tol))?;
    let y = eigenvector_from_class(z, &data, candidate, lambda)?;
    let mass: f64 = y.iter().zip(weights).map(|(a, b)| a * b).sum();
    if mass <= 0.0 {
        return None;
    }
    let t: Vec<f64> = y.iter().map(|v| v / mass).collect();
    let zt = apply_transpose(z, &t).ok()?;
    let resid = zt.iter().zip(&t).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
    (resid <= tol.max(1e-12)).then_some(t)
}

/// State-normalised `t ≥ 0` with `Z^T t = t`.
pub fn invariant_solver(z: &TransferMatrix, algebra: &BlockAlgebra) -> Option<TraceVector> {
    invariant_solver_tol(z, algebra, DEFAULT_TOL)
}

pub fn invariant_solver_tol(z: &TransferMatrix, algebra: &BlockAlgebra, tol: f64) -> Option<TraceVector> {
    if z.dim() != algebra.num_blocks() {
        return None;
    }
    fixed_vector(z.matrix(), 1.0, &algebra.dim_weights(), tol).map(TraceVector::from_raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correspondence::{induced_trace_functional, tensor};

    const LN2: f64 = std::f64::consts::LN_2;

    fn cuntz(n: usize) -> Correspondence {
        Correspondence::new(BlockAlgebra::new(vec![1]).unwrap(), vec![vec![n]]).unwrap()
    }

    fn fibonacci() -> Correspondence {
        Correspondence::new(BlockAlgebra::commutative(2).unwrap(), vec![vec![1, 1], vec![1, 0]]).unwrap()
    }

    fn golden() -> f64 {
        (1.0 + 5f64.sqrt()) / 2.0
    }

    fn mat(rows: &[&[f64]]) -> Array2<f64> {
        let n = rows.len();
        Array2::from_shape_fn((n, rows[0].len()), |(i, j)| rows[i][j])
    }

    #[test]
    fn heat_kernel_examples() {
        let x = cuntz(2);
        let d = Generator::scalar(&x, 1.0);
        assert_eq!(heat_kernel(&d, 0.0).max_abs_diff(&BimoduleOperator::identity(&x)), 0.0);
        let half = heat_kernel(&d, LN2);
        assert!(half.max_abs_diff(&BimoduleOperator::identity(&x).scale(linalg::real(0.5))) < 1e-15);
        let diag = Generator::diagonal(&x, |_, _, c| (c + 1) as f64);
        let e = heat_kernel(&diag, 1.0);
        assert!((e.slot(0, 0)[[0, 0]].re - (-1f64).exp()).abs() < 1e-15);
        assert!((e.slot(0, 0)[[1, 1]].re - (-2f64).exp()).abs() < 1e-15);
        assert!(e.slot(0, 0)[[0, 1]].norm() < 1e-15);
        let u = d.unitary(0.7).compose(&d.unitary(-0.2));
        assert!(u.max_abs_diff(&d.unitary(0.5)) < 1e-14);
    }

    #[test]
    fn transfer_matrix_examples() {
        let x = cuntz(2);
        let z = transfer_matrix(&x, &Generator::scalar(&x, 1.0), LN2).unwrap();
        assert!((z.entry(0, 0) - 1.0).abs() < 1e-15);
        let f = fibonacci();
        let d = Generator::scalar(&f, 1.0);
        let beta = 0.37;
        let z = transfer_matrix(&f, &d, beta).unwrap();
        let e = (-beta).exp();
        for (w, v, want) in [(0, 0, e), (0, 1, e), (1, 0, e), (1, 1, 0.0)] {
            assert!((z.entry(w, v) - want).abs() < 1e-15);
        }
        let z0 = transfer_matrix(&f, &d, 0.0).unwrap();
        assert_eq!(z0.matrix(), &mat(&[&[1.0, 1.0], &[1.0, 0.0]]));
    }

    #[test]
    fn apply_f_examples() {
        let x = cuntz(2);
        let d = Generator::scalar(&x, 1.0);
        let one = TraceVector::new(vec![1.0]).unwrap();
        let f1 = apply_f(&one, &transfer_matrix(&x, &d, LN2).unwrap()).unwrap();
        assert!((f1.coeffs()[0] - 1.0).abs() < 1e-15);
        let f3 = apply_f(&one, &transfer_matrix(&x, &d, 3f64.ln()).unwrap()).unwrap();
        assert!((f3.coeffs()[0] - 2.0 / 3.0).abs() < 1e-15);
        let zero = TransferMatrix::from_matrix(1.0, Array2::zeros((1, 1))).unwrap();
        assert_eq!(apply_f(&one, &zero).unwrap().coeffs(), &[0.0]);
    }

    #[test]
    fn apply_f_matches_induced_trace_functional() {
        let x = Correspondence::new(BlockAlgebra::new(vec![1, 2]).unwrap(), vec![vec![2, 1], vec![1, 1]]).unwrap();
        let d = Generator::diagonal(&x, |w, v, c| 0.3 + w as f64 + 0.5 * v as f64 + 0.25 * c as f64);
        let tau = TraceVector::new(vec![0.4, 0.2]).unwrap();
        for beta in [0.0, 0.5, 1.3] {
            let z = transfer_matrix(&x, &d, beta).unwrap();
            let direct = induced_trace_functional(&tau, &heat_kernel(&d, beta), &x).unwrap();
            let via = apply_f(&tau, &z).unwrap();
            for (a, b) in direct.coeffs().iter().zip(via.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spectral_radius_examples() {
        let one = spectral_radius_of(&mat(&[&[1.0]]));
        assert_eq!(one.radius, 1.0);
        assert_eq!(one.vector, Some(vec![1.0]));
        let fib = spectral_radius_of(&mat(&[&[1.0, 1.0], &[1.0, 0.0]]));
        assert!((fib.radius - golden()).abs() < 1e-12);
        assert!(fib.lower <= golden() + 1e-12 && golden() <= fib.upper + 1e-12);
        let y = fib.vector.unwrap();
        assert!((y[0] / y[1] - golden()).abs() < 1e-10);
        let nil = spectral_radius_of(&mat(&[&[0.0, 1.0, 2.0], &[0.0, 0.0, 3.0], &[0.0, 0.0, 0.0]]));
        assert_eq!(nil.radius, 0.0);
        assert!(nil.vector.is_none());
    }

    #[test]
    fn spectral_radius_reducible_and_periodic() {
        // period two: power iteration without a shift would oscillate
        let p = spectral_radius_of(&mat(&[&[0.0, 2.0], &[0.5, 0.0]]));
        assert!((p.radius - 1.0).abs() < 1e-12);
        // 0 -> 1, class {0} radius 2, class {1} radius 1
        let z = mat(&[&[2.0, 1.0], &[0.0, 1.0]]);
        let r = spectral_radius_of(&z);
        assert!((r.radius - 2.0).abs() < 1e-12);
        let y = r.vector.unwrap();
        let zt = apply_transpose(&z, &y).unwrap();
        for (a, b) in zt.iter().zip(&y) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
        assert!(y.iter().all(|&v| v > 0.0));
        // upstream class with the larger radius feeding nothing back
        let z = mat(&[&[1.0, 0.0], &[1.0, 3.0]]);
        let r = spectral_radius_of(&z);
        assert!((r.radius - 3.0).abs() < 1e-12);
        let y = r.vector.unwrap();
        assert!(y[0] > 0.0 && y[1] > 0.0);
    }

    #[test]
    fn communicating_classes_are_topological() {
        let z = mat(&[&[0.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0]]);
        assert_eq!(communicating_classes(&z), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn critical_beta_examples() {
        for (n, want) in [(2usize, LN2), (3, 3f64.ln())] {
            let x = cuntz(n);
            let b = critical_beta(&x, &Generator::scalar(&x, 1.0), 1e-12).unwrap().unwrap();
            assert!((b - want).abs() < 1e-8);
        }
        let f = fibonacci();
        let b = critical_beta(&f, &Generator::scalar(&f, 1.0), 1e-12).unwrap().unwrap();
        assert!((b - golden().ln()).abs() < 1e-8);
        assert!((b - 0.4812118).abs() < 1e-7);
        let acyclic = Correspondence::new(BlockAlgebra::commutative(2).unwrap(), vec![vec![0, 0], vec![1, 0]]).unwrap();
        assert_eq!(critical_beta(&acyclic, &Generator::scalar(&acyclic, 1.0), 1e-12).unwrap(), None);
        let x = cuntz(2);
        assert!(matches!(critical_beta(&x, &Generator::scalar(&x, 0.0), 1e-12), Err(KmsError::PositiveEnergy(_))));
        assert_eq!(critical_beta(&cuntz(1), &Generator::scalar(&cuntz(1), 1.0), 1e-12).unwrap(), Some(0.0));
    }

    #[test]
    fn subinvariant_examples() {
        let x = cuntz(2);
        let alg = x.algebra().clone();
        let d = Generator::scalar(&x, 1.0);
        let t = subinvariant_solver(&transfer_matrix(&x, &d, 3f64.ln()).unwrap(), &alg).unwrap();
        assert!((t.coeffs()[0] - 1.0).abs() < 1e-12);
        assert!(subinvariant_solver(&transfer_matrix(&x, &d, 0.5).unwrap(), &alg).is_none());
        let alg3 = BlockAlgebra::new(vec![1, 2, 1]).unwrap();
        let id = TransferMatrix::from_matrix(1.0, Array2::eye(3)).unwrap();
        let t = subinvariant_solver(&id, &alg3).unwrap();
        assert!(t.is_state(&alg3, 1e-12));
    }

    #[test]
    fn invariant_examples() {
        let x = cuntz(2);
        let alg = x.algebra().clone();
        let d = Generator::scalar(&x, 1.0);
        let t = invariant_solver(&transfer_matrix(&x, &d, LN2).unwrap(), &alg).unwrap();
        assert!((t.coeffs()[0] - 1.0).abs() < 1e-12);
        assert!(invariant_solver(&transfer_matrix(&x, &d, 3f64.ln()).unwrap(), &alg).is_none());

        let f = fibonacci();
        let fd = Generator::scalar(&f, 1.0);
        let t = invariant_solver(&transfer_matrix(&f, &fd, golden().ln()).unwrap(), f.algebra()).unwrap();
        let g = golden();
        assert!((t.coeffs()[0] - g / (g + 1.0)).abs() < 1e-10);
        assert!((t.coeffs()[1] - 1.0 / (g + 1.0)).abs() < 1e-10);
    }

    #[test]
    fn invariant_on_reducible_picks_downstream_class() {
        // class {0} radius 1 feeding class {1} radius 1: only e_1 is fixed
        let z = TransferMatrix::from_matrix(0.0, mat(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap();
        let alg = BlockAlgebra::commutative(2).unwrap();
        let t = invariant_solver(&z, &alg).unwrap();
        assert!(t.coeffs()[0].abs() < 1e-15 && (t.coeffs()[1] - 1.0).abs() < 1e-15);
        // class {0} radius 1 feeding class {1} radius 1/2
        let z = TransferMatrix::from_matrix(0.0, mat(&[&[1.0, 1.0], &[0.0, 0.5]])).unwrap();
        let t = invariant_solver(&z, &alg).unwrap();
        assert!((t.coeffs()[0] - 1.0 / 3.0).abs() < 1e-12 && (t.coeffs()[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_square_transfer_is_product() {
        let x = Correspondence::new(BlockAlgebra::new(vec![1, 2]).unwrap(), vec![vec![1, 2], vec![1, 1]]).unwrap();
        let d = Generator::diagonal(&x, |w, v, c| 0.2 + 0.3 * (w + 2 * v + c) as f64);
        let tp = tensor(&x, &x).unwrap();
        let d2 = d.tensor(&tp, &x, &x, &d);
        for beta in [0.0, 0.4, 1.1] {
            let z = transfer_matrix(&x, &d, beta).unwrap();
            let z2 = transfer_matrix(tp.correspondence(), &d2, beta).unwrap();
            let prod = z.compose(&z);
            for (a, b) in z2.matrix().iter().zip(prod.matrix()) {
                assert!((a - b).abs() < 1e-11 * a.abs().max(1.0));
            }
        }
    }
}
