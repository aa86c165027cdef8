//! Dense complex matrix helpers and a cyclic Jacobi eigensolver for
//! Hermitian matrices.
//!
//! Everything in the crate works with small dense blocks (sizes up to a few
//! hundred), so the routines here favour robustness over speed.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

pub type CMatrix = Array2<C64>;

const JACOBI_REL_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    Array2::zeros((rows, cols))
}

pub fn identity(n: usize) -> CMatrix {
    Array2::eye(n)
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diag().sum()
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Kronecker product with `outer` indexing the slow (outer) position.
pub fn kron(outer: &CMatrix, inner: &CMatrix) -> CMatrix {
    let (or, oc) = outer.dim();
    let (ir, ic) = inner.dim();
    let mut out = zeros(or * ir, oc * ic);
    for ((a, b), &x) in outer.indexed_iter() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        for ((i, j), &y) in inner.indexed_iter() {
            out[[a * ir + i, b * ic + j]] = x * y;
        }
    }
    out
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    let (r, c) = a.dim();
    if r != c {
        return false;
    }
    for i in 0..r {
        for j in i..r {
            if (a[[i, j]] - a[[j, i]].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Eigen-decomposition `A = V diag(values) V*` of a Hermitian matrix.
/// Eigenvalues are sorted ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Array1<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Cyclic Jacobi iteration with complex plane rotations. Stops when the
    /// off-diagonal Frobenius norm falls below `1e-13` relative to the input
    /// norm.
    pub fn new(a: &CMatrix) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Jacobi eigensolver needs a square matrix");
        // symmetrise to absorb rounding noise in the input
        let mut m = (a + &dagger(a)).mapv(|z| z * 0.5);
        let mut v = identity(n);
        let scale = frobenius_norm(&m);
        if n > 1 && scale > 0.0 {
            for _ in 0..JACOBI_MAX_SWEEPS {
                if off_diagonal_norm(&m) <= JACOBI_REL_TOL * scale {
                    break;
                }
                for p in 0..n - 1 {
                    for q in p + 1..n {
                        rotate(&mut m, &mut v, p, q);
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[[i, i]].re.total_cmp(&m[[j, j]].re));
        let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]].re));
        let mut vectors = zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            vectors.column_mut(new).assign(&v.column(old));
        }
        HermitianEigen { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::INFINITY)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// `V diag(f(values)) V*`.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            scaled.column_mut(j).mapv_inplace(|z| z * fj);
        }
        scaled.dot(&dagger(&self.vectors))
    }
}

fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let mut s = 0.0;
    for ((i, j), z) in m.indexed_iter() {
        if i != j {
            s += z.norm_sqr();
        }
    }
    s.sqrt()
}

fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[[p, q]];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let theta = (m[[q, q]].re - m[[p, p]].re) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = m.nrows();
    // columns: M <- M J with J_pp = c, J_pq = s e^{i phi}, J_qp = -s e^{-i phi}, J_qq = c
    for k in 0..n {
        let kp = m[[k, p]];
        let kq = m[[k, q]];
        m[[k, p]] = kp * c - kq * s * phase.conj();
        m[[k, q]] = kp * s * phase + kq * c;
    }
    // rows: M <- J* M
    for k in 0..n {
        let pk = m[[p, k]];
        let qk = m[[q, k]];
        m[[p, k]] = pk * c - qk * s * phase;
        m[[q, k]] = pk * s * phase.conj() + qk * c;
    }
    m[[p, q]] = C64::new(0.0, 0.0);
    m[[q, p]] = C64::new(0.0, 0.0);
    for k in 0..n {
        let kp = v[[k, p]];
        let kq = v[[k, q]];
        v[[k, p]] = kp * c - kq * s * phase.conj();
        v[[k, q]] = kp * s * phase + kq * c;
    }
}

/// `e^{z H}` for Hermitian `H` and complex `z`.
pub fn expm_hermitian(h: &CMatrix, z: C64) -> CMatrix {
    if h.is_empty() {
        return h.clone();
    }
    HermitianEigen::new(h).apply(|l| (z * l).exp())
}

/// Positive semidefinite square root (negative rounding noise clamped to 0).
pub fn sqrt_psd(h: &CMatrix) -> CMatrix {
    HermitianEigen::new(h).apply(|l| C64::new(l.max(0.0).sqrt(), 0.0))
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = dagger(a).dot(a);
    HermitianEigen::new(&gram).max().max(0.0).sqrt()
}

pub fn min_eigenvalue(h: &CMatrix) -> f64 {
    HermitianEigen::new(h).min()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `1e-300`.
pub fn solve_real(a: &Array2<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs()))?;
        if m[[piv, col]].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap([piv, k], [col, k]);
            }
            x.swap(piv, col);
        }
        for r in col + 1..n {
            let f = m[[r, col]] / m[[col, col]];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[[r, k]] -= f * m[[col, k]];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[[col, k]] * x[k];
        }
        x[col] = acc / m[[col, col]];
    }
    Some(x)
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        let mut a = zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        (&a + &dagger(&a)).mapv(|z| z * 0.5)
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 5, 8, 17] {
            let a = random_hermitian(&mut rng, n);
            let eig = HermitianEigen::new(&a);
            let back = eig.apply(real);
            assert!(frobenius_norm(&(&back - &a)) < 1e-12, "n = {n}");
            let vv = dagger(&eig.vectors).dot(&eig.vectors);
            assert!(frobenius_norm(&(&vv - &identity(n))) < 1e-12);
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
        }
    }

    #[test]
    fn diagonal_exponential() {
        let mut h = zeros(2, 2);
        h[[0, 0]] = real(1.0);
        h[[1, 1]] = real(2.0);
        let e = expm_hermitian(&h, real(-1.0));
        assert!((e[[0, 0]].re - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e[[1, 1]].re - (-2.0f64).exp()).abs() < 1e-15);
        assert!(e[[0, 1]].norm() < 1e-15);
    }

    #[test]
    fn exponential_matches_power_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(&mut rng, 4);
        let z = C64::new(0.3, -0.7);
        let mut term = identity(4);
        let mut sum = identity(4);
        for k in 1..60 {
            term = term.dot(&h).mapv(|x| x * z / k as f64);
            sum += &term;
        }
        assert!(frobenius_norm(&(&expm_hermitian(&h, z) - &sum)) < 1e-12);
    }

    #[test]
    fn kron_layout_is_outer_major() {
        let a = Array2::from_shape_vec((2, 2), vec![real(1.0), real(2.0), real(3.0), real(4.0)]).unwrap();
        let b = identity(2);
        let k = kron(&a, &b);
        assert_eq!(k[[0, 2]], real(2.0));
        assert_eq!(k[[1, 3]], real(2.0));
        assert_eq!(k[[2, 0]], real(3.0));
    }

    #[test]
    fn real_solver() {
        let a = Array2::from_shape_vec((3, 3), vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]).unwrap();
        let x = solve_real(&a, &[5.0, 3.0, 6.0]).unwrap();
        let back = a.dot(&Array1::from(x));
        for (got, want) in back.iter().zip([5.0, 3.0, 6.0]) {
            assert!((got - want).abs() < 1e-13);
        }
        assert!(solve_real(&Array2::zeros((2, 2)), &[1.0, 1.0]).is_none());
    }

    #[test]
    fn operator_norm_of_unitary_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(&mut rng, 5);
        let u = expm_hermitian(&h, C64::new(0.0, 1.0));
        assert!((operator_norm(&u) - 1.0).abs() < 1e-12);
    }
}
