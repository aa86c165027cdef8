//! Dense two-phase simplex for `min c·x` subject to `A x = b`, `x ≥ 0`.
//! Bland's rule is used for both the entering and the leaving variable.

use ndarray::Array2;

const PIVOT_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    t: Array2<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[[i, self.cols]]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[[row, col]];
        self.t.row_mut(row).mapv_inplace(|x| x / p);
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let f = self.t[[i, col]];
            if f == 0.0 {
                continue;
            }
            for j in 0..=self.cols {
                let v = self.t[[row, j]];
                self.t[[i, j]] -= f * v;
            }
        }
        self.basis[row] = col;
    }

    fn reduced_cost(&self, cost: &[f64], j: usize) -> f64 {
        let mut r = cost[j];
        for (i, &b) in self.basis.iter().enumerate() {
            r -= cost[b] * self.t[[i, j]];
        }
        r
    }

    /// Runs simplex iterations over columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize, max_iter: usize) -> Result<(), LpOutcome> {
        for _ in 0..max_iter {
            let entering = (0..allowed).find(|&j| !self.basis.contains(&j) && self.reduced_cost(cost, j) < -PIVOT_EPS);
            let Some(col) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.t.nrows() {
                let a = self.t[[i, col]];
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - PIVOT_EPS || ((ratio - br).abs() <= PIVOT_EPS && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return Err(LpOutcome::Unbounded),
                Some((row, _)) => self.pivot(row, col),
            }
        }
        Err(LpOutcome::IterationLimit)
    }
}

pub fn minimize(c: &[f64], a: &Array2<f64>, b: &[f64]) -> LpOutcome {
    let (m, n) = a.dim();
    assert_eq!(c.len(), n, "cost length");
    assert_eq!(b.len(), m, "rhs length");
    let cols = n + m;
    let mut t = Array2::zeros((m, cols + 1));
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[[i, j]] = sign * a[[i, j]];
        }
        t[[i, n + i]] = 1.0;
        t[[i, cols]] = sign * b[i];
    }
    let mut tab = Tableau { t, basis: (n..n + m).collect(), cols };
    let max_iter = 50 * (cols + 1) * (m + 1);

    let mut phase1 = vec![0.0; cols];
    phase1[n..].iter_mut().for_each(|x| *x = 1.0);
    if let Err(e) = tab.optimize(&phase1, cols, max_iter) {
        return e;
    }
    let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.rhs(i)).sum();
    if infeasibility > FEAS_EPS {
        return LpOutcome::Infeasible;
    }

    // drive artificial variables out of the basis, dropping redundant rows
    let mut i = 0;
    while i < tab.t.nrows() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| tab.t[[i, j]].abs() > FEAS_EPS) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.t.remove_index(ndarray::Axis(0), i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(c);
    if let Err(e) = tab.optimize(&phase2, n, max_iter) {
        return e;
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.rhs(i).max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_optimum() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let a = Array2::from_shape_vec((2, 4), vec![1.0, 2.0, 1.0, 0.0, 3.0, 1.0, 0.0, 1.0]).unwrap();
        match minimize(&[-1.0, -1.0, 0.0, 0.0], &a, &[4.0, 6.0]) {
            LpOutcome::Optimal { x, value } => {
                assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);
                assert!((value + 2.8).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = Array2::from_shape_vec((2, 1), vec![1.0, 1.0]).unwrap();
        assert_eq!(minimize(&[0.0], &a, &[1.0, 2.0]), LpOutcome::Infeasible);
        let a = Array2::from_shape_vec((1, 2), vec![1.0, -1.0]).unwrap();
        assert_eq!(minimize(&[0.0, -1.0], &a, &[0.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows_and_degeneracy() {
        let a = Array2::from_shape_vec((3, 3), vec![1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0, -1.0]).unwrap();
        match minimize(&[1.0, 2.0, 3.0], &a, &[1.0, 2.0, 0.0]) {
            LpOutcome::Optimal { x, value } => {
                assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!((x[0] - x[2]).abs() < 1e-12);
                assert!((value - 2.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}
