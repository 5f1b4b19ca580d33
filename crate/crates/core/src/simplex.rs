//! Linear programs of the form `max c^T x` subject to `g_r^T x <= h_r`,
//! with free `x`, box rows `|x_j| <= bound` and `h_r >= 0` (so `x = 0` is
//! feasible and the program is bounded).
//!
//! The program is solved through its dual `min h^T y, G^T y = c, y >= 0`
//! with a revised simplex. The dual has one row per variable and one column
//! per constraint, so adding a cut only adds a column and the previous
//! basis stays feasible. The box rows give a feasible starting basis for any
//! `c`. The primal solution is the vector of simplex multipliers.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};

const EPS: f64 = 1e-12;
/// Reduced costs above `-PRICE_TOL` count as optimal.
const PRICE_TOL: f64 = 1e-11;
/// Pivot elements below this fraction of the largest candidate are skipped.
const PIVOT_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub struct CutLp {
    n: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl CutLp {
    pub fn new(n: usize, bound: f64) -> Result<Self> {
        if n == 0 {
            return domain("linear program needs at least one variable");
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return domain("box bound must be positive and finite");
        }
        let mut rows = Vec::with_capacity(2 * n);
        for j in 0..n {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; n];
                r[j] = sign;
                rows.push(r);
            }
        }
        Ok(CutLp { n, rhs: vec![bound; 2 * n], rows, basis: (0..n).map(|j| 2 * j).collect() })
    }

    /// Number of constraints beyond the box.
    pub fn cuts(&self) -> usize {
        self.rows.len() - 2 * self.n
    }

    pub fn add_cut(&mut self, g: Vec<f64>, h: f64) -> Result<()> {
        if g.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: g.len() });
        }
        if !(h >= 0.0) || g.iter().any(|v| !v.is_finite()) {
            return domain("cuts need finite coefficients and a non-negative right-hand side");
        }
        self.rows.push(g);
        self.rhs.push(h);
        Ok(())
    }

    fn basis_matrix(&self, basis: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.rows[basis[j]][i])
    }

    fn box_basis(&self, c: &[f64]) -> Vec<usize> {
        (0..self.n).map(|j| if c[j] >= 0.0 { 2 * j } else { 2 * j + 1 }).collect()
    }

    pub fn maximize(&mut self, c: &[f64]) -> Result<LpSolution> {
        if c.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: c.len() });
        }
        let cv = DVector::from_column_slice(c);
        // keep the previous basis when it is still dual feasible for this c
        let reuse = self
            .basis_matrix(&self.basis)
            .try_inverse()
            .map(|inv| (&inv * &cv).iter().all(|&v| v >= -EPS))
            .unwrap_or(false);
        if !reuse {
            self.basis = self.box_basis(c);
        }
        let total = self.rows.len();
        let cap = 100 * (total + self.n) + 1000;
        let mut pivots = 0;
        let mut degenerate_run = 0;
        loop {
            let bm = self.basis_matrix(&self.basis);
            let singular = || Error::Numerical("singular simplex basis".into());
            let lu = bm.clone().lu();
            let y = lu.solve(&cv).ok_or_else(singular)?;
            let hb = DVector::from_iterator(self.n, self.basis.iter().map(|&b| self.rhs[b]));
            let x = bm.transpose().lu().solve(&hb).ok_or_else(singular)?;
            // pricing: reduced cost h_r - g_r . x is the primal slack
            let bland = degenerate_run > 50;
            let mut enter: Option<(usize, f64)> = None;
            for r in 0..total {
                if self.basis.contains(&r) {
                    continue;
                }
                let g = &self.rows[r];
                let reduced = self.rhs[r] - g.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
                if reduced < -PRICE_TOL * (1.0 + self.rhs[r].abs()) {
                    match enter {
                        None => enter = Some((r, reduced)),
                        Some((_, best)) if !bland && reduced < best => enter = Some((r, reduced)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((r, _)) = enter else {
                let value = c.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                return Ok(LpSolution { x: x.iter().copied().collect(), value, pivots });
            };
            let dir = lu.solve(&DVector::from_column_slice(&self.rows[r])).ok_or_else(singular)?;
            let floor = PIVOT_REL * dir.amax().max(EPS);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.n {
                if dir[i] > floor {
                    let theta = y[i].max(0.0) / dir[i];
                    let better = match leave {
                        None => true,
                        Some((l, best)) => theta < best - EPS || (theta <= best + EPS && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        leave = Some((i, theta));
                    }
                }
            }
            let Some((i, theta)) = leave else {
                return Err(Error::Numerical("linear program is infeasible".into()));
            };
            degenerate_run = if theta <= EPS { degenerate_run + 1 } else { 0 };
            self.basis[i] = r;
            pivots += 1;
            if pivots > cap {
                return Err(Error::IterationCap { cap, best: f64::NAN });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = CutLp::new(2, 100.0).unwrap();
        lp.add_cut(vec![1.0, 0.0], 4.0).unwrap();
        lp.add_cut(vec![0.0, 2.0], 12.0).unwrap();
        lp.add_cut(vec![3.0, 2.0], 18.0).unwrap();
        let s = lp.maximize(&[3.0, 5.0]).unwrap();
        assert!((s.value - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        // warm re-solve with a new cut and a new objective
        lp.add_cut(vec![1.0, 1.0], 7.0).unwrap();
        let s = lp.maximize(&[3.0, 5.0]).unwrap();
        assert!((s.value - 33.0).abs() < 1e-12, "{s:?}");
        let s = lp.maximize(&[-1.0, 0.0]).unwrap();
        assert!((s.x[0] + 100.0).abs() < 1e-12);
    }

    #[test]
    fn box_binds_without_cuts() {
        let mut lp = CutLp::new(3, 2.5).unwrap();
        let s = lp.maximize(&[1.0, -2.0, 0.0]).unwrap();
        assert!((s.value - 7.5).abs() < 1e-12);
        assert!(lp.add_cut(vec![1.0, 0.0, 0.0], -1.0).is_err());
        assert!(lp.add_cut(vec![1.0], 1.0).is_err());
    }

    #[test]
    fn degenerate_vertex() {
        let mut lp = CutLp::new(2, 10.0).unwrap();
        for (g, h) in [([1.0, 1.0], 2.0), ([1.0, -1.0], 0.0), ([-1.0, 1.0], 0.0), ([1.0, 0.0], 1.0)] {
            lp.add_cut(g.to_vec(), h).unwrap();
        }
        let s = lp.maximize(&[1.0, 1.0]).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
    }
}
