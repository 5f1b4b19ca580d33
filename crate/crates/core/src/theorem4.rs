//! The limiting program over Krawtchouk blocks.
//!
//! For a list `d = (d_0, .., d_k)` with `d_k = 0` define
//! `M_{m,p} = sum_{i=0}^m d_{k-i} kappa_{m-i} kappa_{m-i}^T` with
//! `kappa = kappa^{(m,p)}`. The block `M_{m,p,t}` keeps rows `W_0(t)` and
//! columns `W_1(t) = {l <= m : l + t in W_h}`. The program maximizes
//! `max_i d_i` subject to `||M_{m,p,t}|| <= 1` for all `0 < m <= k`,
//! `0 <= t <= k - m` and `p` in `(0, 1)`.
//!
//! `p` is discretized on a Chebyshev grid with golden-section refinement
//! around each block's worst grid point, and the program is solved by
//! cutting planes: a violated block with top singular pair `(u, v)` yields
//! the linear cut `u^T M_{m,p,t}(d) v <= 1`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::DList;
use crate::error::{domain, Error, Result};
use crate::krawtchouk::kraw_basis;
use crate::linalg::{spectral_norm, top_singular_pair};
use crate::simplex::CutLp;
use crate::weights::WeightSet;

pub const DEFAULT_GRID: usize = 65;
/// Box bound on every `|d_i|` in the cutting-plane LPs.
pub const BOX: f64 = 1e3;
pub const DEFAULT_ITERATION_CAP: usize = 2000;

/// `(W_0(t), W_1(t))` at level `m`.
pub fn w01(weights: &WeightSet, m: usize, t: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let k = weights.k;
    if m == 0 || m > k || t > k - m {
        return domain(format!("need 0 < m <= k and t <= k - m, got k={k} m={m} t={t}"));
    }
    Ok(split(weights, m, t))
}

fn split(weights: &WeightSet, m: usize, t: usize) -> (Vec<usize>, Vec<usize>) {
    (0..=m).partition(|&l| !weights.contains(l + t))
}

fn check_d(d: &DList, m: usize) -> Result<()> {
    if m == 0 || m > d.k {
        return domain(format!("need 0 < m <= k = {}, got m = {m}", d.k));
    }
    Ok(())
}

type Basis = Vec<Vec<f64>>;

fn basis_rows(m: usize, p: f64) -> Result<Basis> {
    Ok(kraw_basis(m, p)?.into_iter().map(|v| v.entries).collect())
}

fn matrix_from_basis(basis: &Basis, d: &[f64], rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    let m = basis.len() - 1;
    let k = d.len() - 1;
    let mut out = DMatrix::zeros(rows.len(), cols.len());
    for i in 0..=m {
        let coeff = d[k - i];
        if coeff == 0.0 {
            continue;
        }
        let kappa = &basis[m - i];
        for (r, &x) in rows.iter().enumerate() {
            for (c, &y) in cols.iter().enumerate() {
                out[(r, c)] += coeff * kappa[x] * kappa[y];
            }
        }
    }
    out
}

/// `M = sum_{i=0}^m d_{k-i} kappa_{m-i} kappa_{m-i}^T`.
pub fn m_matrix(d: &DList, m: usize, p: f64) -> Result<DMatrix<f64>> {
    check_d(d, m)?;
    let all: Vec<usize> = (0..=m).collect();
    Ok(matrix_from_basis(&basis_rows(m, p)?, &d.values, &all, &all))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MBlock {
    pub m: usize,
    pub p: f64,
    pub t: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
}

impl MBlock {
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

/// The `(W_0(t), W_1(t))` block of [`m_matrix`]. Constant weight sets give
/// an empty block.
pub fn m_block(d: &DList, m: usize, p: f64, t: usize, weights: &WeightSet) -> Result<MBlock> {
    check_d(d, m)?;
    if d.k != weights.k {
        return Err(Error::DimensionMismatch { expected: weights.k + 1, got: d.values.len() });
    }
    if t > d.k - m {
        return domain(format!("need t <= k - m, got t={t}"));
    }
    let (rows, cols) = split(weights, m, t);
    let matrix = matrix_from_basis(&basis_rows(m, p)?, &d.values, &rows, &cols);
    Ok(MBlock { m, p, t, rows, cols, matrix })
}

/// Probabilities at which the constraints are imposed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PGrid {
    pub points: Vec<f64>,
    /// Golden-section refinement around each block's worst grid point.
    pub refine: bool,
}

impl PGrid {
    /// `p_j = (1 - cos((2j+1) pi / (2n))) / 2`. Odd `n` contains `1/2`, and
    /// tripling `n` nests the grids.
    pub fn chebyshev(n: usize) -> Result<Self> {
        if n == 0 {
            return domain("grid needs at least one point");
        }
        let points = (0..n)
            .map(|j| (1.0 - ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()) / 2.0)
            .collect();
        Ok(PGrid { points, refine: true })
    }

    pub fn from_points(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return domain("grid points must lie in (0, 1)");
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        Ok(PGrid { points, refine: true })
    }

    pub fn without_refinement(mut self) -> Self {
        self.refine = false;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn bracket(&self, j: usize) -> (f64, f64) {
        let pts = &self.points;
        let lo = if j > 0 { pts[j - 1] } else { pts[0] / 2.0 };
        let hi = if j + 1 < pts.len() { pts[j + 1] } else { (1.0 + pts[j]) / 2.0 };
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constraint {
    pub m: usize,
    pub p: f64,
    pub t: usize,
    pub norm: f64,
}

/// A `(m, t)` pair with nonempty block, and the Krawtchouk bases on the grid.
struct Site {
    m: usize,
    t: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    bases: Vec<Basis>,
}

struct Program {
    k: usize,
    grid: PGrid,
    sites: Vec<Site>,
}

struct SiteEval {
    constraint: Constraint,
    basis: Basis,
    grid_norms: Vec<f64>,
}

impl Program {
    fn new(weights: &WeightSet, grid: &PGrid) -> Result<Self> {
        let k = weights.k;
        let pairs: Vec<(usize, usize)> = (1..=k).flat_map(|m| (0..=k - m).map(move |t| (m, t))).collect();
        let bases: Vec<Vec<Basis>> = (1..=k)
            .into_par_iter()
            .map(|m| grid.points.iter().map(|&p| basis_rows(m, p)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let sites = pairs
            .into_iter()
            .filter_map(|(m, t)| {
                let (rows, cols) = split(weights, m, t);
                (!rows.is_empty() && !cols.is_empty()).then(|| Site { m, t, rows, cols, bases: bases[m - 1].clone() })
            })
            .collect();
        Ok(Program { k, grid: grid.clone(), sites })
    }

    fn norm_at(&self, site: &Site, basis: &Basis, d: &[f64]) -> f64 {
        spectral_norm(&matrix_from_basis(basis, d, &site.rows, &site.cols))
    }

    /// Worst constraint of one site: grid maximum, then golden-section search.
    fn eval_site(&self, site: &Site, d: &[f64]) -> Result<SiteEval> {
        let norms: Vec<f64> = site.bases.iter().map(|b| self.norm_at(site, b, d)).collect();
        let j = norms
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > norms[best] { i } else { best });
        let mut best = SiteEval {
            constraint: Constraint { m: site.m, p: self.grid.points[j], t: site.t, norm: norms[j] },
            basis: site.bases[j].clone(),
            grid_norms: norms.clone(),
        };
        if self.grid.refine && norms[j] > 0.0 {
            let (mut lo, mut hi) = self.grid.bracket(j);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            let f = |p: f64| -> Result<(f64, Basis)> {
                let b = basis_rows(site.m, p)?;
                Ok((self.norm_at(site, &b, d), b))
            };
            let mut x1 = hi - g * (hi - lo);
            let mut x2 = lo + g * (hi - lo);
            let mut f1 = f(x1)?;
            let mut f2 = f(x2)?;
            while hi - lo > 1e-10 {
                if f1.0 >= f2.0 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = f(x1)?;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = f(x2)?;
                }
            }
            let (x, (v, b)) = if f1.0 >= f2.0 { (x1, f1) } else { (x2, f2) };
            if v > best.constraint.norm {
                best = SiteEval { constraint: Constraint { m: site.m, p: x, t: site.t, norm: v }, basis: b, grid_norms: norms };
            }
        }
        Ok(best)
    }

    fn evaluate(&self, d: &[f64]) -> Result<Vec<SiteEval>> {
        self.sites.par_iter().map(|s| self.eval_site(s, d)).collect()
    }

    /// Coefficients `c` with `c . (d_0, .., d_{k-1}) = u^T M_{m,p,t}(d) v`.
    fn cut(&self, site: &Site, basis: &Basis, d: &[f64]) -> Vec<f64> {
        let block = matrix_from_basis(basis, d, &site.rows, &site.cols);
        let (_, u, v) = top_singular_pair(&block);
        let m = site.m;
        let mut c = vec![0.0; self.k];
        for i in 0..=m {
            let j = self.k - i;
            if j == self.k {
                continue;
            }
            let kappa = &basis[m - i];
            let left: f64 = site.rows.iter().zip(u.iter()).map(|(&x, ui)| kappa[x] * ui).sum();
            let right: f64 = site.cols.iter().zip(v.iter()).map(|(&y, vi)| kappa[y] * vi).sum();
            c[j] = left * right;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub worst: Option<Constraint>,
    pub worst_norm: f64,
    pub constraints_checked: usize,
    pub tolerance: f64,
}

fn worst_of(evals: &[SiteEval]) -> Option<Constraint> {
    evals
        .iter()
        .map(|e| e.constraint)
        .fold(None, |best: Option<Constraint>, c| match best {
            Some(b) if b.norm >= c.norm => Some(b),
            _ => Some(c),
        })
}

/// Checks `||M_{m,p,t}(d)|| <= 1 + tol` over the grid (and its refinement).
pub fn feasible(d: &DList, weights: &WeightSet, grid: &PGrid, tol: f64) -> Result<FeasibilityReport> {
    if d.k != weights.k {
        return Err(Error::DimensionMismatch { expected: weights.k + 1, got: d.values.len() });
    }
    if d.values[d.k] != 0.0 {
        return domain("the last entry d_k must be zero");
    }
    let program = Program::new(weights, grid)?;
    let evals = program.evaluate(&d.values)?;
    let worst = worst_of(&evals);
    let worst_norm = worst.map_or(0.0, |c| c.norm);
    Ok(FeasibilityReport {
        feasible: worst_norm <= 1.0 + tol,
        worst,
        worst_norm,
        constraints_checked: program.sites.len() * grid.len(),
        tolerance: tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub k: usize,
    pub weights: Vec<usize>,
    /// `max_i d_i` of the reported `d`, which satisfies every checked constraint.
    pub objective: f64,
    /// Optimal value of the final cutting-plane relaxation; `objective <= upper`.
    pub upper: f64,
    pub d: Vec<f64>,
    pub argmax: usize,
    pub worst_constraint: Option<Constraint>,
    pub grid_size: usize,
    pub refined: bool,
    pub tol: f64,
    pub iterations: usize,
    pub cuts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub iteration_cap: usize,
    pub box_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { iteration_cap: DEFAULT_ITERATION_CAP, box_bound: BOX }
    }
}

/// Maximizes `max_i d_i` subject to the block constraints.
pub fn maximize_bound(weights: &WeightSet, grid: &PGrid, tol: f64) -> Result<BoundReport> {
    maximize_bound_with(weights, grid, tol, SolverOptions::default())
}

struct Candidate {
    objective: f64,
    upper: f64,
    d: Vec<f64>,
    worst: Option<Constraint>,
}

pub fn maximize_bound_with(weights: &WeightSet, grid: &PGrid, tol: f64, opts: SolverOptions) -> Result<BoundReport> {
    if weights.is_constant() {
        return Err(Error::Degenerate("constant h has no adversary bound".into()));
    }
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let k = weights.k;
    let program = Program::new(weights, grid)?;
    let mut lp = CutLp::new(k, opts.box_bound)?;
    let mut iterations = 0;
    let mut candidates = Vec::with_capacity(k);
    // the cut pool is shared: every cut is valid for every coordinate
    for i in 0..k {
        let mut c = vec![0.0; k];
        c[i] = 1.0;
        let mut best: Option<Candidate> = None;
        loop {
            iterations += 1;
            if iterations > opts.iteration_cap {
                let so_far = candidates.iter().map(|c: &Candidate| c.objective).fold(0.0, f64::max);
                return Err(Error::IterationCap { cap: opts.iteration_cap, best: so_far });
            }
            let sol = lp.maximize(&c)?;
            let mut d = sol.x.clone();
            d.push(0.0);
            let evals = program.evaluate(&d)?;
            let worst = worst_of(&evals);
            let worst_norm = worst.map_or(0.0, |w| w.norm);
            let scale = worst_norm.max(1.0);
            let scaled: Vec<f64> = d.iter().map(|v| v / scale).collect();
            let objective = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let upper = sol.value;
            if best.as_ref().is_none_or(|b| objective > b.objective) {
                let worst = worst.map(|w| Constraint { norm: w.norm / scale, ..w });
                best = Some(Candidate { objective, upper, d: scaled, worst });
            }
            let b = best.as_mut().expect("set above");
            b.upper = upper;
            if upper - b.objective <= tol {
                break;
            }
            let mut added = 0;
            for (site, eval) in program.sites.iter().zip(&evals) {
                if eval.constraint.norm > 1.0 + 1e-13 {
                    lp.add_cut(program.cut(site, &eval.basis, &d), 1.0)?;
                    added += 1;
                }
                let g = &eval.grid_norms;
                for (j, basis) in site.bases.iter().enumerate() {
                    let local_max = (j == 0 || g[j] >= g[j - 1]) && (j + 1 == g.len() || g[j] >= g[j + 1]);
                    if local_max && g[j] > 1.0 + 1e-13 {
                        lp.add_cut(program.cut(site, basis, &d), 1.0)?;
                        added += 1;
                    }
                }
            }
            if added == 0 {
                break;
            }
        }
        candidates.push(best.expect("at least one iteration"));
    }
    let top = candidates.iter().map(|c| c.objective).fold(f64::NEG_INFINITY, f64::max);
    let chosen = candidates
        .iter()
        .filter(|c| c.objective >= top - tol)
        .min_by(|a, b| lex_cmp(&a.d, &b.d))
        .expect("nonempty");
    let upper = candidates.iter().map(|c| c.upper).fold(f64::NEG_INFINITY, f64::max);
    let argmax = chosen
        .d
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > chosen.d[best] { i } else { best });
    Ok(BoundReport {
        k,
        weights: weights.members(),
        objective: chosen.objective,
        upper: upper.max(chosen.objective),
        d: chosen.d.clone(),
        argmax,
        worst_constraint: chosen.worst,
        grid_size: grid.len(),
        refined: grid.refine,
        tol,
        iterations,
        cuts: lp.cuts(),
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}
