//! Finite-size adversary matrices and feasibility checks for the primal and
//! dual adversary programs.
//!
//! Inputs are subsets `A` of `[n]`; a query set `S` evaluates to
//! `f_A(S) = h(|A & S|)`, where `h` is given by a [`WeightSet`].

use std::borrow::Cow;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binomial_f64, k_subsets, popcount, specht_dim};
use crate::error::{domain, Error, Result};
use crate::johnson::{all_projectors, Projector, SubsetIndex, MAX_N};
use crate::linalg::{min_eigenvalue, spectral_norm};
use crate::weights::WeightSet;

/// Default PSD tolerance on the smallest eigenvalue.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Inputs are exactly the `k`-subsets.
    ExactK,
    /// Inputs are all subsets of size at most `k` (group testing).
    UpToK,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningProblem {
    pub n: usize,
    pub k: usize,
    pub weights: WeightSet,
    pub mode: Mode,
}

impl LearningProblem {
    pub fn new(n: usize, k: usize, weights: WeightSet, mode: Mode) -> Result<Self> {
        if k > n {
            return domain(format!("k = {k} exceeds n = {n}"));
        }
        if weights.k != k {
            return domain(format!("weight set is for k = {}, problem has k = {k}", weights.k));
        }
        if weights.is_constant() {
            return domain("constant h gives a trivial problem");
        }
        Ok(LearningProblem { n, k, weights, mode })
    }

    /// Group testing on `n` items with at most `k` marked.
    pub fn group_testing(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, WeightSet::or(k)?, Mode::UpToK)
    }

    /// All inputs as bitmasks; needs `n <= 31`.
    pub fn inputs(&self) -> Vec<u32> {
        assert!(self.n <= 31, "subset masks cap n at 31");
        match self.mode {
            Mode::ExactK => k_subsets(self.n, self.k),
            Mode::UpToK => (0..=self.k).flat_map(|j| k_subsets(self.n, j)).collect(),
        }
    }

    #[inline]
    pub fn f(&self, a: u32, s: u32) -> bool {
        self.weights.contains(popcount(a & s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DList {
    pub k: usize,
    pub values: Vec<f64>,
}

impl DList {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("d-list needs at least one entry");
        }
        Ok(DList { k: values.len() - 1, values })
    }

    pub fn zeros(k: usize) -> Self {
        DList { k, values: vec![0.0; k + 1] }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SymmetricAdversary {
    pub problem: LearningProblem,
    pub d: DList,
    pub index: SubsetIndex,
    pub matrix: DMatrix<f64>,
}

fn check_gamma(problem: &LearningProblem, d: &DList) -> Result<()> {
    if problem.mode != Mode::ExactK {
        return domain("symmetric adversary matrices are defined for exact-k problems");
    }
    if 2 * problem.k > problem.n {
        return domain(format!("need k <= n - k, got n={} k={}", problem.n, problem.k));
    }
    if d.values.len() != problem.k + 1 {
        return Err(Error::DimensionMismatch { expected: problem.k + 1, got: d.values.len() });
    }
    Ok(())
}

/// `d_k` that makes `sum_t d_t Pi_t` trace free.
pub fn trace_free_dk(n: usize, d: &DList) -> f64 {
    let k = d.k;
    let rest: f64 = (0..k).map(|t| d.values[t] * specht_dim(n, t) as f64).sum();
    -rest / specht_dim(n, k) as f64
}

fn combine(projectors: &[Projector], d: &DList) -> DMatrix<f64> {
    let dim = projectors[0].matrix.nrows();
    let mut g = DMatrix::zeros(dim, dim);
    for (p, &dt) in projectors.iter().zip(&d.values) {
        if dt != 0.0 {
            g += &p.matrix * dt;
        }
    }
    g
}

/// `Gamma = sum_t d_t Pi_k(N, t)`; with `trace_free`, `d_k` is replaced so
/// that the trace (and hence the constant diagonal) vanishes.
pub fn build_gamma(problem: &LearningProblem, d: &DList, trace_free: bool) -> Result<SymmetricAdversary> {
    check_gamma(problem, d)?;
    let projectors = all_projectors(problem.n, problem.k)?;
    Ok(gamma_from_projectors(problem, d, trace_free, &projectors))
}

pub(crate) fn gamma_from_projectors(
    problem: &LearningProblem,
    d: &DList,
    trace_free: bool,
    projectors: &[Projector],
) -> SymmetricAdversary {
    let mut d = d.clone();
    if trace_free {
        d.values[d.k] = trace_free_dk(problem.n, &d);
    }
    let matrix = combine(projectors, &d);
    SymmetricAdversary {
        problem: problem.clone(),
        d,
        index: SubsetIndex::new(problem.n, problem.k).expect("checked"),
        matrix,
    }
}

/// `Gamma o Delta_S`: rows with `f_A(S) = 0`, columns with `f_B(S) = 1`.
pub fn gamma_sub(adv: &SymmetricAdversary, s: u32) -> DMatrix<f64> {
    let subsets = adv.index.subsets();
    let rows: Vec<usize> = (0..subsets.len()).filter(|&i| !adv.problem.f(subsets[i], s)).collect();
    let cols: Vec<usize> = (0..subsets.len()).filter(|&i| adv.problem.f(subsets[i], s)).collect();
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| adv.matrix[(rows[r], cols[c])])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalReport {
    pub feasible: bool,
    pub objective: f64,
    pub worst_s_size: usize,
    pub worst_norm: f64,
    /// `objective / worst_norm`: the bound certified by rescaling.
    pub scaled_objective: f64,
    pub max_diagonal: f64,
    pub block_norms: Vec<f64>,
    pub tolerance: f64,
}

/// Primal feasibility with one representative `S = {0, .., s-1}` per size.
pub fn check_primal_feasible(adv: &SymmetricAdversary, tol: f64) -> PrimalReport {
    let n = adv.problem.n;
    let block_norms: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|s| spectral_norm(&gamma_sub(adv, representative(s))))
        .collect();
    let (worst_s_size, worst_norm) = block_norms
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (s, v)| if v > best.1 { (s, v) } else { best });
    let objective = spectral_norm(&adv.matrix);
    let max_diagonal = adv.matrix.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    PrimalReport {
        feasible: worst_norm <= 1.0 + tol && max_diagonal <= tol,
        objective,
        worst_s_size,
        worst_norm,
        scaled_objective: if worst_norm > 0.0 { objective / worst_norm } else { 0.0 },
        max_diagonal,
        block_norms,
        tolerance: tol,
    }
}

pub(crate) fn representative(s: usize) -> u32 {
    if s == 0 {
        0
    } else {
        (1u32 << s) - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllOnesReport {
    pub gamma_norm: f64,
    pub worst_block_norm: f64,
    pub worst_s_size: usize,
    pub ratio: f64,
}

/// The all-ones positive adversary (zero diagonal). Block norms are
/// `sqrt(rows * cols)` since every off-diagonal block is all ones.
pub fn positive_adversary_allones(problem: &LearningProblem) -> Result<AllOnesReport> {
    if problem.mode != Mode::ExactK {
        return domain("the all-ones adversary is defined for exact-k problems");
    }
    let (n, k) = (problem.n as i64, problem.k as i64);
    let total = binomial_f64(n, k);
    let (worst_s_size, worst_block_norm) = (0..=problem.n)
        .map(|s| {
            let si = s as i64;
            let cols: f64 = (0..=k)
                .filter(|&j| problem.weights.contains(j as usize))
                .map(|j| binomial_f64(si, j) * binomial_f64(n - si, k - j))
                .sum();
            (s, ((total - cols) * cols).sqrt())
        })
        .fold((0, f64::NEG_INFINITY), |best, (s, v)| if v > best.1 { (s, v) } else { best });
    let gamma_norm = total - 1.0;
    Ok(AllOnesReport { gamma_norm, worst_block_norm, worst_s_size, ratio: gamma_norm / worst_block_norm })
}

/// One member `X_S` of a dual family, over the problem's inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum DualMatrix {
    Zero,
    /// Full `|inputs| x |inputs|` matrix.
    Dense(DMatrix<f64>),
    /// `X = L L^T` supported on the listed input positions; PSD by construction.
    Factored { support: Vec<usize>, factor: DMatrix<f64> },
}

impl DualMatrix {
    fn diagonal_into(&self, acc: &mut [f64]) {
        match self {
            DualMatrix::Zero => {}
            DualMatrix::Dense(m) => acc.iter_mut().zip(m.diagonal().iter()).for_each(|(a, v)| *a += v),
            DualMatrix::Factored { support, factor } => {
                for (r, &i) in support.iter().enumerate() {
                    acc[i] += factor.row(r).norm_squared();
                }
            }
        }
    }

    fn min_eigenvalue(&self) -> f64 {
        match self {
            DualMatrix::Dense(m) => min_eigenvalue(m),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairCondition {
    /// `sum_{S: f_A(S) != f_B(S)} X_S[A,B] = 1`.
    Equality,
    /// `sum_{S: f_A(S) != f_B(S)} X_S[A,B] >= 1` (positive adversary).
    Inequality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualReport {
    pub feasible: bool,
    pub objective: f64,
    pub min_pair_value: f64,
    pub max_pair_deviation: f64,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub condition: PairCondition,
    pub tolerance: f64,
}

/// A dual family `(X_S)` indexed by `S` as a bitmask `0 .. 2^n`.
pub trait DualFamily: Sync {
    fn sets(&self) -> usize;
    fn matrix(&self, s: u32) -> Cow<'_, DualMatrix>;
}

impl DualFamily for [DualMatrix] {
    fn sets(&self) -> usize {
        self.len()
    }

    fn matrix(&self, s: u32) -> Cow<'_, DualMatrix> {
        Cow::Borrowed(&self[s as usize])
    }
}

impl DualFamily for Vec<DualMatrix> {
    fn sets(&self) -> usize {
        self.len()
    }

    fn matrix(&self, s: u32) -> Cow<'_, DualMatrix> {
        Cow::Borrowed(&self[s as usize])
    }
}

/// Largest ground set for dual checks (all `2^n` query sets are enumerated).
pub const DUAL_MAX_N: usize = MAX_N;

/// Checks a dual family `(X_S)` indexed by `S` as a bitmask `0 .. 2^n`.
pub fn check_dual_feasible<F: DualFamily + ?Sized>(
    problem: &LearningProblem,
    family: &F,
    condition: PairCondition,
    tol: f64,
) -> Result<DualReport> {
    let n = problem.n;
    if n > DUAL_MAX_N {
        return domain(format!("dual checks enumerate 2^n query sets; n = {n} exceeds {DUAL_MAX_N}"));
    }
    if family.sets() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: family.sets() });
    }
    let inputs = problem.inputs();
    let count = inputs.len();

    // A fixed chunking keeps the floating-point accumulation order deterministic.
    let sets = 1usize << n;
    let chunk = sets.div_ceil(32);
    let partials: Vec<Result<(DMatrix<f64>, Vec<f64>, f64)>> = (0..sets.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut pairs = DMatrix::zeros(count, count);
            let mut diag = vec![0.0; count];
            let mut min_eig = f64::INFINITY;
            for s in c * chunk..((c + 1) * chunk).min(sets) {
                let x = family.matrix(s as u32);
                check_shape(&x, count)?;
                x.diagonal_into(&mut diag);
                min_eig = min_eig.min(x.min_eigenvalue());
                accumulate_pairs(problem, &inputs, s as u32, &x, &mut pairs);
            }
            Ok((pairs, diag, min_eig))
        })
        .collect();
    let mut pairs = DMatrix::zeros(count, count);
    let mut diag = vec![0.0; count];
    let mut min_eig = f64::INFINITY;
    for part in partials {
        let (p, d, e) = part?;
        pairs += p;
        diag.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
        min_eig = min_eig.min(e);
    }

    let objective = diag.iter().copied().fold(0.0, f64::max);
    let mut min_pair_value = f64::INFINITY;
    let mut max_pair_deviation = 0.0f64;
    for a in 0..count {
        for b in 0..count {
            if a == b {
                continue;
            }
            let v = pairs[(a, b)];
            min_pair_value = min_pair_value.min(v);
            let dev = match condition {
                PairCondition::Equality => (v - 1.0).abs(),
                PairCondition::Inequality => (1.0 - v).max(0.0),
            };
            max_pair_deviation = max_pair_deviation.max(dev);
        }
    }
    if count < 2 {
        min_pair_value = 0.0;
    }
    let psd = min_eig >= -PSD_TOL.max(tol);
    Ok(DualReport {
        feasible: psd && max_pair_deviation <= tol,
        objective,
        min_pair_value,
        max_pair_deviation,
        min_eigenvalue: min_eig,
        psd,
        condition,
        tolerance: tol,
    })
}

fn check_shape(x: &DualMatrix, count: usize) -> Result<()> {
    match x {
        DualMatrix::Zero => Ok(()),
        DualMatrix::Dense(m) if m.nrows() == count && m.ncols() == count => Ok(()),
        DualMatrix::Dense(m) => Err(Error::DimensionMismatch { expected: count, got: m.nrows().max(m.ncols()) }),
        DualMatrix::Factored { support, factor } => {
            if factor.nrows() != support.len() || support.iter().any(|&i| i >= count) {
                domain("factored dual matrix has an inconsistent support")
            } else {
                Ok(())
            }
        }
    }
}

/// Adds `X_S[A,B]` into `pairs[A,B]` and `pairs[B,A]` for every pair with
/// `f_A(S) = 0`, `f_B(S) = 1`.
fn accumulate_pairs(problem: &LearningProblem, inputs: &[u32], s: u32, x: &DualMatrix, pairs: &mut DMatrix<f64>) {
    match x {
        DualMatrix::Zero => {}
        DualMatrix::Dense(m) => {
            let zeros: Vec<usize> = (0..inputs.len()).filter(|&i| !problem.f(inputs[i], s)).collect();
            let ones: Vec<usize> = (0..inputs.len()).filter(|&i| problem.f(inputs[i], s)).collect();
            for &a in &zeros {
                for &b in &ones {
                    pairs[(a, b)] += m[(a, b)];
                    pairs[(b, a)] += m[(b, a)];
                }
            }
        }
        DualMatrix::Factored { support, factor } => {
            let zeros: Vec<usize> = (0..support.len()).filter(|&r| !problem.f(inputs[support[r]], s)).collect();
            let ones: Vec<usize> = (0..support.len()).filter(|&r| problem.f(inputs[support[r]], s)).collect();
            if zeros.is_empty() || ones.is_empty() {
                return;
            }
            let l0 = factor.select_rows(zeros.iter());
            let l1 = factor.select_rows(ones.iter());
            let block = &l0 * l1.transpose();
            for (i, &r0) in zeros.iter().enumerate() {
                for (j, &r1) in ones.iter().enumerate() {
                    let (a, b) = (support[r0], support[r1]);
                    let v = block[(i, j)];
                    pairs[(a, b)] += v;
                    pairs[(b, a)] += v;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceReport {
    pub n: usize,
    pub k: usize,
    pub objective: f64,
    pub d: DList,
    pub directions: usize,
}

/// Largest `||Gamma|| / max_S ||Gamma o Delta_S||` over trace-free
/// symmetric `Gamma` at finite `n`, searched over directions of
/// `(d_0, .., d_{k-1})` (the ratio is scale invariant). Capped at `k <= 3`.
pub fn brute_force_bound(problem: &LearningProblem, resolution: usize) -> Result<BruteForceReport> {
    let k = problem.k;
    if !(1..=3).contains(&k) {
        return domain("brute-force search is capped at 1 <= k <= 3");
    }
    if resolution < 4 {
        return domain("resolution must be at least 4");
    }
    check_gamma(problem, &DList::zeros(k))?;
    let projectors = all_projectors(problem.n, k)?;
    let score = |dirs: &[f64]| -> f64 {
        let mut values = dirs.to_vec();
        values.push(0.0);
        let adv = gamma_from_projectors(problem, &DList { k, values }, true, &projectors);
        check_primal_feasible(&adv, 0.0).scaled_objective
    };
    let to_dirs = |angles: &[f64]| -> Vec<f64> {
        match angles.len() {
            0 => vec![1.0],
            1 => vec![angles[0].cos(), angles[0].sin()],
            _ => vec![
                angles[0].cos(),
                angles[0].sin() * angles[1].cos(),
                angles[0].sin() * angles[1].sin(),
            ],
        }
    };
    let grid: Vec<Vec<f64>> = match k {
        1 => vec![vec![]],
        2 => (0..resolution).map(|i| vec![2.0 * std::f64::consts::PI * i as f64 / resolution as f64]).collect(),
        _ => {
            let half = resolution / 2;
            (0..=half)
                .flat_map(|i| {
                    (0..resolution).map(move |j| {
                        vec![
                            std::f64::consts::PI * i as f64 / half as f64,
                            2.0 * std::f64::consts::PI * j as f64 / resolution as f64,
                        ]
                    })
                })
                .collect()
        }
    };
    let scores: Vec<f64> = grid.par_iter().map(|a| score(&to_dirs(a))).collect();
    let (best_i, _) = scores
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    // coordinate pattern search around the best grid point
    let mut angles = grid[best_i].clone();
    let mut best = scores[best_i];
    let mut step = 2.0 * std::f64::consts::PI / resolution as f64;
    while step > 1e-7 && !angles.is_empty() {
        let mut improved = false;
        for c in 0..angles.len() {
            for sign in [-1.0, 1.0] {
                let mut trial = angles.clone();
                trial[c] += sign * step;
                let v = score(&to_dirs(&trial));
                if v > best {
                    best = v;
                    angles = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    // report the d-list rescaled to be primal feasible
    let mut values = to_dirs(&angles);
    values.push(0.0);
    let adv = gamma_from_projectors(problem, &DList { k, values }, true, &projectors);
    let report = check_primal_feasible(&adv, 0.0);
    let d = DList { k, values: adv.d.values.iter().map(|v| v / report.worst_norm).collect() };
    Ok(BruteForceReport { n: problem.n, k, objective: best, d, directions: grid.len() })
}
