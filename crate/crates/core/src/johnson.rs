//! Johnson-scheme objects: the basis of `k`-subsets of `[n]`, Specht-span
//! vectors, the eigenspace projectors `Pi_k(N, t)`, and the `w_t` vectors
//! that describe the projectors after restricting to a split `[n] = N0 + N1`.
//!
//! Elements of the ground set are `0..n` and subsets are `u32` bitmasks.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binomial, colex_rank, falling, k_subsets, mask_from_elements, popcount, specht_dim, ScaledFloat};
use crate::error::{domain, Error, Result};
use crate::krawtchouk::{kraw_vector, normalize};
use crate::linalg::spectral_norm;

/// Largest ground set for dense subset-indexed matrices.
pub const MAX_N: usize = 12;

/// The `k`-subsets of `[n]` in colexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetIndex {
    pub n: usize,
    pub k: usize,
    subsets: Vec<u32>,
}

impl SubsetIndex {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n > MAX_N {
            return domain(format!("n = {n} exceeds the dense cap {MAX_N}"));
        }
        if k > n {
            return domain(format!("k = {k} exceeds n = {n}"));
        }
        Ok(SubsetIndex { n, k, subsets: k_subsets(n, k) })
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn subset(&self, i: usize) -> u32 {
        self.subsets[i]
    }

    pub fn subsets(&self) -> &[u32] {
        &self.subsets
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        let fits = self.n == 32 || mask >> self.n == 0;
        (fits && popcount(mask) == self.k).then(|| colex_rank(mask))
    }
}

fn check_pairs(n: usize, k: usize, t: usize, a: &[usize], b: &[usize]) -> Result<()> {
    if a.len() != t || b.len() != t {
        return domain(format!("a and b must both have length t = {t}"));
    }
    if t > k || k + t > n {
        return domain(format!("need t <= k and 2t + (k - t) <= n, got n={n} k={k} t={t}"));
    }
    let all: Vec<usize> = a.iter().chain(b).copied().collect();
    if all.iter().any(|&e| e >= n) {
        return domain("element outside the ground set");
    }
    let mask = mask_from_elements(&all);
    if popcount(mask) != all.len() {
        return domain("a and b must be disjoint with no repeated elements");
    }
    Ok(())
}

/// The Specht-span vector `v_k(N, t, a, b)` in the subset basis.
///
/// The coefficient of `C` is `(-1)^{|C & b|}` when `C` holds exactly one of
/// `a_i, b_i` for every `i` (its other `k - t` elements avoid `a` and `b`),
/// and zero otherwise.
pub fn v_k_vector(n: usize, k: usize, t: usize, a: &[usize], b: &[usize]) -> Result<Vec<f64>> {
    check_pairs(n, k, t, a, b)?;
    let index = SubsetIndex::new(n, k)?;

    let b_mask = mask_from_elements(b);
    let pair_masks: Vec<u32> = a.iter().zip(b).map(|(&x, &y)| (1 << x) | (1 << y)).collect();
    Ok(index
        .subsets()
        .iter()
        .map(|&c| {
            if pair_masks.iter().all(|&pm| popcount(c & pm) == 1) {
                if popcount(c & b_mask).is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            } else {
                0.0
            }
        })
        .collect())
}

/// Pairs `(a, b)` read off the standard tableaux of shape `(n - t, t)`:
/// `b` is the second row and `a` the first `t` entries of the first row.
/// Their `v_k` vectors form a basis of `S_k(N, t)`.
pub fn standard_pairs(n: usize, t: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    k_subsets(n, t)
        .into_iter()
        .filter_map(|b_mask| {
            let b: Vec<usize> = (0..n).filter(|&i| b_mask & (1 << i) != 0).collect();
            let a: Vec<usize> = (0..n).filter(|&i| b_mask & (1 << i) == 0).take(t).collect();
            a.iter().zip(&b).all(|(x, y)| x < y).then_some((a, b))
        })
        .collect()
}

fn check_projector_params(n: usize, k: usize, t: usize) -> Result<()> {
    if t > k || 2 * k > n {
        return domain(format!("projector needs t <= k <= n - k, got n={n} k={k} t={t}"));
    }
    if n > MAX_N {
        return domain(format!("n = {n} exceeds the dense cap {MAX_N}"));
    }
    Ok(())
}

fn spanning_matrix(n: usize, k: usize, t: usize) -> Result<Vec<Vec<f64>>> {
    standard_pairs(n, t)
        .iter()
        .map(|(a, b)| v_k_vector(n, k, t, a, b))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub matrix: DMatrix<f64>,
}

impl Projector {
    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `C(n, t) - C(n, t - 1)`.
    pub fn expected_rank(&self) -> usize {
        specht_dim(self.n, self.t)
    }

    /// `||P^2 - P||`.
    pub fn idempotence_error(&self) -> f64 {
        spectral_norm(&(&self.matrix * &self.matrix - &self.matrix))
    }

    /// `||(I - P) v||`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        let v = DVector::from_column_slice(v);
        (&v - &self.matrix * &v).norm()
    }
}

/// Orthogonal projector onto `S_k(N, t)`, from the standard-tableau vectors
/// orthonormalized by two passes of modified Gram-Schmidt.
pub fn projector(n: usize, k: usize, t: usize) -> Result<Projector> {
    check_projector_params(n, k, t)?;
    let vectors = spanning_matrix(n, k, t)?;
    let dim = vectors.len();
    let rows = binomial_usize(n, k);
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(dim);
    for v in vectors {
        let mut v = DVector::from_vec(v);
        for _ in 0..2 {
            for u in &q {
                let c = u.dot(&v);
                v.axpy(-c, u, 1.0);
            }
        }
        let norm = v.norm();
        if norm < 1e-8 {
            return Err(Error::Numerical(format!("spanning vectors of S_{k}({n},{t}) are dependent")));
        }
        q.push(v / norm);
    }
    let mut qm = DMatrix::zeros(rows, dim);
    for (j, u) in q.iter().enumerate() {
        qm.set_column(j, u);
    }
    let matrix = &qm * qm.transpose();
    Ok(Projector { n, k, t, matrix })
}

fn binomial_usize(n: usize, k: usize) -> usize {
    crate::combinatorics::binomial_u128(n as i64, k as i64) as usize
}

/// Exact projector `V (V^T V)^{-1} V^T` over the rationals.
pub fn projector_exact(n: usize, k: usize, t: usize) -> Result<Vec<Vec<BigRational>>> {
    check_projector_params(n, k, t)?;
    let v: Vec<Vec<BigInt>> = spanning_matrix(n, k, t)?
        .into_iter()
        .map(|col| col.into_iter().map(|x| BigInt::from(x as i64)).collect())
        .collect();
    let dim = v.len();
    let rows = binomial_usize(n, k);
    let gram: Vec<Vec<BigRational>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let s: BigInt = (0..rows).map(|r| &v[i][r] * &v[j][r]).sum();
                    BigRational::from_integer(s)
                })
                .collect()
        })
        .collect();
    let ginv = rational_inverse(gram)?;
    // B = G^{-1} V^T, then P = V B
    let b: Vec<Vec<BigRational>> = (0..dim)
        .map(|i| {
            (0..rows)
                .map(|r| {
                    (0..dim).fold(BigRational::zero(), |acc, j| {
                        if v[j][r].is_zero() {
                            acc
                        } else {
                            acc + &ginv[i][j] * BigRational::from_integer(v[j][r].clone())
                        }
                    })
                })
                .collect()
        })
        .collect();
    Ok((0..rows)
        .map(|r| {
            (0..rows)
                .map(|c| {
                    (0..dim).fold(BigRational::zero(), |acc, i| {
                        if v[i][r].is_zero() {
                            acc
                        } else {
                            acc + BigRational::from_integer(v[i][r].clone()) * &b[i][c]
                        }
                    })
                })
                .collect()
        })
        .collect())
}

/// Gauss-Jordan inverse of a nonsingular rational matrix.
pub(crate) fn rational_inverse(mut a: Vec<Vec<BigRational>>) -> Result<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Degenerate("singular rational matrix".into()))?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].recip();
        for j in 0..n {
            a[col][j] = &a[col][j] * &p;
            inv[col][j] = &inv[col][j] * &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let da = &f * &a[col][j];
                a[r][j] -= da;
                let di = &f * &inv[col][j];
                inv[r][j] -= di;
            }
        }
    }
    Ok(inv)
}

pub fn exact_trace(p: &[Vec<BigRational>]) -> BigRational {
    p.iter().enumerate().fold(BigRational::zero(), |acc, (i, row)| acc + &row[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectorSumReport {
    /// `||sum_t Pi_t - I||`
    pub completeness: f64,
    /// `max_{s != t} ||Pi_s Pi_t||`
    pub cross: f64,
    /// `max_t ||Pi_t^2 - Pi_t||`
    pub idempotence: f64,
    /// `max_t |trace(Pi_t) - (C(n,t) - C(n,t-1))|`
    pub trace: f64,
}

pub fn all_projectors(n: usize, k: usize) -> Result<Vec<Projector>> {
    (0..=k).into_par_iter().map(|t| projector(n, k, t)).collect()
}

pub fn projector_sum_check(n: usize, k: usize) -> Result<ProjectorSumReport> {
    let ps = all_projectors(n, k)?;
    let dim = binomial_usize(n, k);
    let mut sum = DMatrix::<f64>::zeros(dim, dim);
    for p in &ps {
        sum += &p.matrix;
    }
    let completeness = spectral_norm(&(sum - DMatrix::identity(dim, dim)));
    let mut cross = 0.0f64;
    for s in 0..ps.len() {
        for t in s + 1..ps.len() {
            cross = cross.max(spectral_norm(&(&ps[s].matrix * &ps[t].matrix)));
        }
    }
    let idempotence = ps.iter().map(Projector::idempotence_error).fold(0.0, f64::max);
    let trace = ps
        .iter()
        .map(|p| (p.trace() - p.expected_rank() as f64).abs())
        .fold(0.0, f64::max);
    Ok(ProjectorSumReport { completeness, cross, idempotence, trace })
}

/// Number of copies of `S(N0, t0) x S(N1, t1)` in `M(N, k)` restricted to
/// `Sym(N0) x Sym(N1)`, counted through `M(N,k) = sum_{k1} M(N0, k-k1) x M(N1, k1)`
/// and `M(N_i, j) = sum_{t <= min(j, n_i - j)} S(N_i, t)`.
pub fn multiplicity_check(n: usize, n1: usize, k: usize, t0: usize, t1: usize) -> Result<usize> {
    if n1 > n || k > n {
        return domain(format!("invalid split n={n} n1={n1} k={k}"));
    }
    let n0 = n - n1;
    if 2 * t0 > n0 || 2 * t1 > n1 {
        return domain(format!("partitions ({}, {t0}) or ({}, {t1}) are invalid", n0 as i64 - t0 as i64, n1 as i64 - t1 as i64));
    }
    Ok((0..=k)
        .filter(|&k1| {
            let k0 = k - k1;
            k1 <= n1 && k0 <= n0 && t1 <= k1.min(n1 - k1) && t0 <= k0.min(n0 - k0)
        })
        .count())
}

/// `sum_{t0,t1} multiplicity * dim S(N0,t0) * dim S(N1,t1)`; equals `C(n, k)`.
pub fn restricted_dimension(n: usize, n1: usize, k: usize) -> Result<u128> {
    let n0 = n - n1;
    let mut total = 0u128;
    for t0 in 0..=n0 / 2 {
        for t1 in 0..=n1 / 2 {
            let mult = multiplicity_check(n, n1, k, t0, t1)? as u128;
            total += mult * specht_dim(n0, t0) as u128 * specht_dim(n1, t1) as u128;
        }
    }
    Ok(total)
}

fn check_w_params(n: usize, n1: usize, k: usize, t: usize) -> Result<usize> {
    if n1 > n {
        return domain(format!("n1 = {n1} exceeds n = {n}"));
    }
    let n0 = n - n1;
    if t > k || n0 < k || n1 < k {
        return domain(format!("need t <= k, n0 >= k, n1 >= k; got n0={n0} n1={n1} k={k} t={t}"));
    }
    Ok(n0)
}

fn w_t_scaled(n: usize, n1: usize, k: usize, t: usize) -> Result<Vec<ScaledFloat>> {
    let n0 = check_w_params(n, n1, k, t)?;
    let (n0i, n1i, ki, ti) = (n0 as i64, n1 as i64, k as i64, t as i64);
    Ok((0..=ki)
        .map(|l| {
            let weight = BigInt::from(binomial(n1i, l) * binomial(n0i, ki - l));
            let sum: BigInt = (0..=ti)
                .map(|i| {
                    let term = BigInt::from(binomial(l, i) * binomial(ki - l, ti - i))
                        * falling(n1i - l, ti - i)
                        * falling(n0i - ki + l, i);
                    if i % 2 == 0 {
                        term
                    } else {
                        -term
                    }
                })
                .sum();
            ScaledFloat::from_bigint(&weight, 0).sqrt().mul(ScaledFloat::from_bigint(&sum, 0))
        })
        .collect())
}

/// The vector `w_t` of length `k + 1` (entry `l` indexes `|A & N1| = l`).
pub fn w_t_vector(n: usize, n1: usize, k: usize, t: usize) -> Result<Vec<f64>> {
    Ok(w_t_scaled(n, n1, k, t)?.into_iter().map(ScaledFloat::to_f64).collect())
}

/// `w_t / ||w_t||`, computed without overflow for large `n`.
pub fn w_t_normalized(n: usize, n1: usize, k: usize, t: usize) -> Result<Vec<f64>> {
    let scaled = w_t_scaled(n, n1, k, t)?;
    let top = scaled.iter().filter(|s| s.mant != 0.0).map(|s| s.exp).max();
    let Some(top) = top else {
        return Err(Error::Degenerate(format!("w_{t} vanishes at n={n} n1={n1} k={k}")));
    };
    let v: Vec<f64> = scaled
        .iter()
        .map(|s| ScaledFloat { mant: s.mant, exp: s.exp - top }.to_f64())
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(v.into_iter().map(|x| x / norm).collect())
}

/// `||w_t/||w_t|| - sigma kappa_t^{(k,p)}||` with the sign `sigma` chosen to agree.
pub fn convergence_error(n: usize, n1: usize, k: usize, t: usize, p: f64) -> Result<f64> {
    let w = w_t_normalized(n, n1, k, t)?;
    let kappa = normalize(&kraw_vector(k, p, t)?)?;
    let plus: f64 = w.iter().zip(&kappa.entries).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let minus: f64 = w.iter().zip(&kappa.entries).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
    Ok(plus.min(minus))
}

/// `1 - |w_t[t]| / ||w_t||`: how far `w_t` is from the basis vector `e_t`.
pub fn basis_alignment_gap(n: usize, n1: usize, k: usize, t: usize) -> Result<f64> {
    Ok(1.0 - w_t_normalized(n, n1, k, t)?[t].abs())
}
