//! Dual certificate for group testing: find at most `k` marked items among
//! `n`, a query `S` answering whether it contains a marked item.
//!
//! For `p` in `(0, 1)`, `Y_S(p) = P(S) / (2p) psi psi^T` with
//! `P(S) = p^{|S|} (1-p)^{n-|S|}` and
//!
//! ```text
//! psi[A] = (1-p)^{-|A|/2} * (kp/(1-p))^{1/4}   if |A & S| = 0
//!          (1-p)^{-|A|/2} * ((1-p)/(kp))^{1/4} if |A & S| = 1
//!          0                                   otherwise
//! ```
//!
//! and `X_S = int_0^1 Y_S(p) dp`, assembled from quadrature nodes as a sum
//! of rank-one terms.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::{check_dual_feasible, DualFamily, DualMatrix, LearningProblem, PairCondition};
use crate::combinatorics::popcount;
use crate::error::{domain, Error, Result};
use crate::quadrature::{SineSquaredRule, DEFAULT_NODES};

/// Largest `n` for certificate assembly (all `2^n` query sets are built).
pub const MAX_N: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct CgtInstance {
    pub n: usize,
    pub k: usize,
    pub problem: LearningProblem,
}

impl CgtInstance {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return domain(format!("need 1 <= k < n, got n={n} k={k}"));
        }
        Ok(CgtInstance { n, k, problem: LearningProblem::group_testing(n, k)? })
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("probability p = {p} outside (0, 1)"));
    }
    Ok(())
}

fn psi(a: u32, s: u32, p: f64, k: usize) -> f64 {
    let base = (1.0 - p).powf(-(popcount(a) as f64) / 2.0);
    let r = k as f64 * p / (1.0 - p);
    match popcount(a & s) {
        0 => base * r.powf(0.25),
        1 => base * r.powf(-0.25),
        _ => 0.0,
    }
}

pub fn psi_entry(a: u32, s: u32, p: f64, k: usize) -> Result<f64> {
    check_p(p)?;
    Ok(psi(a, s, p, k))
}

fn y_scale(s: u32, n: usize, p: f64) -> f64 {
    let size = popcount(s) as i32;
    p.powi(size) * (1.0 - p).powi(n as i32 - size) / (2.0 * p)
}

/// `Y_S(p)[A, B]`.
pub fn y_entry(a: u32, b: u32, s: u32, p: f64, n: usize, k: usize) -> Result<f64> {
    check_p(p)?;
    Ok(y_scale(s, n, p) * psi(a, s, p, k) * psi(b, s, p, k))
}

/// Closed form of `sum_S Y_S(p)[A, A]`; depends on `A` only through `|A|`.
pub fn diag_sum_p(a_size: usize, p: f64, k: usize) -> Result<f64> {
    check_p(p)?;
    let a = a_size as i32;
    let q = 1.0 - p;
    let kf = k as f64;
    Ok((q.powi(a) * (kf * p / q).sqrt() + a as f64 * p * q.powi(a - 1) * (q / (kf * p)).sqrt()) / (2.0 * p * q.powi(a)))
}

/// `sqrt(k / (p (1-p)))`, the bound on [`diag_sum_p`].
pub fn diag_bound_p(p: f64, k: usize) -> f64 {
    (k as f64 / (p * (1.0 - p))).sqrt()
}

fn distinguish_closed(delta: usize, p: f64) -> f64 {
    delta as f64 / 2.0 * (1.0 - p).powf(delta as f64 / 2.0 - 1.0)
}

/// Closed form of `sum_{S: f_A(S) != f_B(S)} Y_S(p)[A, B]`.
pub fn distinguish_sum_p(a: u32, b: u32, p: f64) -> Result<f64> {
    check_p(p)?;
    if a == b {
        return domain("distinguishing sum needs A != B");
    }
    Ok(distinguish_closed(popcount(a ^ b), p))
}

/// `sum_S Y_S(p)[A, A]` by enumerating all `S`.
pub fn diag_sum_brute(inst: &CgtInstance, a: u32, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok((0..1u32 << inst.n).map(|s| y_scale(s, inst.n, p) * psi(a, s, p, inst.k).powi(2)).sum())
}

/// `sum_{S: f_A(S) != f_B(S)} Y_S(p)[A, B]` by enumerating all `S`.
pub fn distinguish_sum_brute(inst: &CgtInstance, a: u32, b: u32, p: f64) -> Result<f64> {
    check_p(p)?;
    let prob = &inst.problem;
    Ok((0..1u32 << inst.n)
        .filter(|&s| prob.f(a, s) != prob.f(b, s))
        .map(|s| y_scale(s, inst.n, p) * psi(a, s, p, inst.k) * psi(b, s, p, inst.k))
        .sum())
}

/// `int_0^1 distinguish_sum_p dp` by quadrature; the exact value is 1.
pub fn integrate_distinguish(a: u32, b: u32) -> Result<f64> {
    if a == b {
        return domain("distinguishing integral needs A != B");
    }
    let delta = popcount(a ^ b);
    Ok(SineSquaredRule::new(DEFAULT_NODES)?.integrate(|p| distinguish_closed(delta, p)))
}

/// `pi sqrt(k)`.
pub fn objective_bound(k: usize) -> Result<f64> {
    if k == 0 {
        return domain("k must be at least 1");
    }
    Ok(PI * (k as f64).sqrt())
}

/// The family `(X_S)`, generated lazily as low-rank factors over the inputs
/// that meet `S` at most once.
#[derive(Debug, Clone)]
pub struct CgtFamily {
    pub instance: CgtInstance,
    pub rule: SineSquaredRule,
    inputs: Vec<u32>,
}

impl CgtFamily {
    pub fn factor(&self, s: u32) -> (Vec<usize>, DMatrix<f64>) {
        let support: Vec<usize> = (0..self.inputs.len()).filter(|&i| popcount(self.inputs[i] & s) <= 1).collect();
        let (n, k) = (self.instance.n, self.instance.k);
        let cols = self.rule.len();
        let factor = DMatrix::from_fn(support.len(), cols, |r, j| {
            let p = self.rule.nodes[j];
            let c = (self.rule.weights[j] * y_scale(s, n, p)).sqrt();
            c * psi(self.inputs[support[r]], s, p, k)
        });
        (support, factor)
    }
}

impl DualFamily for CgtFamily {
    fn sets(&self) -> usize {
        1 << self.instance.n
    }

    fn matrix(&self, s: u32) -> std::borrow::Cow<'_, DualMatrix> {
        let (support, factor) = self.factor(s);
        std::borrow::Cow::Owned(DualMatrix::Factored { support, factor })
    }
}

/// Largest change of the closed-form aggregates between `nodes` and
/// `2 * nodes` quadrature points.
pub fn richardson_gap(k: usize, nodes: usize) -> Result<f64> {
    let coarse = SineSquaredRule::new(nodes)?;
    let fine = SineSquaredRule::new(2 * nodes)?;
    let mut gap = 0.0f64;
    for delta in 1..=2 * k {
        let g = |p: f64| distinguish_closed(delta, p);
        gap = gap.max((coarse.integrate(g) - fine.integrate(g)).abs());
    }
    for a in 0..=k {
        let g = |p: f64| diag_sum_p(a, p, k).unwrap_or(f64::NAN);
        gap = gap.max((coarse.integrate(g) - fine.integrate(g)).abs());
    }
    Ok(gap)
}

pub fn build_x_family(n: usize, k: usize, nodes: usize) -> Result<CgtFamily> {
    let instance = CgtInstance::new(n, k)?;
    if n > MAX_N {
        return domain(format!("n = {n} exceeds the enumeration cap {MAX_N}"));
    }
    let gap = richardson_gap(k, nodes)?;
    if !(gap <= 1e-10) {
        return Err(Error::Numerical(format!("quadrature with {nodes} nodes moved by {gap:e} on doubling")));
    }
    let rule = SineSquaredRule::new(nodes)?;
    let inputs = instance.problem.inputs();
    Ok(CgtFamily { instance, rule, inputs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CgtReport {
    pub n: usize,
    pub k: usize,
    pub feasible: bool,
    pub max_pair_deviation: f64,
    pub min_pair_value: f64,
    pub max_diag: f64,
    pub pi_sqrt_k: f64,
    pub nodes: usize,
    pub tolerance: f64,
}

/// Builds the family and runs the dual feasibility check.
pub fn verify_cgt(n: usize, k: usize, nodes: usize, tol: f64) -> Result<CgtReport> {
    let family = build_x_family(n, k, nodes)?;
    let report = check_dual_feasible(&family.instance.problem, &family, PairCondition::Equality, tol)?;
    let pi_sqrt_k = objective_bound(k)?;
    Ok(CgtReport {
        n,
        k,
        feasible: report.feasible && report.objective <= pi_sqrt_k + tol,
        max_pair_deviation: report.max_pair_deviation,
        min_pair_value: report.min_pair_value,
        max_diag: report.objective,
        pi_sqrt_k,
        nodes,
        tolerance: tol,
    })
}

/// `sum_S X_S[A, A]` for every input, in input order.
pub fn integrated_diagonals(family: &CgtFamily) -> Vec<f64> {
    (0..1u32 << family.instance.n)
        .into_par_iter()
        .map(|s| {
            let (support, factor) = family.factor(s);
            let mut acc = vec![0.0; family.inputs.len()];
            for (r, &i) in support.iter().enumerate() {
                acc[i] += factor.row(r).norm_squared();
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(vec![0.0; family.inputs.len()], |mut a, b| {
            a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            a
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::mask_from_elements;

    #[test]
    fn psi_examples() {
        let s = mask_from_elements(&[0, 2]);
        assert!((psi_entry(0, s, 0.3, 2).unwrap() - (2.0 * 0.3 / 0.7f64).powf(0.25)).abs() < 1e-15);
        assert_eq!(psi_entry(0b101, s, 0.3, 2).unwrap(), 0.0);
        let v = psi_entry(0b1, 0b1, 0.5, 1).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
        assert!(psi_entry(0, 0, 1.0, 1).is_err());
    }

    #[test]
    fn closed_forms() {
        for p in [0.1, 0.5, 0.77] {
            let k = 3;
            let empty = diag_sum_p(0, p, k).unwrap();
            assert!((empty - 0.5 * diag_bound_p(p, k)).abs() < 1e-12);
            assert!((diag_sum_p(k, p, k).unwrap() - diag_bound_p(p, k)).abs() < 1e-12);
            assert!(diag_sum_p(1, p, k).unwrap() <= diag_bound_p(p, k));
            assert!((distinguish_sum_p(0b1, 0b10, p).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((distinguish_sum_p(0b11, 0b1100, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((distinguish_sum_p(0b11, 0b1100, 1e-12).unwrap() - 2.0).abs() < 1e-9);
        assert!(distinguish_sum_p(0b11, 0b11, 0.5).is_err());
        assert!((integrate_distinguish(0b1, 0b10).unwrap() - 1.0).abs() < 1e-12);
        assert!((integrate_distinguish(0b111, 0b111000).unwrap() - 1.0).abs() < 1e-12);
        assert!((objective_bound(4).unwrap() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn brute_force_agrees() {
        let inst = CgtInstance::new(5, 2).unwrap();
        let inputs = inst.problem.inputs();
        for &p in &[0.2, 0.6] {
            for &a in &inputs {
                let d = diag_sum_brute(&inst, a, p).unwrap();
                assert!((d - diag_sum_p(popcount(a), p, 2).unwrap()).abs() < 1e-12);
                for &b in &inputs {
                    if a != b {
                        let v = distinguish_sum_brute(&inst, a, b, p).unwrap();
                        assert!((v - distinguish_sum_p(a, b, p).unwrap()).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn small_certificates() {
        let r = verify_cgt(3, 1, DEFAULT_NODES, 1e-8).unwrap();
        assert!(r.feasible && r.max_pair_deviation <= 1e-8, "{r:?}");
        let r = verify_cgt(6, 2, DEFAULT_NODES, 1e-8).unwrap();
        assert!(r.feasible && r.max_diag <= PI * 2f64.sqrt() + 1e-8, "{r:?}");
        let fam = build_x_family(4, 2, DEFAULT_NODES).unwrap();
        let diags = integrated_diagonals(&fam);
        let tight = diags.iter().copied().fold(0.0, f64::max);
        assert!((tight - PI * 2f64.sqrt()).abs() < 1e-9);
        assert!(CgtInstance::new(3, 3).is_err());
    }
}
