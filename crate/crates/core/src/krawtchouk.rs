//! Weighted Krawtchouk vectors.
//!
//! For order `m`, probability `p` and degree `t` the vector has entries
//!
//! ```text
//! K_t[x] = sqrt(C(m,x) p^x (1-p)^(m-x)) * sum_i (-1)^i p^(t-i) (1-p)^i C(x,i) C(m-x,t-i)
//! ```
//!
//! for `x = 0..=m`. Two backends evaluate the same sum:
//!
//! * the float backend writes the `f64` probability as `a / 2^e` and
//!   evaluates the alternating sum exactly over big integers, rounding once
//!   at the end, so there is no cancellation loss even at `m = 64`;
//! * the exact backend keeps rational `p` and returns entries as
//!   `c * sqrt(r)` with `c, r` rational ([`SignedSqrt`]).
//!
//! The exact backend is the reference the float backend is tested against.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, Zero};
use serde::Serialize;

use crate::combinatorics::{binomial, ScaledFloat};
use crate::error::{domain, Error, Result};
use crate::exact::{rational_to_f64, SignedSqrt};

/// Tolerance for floating-point identities at orders up to 64.
pub const FLOAT_TOL: f64 = 1e-9;
/// Tolerance for identities at small orders.
pub const SMALL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KrawVector {
    pub m: usize,
    pub p: f64,
    pub t: usize,
    pub entries: Vec<f64>,
    pub normalized: bool,
}

impl KrawVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &KrawVector) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum()
    }
}

fn check_params(m: usize, t: usize) -> Result<()> {
    if m == 0 {
        return domain("order m must be at least 1");
    }
    if t > m {
        return domain(format!("degree t = {t} exceeds order m = {m}"));
    }
    Ok(())
}

/// Exact dyadic decomposition of a probability: `p = a / 2^e`, `1 - p = b / 2^e`.
struct Dyadic {
    a: BigInt,
    b: BigInt,
    e: i64,
}

impl Dyadic {
    fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("probability p = {p} outside (0, 1)"));
        }
        let (mut mant, mut exp, _) = Float::integer_decode(p);
        while mant % 2 == 0 {
            mant /= 2;
            exp += 1;
        }
        let e = -(exp as i64);
        let a = BigInt::from(mant);
        let b = (BigInt::one() << e as usize) - &a;
        Ok(Dyadic { a, b, e })
    }
}

/// Evaluates all Krawtchouk vectors of one `(m, p)` pair, sharing the
/// power and binomial tables.
struct FloatEvaluator {
    m: usize,
    p: f64,
    e: i64,
    a_pow: Vec<BigInt>,
    b_pow: Vec<BigInt>,
    binom: Vec<Vec<BigInt>>,
    sqrt_weight: Vec<ScaledFloat>,
}

impl FloatEvaluator {
    fn new(m: usize, p: f64) -> Result<Self> {
        if m == 0 {
            return domain("order m must be at least 1");
        }
        let Dyadic { a, b, e } = Dyadic::new(p)?;
        let mut a_pow = vec![BigInt::one()];
        let mut b_pow = vec![BigInt::one()];
        for j in 1..=m {
            a_pow.push(&a_pow[j - 1] * &a);
            b_pow.push(&b_pow[j - 1] * &b);
        }
        let binom: Vec<Vec<BigInt>> = (0..=m)
            .map(|x| (0..=m).map(|i| BigInt::from(binomial(x as i64, i as i64))).collect())
            .collect();
        let sqrt_weight = (0..=m)
            .map(|x| {
                let w = &binom[m][x] * &a_pow[x] * &b_pow[m - x];
                ScaledFloat::from_bigint(&w, -e * m as i64).sqrt()
            })
            .collect();
        Ok(FloatEvaluator { m, p, e, a_pow, b_pow, binom, sqrt_weight })
    }

    /// `2^(e t)` times the polynomial part at `x`, exactly.
    fn scaled_poly(&self, t: usize, x: usize) -> BigInt {
        let m = self.m;
        let mut acc = BigInt::zero();
        for i in 0..=t.min(x) {
            if t - i > m - x {
                continue;
            }
            let term = &self.a_pow[t - i] * &self.b_pow[i] * &self.binom[x][i] * &self.binom[m - x][t - i];
            if i % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }

    fn vector(&self, t: usize) -> KrawVector {
        let entries = (0..=self.m)
            .map(|x| {
                let poly = ScaledFloat::from_bigint(&self.scaled_poly(t, x), -self.e * t as i64);
                self.sqrt_weight[x].mul(poly).to_f64()
            })
            .collect();
        KrawVector { m: self.m, p: self.p, t, entries, normalized: false }
    }
}

/// The unnormalized weighted Krawtchouk vector `K_t^{(m,p)}`.
pub fn kraw_vector(m: usize, p: f64, t: usize) -> Result<KrawVector> {
    check_params(m, t)?;
    Ok(FloatEvaluator::new(m, p)?.vector(t))
}

/// Scale a vector to unit Euclidean norm.
pub fn normalize(v: &KrawVector) -> Result<KrawVector> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Degenerate(format!("Krawtchouk vector (m={}, t={}) has norm {norm}", v.m, v.t)));
    }
    Ok(KrawVector {
        entries: v.entries.iter().map(|e| e / norm).collect(),
        normalized: true,
        ..v.clone()
    })
}

/// The normalized basis `(kappa_0, .., kappa_m)` for one `(m, p)`.
pub fn kraw_basis(m: usize, p: f64) -> Result<Vec<KrawVector>> {
    let ev = FloatEvaluator::new(m, p)?;
    (0..=m).map(|t| normalize(&ev.vector(t))).collect()
}

/// Largest `|<kappa_s, kappa_t> - delta_st|` over the basis.
pub fn gram_deviation(basis: &[KrawVector]) -> f64 {
    let mut worst = 0.0f64;
    for (s, u) in basis.iter().enumerate() {
        for (t, v) in basis.iter().enumerate() {
            let target = if s == t { 1.0 } else { 0.0 };
            worst = worst.max((u.dot(v) - target).abs());
        }
    }
    worst
}

/// `max_x |kappa_l[x] - (-1)^l kappa_l[k-x]|` at `p = 1/2`.
pub fn check_reflection_symmetry(k: usize, l: usize) -> Result<f64> {
    let v = normalize(&kraw_vector(k, 0.5, l)?)?;
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok((0..=k)
        .map(|x| (v.entries[x] - sign * v.entries[k - x]).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenterSymmetry {
    pub sign: i32,
    pub deviation: f64,
}

/// Compare `kappa_l[s]` with `kappa_{k-l}[s]` at the center `s = floor(k/2)`, `p = 1/2`.
pub fn check_center_symmetry(k: usize, l: usize) -> Result<CenterSymmetry> {
    check_params(k, l)?;
    let basis = kraw_basis(k, 0.5)?;
    let s = k / 2;
    let a = basis[l].entries[s];
    let b = basis[k - l].entries[s];
    let plus = (a - b).abs();
    let minus = (a + b).abs();
    Ok(if plus <= minus {
        CenterSymmetry { sign: 1, deviation: plus }
    } else {
        CenterSymmetry { sign: -1, deviation: minus }
    })
}

/// `sum_l kappa_l[floor(k/2)]^2` at `p = 1/2`; equals one by completeness.
pub fn center_completeness(k: usize) -> Result<f64> {
    let s = k / 2;
    Ok(kraw_basis(k, 0.5)?.iter().map(|v| v.entries[s] * v.entries[s]).sum())
}

// ---------------------------------------------------------------------------
// exact backend

/// Krawtchouk vector with rational `p`, entries `poly[x] * sqrt(weight[x] / scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactKrawVector {
    pub m: usize,
    pub t: usize,
    pub p: BigRational,
    weights: Vec<BigRational>,
    poly: Vec<BigRational>,
    scale: BigRational,
    pub normalized: bool,
}

impl ExactKrawVector {
    pub fn entry(&self, x: usize) -> SignedSqrt {
        SignedSqrt::new(self.poly[x].clone(), &self.weights[x] / &self.scale)
    }

    pub fn entries(&self) -> Vec<SignedSqrt> {
        (0..=self.m).map(|x| self.entry(x)).collect()
    }

    /// `entry(x)^2`, exactly.
    pub fn entry_squared(&self, x: usize) -> BigRational {
        &self.poly[x] * &self.poly[x] * &self.weights[x] / &self.scale
    }

    pub fn norm_squared(&self) -> BigRational {
        (0..=self.m).map(|x| self.entry_squared(x)).fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn to_float(&self) -> KrawVector {
        KrawVector {
            m: self.m,
            p: rational_to_f64(&self.p),
            t: self.t,
            entries: self.entries().iter().map(SignedSqrt::to_f64).collect(),
            normalized: self.normalized,
        }
    }

    /// Exact inner product with a vector of the same `(m, p)`.
    pub fn inner(&self, other: &ExactKrawVector) -> Result<SignedSqrt> {
        if self.m != other.m || self.p != other.p {
            return domain("exact inner product needs vectors of the same order and probability");
        }
        let coeff = (0..=self.m)
            .map(|x| &self.weights[x] * &self.poly[x] * &other.poly[x])
            .fold(BigRational::zero(), |a, b| a + b);
        let radicand = (&self.scale * &other.scale).recip();
        Ok(SignedSqrt::new(coeff, radicand))
    }
}

fn check_rational_p(p: &BigRational) -> Result<()> {
    if !p.is_positive() || p >= &BigRational::one() {
        return domain(format!("probability p = {p} outside (0, 1)"));
    }
    Ok(())
}

pub fn kraw_vector_exact(m: usize, p: &BigRational, t: usize) -> Result<ExactKrawVector> {
    check_params(m, t)?;
    check_rational_p(p)?;
    // p = a/c, 1 - p = b/c; all sums run over integers and are divided once
    let a = p.numer().clone();
    let c = p.denom().clone();
    let b = &c - &a;
    let mut a_pow = vec![BigInt::one()];
    let mut b_pow = vec![BigInt::one()];
    for j in 1..=m {
        a_pow.push(&a_pow[j - 1] * &a);
        b_pow.push(&b_pow[j - 1] * &b);
    }
    let c_m = num_traits::pow(c.clone(), m);
    let c_t = num_traits::pow(c, t);
    let binom = |n: usize, r: usize| BigInt::from(binomial(n as i64, r as i64));
    let weights = (0..=m)
        .map(|x| BigRational::new(binom(m, x) * &a_pow[x] * &b_pow[m - x], c_m.clone()))
        .collect();
    let poly = (0..=m)
        .map(|x| {
            let mut acc = BigInt::zero();
            for i in 0..=t.min(x) {
                if t - i > m - x {
                    continue;
                }
                let term = &a_pow[t - i] * &b_pow[i] * binom(x, i) * binom(m - x, t - i);
                if i % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            BigRational::new(acc, c_t.clone())
        })
        .collect();
    Ok(ExactKrawVector {
        m,
        t,
        p: p.clone(),
        weights,
        poly,
        scale: BigRational::one(),
        normalized: false,
    })
}

pub fn normalize_exact(v: &ExactKrawVector) -> Result<ExactKrawVector> {
    let n = v.norm_squared();
    if n.is_zero() {
        return Err(Error::Degenerate(format!("exact Krawtchouk vector (m={}, t={}) is zero", v.m, v.t)));
    }
    Ok(ExactKrawVector { scale: &v.scale * n, normalized: true, ..v.clone() })
}

pub fn kraw_basis_exact(m: usize, p: &BigRational) -> Result<Vec<ExactKrawVector>> {
    (0..=m).map(|t| normalize_exact(&kraw_vector_exact(m, p, t)?)).collect()
}

/// True iff the exact basis is orthonormal: off-diagonal numerators vanish
/// and squared norms equal one.
pub fn gram_is_identity_exact(basis: &[ExactKrawVector]) -> Result<bool> {
    for (s, u) in basis.iter().enumerate() {
        for (t, v) in basis.iter().enumerate().skip(s) {
            let ip = u.inner(v)?;
            let ok = if s == t { ip.square().is_one() && ip.signum() == 1 } else { ip.is_zero() };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

/// Exact form of [`check_reflection_symmetry`]: true iff every deviation is zero.
pub fn check_reflection_symmetry_exact(k: usize, l: usize) -> Result<bool> {
    let v = normalize_exact(&kraw_vector_exact(k, &half(), l)?)?;
    let flip = if l.is_multiple_of(2) { 1 } else { -1 };
    Ok((0..=k).all(|x| {
        let a = v.entry(x);
        let b = v.entry(k - x);
        a.square() == b.square() && a.signum() == flip * b.signum()
    }))
}

/// Exact form of [`check_center_symmetry`]: true iff `kappa_l[s]^2 == kappa_{k-l}[s]^2`.
pub fn check_center_symmetry_exact(k: usize, l: usize) -> Result<bool> {
    check_params(k, l)?;
    let s = k / 2;
    let a = normalize_exact(&kraw_vector_exact(k, &half(), l)?)?;
    let b = normalize_exact(&kraw_vector_exact(k, &half(), k - l)?)?;
    Ok(a.entry_squared(s) == b.entry_squared(s))
}

/// Exact `sum_l kappa_l[floor(k/2)]^2`.
pub fn center_completeness_exact(k: usize) -> Result<BigRational> {
    let s = k / 2;
    Ok(kraw_basis_exact(k, &half())?
        .iter()
        .map(|v| v.entry_squared(s))
        .fold(BigRational::zero(), |a, b| a + b))
}
