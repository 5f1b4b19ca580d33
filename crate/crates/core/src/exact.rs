//! Exact arithmetic on square roots of rationals.
//!
//! Krawtchouk vectors carry a square-rooted binomial weight, so their
//! entries are of the form `c * sqrt(r)` with `c, r` rational. Products of
//! such numbers stay in that form; sums generally land in a multi-quadratic
//! field, represented here by [`Surd`] as a map from square-free radicand to
//! rational coefficient.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Rational from a numerator/denominator pair of machine integers.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact square root of a non-negative rational, if it is a perfect square.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().magnitude();
    let d = r.denom().magnitude();
    let sn = n.sqrt();
    let sd = d.sqrt();
    if &(&sn * &sn) == n && &(&sd * &sd) == d {
        Some(BigRational::new(BigInt::from(sn), BigInt::from(sd)))
    } else {
        None
    }
}

/// The number `coeff * sqrt(radicand)` with `radicand >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedSqrt {
    pub coeff: BigRational,
    pub radicand: BigRational,
}

impl SignedSqrt {
    pub fn new(coeff: BigRational, radicand: BigRational) -> Self {
        assert!(!radicand.is_negative(), "radicand must be non-negative");
        SignedSqrt { coeff, radicand }
    }

    pub fn rational(r: BigRational) -> Self {
        SignedSqrt { coeff: r, radicand: BigRational::one() }
    }

    pub fn zero() -> Self {
        Self::rational(BigRational::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero() || self.radicand.is_zero()
    }

    /// The exact square `coeff^2 * radicand`.
    pub fn square(&self) -> BigRational {
        &self.coeff * &self.coeff * &self.radicand
    }

    /// -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.coeff.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn mul(&self, other: &SignedSqrt) -> SignedSqrt {
        SignedSqrt {
            coeff: &self.coeff * &other.coeff,
            radicand: &self.radicand * &other.radicand,
        }
    }

    pub fn scale(&self, r: &BigRational) -> SignedSqrt {
        SignedSqrt { coeff: &self.coeff * r, radicand: self.radicand.clone() }
    }

    /// Reciprocal; `None` for zero.
    pub fn recip(&self) -> Option<SignedSqrt> {
        if self.is_zero() {
            return None;
        }
        // 1 / (c sqrt r) = (1/c) sqrt(1/r)
        Some(SignedSqrt { coeff: self.coeff.recip(), radicand: self.radicand.recip() })
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.coeff) * rational_to_f64(&self.radicand).sqrt()
    }

    pub fn to_surd(&self) -> Surd {
        Surd::from_signed_sqrt(self)
    }
}

/// Exact element of a multi-quadratic field: `sum_i q_i * sqrt(s_i)` with
/// distinct square-free positive integers `s_i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Surd {
    terms: BTreeMap<BigUint, BigRational>,
}

const SMALL_PRIMES_BOUND: u32 = 2000;

fn small_primes() -> &'static [u32] {
    use std::sync::OnceLock;
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut sieve = vec![true; SMALL_PRIMES_BOUND as usize + 1];
        let mut out = Vec::new();
        for i in 2..=SMALL_PRIMES_BOUND as usize {
            if sieve[i] {
                out.push(i as u32);
                let mut j = i * i;
                while j <= SMALL_PRIMES_BOUND as usize {
                    sieve[j] = false;
                    j += i;
                }
            }
        }
        out
    })
}

/// Write `n = square^2 * free` pulling out squares of small primes and a
/// perfect-square cofactor. Radicands in this crate are products of binomial
/// coefficients and prime powers, so trial division is complete in practice.
fn split_square(n: &BigUint) -> (BigUint, BigUint) {
    let mut rest = n.clone();
    let mut square = BigUint::one();
    let mut free = BigUint::one();
    for &p in small_primes() {
        let p = BigUint::from(p);
        if &p * &p > rest {
            break;
        }
        let mut count = 0u32;
        loop {
            let (q, r) = rest.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            rest = q;
            count += 1;
        }
        for _ in 0..count / 2 {
            square *= &p;
        }
        if count % 2 == 1 {
            free *= &p;
        }
    }
    let s = rest.sqrt();
    if &s * &s == rest {
        square *= s;
    } else {
        free *= rest;
    }
    (square, free)
}

impl Surd {
    pub fn zero() -> Self {
        Surd::default()
    }

    pub fn from_rational(r: BigRational) -> Self {
        let mut s = Surd::zero();
        s.add_term(BigUint::one(), r);
        s
    }

    pub fn from_signed_sqrt(x: &SignedSqrt) -> Self {
        if x.is_zero() {
            return Surd::zero();
        }
        // c sqrt(a/b) = (c/b) sqrt(ab)
        let a = x.radicand.numer().magnitude();
        let b = x.radicand.denom().magnitude();
        let (square, free) = split_square(&(a * b));
        let coeff = &x.coeff * BigRational::new(BigInt::from(square), BigInt::from(b.clone()));
        let mut s = Surd::zero();
        s.add_term(free, coeff);
        s
    }

    fn add_term(&mut self, radicand: BigUint, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(radicand.clone()).or_insert_with(BigRational::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.terms.remove(&radicand);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value as a rational, if it has no irrational part.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&BigUint::one()).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, other: &Surd) -> Surd {
        let mut out = self.clone();
        for (r, c) in &other.terms {
            out.add_term(r.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Surd) -> Surd {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Surd {
        Surd { terms: self.terms.iter().map(|(r, c)| (r.clone(), -c)).collect() }
    }

    pub fn scale(&self, q: &BigRational) -> Surd {
        if q.is_zero() {
            return Surd::zero();
        }
        Surd { terms: self.terms.iter().map(|(r, c)| (r.clone(), c * q)).collect() }
    }

    pub fn mul(&self, other: &Surd) -> Surd {
        let mut out = Surd::zero();
        for (ra, ca) in &self.terms {
            for (rb, cb) in &other.terms {
                // sqrt(a) sqrt(b) = g sqrt(ab/g^2) with g = gcd(a, b) for square-free a, b
                let g = ra.gcd(rb);
                let free = (ra / &g) * (rb / &g);
                let coeff = ca * cb * BigRational::from_integer(BigInt::from(g));
                out.add_term(free, coeff);
            }
        }
        out
    }

    /// Reciprocal of a single term `c sqrt(r)`; `None` for zero or several terms.
    pub fn recip(&self) -> Option<Surd> {
        if self.terms.len() != 1 {
            return None;
        }
        let (r, c) = self.terms.iter().next()?;
        // 1 / (c sqrt r) = (1 / (c r)) sqrt r
        let coeff = (c * BigRational::from_integer(BigInt::from(r.clone()))).recip();
        Some(Surd { terms: BTreeMap::from([(r.clone(), coeff)]) })
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, c)| rational_to_f64(c) * r.to_f64().unwrap_or(f64::NAN).sqrt())
            .sum()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(r, c)| if r.is_one() { format!("{c}") } else { format!("{c}*sqrt({r})") })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
