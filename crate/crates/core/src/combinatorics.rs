//! Binomial coefficients, subset bitmasks and a wide-exponent float used to
//! turn exact big integers into `f64` without intermediate overflow.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

/// Exact binomial coefficient; zero outside `0 <= r <= n`.
pub fn binomial(n: i64, r: i64) -> BigUint {
    if r < 0 || n < 0 || r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r) as u64;
    let n = n as u64;
    let mut acc = BigUint::one();
    for i in 0..r {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Binomial coefficient as `u128`; panics on overflow (n up to about 128 is safe).
pub fn binomial_u128(n: i64, r: i64) -> u128 {
    if r < 0 || n < 0 || r > n {
        return 0;
    }
    let r = r.min(n - r) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn binomial_f64(n: i64, r: i64) -> f64 {
    ScaledFloat::from_biguint(&binomial(n, r)).to_f64()
}

/// Falling power `a (a-1) ... (a-b+1)`; zero when `b > a >= 0`.
pub fn falling(a: i64, b: i64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..b {
        acc *= a - i;
    }
    acc
}

/// `C(n, t) - C(n, t-1)`, the dimension of the Specht module for partition `(n-t, t)`.
pub fn specht_dim(n: usize, t: usize) -> usize {
    let lower = if t == 0 { 0 } else { binomial_u128(n as i64, t as i64 - 1) };
    (binomial_u128(n as i64, t as i64) - lower) as usize
}

#[inline]
pub fn popcount(mask: u32) -> usize {
    mask.count_ones() as usize
}

/// All `k`-subsets of `{0, .., n-1}` as bitmasks in increasing numeric order
/// (which is colexicographic order on the subsets).
pub fn k_subsets(n: usize, k: usize) -> Vec<u32> {
    assert!(n <= 31, "subset enumeration is capped at n = 31");
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut x: u32 = (1u32 << k) - 1;
    let limit: u64 = 1u64 << n;
    while (x as u64) < limit {
        out.push(x);
        // Gosper's hack
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
        if r == 0 {
            break;
        }
    }
    out
}

/// Colexicographic rank of a subset among all subsets of the same size.
pub fn colex_rank(mask: u32) -> usize {
    let mut rank = 0usize;
    let mut i = 0i64;
    let mut m = mask;
    while m != 0 {
        let c = m.trailing_zeros() as i64;
        i += 1;
        rank += binomial_u128(c, i) as usize;
        m &= m - 1;
    }
    rank
}

pub fn mask_from_elements(elements: &[usize]) -> u32 {
    elements.iter().fold(0u32, |acc, &e| acc | (1u32 << e))
}

pub fn elements_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1u32 << i) != 0).collect()
}

/// A float with an unbounded binary exponent: `mant * 2^exp`, `mant` in `[0.5, 1)` or zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFloat {
    pub mant: f64,
    pub exp: i64,
}

impl ScaledFloat {
    pub const ZERO: ScaledFloat = ScaledFloat { mant: 0.0, exp: 0 };

    pub fn from_biguint(n: &BigUint) -> Self {
        if n.is_zero() {
            return Self::ZERO;
        }
        let bits = n.bits() as i64;
        let shift = (bits - 64).max(0);
        let top = (n >> shift as u64).to_u64().expect("top bits fit in u64");
        Self::normalized(top as f64, shift)
    }

    /// `n * 2^shift` for a signed big integer.
    pub fn from_bigint(n: &BigInt, shift: i64) -> Self {
        let mut s = Self::from_biguint(n.magnitude());
        if n.sign() == Sign::Minus {
            s.mant = -s.mant;
        }
        s.exp += shift;
        s
    }

    pub fn from_f64(x: f64) -> Self {
        Self::normalized(x, 0)
    }

    fn normalized(x: f64, exp: i64) -> Self {
        if x == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = frexp(x);
        ScaledFloat { mant: m, exp: exp + e }
    }

    pub fn mul(self, other: Self) -> Self {
        Self::normalized(self.mant * other.mant, self.exp + other.exp)
    }

    /// Square root of a non-negative value.
    pub fn sqrt(self) -> Self {
        if self.mant == 0.0 {
            return Self::ZERO;
        }
        debug_assert!(self.mant > 0.0);
        let (m, e) = if self.exp % 2 == 0 {
            (self.mant, self.exp)
        } else {
            (self.mant * 2.0, self.exp - 1)
        };
        Self::normalized(m.sqrt(), e / 2)
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }
}

/// Split `x` into `m * 2^e` with `|m|` in `[0.5, 1)`.
fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    if raw_exp == 0 {
        // subnormal: rescale into the normal range first
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let e = raw_exp - 1022;
    let m_bits = (bits & !(0x7ffu64 << 52)) | (1022u64 << 52);
    (f64::from_bits(m_bits), e)
}

fn ldexp(mut m: f64, mut e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    while e > 1000 {
        m *= 2f64.powi(1000);
        e -= 1000;
        if m.is_infinite() {
            return m;
        }
    }
    while e < -1000 {
        m *= 2f64.powi(-1000);
        e += 1000;
        if m == 0.0 {
            return 0.0;
        }
    }
    m * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(5, 6), BigUint::zero());
        assert_eq!(binomial(5, -1), BigUint::zero());
        assert_eq!(binomial_u128(64, 32), 1_832_624_140_942_590_534);
        assert_eq!(binomial_f64(64, 32), 1_832_624_140_942_590_534f64);
        assert_eq!(specht_dim(5, 2), 5);
        assert_eq!(specht_dim(5, 0), 1);
    }

    #[test]
    fn subsets_are_colex_ordered() {
        let subs = k_subsets(5, 2);
        assert_eq!(subs.len(), 10);
        for (i, &s) in subs.iter().enumerate() {
            assert_eq!(colex_rank(s), i);
            assert_eq!(popcount(s), 2);
        }
        assert_eq!(k_subsets(3, 0), vec![0]);
        assert_eq!(k_subsets(12, 6).len(), 924);
    }

    #[test]
    fn scaled_float_round_trips_huge_integers() {
        let big = BigInt::from(3u32).pow(2000);
        let s = ScaledFloat::from_bigint(&big, -3170);
        // 3^2000 / 2^3170 = 2^(2000 log2 3 - 3170)
        let expected = (2000.0 * 3f64.log2() - 3170.0).exp2();
        assert!((s.to_f64() / expected - 1.0).abs() < 1e-12);
        let r = ScaledFloat::from_f64(0.09).sqrt().to_f64();
        assert!((r - 0.3).abs() < 1e-16);
        let odd = ScaledFloat { mant: 0.5, exp: 3 }.sqrt().to_f64();
        assert!((odd - 2.0).abs() < 1e-15);
    }
}
