//! Trace-norm certificates for the exact-half and majority weight sets at
//! `p = 1/2`, the positive-weight construction for majority, and the overlap
//! probability behind the non-adaptive lower bound.
//!
//! At level `m` the block `A_{m,l}` is `kappa_l kappa_l^T` (with
//! `kappa_l = kappa_l^{(m,1/2)}`) restricted to rows `W0` and columns `W1` of
//! the split at shift `t = floor(k/2) - floor(m/2)`. The split depends only on
//! `m` and the mode, so blocks are shared by every `k` of the same mode.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binomial, ScaledFloat};
use crate::error::{domain, Error, Result};
use crate::exact::{rational_sqrt, rational_to_f64, Surd};
use crate::krawtchouk::{kraw_vector, kraw_vector_exact, normalize, normalize_exact};
use crate::linalg::trace_norm;

/// Largest `k` for the recursive modes.
pub const GROWTH_MAX_K: usize = 60;
/// Largest `k` for the odd-majority difference certificate.
pub const ODD_MAX_K: usize = 401;
/// Largest `k` for the rational backend.
pub const EXACT_MAX_K: usize = 12;
/// Growth tables flag a ratio above this multiple of the small-`k` maximum.
pub const GROWTH_SLACK: f64 = 1.1;
/// Range of `k` defining the small-`k` maximum.
pub const SMALL_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMode {
    ExactHalf,
    MajorityEven,
    MajorityOddDiff,
}

impl CertMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact-half" => Ok(CertMode::ExactHalf),
            "majority-even" => Ok(CertMode::MajorityEven),
            "majority-odd-diff" => Ok(CertMode::MajorityOddDiff),
            _ => domain(format!("unknown certificate mode {s:?}")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CertMode::ExactHalf => "exact-half",
            CertMode::MajorityEven => "majority-even",
            CertMode::MajorityOddDiff => "majority-odd-diff",
        }
    }

    /// Whether a certificate of this mode exists for `k`.
    pub fn admits(self, k: usize) -> bool {
        match self {
            CertMode::ExactHalf => k >= 1,
            CertMode::MajorityEven => k >= 2 && k.is_multiple_of(2),
            CertMode::MajorityOddDiff => k % 2 == 1,
        }
    }

    fn check(self, k: usize) -> Result<()> {
        if self.admits(k) {
            Ok(())
        } else {
            domain(format!("mode {} is not defined for k = {k}", self.name()))
        }
    }

    fn max_k(self) -> usize {
        match self {
            CertMode::MajorityOddDiff => ODD_MAX_K,
            _ => GROWTH_MAX_K,
        }
    }

    /// Row and column weights `(W0, W1)` of the blocks at level `m`.
    pub fn split(self, m: usize) -> (Vec<usize>, Vec<usize>) {
        let start = match self {
            CertMode::ExactHalf => {
                let s = m / 2;
                return ((0..=m).filter(|&x| x != s).collect(), vec![s]);
            }
            CertMode::MajorityEven => m / 2,
            CertMode::MajorityOddDiff => m / 2 + 1,
        };
        ((0..start).collect(), (start..=m).collect())
    }
}

impl std::fmt::Display for CertMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

trait Scalar: Clone + Send + Sync + Sized {
    fn zero() -> Self;
    fn from_int(v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn recip(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn kappa(m: usize, l: usize) -> Result<Vec<Self>>;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn recip(&self) -> Option<Self> {
        (*self != 0.0).then(|| 1.0 / self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn kappa(m: usize, l: usize) -> Result<Vec<Self>> {
        Ok(normalize(&kraw_vector(m, 0.5, l)?)?.entries)
    }
}

impl Scalar for Surd {
    fn zero() -> Self {
        Surd::zero()
    }
    fn from_int(v: i64) -> Self {
        Surd::from_rational(BigRational::from_integer(BigInt::from(v)))
    }
    fn add(&self, o: &Self) -> Self {
        Surd::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Surd::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Surd::mul(self, o)
    }
    fn recip(&self) -> Option<Self> {
        Surd::recip(self)
    }
    fn is_zero(&self) -> bool {
        Surd::is_zero(self)
    }
    fn kappa(m: usize, l: usize) -> Result<Vec<Self>> {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let v = normalize_exact(&kraw_vector_exact(m, &half, l)?)?;
        Ok(v.entries().iter().map(|e| e.to_surd()).collect())
    }
}

#[derive(Debug, Clone)]
struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    /// `self -= c * other`.
    fn sub_scaled(&mut self, c: &T, other: &Mat<T>) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.sub(&c.mul(b));
        }
    }
}

fn to_dmatrix(m: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

fn from_dmatrix(m: &DMatrix<f64>) -> Mat<f64> {
    Mat { rows: m.nrows(), cols: m.ncols(), data: m.transpose().as_slice().to_vec() }
}

/// Lazily evaluated `kappa_l^{(m,1/2)}` for `1 <= m <= m_max`.
struct Kappa<T> {
    cells: Vec<Vec<OnceLock<Vec<T>>>>,
}

impl<T: Scalar> Kappa<T> {
    fn new(m_max: usize) -> Self {
        Kappa { cells: (0..=m_max).map(|m| (0..=m).map(|_| OnceLock::new()).collect()).collect() }
    }

    fn get(&self, m: usize, l: usize) -> &[T] {
        self.cells[m][l].get_or_init(|| T::kappa(m, l).expect("m >= 1 and l <= m"))
    }

    /// `<lam, A_{m,l}>` without forming the block.
    fn pair(&self, lam: &Mat<T>, mode: CertMode, m: usize, l: usize) -> T {
        let kap = self.get(m, l);
        let (rows, cols) = mode.split(m);
        let mut acc = T::zero();
        for (r, &x) in rows.iter().enumerate() {
            let mut row = T::zero();
            for (c, &y) in cols.iter().enumerate() {
                let v = lam.get(r, c);
                if !v.is_zero() {
                    row = row.add(&v.mul(&kap[y]));
                }
            }
            if !row.is_zero() {
                acc = acc.add(&row.mul(&kap[x]));
            }
        }
        acc
    }

    fn block(&self, mode: CertMode, m: usize, l: usize) -> Mat<T> {
        let kap = self.get(m, l);
        let (rows, cols) = mode.split(m);
        let data = rows.iter().flat_map(|&x| cols.iter().map(move |&y| kap[x].mul(&kap[y]))).collect();
        Mat { rows: rows.len(), cols: cols.len(), data }
    }

    fn seed(&self, mode: CertMode, k: usize) -> Result<Mat<T>> {
        mode.check(k)?;
        let (rows, cols) = mode.split(k);
        let k0 = self.get(k, 0);
        let degenerate = || Error::Degenerate(format!("seed normalizer vanishes at k = {k}"));
        let data = match mode {
            CertMode::ExactHalf | CertMode::MajorityEven => {
                let s = k / 2;
                let one_minus = T::from_int(1).sub(&k0[s].mul(&k0[s]));
                let lead = if mode == CertMode::ExactHalf { 1 } else { 2 };
                let inv = T::from_int(lead).mul(&k0[s].mul(&one_minus).recip().ok_or_else(degenerate)?);
                // column s is the first column of W1 in both modes
                rows.iter()
                    .flat_map(|&x| (0..cols.len()).map(move |c| (x, c)))
                    .map(|(x, c)| if c == 0 { k0[x].mul(&inv) } else { T::zero() })
                    .collect()
            }
            CertMode::MajorityOddDiff => {
                let k1 = self.get(k, 1);
                let overlap = cols.iter().fold(T::zero(), |acc, &y| acc.add(&k0[y].mul(&k1[y])));
                let inv = T::from_int(2).mul(&overlap.recip().ok_or_else(degenerate)?);
                rows.iter()
                    .flat_map(|&x| cols.iter().map(move |&y| (x, y)))
                    .map(|(x, y)| k0[x].mul(&k1[y]).mul(&inv))
                    .collect()
            }
        };
        Ok(Mat { rows: rows.len(), cols: cols.len(), data })
    }
}

/// Blocks `Lambda_1 .. Lambda_k`; `None` is an all-zero block.
struct RawFamily<T> {
    k: usize,
    mats: Vec<Option<Mat<T>>>,
    seed: Mat<T>,
    coeffs: Vec<T>,
}

/// Families for every admissible `k' <= k_max`, built bottom-up so each level
/// reuses the lower ones.
fn build_families<T: Scalar>(kappa: &Kappa<T>, mode: CertMode, k_max: usize) -> Result<Vec<Option<RawFamily<T>>>> {
    let mut fams: Vec<Option<RawFamily<T>>> = (0..=k_max).map(|_| None).collect();
    for k in 1..=k_max {
        if !mode.admits(k) {
            continue;
        }
        let seed = kappa.seed(mode, k)?;
        let mut mats: Vec<Option<Mat<T>>> = (1..=k).map(|_| None).collect();
        let mut coeffs = vec![T::zero(); k - 1];
        if mode != CertMode::MajorityOddDiff {
            let terms: Vec<(usize, T)> = (1..k)
                .into_par_iter()
                .filter(|&l| mode == CertMode::ExactHalf || l % 2 == 0)
                .map(|l| (l, kappa.pair(&seed, mode, k, l)))
                .collect();
            for (l, c) in terms {
                if !c.is_zero() {
                    let prev = fams[k - l].as_ref().ok_or_else(|| {
                        Error::Domain(format!("recursion needs the family at k = {}", k - l))
                    })?;
                    for (m, block) in prev.mats.iter().enumerate() {
                        if let Some(b) = block {
                            let target = mats[m].get_or_insert_with(|| Mat {
                                rows: b.rows,
                                cols: b.cols,
                                data: vec![T::zero(); b.data.len()],
                            });
                            target.sub_scaled(&c, b);
                        }
                    }
                }
                coeffs[l - 1] = c;
            }
        }
        mats[k - 1] = Some(seed.clone());
        fams[k] = Some(RawFamily { k, mats, seed, coeffs });
    }
    Ok(fams)
}

struct RawResiduals<T> {
    first: T,
    third: Option<T>,
    second: Vec<(usize, T)>,
}

fn residuals<T: Scalar>(kappa: &Kappa<T>, mode: CertMode, k: usize, mats: &[Option<Mat<T>>]) -> RawResiduals<T> {
    let pair = |m: usize, l: usize| match &mats[m - 1] {
        Some(lam) => kappa.pair(lam, mode, m, l),
        None => T::zero(),
    };
    let first = pair(k, 0).sub(&T::from_int(1));
    let (third, start) = if mode == CertMode::MajorityOddDiff {
        let lower = if k >= 2 { pair(k - 1, 0) } else { T::zero() };
        (Some(pair(k, 1).add(&lower).add(&T::from_int(1))), 2)
    } else {
        (None, 1)
    };
    let second = (start..k)
        .into_par_iter()
        .map(|l| (l, (0..=l).fold(T::zero(), |acc, i| acc.add(&pair(k - i, l - i)))))
        .collect();
    RawResiduals { first, third, second }
}

/// One block `A_{m,l}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ABlock {
    pub m: usize,
    pub l: usize,
    pub mode: CertMode,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

pub fn a_block(m: usize, l: usize, mode: CertMode) -> Result<ABlock> {
    if m == 0 || l > m {
        return domain(format!("need 0 <= l <= m and m >= 1, got m={m} l={l}"));
    }
    let kappa = Kappa::<f64>::new(m);
    let (rows, cols) = mode.split(m);
    let matrix = to_dmatrix(&kappa.block(mode, m, l));
    Ok(ABlock { m, l, mode, rows, cols, matrix })
}

/// The seed `Lambda_k` of the mode.
pub fn lambda_seed(k: usize, mode: CertMode) -> Result<DMatrix<f64>> {
    mode.check(k)?;
    Ok(to_dmatrix(&Kappa::<f64>::new(k).seed(mode, k)?))
}

/// A feasible point `(Lambda_1, .., Lambda_k)` of the trace-norm dual.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaFamily {
    pub k: usize,
    pub mode: CertMode,
    /// `matrices[m - 1]` is `Lambda_m`; `None` is an all-zero block.
    pub matrices: Vec<Option<DMatrix<f64>>>,
    /// `g(k)`, the sum of trace norms.
    pub objective: f64,
    pub seed_trace_norm: f64,
    /// `<Lambda_k, A_{k,l}>` for `l = 1 .. k-1` (zero where skipped).
    pub coefficients: Vec<f64>,
    /// Right-hand side of the triangle-inequality recursion with the built
    /// lower-level objectives.
    pub recursion_bound: f64,
}

impl LambdaFamily {
    pub fn block_shape(&self, m: usize) -> (usize, usize) {
        let (rows, cols) = self.mode.split(m);
        (rows.len(), cols.len())
    }
}

fn float_family(raw: &RawFamily<f64>, mode: CertMode, objectives: &[f64]) -> LambdaFamily {
    let matrices: Vec<Option<DMatrix<f64>>> = raw.mats.iter().map(|m| m.as_ref().map(to_dmatrix)).collect();
    let objective = matrices.iter().flatten().map(trace_norm).sum();
    let seed_trace_norm = trace_norm(&to_dmatrix(&raw.seed));
    let recursion_bound = seed_trace_norm
        + raw.coeffs.iter().enumerate().map(|(i, c)| c.abs() * objectives.get(raw.k - (i + 1)).copied().unwrap_or(0.0)).sum::<f64>();
    LambdaFamily {
        k: raw.k,
        mode,
        matrices,
        objective,
        seed_trace_norm,
        coefficients: raw.coeffs.clone(),
        recursion_bound,
    }
}

fn check_range(mode: CertMode, k: usize) -> Result<()> {
    if k > mode.max_k() {
        return domain(format!("k = {k} exceeds the cap {} for mode {mode}", mode.max_k()));
    }
    mode.check(k)
}

/// Families for every admissible `k <= k_max` of the mode, in increasing `k`.
pub fn lambda_families(mode: CertMode, k_max: usize) -> Result<Vec<LambdaFamily>> {
    if k_max > mode.max_k() {
        return domain(format!("k = {k_max} exceeds the cap {} for mode {mode}", mode.max_k()));
    }
    if mode == CertMode::MajorityOddDiff {
        // no recursion: each family is a single seed block
        let ks: Vec<usize> = (1..=k_max).filter(|&k| mode.admits(k)).collect();
        return ks.into_par_iter().map(|k| lambda_family(k, mode)).collect();
    }
    let kappa = Kappa::<f64>::new(k_max);
    let raw = build_families(&kappa, mode, k_max)?;
    let mut objectives = vec![0.0; k_max + 1];
    let mut out = Vec::new();
    for fam in raw.iter().flatten() {
        let f = float_family(fam, mode, &objectives);
        objectives[f.k] = f.objective;
        out.push(f);
    }
    Ok(out)
}

pub fn lambda_family(k: usize, mode: CertMode) -> Result<LambdaFamily> {
    check_range(mode, k)?;
    if mode == CertMode::MajorityOddDiff {
        let kappa = Kappa::<f64>::new(k);
        let seed = kappa.seed(mode, k)?;
        let mut mats: Vec<Option<Mat<f64>>> = (1..=k).map(|_| None).collect();
        mats[k - 1] = Some(seed.clone());
        let raw = RawFamily { k, mats, seed, coeffs: vec![0.0; k - 1] };
        return Ok(float_family(&raw, mode, &[]));
    }
    lambda_families(mode, k)?.pop().ok_or_else(|| Error::Domain(format!("no family for k = {k}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub k: usize,
    pub mode: CertMode,
    /// `<Lambda_k, A_{k,0}> - 1`.
    pub first: f64,
    /// `<Lambda_k, A_{k,1}> + <Lambda_{k-1}, A_{k-1,0}> + 1` (odd majority only).
    pub third: Option<f64>,
    /// `(l, sum_{i <= l} <Lambda_{k-i}, A_{k-i,l-i}>)`.
    pub second: Vec<(usize, f64)>,
    pub max_residual: f64,
    pub feasible: bool,
    pub tolerance: f64,
}

pub fn verify_constraints(family: &LambdaFamily, tol: f64) -> Result<ResidualReport> {
    let (k, mode) = (family.k, family.mode);
    if family.matrices.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: family.matrices.len() });
    }
    let mut mats = Vec::with_capacity(k);
    for (i, block) in family.matrices.iter().enumerate() {
        if let Some(b) = block {
            let shape = family.block_shape(i + 1);
            if (b.nrows(), b.ncols()) != shape {
                return Err(Error::DimensionMismatch { expected: shape.0 * shape.1, got: b.len() });
            }
        }
        mats.push(block.as_ref().map(from_dmatrix));
    }
    let kappa = Kappa::<f64>::new(k);
    let raw = residuals(&kappa, mode, k, &mats);
    let max_residual = raw
        .second
        .iter()
        .map(|(_, v)| v.abs())
        .chain([raw.first.abs(), raw.third.map_or(0.0, f64::abs)])
        .fold(0.0, f64::max);
    Ok(ResidualReport {
        k,
        mode,
        first: raw.first,
        third: raw.third,
        second: raw.second,
        max_residual,
        feasible: max_residual <= tol,
        tolerance: tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResidualReport {
    pub k: usize,
    pub mode: CertMode,
    /// Every residual is exactly zero.
    pub exact_zero: bool,
    /// Residuals that are not zero, printed exactly.
    pub nonzero: Vec<String>,
    /// Largest entry gap between the rational and float families.
    pub float_gap: f64,
}

/// Builds the family over the rationals (with square roots) and checks every
/// constraint exactly.
pub fn verify_constraints_exact(k: usize, mode: CertMode) -> Result<ExactResidualReport> {
    if k > EXACT_MAX_K {
        return domain(format!("rational backend is capped at k = {EXACT_MAX_K}"));
    }
    mode.check(k)?;
    let kappa = Kappa::<Surd>::new(k);
    let raw = if mode == CertMode::MajorityOddDiff {
        let seed = kappa.seed(mode, k)?;
        let mut mats: Vec<Option<Mat<Surd>>> = (1..=k).map(|_| None).collect();
        mats[k - 1] = Some(seed.clone());
        RawFamily { k, mats, seed, coeffs: vec![Surd::zero(); k - 1] }
    } else {
        build_families(&kappa, mode, k)?.pop().flatten().ok_or_else(|| Error::Domain(format!("no family for k = {k}")))?
    };
    let res = residuals(&kappa, mode, k, &raw.mats);
    let mut nonzero = Vec::new();
    if !res.first.is_zero() {
        nonzero.push(format!("first: {}", res.first));
    }
    if let Some(t) = res.third.as_ref().filter(|t| !t.is_zero()) {
        nonzero.push(format!("third: {t}"));
    }
    for (l, v) in &res.second {
        if !v.is_zero() {
            nonzero.push(format!("l={l}: {v}"));
        }
    }
    let float = lambda_family(k, mode)?;
    let mut float_gap = 0.0f64;
    for (exact, approx) in raw.mats.iter().zip(&float.matrices) {
        match (exact, approx) {
            (Some(e), Some(a)) => {
                let a = from_dmatrix(a);
                for (x, y) in e.data.iter().zip(&a.data) {
                    float_gap = float_gap.max((x.to_f64() - y).abs());
                }
            }
            (Some(e), None) => e.data.iter().for_each(|x| float_gap = float_gap.max(x.to_f64().abs())),
            (None, Some(a)) => float_gap = float_gap.max(a.amax()),
            (None, None) => {}
        }
    }
    Ok(ExactResidualReport { k, mode, exact_zero: nonzero.is_empty(), nonzero, float_gap })
}

/// Exact `g(k)` for exact-half, whose blocks are single columns: `Some` when
/// every block norm is rational.
pub fn exact_objective(k: usize) -> Result<Option<BigRational>> {
    if k > EXACT_MAX_K {
        return domain(format!("rational backend is capped at k = {EXACT_MAX_K}"));
    }
    check_range(CertMode::ExactHalf, k)?;
    let kappa = Kappa::<Surd>::new(k);
    let fam = build_families(&kappa, CertMode::ExactHalf, k)?.pop().flatten();
    let Some(fam) = fam else {
        return Ok(None);
    };
    let mut total = BigRational::zero();
    for block in fam.mats.iter().flatten() {
        let sq = block.data.iter().fold(Surd::zero(), |acc, x| acc.add(&x.mul(x)));
        match sq.as_rational().as_ref().and_then(rational_sqrt) {
            Some(r) => total += r,
            None => return Ok(None),
        }
    }
    Ok(Some(total))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerIdentityReport {
    pub k: usize,
    /// `max_l |<Lambda_k, A_{k,l}> + kappa_l[s]^2 / (1 - kappa_0[s]^2)|`.
    pub max_deviation: f64,
    pub sum_abs: f64,
    /// `(1 - 2 kappa_0[s]^2) / (1 - kappa_0[s]^2)`.
    pub sum_expected: f64,
    pub sum_deviation: f64,
    /// Deviation of `(1 - kappa_0[s]^2)/(1 - 2 kappa_0[s]^2) sum_l (k - l)|c_l|`
    /// from `k/2`; absent when `1 - 2 kappa_0[s]^2` vanishes.
    pub weighted_deviation: Option<f64>,
}

/// Checks the closed form of `<Lambda_k, A_{k,l}>` for the exact-half seed.
pub fn inner_identity_check(k: usize) -> Result<InnerIdentityReport> {
    check_range(CertMode::ExactHalf, k)?;
    let kappa = Kappa::<f64>::new(k);
    let seed = kappa.seed(CertMode::ExactHalf, k)?;
    let s = k / 2;
    let k0s = kappa.get(k, 0)[s].powi(2);
    let coeffs: Vec<f64> = (1..k).into_par_iter().map(|l| kappa.pair(&seed, CertMode::ExactHalf, k, l)).collect();
    let max_deviation = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| (c + kappa.get(k, i + 1)[s].powi(2) / (1.0 - k0s)).abs())
        .fold(0.0, f64::max);
    let sum_abs: f64 = coeffs.iter().map(|c| c.abs()).sum();
    let sum_expected = (1.0 - 2.0 * k0s) / (1.0 - k0s);
    let gap = 1.0 - 2.0 * k0s;
    let weighted_deviation = (gap.abs() > 1e-12).then(|| {
        let w: f64 = coeffs.iter().enumerate().map(|(i, c)| (k - i - 1) as f64 * c.abs()).sum();
        ((1.0 - k0s) / gap * w - k as f64 / 2.0).abs()
    });
    Ok(InnerIdentityReport {
        k,
        max_deviation,
        sum_abs,
        sum_expected,
        sum_deviation: (sum_abs - sum_expected).abs(),
        weighted_deviation,
    })
}

/// Rational check of the closed form of every `<Lambda_k, A_{k,l}>` and of
/// the absolute-sum identity.
pub fn inner_identity_exact(k: usize) -> Result<bool> {
    if k > EXACT_MAX_K {
        return domain(format!("rational backend is capped at k = {EXACT_MAX_K}"));
    }
    check_range(CertMode::ExactHalf, k)?;
    let kappa = Kappa::<Surd>::new(k);
    let seed = kappa.seed(CertMode::ExactHalf, k)?;
    let s = k / 2;
    let sq = |l: usize| kappa.get(k, l)[s].mul(&kappa.get(k, l)[s]);
    let one_minus = Surd::from_int(1).sub(&sq(0));
    let inv = one_minus.recip().ok_or_else(|| Error::Degenerate("1 - kappa_0[s]^2 vanishes".into()))?;
    let mut sum_abs = BigRational::zero();
    for l in 1..k {
        let c = kappa.pair(&seed, CertMode::ExactHalf, k, l);
        if !c.add(&sq(l).mul(&inv)).is_zero() {
            return Ok(false);
        }
        let Some(q) = c.as_rational() else {
            return Err(Error::Numerical(format!("coefficient at l = {l} is irrational")));
        };
        sum_abs += num_traits::Signed::abs(&q);
    }
    let expected = Surd::from_int(1).sub(&sq(0).scale(&BigRational::from_integer(2.into()))).mul(&inv);
    Ok(Surd::from_rational(sum_abs).sub(&expected).is_zero())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub k: usize,
    pub g: f64,
    pub ratio: f64,
    pub seed_trace_norm: f64,
    pub recursion_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthTable {
    pub mode: CertMode,
    pub rows: Vec<GrowthRow>,
    /// `max g(k) / k^{1/4}` over the table.
    pub sup_ratio: f64,
    pub sup_at: usize,
    /// The same maximum over `k <= SMALL_K`.
    pub small_k_max: f64,
    /// `sup_ratio > GROWTH_SLACK * small_k_max`.
    pub exceeds_small_k: bool,
}

/// `g(k)` and `g(k) / k^{1/4}` for every admissible `k <= k_max`.
pub fn growth_check(mode: CertMode, k_max: usize) -> Result<GrowthTable> {
    if k_max == 0 {
        return domain("k_max must be at least 1");
    }
    let fams = lambda_families(mode, k_max)?;
    let rows: Vec<GrowthRow> = fams
        .iter()
        .map(|f| GrowthRow {
            k: f.k,
            g: f.objective,
            ratio: f.objective / (f.k as f64).powf(0.25),
            seed_trace_norm: f.seed_trace_norm,
            recursion_bound: f.recursion_bound,
        })
        .collect();
    let (sup_at, sup_ratio) = rows.iter().map(|r| (r.k, r.ratio)).fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let small_k_max = rows.iter().filter(|r| r.k <= SMALL_K).map(|r| r.ratio).fold(0.0, f64::max);
    Ok(GrowthTable {
        mode,
        rows,
        sup_ratio,
        sup_at,
        small_k_max,
        exceeds_small_k: sup_ratio > GROWTH_SLACK * small_k_max,
    })
}

/// `sum_{x >= ceil(k/2)} C(k, x) (k - 2x)` as an exact integer.
pub fn odd_overlap_numerator(k: usize) -> Result<BigInt> {
    if k.is_multiple_of(2) {
        return domain(format!("odd overlap needs odd k, got {k}"));
    }
    Ok((k.div_ceil(2)..=k).map(|x| BigInt::from(binomial(k as i64, x as i64)) * (k as i64 - 2 * x as i64)).sum())
}

/// `<kappa_0[W1], kappa_1[W1]>` at level `k`, from the exact integer sum.
pub fn odd_overlap_limit(k: usize) -> Result<f64> {
    let num = odd_overlap_numerator(k)?;
    Ok(ScaledFloat::from_bigint(&num, -(k as i64)).to_f64() / (k as f64).sqrt())
}

/// The window `[floor(k/2 - sqrt d), ceil(k/2 + sqrt d)]` clipped to `[0, k]`.
pub fn majority_window(k: usize, d: usize) -> (usize, usize) {
    let (k, d) = (k as i64, d as i64);
    // x <= k/2 - sqrt(d) iff k - 2x >= 0 and (k - 2x)^2 >= 4d
    let mut lo = k / 2;
    while lo >= 0 && (k - 2 * lo) * (k - 2 * lo) < 4 * d {
        lo -= 1;
    }
    let mut hi = (k + 1) / 2;
    while (2 * hi - k) * (2 * hi - k) < 4 * d {
        hi += 1;
    }
    (lo.max(0) as usize, hi.min(k) as usize)
}

fn window_mass(m: usize, lo: usize, hi: usize) -> BigUint {
    (lo..=hi.min(m)).map(|x| binomial(m as i64, x as i64)).sum()
}

/// `Pr[ |S & A| in window ]` for uniform `S`, exactly.
pub fn m_value_exact(k: usize, d: usize) -> Result<BigRational> {
    if d == 0 || d > k {
        return domain(format!("need 1 <= d <= k, got k={k} d={d}"));
    }
    let (lo, hi) = majority_window(k, d);
    Ok(BigRational::new(window_mass(k, lo, hi).into(), (BigUint::one() << k).into()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairValue {
    /// `|A \ B|`.
    pub ell: usize,
    pub value: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajAdvReport {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub window: (usize, usize),
    pub m_value: f64,
    pub min_pair_ratio: f64,
    pub pairs: Vec<PairValue>,
}

/// `Pr_S[ both |A & S|, |B & S| in window and f_A(S) != f_B(S) ]` for
/// `|A \ B| = ell`, as an exact count over `2^{k + ell}`.
fn pair_count(k: usize, ell: usize, lo: usize, hi: usize) -> BigUint {
    let common = k - ell;
    let half = k.div_ceil(2);
    let mut total = BigUint::zero();
    for x in 0..=common {
        // mass of the private part landing A in the window below / above half
        let (mut below, mut above) = (BigUint::zero(), BigUint::zero());
        for y in 0..=ell {
            let s = x + y;
            if s < lo || s > hi {
                continue;
            }
            let c = binomial(ell as i64, y as i64);
            if s >= half {
                above += c;
            } else {
                below += c;
            }
        }
        total += binomial(common as i64, x as i64) * below * above * 2u32;
    }
    total
}

/// The positive-weight majority construction at distance scale `d`, over all
/// pair geometries `d <= |A \ B| <= 2d` that fit in `[n]`.
pub fn maj_positive_adv(n: usize, k: usize, d: usize) -> Result<MajAdvReport> {
    let m = m_value_exact(k, d)?;
    if n < k + d {
        return domain(format!("need n >= k + d for a pair at distance d, got n={n} k={k} d={d}"));
    }
    let window = majority_window(k, d);
    let m_value = rational_to_f64(&m);
    let ells: Vec<usize> = (d..=(2 * d).min(k).min(n - k)).collect();
    let pairs: Vec<PairValue> = ells
        .into_par_iter()
        .map(|ell| {
            let count = pair_count(k, ell, window.0, window.1);
            let value = ScaledFloat::from_biguint(&count).mul(ScaledFloat { mant: 0.5, exp: 1 - (k + ell) as i64 }).to_f64();
            PairValue { ell, value, ratio: value / m_value }
        })
        .collect();
    let min_pair_ratio = pairs.iter().map(|p| p.ratio).fold(f64::INFINITY, f64::min);
    Ok(MajAdvReport { n, k, d, window, m_value, min_pair_ratio, pairs })
}

/// `Pr[ |S & D| in {ceil(k/2) - 1, ceil(k/2)} ]` for a uniform `(k-1)`-subset
/// `D` of `[n]` and `|S| = s_size`.
pub fn nonadaptive_overlap(n: usize, k: usize, s_size: usize) -> Result<f64> {
    if k == 0 || k > n || s_size > n {
        return domain(format!("need 1 <= k <= n and s_size <= n, got n={n} k={k} s_size={s_size}"));
    }
    let r = k - 1;
    let top = k.div_ceil(2);
    let hits: BigUint = [top - 1, top]
        .into_iter()
        .filter(|&j| j <= r && j <= s_size && r - j <= n - s_size)
        .map(|j| binomial(s_size as i64, j as i64) * binomial((n - s_size) as i64, (r - j) as i64))
        .sum();
    Ok(rational_to_f64(&BigRational::new(hits.into(), binomial(n as i64, r as i64).into())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapRow {
    pub k: usize,
    pub n: usize,
    pub max_probability: f64,
    pub argmax_size: usize,
    /// `sqrt(k) * max_probability`.
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapFit {
    pub rows: Vec<OverlapRow>,
    /// Smallest `c` with `max_probability <= c / sqrt(k)` on every row.
    pub c: f64,
    /// Largest over smallest scaled value.
    pub spread: f64,
}

pub fn overlap_row(n: usize, k: usize) -> Result<OverlapRow> {
    let probs: Vec<f64> = (0..=n).into_par_iter().map(|s| nonadaptive_overlap(n, k, s)).collect::<Result<_>>()?;
    let (argmax_size, max_probability) =
        probs.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(OverlapRow { k, n, max_probability, argmax_size, scaled: (k as f64).sqrt() * max_probability })
}

/// Maximum overlap probability over `|S|` for each `k` with `n = factor * k`.
pub fn overlap_fit(ks: &[usize], factor: usize) -> Result<OverlapFit> {
    if ks.is_empty() {
        return domain("need at least one k");
    }
    let rows: Vec<OverlapRow> = ks.iter().map(|&k| overlap_row(factor * k, k)).collect::<Result<_>>()?;
    let c = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
    Ok(OverlapFit { rows, c, spread: c / min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn a_block_examples() {
        let a = a_block(1, 0, CertMode::ExactHalf).unwrap();
        assert_eq!((a.rows.clone(), a.cols.clone()), (vec![1], vec![0]));
        assert!((a.matrix[(0, 0)] - 0.5).abs() < 1e-15);
        let a = a_block(2, 1, CertMode::ExactHalf).unwrap();
        assert!(a.matrix.amax() < 1e-15);
        let a = a_block(2, 0, CertMode::ExactHalf).unwrap();
        assert_eq!(a.matrix.shape(), (2, 1));
        assert!(a.matrix.iter().all(|v| (v - SQRT_2 / 4.0).abs() < 1e-15));
        assert!(a_block(2, 3, CertMode::ExactHalf).is_err());
        assert_eq!(a_block(4, 0, CertMode::MajorityEven).unwrap().matrix.shape(), (2, 3));
        assert_eq!(a_block(5, 0, CertMode::MajorityOddDiff).unwrap().matrix.shape(), (3, 3));
    }

    #[test]
    fn seeds() {
        let s = lambda_seed(2, CertMode::ExactHalf).unwrap();
        assert!(s.iter().all(|v| (v - SQRT_2).abs() < 1e-14));
        assert!((trace_norm(&s) - 2.0).abs() < 1e-14);
        assert!((lambda_seed(1, CertMode::ExactHalf).unwrap()[(0, 0)] - 2.0).abs() < 1e-14);
        assert!(lambda_seed(3, CertMode::MajorityEven).is_err());
        assert!(lambda_seed(4, CertMode::MajorityOddDiff).is_err());
        for (k, mode) in [(7, CertMode::ExactHalf), (8, CertMode::MajorityEven), (9, CertMode::MajorityOddDiff)] {
            let seed = lambda_seed(k, mode).unwrap();
            let a = a_block(k, 0, mode).unwrap();
            assert!((seed.dot(&a.matrix) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_families() {
        let f = lambda_family(2, CertMode::ExactHalf).unwrap();
        assert!(f.matrices[0].as_ref().is_none_or(|m| m.amax() < 1e-15));
        assert!((f.objective - 2.0).abs() < 1e-14);
        assert!((lambda_family(1, CertMode::ExactHalf).unwrap().objective - 2.0).abs() < 1e-14);
        let r = verify_constraints(&f, 1e-12).unwrap();
        assert!(r.feasible, "{r:?}");
        let mut zeroed = lambda_family(3, CertMode::ExactHalf).unwrap();
        zeroed.matrices.iter_mut().for_each(|m| *m = None);
        let r = verify_constraints(&zeroed, 1e-12).unwrap();
        assert!((r.first + 1.0).abs() < 1e-15);
        assert!(lambda_family(5, CertMode::MajorityEven).is_err());
    }

    #[test]
    fn residuals_small_k() {
        for mode in [CertMode::ExactHalf, CertMode::MajorityEven, CertMode::MajorityOddDiff] {
            for k in (1..=12).filter(|&k| mode.admits(k)) {
                let r = verify_constraints(&lambda_family(k, mode).unwrap(), 1e-9).unwrap();
                assert!(r.feasible, "{mode} {k}: {r:?}");
            }
        }
    }

    #[test]
    fn exact_residuals() {
        for (k, mode) in [(4, CertMode::ExactHalf), (6, CertMode::MajorityEven), (5, CertMode::MajorityOddDiff)] {
            let r = verify_constraints_exact(k, mode).unwrap();
            assert!(r.exact_zero && r.float_gap < 1e-12, "{r:?}");
        }
        assert!(inner_identity_exact(4).unwrap());
        let two = BigRational::from_integer(2.into());
        assert_eq!(exact_objective(1).unwrap(), Some(two.clone()));
        assert_eq!(exact_objective(2).unwrap(), Some(two));
    }

    #[test]
    fn inner_identity() {
        let r = inner_identity_check(2).unwrap();
        assert!(r.max_deviation < 1e-15 && r.sum_abs < 1e-15);
        let r = inner_identity_check(6).unwrap();
        assert!(r.sum_deviation < 1e-10 && r.max_deviation < 1e-12);
        assert!(r.weighted_deviation.unwrap() < 1e-10);
    }

    #[test]
    fn odd_overlap() {
        assert!((odd_overlap_limit(1).unwrap() + 0.5).abs() < 1e-15);
        assert!(odd_overlap_limit(4).is_err());
        for k in (1..60).step_by(2) {
            // closed form -k C(k-1, (k-1)/2) / (2^k sqrt k)
            let c = binomial(k as i64 - 1, (k as i64 - 1) / 2);
            let expected = -(k as f64) * c.to_string().parse::<f64>().unwrap() / 2f64.powi(k as i32) / (k as f64).sqrt();
            assert!((odd_overlap_limit(k).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn majority_adversary() {
        assert_eq!(m_value_exact(4, 1).unwrap(), BigRational::new(14.into(), 16.into()));
        assert_eq!(m_value_exact(4, 4).unwrap(), BigRational::one());
        assert_eq!(majority_window(16, 4), (6, 10));
        assert_eq!(majority_window(16, 3), (6, 10));
        assert!(maj_positive_adv(10, 4, 5).is_err());
        let r = maj_positive_adv(40, 16, 4).unwrap();
        assert!(r.min_pair_ratio > 0.05 && r.pairs.len() == 5);
    }

    #[test]
    fn pair_count_matches_enumeration() {
        let (k, ell) = (6, 2);
        let (lo, hi) = majority_window(k, 1);
        // A = {0..5}, B = {2..7}; enumerate S over the union
        let a = 0b0011_1111u32;
        let b = 0b1111_1100u32;
        let maj = |x: u32| 2 * x.count_ones() as usize >= k;
        let inw = |x: u32| (lo..=hi).contains(&(x.count_ones() as usize));
        let count = (0..1u32 << (k + ell))
            .filter(|&s| inw(a & s) && inw(b & s) && maj(a & s) != maj(b & s))
            .count();
        assert_eq!(pair_count(k, ell, lo, hi), BigUint::from(count));
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(nonadaptive_overlap(10, 3, 0).unwrap(), 0.0);
        for k in 1..=5 {
            let p = nonadaptive_overlap(10, k, 10).unwrap();
            assert_eq!(p, if k <= 3 { 1.0 } else { 0.0 }, "k={k}");
        }
        let total: f64 = (0..=2).map(|j| {
            let hits = binomial(4, j) * binomial(6, 2 - j);
            hits.to_string().parse::<f64>().unwrap() / 45.0
        }).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!(nonadaptive_overlap(5, 6, 0).is_err());
    }
}
