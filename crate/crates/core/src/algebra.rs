//! Cayley-Dickson scalars: ℝ, ℂ, ℍ, 𝕆 and 𝕊 stored as flat coefficient arrays.
//!
//! Coefficient `0` is the scalar part and coefficient `i` multiplies the unit
//! `e_i`. For quaternions `(e1, e2, e3) = (i, j, k)` with Hamilton's rule
//! `ij = k`.
//!
//! Multiplication tables are generated once by Cayley-Dickson doubling. Two
//! doubling rules are used:
//!
//! * `(a,b)(c,d) = (ac - d*b, da + bc*)` builds ℂ and ℍ.
//! * `(a,b)(c,d) = (ac - db*, cb + a*d)` builds 𝕆 and 𝕊. Its octonion table
//!   is the one whose left-multiplication matrices are [`left_mul_matrix`],
//!   the pseudo-real representation used by the octonion solvers.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use once_cell::sync::Lazy;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative tolerance for "exact" algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Largest supported algebra dimension.
pub const MAX_DIM: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgebraLevel {
    Real,
    Complex,
    Quaternion,
    Octonion,
    Sedenion,
}

impl AlgebraLevel {
    pub const ALL: [AlgebraLevel; 5] = [
        AlgebraLevel::Real,
        AlgebraLevel::Complex,
        AlgebraLevel::Quaternion,
        AlgebraLevel::Octonion,
        AlgebraLevel::Sedenion,
    ];

    pub const fn dim(self) -> usize {
        match self {
            AlgebraLevel::Real => 1,
            AlgebraLevel::Complex => 2,
            AlgebraLevel::Quaternion => 4,
            AlgebraLevel::Octonion => 8,
            AlgebraLevel::Sedenion => 16,
        }
    }

    pub fn from_dim(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(AlgebraLevel::Real),
            2 => Ok(AlgebraLevel::Complex),
            4 => Ok(AlgebraLevel::Quaternion),
            8 => Ok(AlgebraLevel::Octonion),
            16 => Ok(AlgebraLevel::Sedenion),
            d => Err(Error::InvalidDimension(d)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgebraLevel::Real => "real",
            AlgebraLevel::Complex => "complex",
            AlgebraLevel::Quaternion => "quaternion",
            AlgebraLevel::Octonion => "octonion",
            AlgebraLevel::Sedenion => "sedenion",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            AlgebraLevel::Real => "R",
            AlgebraLevel::Complex => "C",
            AlgebraLevel::Quaternion => "H",
            AlgebraLevel::Octonion => "O",
            AlgebraLevel::Sedenion => "S",
        }
    }

    /// Levels on which `|xy| = |x||y|` holds and every nonzero element is invertible.
    pub fn is_division_algebra(self) -> bool {
        self != AlgebraLevel::Sedenion
    }

    pub(crate) fn check_same(self, other: AlgebraLevel) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LevelMismatch {
                left: self,
                right: other,
            })
        }
    }
}

impl fmt::Display for AlgebraLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepts a level name (`"octonion"`) or its dimension (`"8"`).
impl std::str::FromStr for AlgebraLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(dim) = s.parse::<usize>() {
            return AlgebraLevel::from_dim(dim);
        }
        AlgebraLevel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algebra level '{s}'")))
    }
}

/// Basis multiplication table: `e_i e_j = sign[i*dim+j] * e_{index[i*dim+j]}`.
#[derive(Clone, Debug)]
pub struct MulTable {
    dim: usize,
    index: Vec<usize>,
    sign: Vec<f64>,
}

impl MulTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Product of two basis units as `(index, sign)`.
    pub fn basis_product(&self, i: usize, j: usize) -> (usize, f64) {
        let at = i * self.dim + j;
        (self.index[at], self.sign[at])
    }

    fn real() -> Self {
        MulTable {
            dim: 1,
            index: vec![0],
            sign: vec![1.0],
        }
    }

    fn mul_dense(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, &yj) in y.iter().enumerate() {
                let (k, s) = self.basis_product(i, j);
                out[k] += s * xi * yj;
            }
        }
        out
    }

    fn double(&self, rule: DoublingRule) -> Self {
        let h = self.dim;
        let dim = 2 * h;
        let conj = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(i, &c)| if i == 0 { c } else { -c })
                .collect()
        };
        let mut index = vec![0; dim * dim];
        let mut sign = vec![0.0; dim * dim];
        for p in 0..dim {
            for q in 0..dim {
                let mut x = vec![0.0; dim];
                let mut y = vec![0.0; dim];
                x[p] = 1.0;
                y[q] = 1.0;
                let (a, b) = x.split_at(h);
                let (c, d) = y.split_at(h);
                let (lo, hi) = match rule {
                    DoublingRule::Hamilton => {
                        let lo = sub(&self.mul_dense(a, c), &self.mul_dense(&conj(d), b));
                        let hi = add(&self.mul_dense(d, a), &self.mul_dense(b, &conj(c)));
                        (lo, hi)
                    }
                    DoublingRule::Gimel => {
                        let lo = sub(&self.mul_dense(a, c), &self.mul_dense(d, &conj(b)));
                        let hi = add(&self.mul_dense(c, b), &self.mul_dense(&conj(a), d));
                        (lo, hi)
                    }
                };
                let prod: Vec<f64> = lo.into_iter().chain(hi).collect();
                let (k, s) = prod
                    .iter()
                    .enumerate()
                    .find(|(_, v)| **v != 0.0)
                    .map(|(k, v)| (k, *v))
                    .expect("product of basis units is a signed basis unit");
                index[p * dim + q] = k;
                sign[p * dim + q] = s;
            }
        }
        MulTable { dim, index, sign }
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Clone, Copy, Debug)]
enum DoublingRule {
    /// `(a,b)(c,d) = (ac - d*b, da + bc*)`
    Hamilton,
    /// `(a,b)(c,d) = (ac - db*, cb + a*d)`
    Gimel,
}

static REAL_TABLE: Lazy<MulTable> = Lazy::new(MulTable::real);
static COMPLEX_TABLE: Lazy<MulTable> = Lazy::new(|| REAL_TABLE.double(DoublingRule::Hamilton));
static QUATERNION_TABLE: Lazy<MulTable> =
    Lazy::new(|| COMPLEX_TABLE.double(DoublingRule::Hamilton));
static OCTONION_TABLE: Lazy<MulTable> = Lazy::new(|| {
    REAL_TABLE
        .double(DoublingRule::Gimel)
        .double(DoublingRule::Gimel)
        .double(DoublingRule::Gimel)
});
static SEDENION_TABLE: Lazy<MulTable> = Lazy::new(|| OCTONION_TABLE.double(DoublingRule::Gimel));

pub fn mul_table(level: AlgebraLevel) -> &'static MulTable {
    match level {
        AlgebraLevel::Real => &REAL_TABLE,
        AlgebraLevel::Complex => &COMPLEX_TABLE,
        AlgebraLevel::Quaternion => &QUATERNION_TABLE,
        AlgebraLevel::Octonion => &OCTONION_TABLE,
        AlgebraLevel::Sedenion => &SEDENION_TABLE,
    }
}

/// Multiplication table as CSV: `i,j,k,sign` rows meaning `e_i e_j = sign e_k`.
pub fn table_csv(level: AlgebraLevel) -> String {
    let table = mul_table(level);
    let mut out = String::from("i,j,k,sign\n");
    for i in 0..table.dim() {
        for j in 0..table.dim() {
            let (k, s) = table.basis_product(i, j);
            out.push_str(&format!("{i},{j},{k},{}\n", s as i64));
        }
    }
    out
}

/// `out += x * y` on raw coefficient slices of length `level.dim()`.
#[inline]
pub fn mul_acc(level: AlgebraLevel, x: &[f64], y: &[f64], out: &mut [f64]) {
    match level {
        AlgebraLevel::Real => out[0] += x[0] * y[0],
        AlgebraLevel::Complex => {
            out[0] += x[0] * y[0] - x[1] * y[1];
            out[1] += x[0] * y[1] + x[1] * y[0];
        }
        AlgebraLevel::Quaternion => {
            let (a1, b1, c1, d1) = (x[0], x[1], x[2], x[3]);
            let (a2, b2, c2, d2) = (y[0], y[1], y[2], y[3]);
            out[0] += a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2;
            out[1] += a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2;
            out[2] += a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2;
            out[3] += a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2;
        }
        AlgebraLevel::Octonion | AlgebraLevel::Sedenion => {
            let table = mul_table(level);
            let dim = table.dim;
            for i in 0..dim {
                let xi = x[i];
                if xi == 0.0 {
                    continue;
                }
                let row = i * dim;
                for j in 0..dim {
                    out[table.index[row + j]] += table.sign[row + j] * xi * y[j];
                }
            }
        }
    }
}

/// `out += conj(x) * y` on raw coefficient slices.
#[inline]
pub fn conj_mul_acc(level: AlgebraLevel, x: &[f64], y: &[f64], out: &mut [f64]) {
    let dim = level.dim();
    let mut cx = [0.0; MAX_DIM];
    cx[0] = x[0];
    for i in 1..dim {
        cx[i] = -x[i];
    }
    mul_acc(level, &cx[..dim], y, out);
}

/// `|x|^2` of a raw coefficient slice.
#[inline]
pub fn modulus_sq_slice(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

/// Left-multiplication matrix `L(x)` (row-major, `dim x dim`): `L(x) aleph(y) = aleph(x y)`.
///
/// At level 8 this is the pseudo-real octonion representation; column `j` is
/// `aleph(x e_j)`.
pub fn left_mul_matrix(x: &HyperNum) -> Vec<f64> {
    let dim = x.dim();
    let table = mul_table(x.level);
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        let xi = x.coeffs[i];
        if xi == 0.0 {
            continue;
        }
        for j in 0..dim {
            let (k, s) = table.basis_product(i, j);
            m[k * dim + j] += s * xi;
        }
    }
    m
}

/// A Cayley-Dickson number at a fixed level.
#[derive(Clone, Copy, PartialEq)]
pub struct HyperNum {
    level: AlgebraLevel,
    coeffs: [f64; MAX_DIM],
}

impl HyperNum {
    pub fn new(level: AlgebraLevel, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != level.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients given for a {}-dimensional algebra",
                coeffs.len(),
                level.dim()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(Self::from_slice(level, coeffs))
    }

    /// Unchecked constructor for internal hot paths.
    pub(crate) fn from_slice(level: AlgebraLevel, coeffs: &[f64]) -> Self {
        let mut c = [0.0; MAX_DIM];
        c[..level.dim()].copy_from_slice(coeffs);
        HyperNum { level, coeffs: c }
    }

    pub fn zero(level: AlgebraLevel) -> Self {
        HyperNum {
            level,
            coeffs: [0.0; MAX_DIM],
        }
    }

    pub fn scalar(level: AlgebraLevel, value: f64) -> Self {
        let mut z = Self::zero(level);
        z.coeffs[0] = value;
        z
    }

    pub fn one(level: AlgebraLevel) -> Self {
        Self::scalar(level, 1.0)
    }

    /// Basis unit `e_index` (`e_0 = 1`).
    pub fn unit(level: AlgebraLevel, index: usize) -> Self {
        assert!(index < level.dim(), "unit index out of range");
        let mut z = Self::zero(level);
        z.coeffs[index] = 1.0;
        z
    }

    pub fn quaternion(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::from_slice(AlgebraLevel::Quaternion, &[a, b, c, d])
    }

    pub fn complex(re: f64, im: f64) -> Self {
        Self::from_slice(AlgebraLevel::Complex, &[re, im])
    }

    /// Each coefficient i.i.d. standard normal.
    pub fn random<R: Rng + ?Sized>(level: AlgebraLevel, rng: &mut R) -> Self {
        let mut z = Self::zero(level);
        for c in z.coeffs[..level.dim()].iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        z
    }

    /// Uniformly distributed on the unit sphere.
    pub fn random_unit<R: Rng + ?Sized>(level: AlgebraLevel, rng: &mut R) -> Self {
        loop {
            let z = Self::random(level, rng);
            if let Ok(s) = z.sign() {
                return s;
            }
        }
    }

    pub fn level(&self) -> AlgebraLevel {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.level.dim()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..self.dim()]
    }

    pub fn scalar_part(&self) -> f64 {
        self.coeffs[0]
    }

    /// Copy with the scalar part removed.
    pub fn vector_part(&self) -> Self {
        let mut z = *self;
        z.coeffs[0] = 0.0;
        z
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|c| *c == 0.0)
    }

    pub fn conj(&self) -> Self {
        let mut z = *self;
        for c in z.coeffs[1..self.dim()].iter_mut() {
            *c = -*c;
        }
        z
    }

    pub fn modulus_sq(&self) -> f64 {
        modulus_sq_slice(self.coeffs())
    }

    pub fn modulus(&self) -> f64 {
        self.modulus_sq().sqrt()
    }

    pub fn try_mul(&self, rhs: &HyperNum) -> Result<HyperNum> {
        self.level.check_same(rhs.level)?;
        let mut out = Self::zero(self.level);
        let dim = self.dim();
        mul_acc(
            self.level,
            &self.coeffs[..dim],
            &rhs.coeffs[..dim],
            &mut out.coeffs[..dim],
        );
        Ok(out)
    }

    pub fn scale(&self, t: f64) -> Self {
        let mut z = *self;
        for c in z.coeffs[..self.dim()].iter_mut() {
            *c *= t;
        }
        z
    }

    /// `x* / |x|^2`.
    ///
    /// For sedenions this is only a two-sided inverse when `x` is not a zero
    /// divisor; the formula is returned regardless.
    pub fn inverse(&self) -> Result<HyperNum> {
        let n2 = self.modulus_sq();
        if n2 == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    /// `x / |x|`.
    pub fn sign(&self) -> Result<HyperNum> {
        let n = self.modulus();
        if n == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self.scale(1.0 / n))
    }

    /// Quaternion rotation `mu x mu^-1`.
    pub fn rotate(&self, mu: &HyperNum) -> Result<HyperNum> {
        if self.level != AlgebraLevel::Quaternion {
            return Err(Error::UnsupportedLevel {
                level: self.level,
                op: "rotate",
            });
        }
        self.level.check_same(mu.level)?;
        let inv = mu.inverse()?;
        Ok(*mu * *self * inv)
    }

    pub fn approx_eq(&self, other: &HyperNum, tol: f64) -> bool {
        self.level == other.level && (*self - *other).modulus() <= tol
    }
}

impl fmt::Debug for HyperNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.level.symbol(), self.coeffs())
    }
}

impl fmt::Display for HyperNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const QUAT_UNITS: [&str; 4] = ["", "i", "j", "k"];
        write!(f, "{}", self.coeffs[0])?;
        for (i, c) in self.coeffs().iter().enumerate().skip(1) {
            let unit = match self.level {
                AlgebraLevel::Complex | AlgebraLevel::Quaternion => QUAT_UNITS[i].to_string(),
                _ => format!("e{i}"),
            };
            if *c < 0.0 {
                write!(f, " - {}{}", -c, unit)?;
            } else {
                write!(f, " + {}{}", c, unit)?;
            }
        }
        Ok(())
    }
}

impl Add for HyperNum {
    type Output = HyperNum;

    fn add(mut self, rhs: HyperNum) -> HyperNum {
        self += rhs;
        self
    }
}

impl AddAssign for HyperNum {
    fn add_assign(&mut self, rhs: HyperNum) {
        assert_eq!(self.level, rhs.level, "algebra level mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
    }
}

impl Sub for HyperNum {
    type Output = HyperNum;

    fn sub(mut self, rhs: HyperNum) -> HyperNum {
        self -= rhs;
        self
    }
}

impl SubAssign for HyperNum {
    fn sub_assign(&mut self, rhs: HyperNum) {
        assert_eq!(self.level, rhs.level, "algebra level mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a -= b;
        }
    }
}

impl Neg for HyperNum {
    type Output = HyperNum;

    fn neg(self) -> HyperNum {
        self.scale(-1.0)
    }
}

/// Panics on level mismatch; use [`HyperNum::try_mul`] for a fallible product.
impl Mul for HyperNum {
    type Output = HyperNum;

    fn mul(self, rhs: HyperNum) -> HyperNum {
        self.try_mul(&rhs).expect("algebra level mismatch")
    }
}

impl Mul<f64> for HyperNum {
    type Output = HyperNum;

    fn mul(self, rhs: f64) -> HyperNum {
        self.scale(rhs)
    }
}

/// Searches `(e_i ± e_j)(e_k ± e_l)` over imaginary units for a product of zero modulus.
pub fn search_zero_divisor(level: AlgebraLevel) -> Option<(HyperNum, HyperNum)> {
    let dim = level.dim();
    let pairs: Vec<HyperNum> = (1..dim)
        .flat_map(|i| ((i + 1)..dim).map(move |j| (i, j)))
        .flat_map(|(i, j)| {
            [1.0, -1.0].into_iter().map(move |s| {
                let mut z = HyperNum::unit(level, i);
                z.coeffs[j] = s;
                z
            })
        })
        .collect();
    for u in &pairs {
        for v in &pairs {
            if (*u * *v).modulus() < IDENTITY_TOL {
                return Some((*u, *v));
            }
        }
    }
    None
}

/// A pair of nonzero sedenions whose product vanishes.
pub fn find_zero_divisor(level: AlgebraLevel) -> Result<(HyperNum, HyperNum)> {
    if level != AlgebraLevel::Sedenion {
        return Err(Error::UnsupportedLevel {
            level,
            op: "find_zero_divisor",
        });
    }
    search_zero_divisor(level).ok_or(Error::ZeroDivisorNotFound { dim: level.dim() })
}
