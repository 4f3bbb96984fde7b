//! Dense vectors and matrices over a Cayley-Dickson level, the real
//! embeddings `aleph` (vectors) and `gimel` (matrices), and the power method.
//!
//! Entries are stored flat: entry `i` of an [`HVector`] occupies
//! `data[i*dim..(i+1)*dim]`, so the storage of a vector *is* its `aleph`
//! embedding.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{conj_mul_acc, left_mul_matrix, modulus_sq_slice, mul_acc, AlgebraLevel, HyperNum};
use crate::error::{Error, Result};
use crate::rng::seeded;

#[derive(Clone, Debug, PartialEq)]
pub struct HVector {
    level: AlgebraLevel,
    data: Vec<f64>,
}

impl HVector {
    pub fn zeros(level: AlgebraLevel, n: usize) -> Self {
        HVector {
            level,
            data: vec![0.0; n * level.dim()],
        }
    }

    pub fn from_entries(level: AlgebraLevel, entries: &[HyperNum]) -> Result<Self> {
        let mut data = Vec::with_capacity(entries.len() * level.dim());
        for e in entries {
            level.check_same(e.level())?;
            data.extend_from_slice(e.coeffs());
        }
        Ok(HVector { level, data })
    }

    /// Inverse of [`HVector::aleph`]: groups consecutive blocks of `level.dim()` reals.
    pub fn aleph_inv(values: &[f64], level: AlgebraLevel) -> Result<Self> {
        if !values.len().is_multiple_of(level.dim()) {
            return Err(Error::ShapeMismatch(format!(
                "length {} is not a multiple of {}",
                values.len(),
                level.dim()
            )));
        }
        Ok(HVector {
            level,
            data: values.to_vec(),
        })
    }

    pub(crate) fn from_raw(level: AlgebraLevel, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len() % level.dim(), 0);
        HVector { level, data }
    }

    /// Entries with i.i.d. standard normal coefficients.
    pub fn random<R: Rng + ?Sized>(level: AlgebraLevel, n: usize, rng: &mut R) -> Self {
        let data = (0..n * level.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        HVector { level, data }
    }

    pub fn level(&self) -> AlgebraLevel {
        self.level
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.level.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> HyperNum {
        HyperNum::from_slice(self.level, self.entry(i))
    }

    pub fn set(&mut self, i: usize, value: HyperNum) {
        assert_eq!(value.level(), self.level, "algebra level mismatch");
        let d = self.level.dim();
        self.data[i * d..(i + 1) * d].copy_from_slice(value.coeffs());
    }

    pub fn entry(&self, i: usize) -> &[f64] {
        let d = self.level.dim();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn entry_mut(&mut self, i: usize) -> &mut [f64] {
        let d = self.level.dim();
        &mut self.data[i * d..(i + 1) * d]
    }

    pub fn entries(&self) -> impl Iterator<Item = HyperNum> + '_ {
        self.data
            .chunks_exact(self.level.dim())
            .map(move |c| HyperNum::from_slice(self.level, c))
    }

    /// Stacked coefficient blocks, `aleph(x)` in the real embedding.
    pub fn aleph(&self) -> &[f64] {
        &self.data
    }

    pub fn aleph_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_aleph(self) -> Vec<f64> {
        self.data
    }

    pub fn norm2_sq(&self) -> f64 {
        modulus_sq_slice(&self.data)
    }

    /// Euclidean norm `sqrt(sum |x_i|^2)`; used by every distance and solver.
    pub fn norm2(&self) -> f64 {
        self.norm2_sq().sqrt()
    }

    /// `sum |x_i|`, the vector norm listed alongside conjugation and modulus in
    /// the algebra identity table. Not used by the solvers.
    pub fn norm_l1_moduli(&self) -> f64 {
        self.data
            .chunks_exact(self.level.dim())
            .map(|c| modulus_sq_slice(c).sqrt())
            .sum()
    }

    /// `x w` entrywise.
    pub fn right_mul(&self, w: &HyperNum) -> Result<HVector> {
        self.level.check_same(w.level())?;
        let d = self.level.dim();
        let mut out = HVector::zeros(self.level, self.len());
        for (src, dst) in self.data.chunks_exact(d).zip(out.data.chunks_exact_mut(d)) {
            mul_acc(self.level, src, w.coeffs(), dst);
        }
        Ok(out)
    }

    /// `w x` entrywise.
    pub fn left_mul(&self, w: &HyperNum) -> Result<HVector> {
        self.level.check_same(w.level())?;
        let d = self.level.dim();
        let mut out = HVector::zeros(self.level, self.len());
        for (src, dst) in self.data.chunks_exact(d).zip(out.data.chunks_exact_mut(d)) {
            mul_acc(self.level, w.coeffs(), src, dst);
        }
        Ok(out)
    }

    pub fn scale(&self, t: f64) -> HVector {
        HVector {
            level: self.level,
            data: self.data.iter().map(|v| v * t).collect(),
        }
    }

    pub fn add(&self, other: &HVector) -> Result<HVector> {
        self.check_compatible(other)?;
        Ok(HVector {
            level: self.level,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &HVector) -> Result<HVector> {
        self.check_compatible(other)?;
        Ok(HVector {
            level: self.level,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Zeroes every scalar part.
    pub fn pure_part(&self) -> HVector {
        let mut out = self.clone();
        let d = self.level.dim();
        for c in out.data.chunks_exact_mut(d) {
            c[0] = 0.0;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_compatible(&self, other: &HVector) -> Result<()> {
        self.level.check_same(other.level)?;
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "vector lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// `sum_j conj(a_j) x_j`.
pub fn inner(a: &HVector, x: &HVector) -> Result<HyperNum> {
    a.check_compatible(x)?;
    let level = a.level;
    let d = level.dim();
    let mut acc = [0.0; crate::algebra::MAX_DIM];
    for (ai, xi) in a.data.chunks_exact(d).zip(x.data.chunks_exact(d)) {
        conj_mul_acc(level, ai, xi, &mut acc[..d]);
    }
    Ok(HyperNum::from_slice(level, &acc[..d]))
}

/// Row-major dense real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(RealMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn transpose_matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (xi, row) in x.iter().zip(self.data.chunks_exact(self.cols)) {
            if *xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += xi * a;
            }
        }
    }

    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.transpose_matvec_into(x, &mut out);
        out
    }

    pub fn transpose(&self) -> RealMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &RealMatrix) -> Result<RealMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out.data[r * other.cols..(r + 1) * other.cols].iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        modulus_sq_slice(&self.data).sqrt()
    }

    /// Largest `|M[r,c] - M[c,r]|`.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in (r + 1)..self.cols {
                worst = worst.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Left-multiplication matrix of one scalar.
pub fn gimel_scalar(x: &HyperNum) -> RealMatrix {
    let d = x.dim();
    RealMatrix {
        rows: d,
        cols: d,
        data: left_mul_matrix(x),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HMatrix {
    level: AlgebraLevel,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl HMatrix {
    pub fn zeros(level: AlgebraLevel, rows: usize, cols: usize) -> Self {
        HMatrix {
            level,
            rows,
            cols,
            data: vec![0.0; rows * cols * level.dim()],
        }
    }

    pub fn identity(level: AlgebraLevel, n: usize) -> Self {
        let mut m = Self::zeros(level, n, n);
        for i in 0..n {
            m.entry_mut(i, i)[0] = 1.0;
        }
        m
    }

    pub fn from_fn<F>(level: AlgebraLevel, rows: usize, cols: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> HyperNum,
    {
        let mut m = Self::zeros(level, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        m
    }

    pub fn random<R: Rng + ?Sized>(level: AlgebraLevel, rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows * cols * level.dim())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        HMatrix {
            level,
            rows,
            cols,
            data,
        }
    }

    pub fn level(&self) -> AlgebraLevel {
        self.level
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> HyperNum {
        HyperNum::from_slice(self.level, self.entry(r, c))
    }

    pub fn set(&mut self, r: usize, c: usize, value: HyperNum) {
        assert_eq!(value.level(), self.level, "algebra level mismatch");
        self.entry_mut(r, c).copy_from_slice(value.coeffs());
    }

    pub fn entry(&self, r: usize, c: usize) -> &[f64] {
        let d = self.level.dim();
        let at = (r * self.cols + c) * d;
        &self.data[at..at + d]
    }

    pub fn entry_mut(&mut self, r: usize, c: usize) -> &mut [f64] {
        let d = self.level.dim();
        let at = (r * self.cols + c) * d;
        &mut self.data[at..at + d]
    }

    /// Coefficients of row `r` as one flat slice.
    pub fn row_data(&self, r: usize) -> &[f64] {
        let w = self.cols * self.level.dim();
        &self.data[r * w..(r + 1) * w]
    }

    pub fn row(&self, r: usize) -> HVector {
        HVector::from_raw(self.level, self.row_data(r).to_vec())
    }

    /// `y_i = sum_j A[i,j] x_j`, products taken left to right and summed in `j` order.
    pub fn matvec(&self, x: &HVector) -> Result<HVector> {
        self.level.check_same(x.level())?;
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let d = self.level.dim();
        let mut out = HVector::zeros(self.level, self.rows);
        let xs = x.aleph();
        if self.level == AlgebraLevel::Quaternion {
            for (dst, row) in out.aleph_mut().chunks_exact_mut(4).zip(self.data.chunks_exact(self.cols * 4)) {
                let mut acc = [0.0; 4];
                for (a, xj) in row.chunks_exact(4).zip(xs.chunks_exact(4)) {
                    quat_mul_acc(a, xj, &mut acc);
                }
                dst.copy_from_slice(&acc);
            }
            return Ok(out);
        }
        for r in 0..self.rows {
            let dst = &mut out.aleph_mut()[r * d..(r + 1) * d];
            for (a, xj) in self.row_data(r).chunks_exact(d).zip(xs.chunks_exact(d)) {
                mul_acc(self.level, a, xj, dst);
            }
        }
        Ok(out)
    }

    /// `A^H v` without forming the conjugate transpose.
    pub fn conj_transpose_matvec(&self, v: &HVector) -> Result<HVector> {
        self.level.check_same(v.level())?;
        if v.len() != self.rows {
            return Err(Error::ShapeMismatch(format!(
                "({}x{})^H times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let d = self.level.dim();
        let mut out = HVector::zeros(self.level, self.cols);
        if self.level == AlgebraLevel::Quaternion {
            let dst = out.aleph_mut();
            for (vr, row) in v.aleph().chunks_exact(4).zip(self.data.chunks_exact(self.cols * 4)) {
                for (a, o) in row.chunks_exact(4).zip(dst.chunks_exact_mut(4)) {
                    quat_mul_acc(&[a[0], -a[1], -a[2], -a[3]], vr, o);
                }
            }
            return Ok(out);
        }
        for r in 0..self.rows {
            let vr = v.entry(r);
            if vr.iter().all(|c| *c == 0.0) {
                continue;
            }
            let row = self.row_data(r);
            let dst = out.aleph_mut();
            for (a, o) in row.chunks_exact(d).zip(dst.chunks_exact_mut(d)) {
                conj_mul_acc(self.level, a, vr, o);
            }
        }
        Ok(out)
    }

    pub fn conj_transpose(&self) -> HMatrix {
        let mut t = HMatrix::zeros(self.level, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).conj());
            }
        }
        t
    }

    pub fn matmul(&self, other: &HMatrix) -> Result<HMatrix> {
        self.level.check_same(other.level)?;
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let d = self.level.dim();
        let mut out = HMatrix::zeros(self.level, self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = [0.0; crate::algebra::MAX_DIM];
                for k in 0..self.cols {
                    mul_acc(self.level, self.entry(r, k), other.entry(k, c), &mut acc[..d]);
                }
                out.entry_mut(r, c).copy_from_slice(&acc[..d]);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, t: f64) -> HMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= t);
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        modulus_sq_slice(&self.data).sqrt()
    }

    /// Mean of `|A[i,j]|^2` over all entries.
    pub fn mean_entry_energy(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        modulus_sq_slice(&self.data) / (self.rows * self.cols) as f64
    }

    /// Largest `|A[r,c] - conj(A[c,r])|`; infinite for non-square matrices.
    pub fn hermitian_deviation(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                let dev = (self.get(r, c) - self.get(c, r).conj()).modulus();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// Block real matrix with `gimel(A[i,j])` at block `(i,j)`, so that
    /// `gimel(A) aleph(x) = aleph(A x)`.
    pub fn gimel(&self) -> RealMatrix {
        let d = self.level.dim();
        let (rr, cc) = (self.rows * d, self.cols * d);
        let mut out = RealMatrix::zeros(rr, cc);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let block = left_mul_matrix(&self.get(r, c));
                for i in 0..d {
                    let dst = (r * d + i) * cc + c * d;
                    out.data[dst..dst + d].copy_from_slice(&block[i * d..(i + 1) * d]);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PowerOptions {
    pub max_iters: usize,
    /// Converged once successive Rayleigh quotients differ by at most `tol * |lambda|`.
    pub tol: f64,
    pub seed: u64,
    pub hermitian_tol: f64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        PowerOptions {
            max_iters: 1000,
            tol: 1e-10,
            seed: 0x5eed,
            hermitian_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RealEigenPair {
    pub vector: Vec<f64>,
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration for a real symmetric positive semidefinite operator given by `apply`.
pub fn power_iteration<F>(mut apply: F, dim: usize, opts: &PowerOptions) -> RealEigenPair
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut rng = seeded(opts.seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    normalize(&mut v);
    let mut w = vec![0.0; dim];
    let mut eigenvalue = 0.0;
    let mut previous = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iters.max(1) {
        iterations = it;
        apply(&v, &mut w);
        eigenvalue = dot(&v, &w);
        residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - eigenvalue * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if (eigenvalue - previous).abs() <= opts.tol * eigenvalue.abs() || residual == 0.0 {
            converged = true;
            break;
        }
        previous = eigenvalue;
        let nw = dot(&w, &w).sqrt();
        if nw == 0.0 {
            // v lies in the null space; M is zero along it and every vector is a
            // leading eigenvector when M = 0.
            converged = residual == 0.0;
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    RealEigenPair {
        vector: v,
        eigenvalue,
        residual,
        iterations,
        converged,
    }
}

#[derive(Clone, Debug)]
pub struct PowerResult {
    /// Unit-norm leading eigenvector mapped back through `aleph_inv`.
    pub vector: HVector,
    pub eigenvalue: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Leading eigenpair of a Hermitian hypercomplex matrix via power iteration on `gimel(Y)`.
pub fn power_method(y: &HMatrix, opts: &PowerOptions) -> Result<PowerResult> {
    if y.rows() != y.cols() {
        return Err(Error::ShapeMismatch(format!(
            "power method needs a square matrix, got {}x{}",
            y.rows(),
            y.cols()
        )));
    }
    let deviation = y.hermitian_deviation();
    if deviation > opts.hermitian_tol * y.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let g = y.gimel();
    let pair = power_iteration(|v, out| g.matvec_into(v, out), g.rows(), opts);
    if !pair.converged {
        log::warn!(
            "power method stopped after {} iterations with residual {:e}",
            pair.iterations,
            pair.residual
        );
    }
    Ok(PowerResult {
        vector: HVector::aleph_inv(&pair.vector, y.level())?,
        eigenvalue: pair.eigenvalue,
        residual: pair.residual,
        iterations: pair.iterations,
        converged: pair.converged,
    })
}

#[inline(always)]
fn quat_mul_acc(x: &[f64], y: &[f64], out: &mut [f64]) {
    let (x, y) = (&x[..4], &y[..4]);
    let out = &mut out[..4];
    out[0] += x[0] * y[0] - x[1] * y[1] - x[2] * y[2] - x[3] * y[3];
    out[1] += x[0] * y[1] + x[1] * y[0] + x[2] * y[3] - x[3] * y[2];
    out[2] += x[0] * y[2] - x[1] * y[3] + x[2] * y[0] + x[3] * y[1];
    out[3] += x[0] * y[3] + x[1] * y[2] - x[2] * y[1] + x[3] * y[0];
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
