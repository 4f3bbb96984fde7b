//! Hypercomplex Fourier-family sensing operators: two-sided 2-D QDFT, 3-D ODFT,
//! quaternion STFT, quaternion wavelet convolution and DOE coding masks.
//!
//! Every operator here is real-linear in the `aleph` coordinates of its input.
//! The adjoints (with respect to the real inner product `Re sum conj(u_i) v_i`)
//! are provided next to each forward map for gradient-based solvers.

use std::f64::consts::PI;

use rand::Rng;

use crate::algebra::{mul_acc, AlgebraLevel, HyperNum};
use crate::error::{Error, Result};
use crate::linalg::{HMatrix, HVector};
use crate::rng::seeded;

const Q: AlgebraLevel = AlgebraLevel::Quaternion;

/// `exp(-mu * theta) = cos(theta) - mu sin(theta)` for a unit `e_unit` at `level`.
pub fn unit_exp(level: AlgebraLevel, unit: usize, theta: f64) -> HyperNum {
    let mut c = [0.0; 16];
    c[0] = theta.cos();
    c[unit] = -theta.sin();
    HyperNum::new(level, &c[..level.dim()]).expect("valid level")
}

/// Unitary DFT matrix `F[r,s] = exp(-e_unit 2 pi r s / n) / sqrt(n)` over quaternions.
pub fn fourier_matrix(n: usize, unit: usize) -> HMatrix {
    let norm = 1.0 / (n as f64).sqrt();
    HMatrix::from_fn(Q, n, n, |r, s| {
        let phase = 2.0 * PI * ((r * s) % n) as f64 / n as f64;
        unit_exp(Q, unit, phase).scale(norm)
    })
}

/// Normalization of the two-sided transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum QdftNormalization {
    /// `1/sqrt(N)` on each side; energy preserving.
    #[default]
    Unitary,
    /// Overall `1/N^2`, i.e. the unitary result divided by `N`.
    InverseSquare,
}

/// Two-sided 2-D QDFT `S = F_i X F_j` on square quaternion images.
#[derive(Clone, Debug)]
pub struct Qdft2D {
    n: usize,
    fi: HMatrix,
    fj: HMatrix,
    normalization: QdftNormalization,
}

impl Qdft2D {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_normalization(n, QdftNormalization::Unitary)
    }

    pub fn with_normalization(n: usize, normalization: QdftNormalization) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("QDFT side length must be positive".into()));
        }
        Ok(Qdft2D {
            n,
            fi: fourier_matrix(n, 1),
            fj: fourier_matrix(n, 2),
            normalization,
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn left_matrix(&self) -> &HMatrix {
        &self.fi
    }

    pub fn right_matrix(&self) -> &HMatrix {
        &self.fj
    }

    fn extra_scale(&self) -> f64 {
        match self.normalization {
            QdftNormalization::Unitary => 1.0,
            QdftNormalization::InverseSquare => 1.0 / self.n as f64,
        }
    }

    fn check(&self, x: &HMatrix) -> Result<()> {
        x.level().check_same(Q)?;
        if x.rows() != self.n || x.cols() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "expected a {0}x{0} image, got {1}x{2}",
                self.n,
                x.rows(),
                x.cols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &HMatrix) -> Result<HMatrix> {
        self.check(x)?;
        let s = self.fi.matmul(x)?.matmul(&self.fj)?;
        Ok(scaled(s, self.extra_scale()))
    }

    /// Exact inverse of [`Qdft2D::forward`].
    pub fn inverse(&self, s: &HMatrix) -> Result<HMatrix> {
        self.check(s)?;
        let x = self
            .fi
            .conj_transpose()
            .matmul(s)?
            .matmul(&self.fj.conj_transpose())?;
        Ok(scaled(x, 1.0 / self.extra_scale()))
    }

    /// Real adjoint of [`Qdft2D::forward`]; equals the inverse up to the normalization constant.
    pub fn adjoint(&self, s: &HMatrix) -> Result<HMatrix> {
        let x = self.inverse(s)?;
        let e = self.extra_scale();
        Ok(scaled(x, e * e))
    }
}

fn scaled(m: HMatrix, t: f64) -> HMatrix {
    if t == 1.0 {
        m
    } else {
        m.scale(t)
    }
}

/// Flat row-major octonion volume of side `n`; index `(n1 * n + n2) * n + n3`.
#[derive(Clone, Debug, PartialEq)]
pub struct OctonionVolume {
    pub side: usize,
    pub data: HVector,
}

impl OctonionVolume {
    pub fn new(side: usize, data: HVector) -> Result<Self> {
        data.level().check_same(AlgebraLevel::Octonion)?;
        if data.len() != side * side * side {
            return Err(Error::ShapeMismatch(format!(
                "{} entries do not form a cube of side {side}",
                data.len()
            )));
        }
        Ok(OctonionVolume { side, data })
    }

    pub fn index(&self, n1: usize, n2: usize, n3: usize) -> usize {
        (n1 * self.side + n2) * self.side + n3
    }
}

/// Units paired with the three axes of the octonion transform.
pub const ODFT_UNITS: [usize; 3] = [1, 2, 4];

/// 3-D octonion DFT with `1/N^3` normalization. Each term is evaluated as
/// `((f * E1) * E2) * E4`, which the separable passes below reproduce exactly
/// because right multiplication by a fixed element is linear.
pub fn odft3d_forward(vol: &OctonionVolume) -> Result<OctonionVolume> {
    let n = vol.side;
    if n == 0 {
        return Err(Error::InvalidArgument("empty volume".into()));
    }
    let level = AlgebraLevel::Octonion;
    let d = level.dim();
    let mut cur = vol.data.clone();
    for (axis, &unit) in ODFT_UNITS.iter().enumerate() {
        let kernel: Vec<HyperNum> = (0..n * n)
            .map(|kn| {
                let (k, t) = (kn / n, kn % n);
                unit_exp(level, unit, 2.0 * PI * ((k * t) % n) as f64 / n as f64)
            })
            .collect();
        let mut next = HVector::zeros(level, n * n * n);
        let stride = [n * n, n, 1][axis];
        for base in 0..n * n * n {
            // Enumerate each line along `axis` once, from its start.
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for k in 0..n {
                let out_at = base + k * stride;
                let mut acc = [0.0; 16];
                for t in 0..n {
                    let src = cur.entry(base + t * stride);
                    mul_acc(level, src, kernel[k * n + t].coeffs(), &mut acc[..d]);
                }
                next.entry_mut(out_at).copy_from_slice(&acc[..d]);
            }
        }
        cur = next;
    }
    let norm = 1.0 / (n * n * n) as f64;
    OctonionVolume::new(n, cur.scale(norm))
}

/// Ordered quaternion code alphabet; a set of size `d` takes the first `d` entries.
pub fn code_set(d: usize) -> Result<Vec<HyperNum>> {
    if !(1..=8).contains(&d) {
        return Err(Error::InvalidArgument(format!("code set size {d} outside 1..=8")));
    }
    Ok((0..d)
        .map(|i| HyperNum::unit(Q, i / 2).scale(if i % 2 == 0 { 1.0 } else { -1.0 }))
        .collect())
}

/// Random unit-modulus coding masks, stored as indices into the code set.
#[derive(Clone, Debug, PartialEq)]
pub struct DoeMask {
    /// Entries per mask (`N^2` for square images, `n` for vectors).
    pub cells: usize,
    pub codes: Vec<HyperNum>,
    pub masks: Vec<Vec<u8>>,
}

impl DoeMask {
    pub fn generate(cells: usize, snapshots: usize, d: usize, seed: u64) -> Result<Self> {
        let codes = code_set(d)?;
        let mut rng = seeded(seed);
        let masks = (0..snapshots)
            .map(|_| (0..cells).map(|_| rng.random_range(0..d) as u8).collect())
            .collect();
        Ok(DoeMask { cells, codes, masks })
    }

    pub fn snapshots(&self) -> usize {
        self.masks.len()
    }

    pub fn code(&self, snapshot: usize, cell: usize) -> HyperNum {
        self.codes[self.masks[snapshot][cell] as usize]
    }

    /// `mask,cell,w,x,y,z` rows with the chosen code's coefficients.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("mask,cell,w,x,y,z\n");
        for (k, mask) in self.masks.iter().enumerate() {
            for (c, &idx) in mask.iter().enumerate() {
                let q = self.codes[idx as usize].coeffs();
                s.push_str(&format!("{k},{c},{},{},{},{}\n", q[0], q[1], q[2], q[3]));
            }
        }
        s
    }
}

/// Masks for `N x N` images.
pub fn generate_doe(side: usize, snapshots: usize, d: usize, seed: u64) -> Result<DoeMask> {
    DoeMask::generate(side * side, snapshots, d, seed)
}

#[derive(Clone, Debug)]
pub struct StftWindow {
    window: HVector,
    hop: usize,
    signal_len: usize,
}

impl StftWindow {
    pub fn new(window: HVector, hop: usize, signal_len: usize) -> Result<Self> {
        window.level().check_same(Q)?;
        if window.is_empty() || window.len() > signal_len {
            return Err(Error::InvalidArgument(format!(
                "window length {} must be in 1..={signal_len}",
                window.len()
            )));
        }
        if hop == 0 {
            return Err(Error::InvalidArgument("hop must be positive".into()));
        }
        Ok(StftWindow {
            window,
            hop,
            signal_len,
        })
    }

    /// All-ones window of length `t` with hop `max(t/2, 1)`.
    pub fn rectangular(t: usize, signal_len: usize) -> Result<Self> {
        let ones = vec![HyperNum::one(Q); t];
        Self::new(HVector::from_entries(Q, &ones)?, (t / 2).max(1), signal_len)
    }

    pub fn window(&self) -> &HVector {
        &self.window
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn sections(&self) -> usize {
        (self.signal_len + self.window.len() - 1).div_ceil(self.hop)
    }

    /// Window of section `r` at sample `q`: the zero-padded window read at `(r*hop - q) mod N`.
    pub fn shifted(&self, r: usize, q: usize) -> HyperNum {
        let n = self.signal_len;
        let idx = ((r * self.hop) % n + n - q % n) % n;
        if idx < self.window.len() {
            self.window.get(idx)
        } else {
            HyperNum::zero(Q)
        }
    }
}

/// `Y[r,s] = sum_q F_i[s,q] (w_r[q] x[q])`, an `R x N` matrix.
pub fn qstft_measure(x: &HVector, win: &StftWindow) -> Result<HMatrix> {
    x.level().check_same(Q)?;
    let n = win.signal_len;
    if x.len() != n {
        return Err(Error::ShapeMismatch(format!("signal length {} vs window setup {n}", x.len())));
    }
    let f = fourier_matrix(n, 1);
    let sections = win.sections();
    let mut out = HMatrix::zeros(Q, sections, n);
    let mut windowed = HVector::zeros(Q, n);
    for r in 0..sections {
        for q in 0..n {
            let v = win.shifted(r, q) * x.get(q);
            windowed.set(q, v);
        }
        let spec = f.matvec(&windowed)?;
        for s in 0..n {
            out.set(r, s, spec.get(s));
        }
    }
    Ok(out)
}

/// Real adjoint of [`qstft_measure`].
pub fn qstft_adjoint(y: &HMatrix, win: &StftWindow) -> Result<HVector> {
    y.level().check_same(Q)?;
    let n = win.signal_len;
    if y.rows() != win.sections() || y.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "expected {}x{n} STFT coefficients, got {}x{}",
            win.sections(),
            y.rows(),
            y.cols()
        )));
    }
    let f = fourier_matrix(n, 1);
    let mut out = HVector::zeros(Q, n);
    for r in 0..y.rows() {
        let back = f.conj_transpose_matvec(&y.row(r))?;
        for q in 0..n {
            let acc = out.get(q) + win.shifted(r, q).conj() * back.get(q);
            out.set(q, acc);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct WaveletFamily {
    filters: Vec<HVector>,
    /// `(scale, angle)` per filter.
    pub metadata: Vec<(f64, f64)>,
}

impl WaveletFamily {
    pub fn new(filters: Vec<HVector>, metadata: Vec<(f64, f64)>) -> Result<Self> {
        let first = filters
            .first()
            .ok_or_else(|| Error::InvalidArgument("wavelet family needs at least one filter".into()))?;
        let n = first.len();
        for f in &filters {
            f.level().check_same(Q)?;
            if f.len() != n {
                return Err(Error::ShapeMismatch("filters must share one length".into()));
            }
        }
        if metadata.len() != filters.len() {
            return Err(Error::ShapeMismatch("one metadata entry per filter".into()));
        }
        Ok(WaveletFamily { filters, metadata })
    }

    /// Real Haar details at scales `2^1..=2^levels` plus the coarsest average, zero-padded to `n`.
    pub fn haar(n: usize, levels: usize) -> Result<Self> {
        if levels == 0 || (1usize << levels) > n {
            return Err(Error::InvalidArgument(format!(
                "Haar depth {levels} does not fit signal length {n}"
            )));
        }
        let mut filters = Vec::new();
        let mut metadata = Vec::new();
        for k in 1..=levels {
            let support = 1usize << k;
            let amp = (support as f64).sqrt().recip();
            let mut f = HVector::zeros(Q, n);
            for t in 0..support {
                let v = if t < support / 2 { amp } else { -amp };
                f.set(t, HyperNum::scalar(Q, v));
            }
            filters.push(f);
            metadata.push((support as f64, 0.0));
        }
        let support = 1usize << levels;
        let amp = (support as f64).sqrt().recip();
        let mut low = HVector::zeros(Q, n);
        for t in 0..support {
            low.set(t, HyperNum::scalar(Q, amp));
        }
        filters.push(low);
        metadata.push((support as f64, 0.0));
        Self::new(filters, metadata)
    }

    /// The single unit impulse, which turns measurement into entrywise moduli.
    pub fn delta(n: usize) -> Result<Self> {
        let mut f = HVector::zeros(Q, n);
        if n > 0 {
            f.set(0, HyperNum::one(Q));
        }
        Self::new(vec![f], vec![(1.0, 0.0)])
    }

    pub fn filters(&self) -> &[HVector] {
        &self.filters
    }

    pub fn signal_len(&self) -> usize {
        self.filters[0].len()
    }
}

/// `out_k[r] = sum_p x[p] psi_k[(r - p) mod n]`.
pub fn qwt_measure(x: &HVector, fam: &WaveletFamily) -> Result<Vec<HVector>> {
    x.level().check_same(Q)?;
    let n = fam.signal_len();
    if x.len() != n {
        return Err(Error::ShapeMismatch(format!("signal length {} vs filters {n}", x.len())));
    }
    let d = Q.dim();
    let mut outs = Vec::with_capacity(fam.filters.len());
    for psi in &fam.filters {
        let mut out = HVector::zeros(Q, n);
        for r in 0..n {
            let mut acc = [0.0; 4];
            for p in 0..n {
                mul_acc(Q, x.entry(p), psi.entry((r + n - p) % n), &mut acc);
            }
            out.entry_mut(r)[..d].copy_from_slice(&acc);
        }
        outs.push(out);
    }
    Ok(outs)
}

/// Real adjoint of [`qwt_measure`]: `u[p] = sum_k sum_r v_k[r] conj(psi_k[(r - p) mod n])`.
pub fn qwt_adjoint(v: &[HVector], fam: &WaveletFamily) -> Result<HVector> {
    if v.len() != fam.filters.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} coefficient bands for {} filters",
            v.len(),
            fam.filters.len()
        )));
    }
    let n = fam.signal_len();
    let mut out = HVector::zeros(Q, n);
    for (vk, psi) in v.iter().zip(&fam.filters) {
        if vk.len() != n {
            return Err(Error::ShapeMismatch("coefficient band length".into()));
        }
        let conj: Vec<HyperNum> = psi.entries().map(|e| e.conj()).collect();
        for p in 0..n {
            let mut acc = [0.0; 4];
            for r in 0..n {
                mul_acc(Q, vk.entry(r), conj[(r + n - p) % n].coeffs(), &mut acc);
            }
            for (o, a) in out.entry_mut(p).iter_mut().zip(acc) {
                *o += a;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inner;
    use crate::rng::seeded;

    fn e(level: AlgebraLevel, unit: usize, theta: f64) -> HyperNum {
        let mut c = vec![0.0; level.dim()];
        c[0] = theta.cos();
        c[unit] = -theta.sin();
        HyperNum::new(level, &c).unwrap()
    }

    fn random_image(n: usize, seed: u64) -> HMatrix {
        HMatrix::random(Q, n, n, &mut seeded(seed))
    }

    fn max_diff(a: &HMatrix, b: &HMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                worst = worst.max((a.get(r, c) - b.get(r, c)).modulus());
            }
        }
        worst
    }

    fn qdft_oracle(x: &HMatrix) -> HMatrix {
        let n = x.rows();
        let nf = n as f64;
        HMatrix::from_fn(Q, n, n, |r, s| {
            let mut acc = HyperNum::zero(Q);
            for q in 0..n {
                for b in 0..n {
                    let left = e(Q, 1, 2.0 * PI * (r * q) as f64 / nf);
                    let right = e(Q, 2, 2.0 * PI * (s * b) as f64 / nf);
                    acc += left * x.get(q, b) * right;
                }
            }
            acc.scale(1.0 / nf)
        })
    }

    #[test]
    fn fourier_matrices_are_unitary() {
        for unit in [1, 2] {
            let f = fourier_matrix(6, unit);
            let g = f.conj_transpose().matmul(&f).unwrap();
            assert!(max_diff(&g, &HMatrix::identity(Q, 6)) < 1e-12);
        }
    }

    #[test]
    fn qdft_matches_double_sum() {
        let t = Qdft2D::new(4).unwrap();
        let x = random_image(4, 11);
        assert!(max_diff(&t.forward(&x).unwrap(), &qdft_oracle(&x)) < 1e-12);
    }

    #[test]
    fn qdft_delta_and_constant() {
        let t = Qdft2D::new(4).unwrap();
        let mut delta = HMatrix::zeros(Q, 4, 4);
        delta.set(0, 0, HyperNum::one(Q));
        let flat = HMatrix::from_fn(Q, 4, 4, |_, _| HyperNum::scalar(Q, 0.25));
        assert!(max_diff(&t.forward(&delta).unwrap(), &flat) < 1e-15);
        let constant = HMatrix::from_fn(Q, 4, 4, |_, _| HyperNum::one(Q));
        let mut spike = HMatrix::zeros(Q, 4, 4);
        spike.set(0, 0, HyperNum::scalar(Q, 4.0));
        assert!(max_diff(&t.forward(&constant).unwrap(), &spike) < 1e-14);
        assert!(max_diff(&t.inverse(&spike).unwrap(), &constant) < 1e-14);
        let zero = HMatrix::zeros(Q, 4, 4);
        assert_eq!(t.inverse(&zero).unwrap(), zero);
    }

    #[test]
    fn qdft_round_trip_and_energy() {
        for norm in [QdftNormalization::Unitary, QdftNormalization::InverseSquare] {
            let t = Qdft2D::with_normalization(5, norm).unwrap();
            let x = random_image(5, 12);
            let s = t.forward(&x).unwrap();
            assert!(max_diff(&t.inverse(&s).unwrap(), &x) < 1e-10);
            assert!(max_diff(&t.forward(&t.inverse(&x).unwrap()).unwrap(), &x) < 1e-10);
            let scale = if norm == QdftNormalization::Unitary { 1.0 } else { 5.0 };
            assert!((s.frobenius_norm() * scale - x.frobenius_norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn qdft_row_shift_is_left_phase() {
        let n = 4;
        let t = Qdft2D::new(n).unwrap();
        let x = random_image(n, 13);
        let shifted = HMatrix::from_fn(Q, n, n, |q, b| x.get((q + n - 1) % n, b));
        let a = t.forward(&x).unwrap();
        let b = t.forward(&shifted).unwrap();
        for r in 0..n {
            for s in 0..n {
                let expect = e(Q, 1, 2.0 * PI * r as f64 / n as f64) * a.get(r, s);
                assert!((b.get(r, s) - expect).modulus() < 1e-12);
            }
        }
    }

    #[test]
    fn qdft_rejects_non_square() {
        let t = Qdft2D::new(4).unwrap();
        assert!(t.forward(&HMatrix::zeros(Q, 4, 3)).is_err());
    }

    fn odft_oracle(vol: &OctonionVolume) -> Vec<HyperNum> {
        let n = vol.side;
        let o = AlgebraLevel::Octonion;
        let nf = n as f64;
        let mut out = Vec::new();
        for k1 in 0..n {
            for k2 in 0..n {
                for k3 in 0..n {
                    let mut acc = HyperNum::zero(o);
                    for n1 in 0..n {
                        for n2 in 0..n {
                            for n3 in 0..n {
                                let f = vol.data.get(vol.index(n1, n2, n3));
                                let t1 = f * e(o, 1, 2.0 * PI * (k1 * n1) as f64 / nf);
                                let t2 = t1 * e(o, 2, 2.0 * PI * (k2 * n2) as f64 / nf);
                                acc += t2 * e(o, 4, 2.0 * PI * (k3 * n3) as f64 / nf);
                            }
                        }
                    }
                    out.push(acc.scale(1.0 / (nf * nf * nf)));
                }
            }
        }
        out
    }

    #[test]
    fn odft_matches_triple_sum() {
        for (side, seed) in [(2, 21), (3, 22)] {
            let data = HVector::random(AlgebraLevel::Octonion, side * side * side, &mut seeded(seed));
            let vol = OctonionVolume::new(side, data).unwrap();
            let fast = odft3d_forward(&vol).unwrap();
            for (i, want) in odft_oracle(&vol).iter().enumerate() {
                assert!((fast.data.get(i) - *want).modulus() < 1e-12);
            }
        }
    }

    #[test]
    fn odft_delta_is_flat() {
        let o = AlgebraLevel::Octonion;
        let mut data = HVector::zeros(o, 8);
        data.set(0, HyperNum::one(o));
        let out = odft3d_forward(&OctonionVolume::new(2, data).unwrap()).unwrap();
        for v in out.data.entries() {
            assert!(v.approx_eq(&HyperNum::scalar(o, 0.125), 1e-15));
        }
        assert!(OctonionVolume::new(2, HVector::zeros(o, 7)).is_err());
    }

    #[test]
    fn odft_is_real_linear() {
        let o = AlgebraLevel::Octonion;
        let mut rng = seeded(23);
        let a = OctonionVolume::new(2, HVector::random(o, 8, &mut rng)).unwrap();
        let b = OctonionVolume::new(2, HVector::random(o, 8, &mut rng)).unwrap();
        let sum = OctonionVolume::new(2, a.data.scale(2.0).add(&b.data).unwrap()).unwrap();
        let lhs = odft3d_forward(&sum).unwrap().data;
        let rhs = odft3d_forward(&a)
            .unwrap()
            .data
            .scale(2.0)
            .add(&odft3d_forward(&b).unwrap().data)
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm2() < 1e-12);
    }

    #[test]
    fn code_sets_and_masks() {
        let four = code_set(4).unwrap();
        assert_eq!(four[0], HyperNum::one(Q));
        assert_eq!(four[1], HyperNum::scalar(Q, -1.0));
        assert_eq!(four[2], HyperNum::unit(Q, 1));
        assert_eq!(four[3], HyperNum::unit(Q, 1).scale(-1.0));
        assert!(code_set(0).is_err() && code_set(9).is_err());
        let m = generate_doe(4, 3, 8, 5).unwrap();
        assert_eq!(m, generate_doe(4, 3, 8, 5).unwrap());
        for k in 0..3 {
            for c in 0..16 {
                assert!((m.code(k, c).modulus() - 1.0).abs() < 1e-15);
            }
        }
        assert!(m.to_csv().starts_with("mask,cell,w,x,y,z\n"));
    }

    #[test]
    fn mask_frequencies_are_uniform() {
        let d = 8;
        let m = DoeMask::generate(100_000, 1, d, 7).unwrap();
        let mut counts = [0usize; 8];
        for &i in &m.masks[0] {
            counts[i as usize] += 1;
        }
        let n = 100_000f64;
        let p = 1.0 / d as f64;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n * p).abs() < 3.0 * sigma + 1.0, "count {c}");
        }
    }

    fn stft_oracle(x: &HVector, w: &[HyperNum], hop: usize) -> Vec<Vec<HyperNum>> {
        let n = x.len();
        let t = w.len();
        let sections = (n + t - 1).div_ceil(hop);
        let mut out = Vec::new();
        for r in 0..sections {
            let mut row = Vec::new();
            for s in 0..n {
                let mut acc = HyperNum::zero(Q);
                for q in 0..n {
                    let lag = (r * hop + 10 * n - q) % n;
                    let wq = if lag < t { w[lag] } else { HyperNum::zero(Q) };
                    let f = e(Q, 1, 2.0 * PI * (s * q) as f64 / n as f64).scale(1.0 / (n as f64).sqrt());
                    acc += f * (wq * x.get(q));
                }
                row.push(acc);
            }
            out.push(row);
        }
        out
    }

    #[test]
    fn stft_matches_direct_sum() {
        let mut rng = seeded(31);
        let x = HVector::random(Q, 8, &mut rng);
        let w: Vec<HyperNum> = (0..4).map(|_| HyperNum::random(Q, &mut rng)).collect();
        let win = StftWindow::new(HVector::from_entries(Q, &w).unwrap(), 2, 8).unwrap();
        assert_eq!(win.sections(), 6);
        let y = qstft_measure(&x, &win).unwrap();
        let oracle = stft_oracle(&x, &w, 2);
        for (r, row) in oracle.iter().enumerate() {
            for (s, v) in row.iter().enumerate() {
                assert!((y.get(r, s) - *v).modulus() < 1e-12);
            }
        }
    }

    #[test]
    fn stft_full_window_is_plain_dft() {
        let mut rng = seeded(32);
        let x = HVector::random(Q, 8, &mut rng);
        let ones = HVector::from_entries(Q, &[HyperNum::one(Q); 8]).unwrap();
        let win = StftWindow::new(ones, 16, 8).unwrap();
        assert_eq!(win.sections(), 1);
        let y = qstft_measure(&x, &win).unwrap();
        let plain = fourier_matrix(8, 1).matvec(&x).unwrap();
        assert!(y.row(0).sub(&plain).unwrap().norm2() < 1e-12);
        let zero = qstft_measure(&HVector::zeros(Q, 8), &win).unwrap();
        assert_eq!(zero.frobenius_norm(), 0.0);
        assert!(StftWindow::rectangular(9, 8).is_err());
    }

    fn wavelet_oracle(x: &HVector, psi: &HVector) -> Vec<HyperNum> {
        let n = x.len();
        (0..n)
            .map(|r| {
                let mut acc = HyperNum::zero(Q);
                for p in 0..n {
                    let lag = (r as isize - p as isize).rem_euclid(n as isize) as usize;
                    acc += x.get(p) * psi.get(lag);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn wavelet_matches_direct_convolution() {
        let mut rng = seeded(41);
        let x = HVector::random(Q, 8, &mut rng);
        let filters = vec![HVector::random(Q, 8, &mut rng), HVector::random(Q, 8, &mut rng)];
        let fam = WaveletFamily::new(filters.clone(), vec![(1.0, 0.0), (2.0, 0.5)]).unwrap();
        let out = qwt_measure(&x, &fam).unwrap();
        for (band, psi) in out.iter().zip(&filters) {
            for (r, v) in wavelet_oracle(&x, psi).iter().enumerate() {
                assert!((band.get(r) - *v).modulus() < 1e-12);
            }
        }
    }

    #[test]
    fn wavelet_delta_and_haar_on_constant() {
        let mut rng = seeded(42);
        let x = HVector::random(Q, 8, &mut rng);
        let out = qwt_measure(&x, &WaveletFamily::delta(8).unwrap()).unwrap();
        assert_eq!(out[0], x);
        let c = HyperNum::random(Q, &mut rng);
        let constant = HVector::from_entries(Q, &[c; 8]).unwrap();
        let haar = WaveletFamily::haar(8, 3).unwrap();
        let bands = qwt_measure(&constant, &haar).unwrap();
        assert_eq!(bands.len(), 4);
        for band in &bands[..3] {
            assert!(band.norm2() < 1e-14);
        }
        assert!(WaveletFamily::haar(8, 4).is_err());
    }

    fn real_inner(a: &HVector, b: &HVector) -> f64 {
        inner(a, b).unwrap().scalar_part()
    }

    #[test]
    fn stft_and_wavelet_adjoints() {
        let mut rng = seeded(43);
        let x = HVector::random(Q, 8, &mut rng);
        let w = HVector::random(Q, 3, &mut rng);
        let win = StftWindow::new(w, 2, 8).unwrap();
        let y = HMatrix::random(Q, win.sections(), 8, &mut rng);
        let lx = qstft_measure(&x, &win).unwrap();
        let lhs: f64 = (0..y.rows()).map(|r| real_inner(&lx.row(r), &y.row(r))).sum();
        let rhs = real_inner(&x, &qstft_adjoint(&y, &win).unwrap());
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));

        let fam = WaveletFamily::new(
            vec![HVector::random(Q, 8, &mut rng), HVector::random(Q, 8, &mut rng)],
            vec![(1.0, 0.0); 2],
        )
        .unwrap();
        let v = vec![HVector::random(Q, 8, &mut rng), HVector::random(Q, 8, &mut rng)];
        let lx = qwt_measure(&x, &fam).unwrap();
        let lhs: f64 = lx.iter().zip(&v).map(|(a, b)| real_inner(a, b)).sum();
        let rhs = real_inner(&x, &qwt_adjoint(&v, &fam).unwrap());
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
