//! Intensity measurement models `y = |L x|^2`, ensemble construction, noise and
//! ambiguity-aware distances.
//!
//! A sensing operator maps a signal of `n` hypercomplex entries to `m` output
//! entries; measurement `l` is the squared modulus of output entry `l`. Row
//! ensembles store the matrix `A` with `A[l, j] = conj(a_l[j])`, so that
//! output entry `l` is `sum_j conj(a_l[j]) x_j`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{left_mul_matrix, modulus_sq_slice, AlgebraLevel, HyperNum};
use crate::error::{Error, Result};
use crate::linalg::{inner, HMatrix, HVector};
use crate::rng::{derive_seed, seeded};
use crate::transforms::{fourier_matrix, qstft_adjoint, qstft_measure, qwt_adjoint, qwt_measure};
use crate::transforms::{DoeMask, Qdft2D, StftWindow, WaveletFamily};

/// A map that is linear over the reals in `aleph` coordinates, together with
/// its adjoint for the inner product `Re sum conj(u_i) v_i`.
pub trait RealLinearOperator: Sync {
    fn level(&self) -> AlgebraLevel;
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn apply(&self, x: &HVector) -> Result<HVector>;
    fn adjoint(&self, v: &HVector) -> Result<HVector>;
}

/// Checks `<L u, v> = <u, L^T v>` on `probes` random pairs; returns the worst relative mismatch.
pub fn validate_adjoint(op: &dyn RealLinearOperator, probes: usize, seed: u64, tol: f64) -> Result<f64> {
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let u = HVector::random(op.level(), op.input_len(), &mut rng);
        let v = HVector::random(op.level(), op.output_len(), &mut rng);
        let lu = op.apply(&u)?;
        let ltv = op.adjoint(&v)?;
        let lhs = inner(&lu, &v)?.scalar_part();
        let rhs = inner(&u, &ltv)?.scalar_part();
        let scale = lu.norm2() * v.norm2() + u.norm2() * ltv.norm2();
        let rel = (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    if worst > tol {
        return Err(Error::AdjointMismatch { mismatch: worst });
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnsembleKind {
    GaussianRows,
    CodedFourierTwoSided,
    CodedFourierRow,
    Stft,
    Wavelet,
    RealRows,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 6] = [
        EnsembleKind::GaussianRows,
        EnsembleKind::CodedFourierTwoSided,
        EnsembleKind::CodedFourierRow,
        EnsembleKind::Stft,
        EnsembleKind::Wavelet,
        EnsembleKind::RealRows,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::GaussianRows => "gaussian_rows",
            EnsembleKind::CodedFourierTwoSided => "coded_fourier_2sided",
            EnsembleKind::CodedFourierRow => "coded_fourier_row",
            EnsembleKind::Stft => "stft",
            EnsembleKind::Wavelet => "wavelet",
            EnsembleKind::RealRows => "real_rows",
        }
    }

    /// Whether the operator is an explicit matrix with rows `a_l`.
    pub fn is_row_based(self) -> bool {
        matches!(
            self,
            EnsembleKind::GaussianRows | EnsembleKind::CodedFourierRow | EnsembleKind::RealRows
        )
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnsembleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ensemble kind '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub enum SensingOperator {
    Rows(HMatrix),
    /// `S_k = F_i (c_k . X) F_j` for each mask `k`, with the mask applied on the left of each pixel.
    TwoSidedFourier { qdft: Qdft2D, masks: DoeMask },
    Stft(StftWindow),
    Wavelet(WaveletFamily),
}

#[derive(Clone, Debug)]
pub struct MeasurementEnsemble {
    pub kind: EnsembleKind,
    pub level: AlgebraLevel,
    pub n: usize,
    pub m: usize,
    /// Snapshot, section or filter count for structured kinds; `m / n` rounded down for rows.
    pub snapshots: usize,
    /// Code set size for coded kinds.
    pub code_size: Option<usize>,
    pub operator: SensingOperator,
    pub seed: u64,
}

const Q: AlgebraLevel = AlgebraLevel::Quaternion;

fn require_quaternion(kind: EnsembleKind, level: AlgebraLevel) -> Result<()> {
    if level != Q {
        return Err(Error::InvalidArgument(format!(
            "{kind} ensembles are only defined for quaternion signals, not {}",
            level.name()
        )));
    }
    Ok(())
}

/// Builds an ensemble deterministically from `seed`.
///
/// The meaning of `m_or_l` depends on `kind`: measurement count for
/// `gaussian_rows` and `real_rows`, mask count for both coded kinds, window
/// length for `stft` (hop is half the window) and Haar depth for `wavelet`.
/// `coded_fourier_2sided` needs `n` to be a perfect square.
pub fn make_ensemble(
    kind: EnsembleKind,
    level: AlgebraLevel,
    n: usize,
    m_or_l: usize,
    d: usize,
    seed: u64,
) -> Result<MeasurementEnsemble> {
    if n == 0 || m_or_l == 0 {
        return Err(Error::InvalidArgument("signal length and measurement count must be positive".into()));
    }
    let mut rng = seeded(seed);
    let ens = match kind {
        EnsembleKind::GaussianRows => MeasurementEnsemble::from_rows(kind, HMatrix::random(level, m_or_l, n, &mut rng), seed),
        EnsembleKind::RealRows => {
            let a = HMatrix::from_fn(level, m_or_l, n, |_, _| {
                HyperNum::scalar(level, rng.sample::<f64, _>(StandardNormal))
            });
            MeasurementEnsemble::from_rows(kind, a, seed)
        }
        EnsembleKind::CodedFourierRow => {
            require_quaternion(kind, level)?;
            let masks = DoeMask::generate(n, m_or_l, d, derive_seed(seed, &[1]))?;
            let f = fourier_matrix(n, 1);
            let a = HMatrix::from_fn(level, m_or_l * n, n, |row, j| {
                let (k, alpha) = (row / n, row % n);
                f.get(alpha, j) * masks.code(k, j)
            });
            let mut ens = MeasurementEnsemble::from_rows(kind, a, seed);
            ens.snapshots = m_or_l;
            ens.code_size = Some(d);
            ens
        }
        EnsembleKind::CodedFourierTwoSided => {
            require_quaternion(kind, level)?;
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(Error::InvalidArgument(format!(
                    "two-sided Fourier model needs a square image, n = {n}"
                )));
            }
            let masks = DoeMask::generate(n, m_or_l, d, derive_seed(seed, &[1]))?;
            MeasurementEnsemble {
                kind,
                level,
                n,
                m: m_or_l * n,
                snapshots: m_or_l,
                code_size: Some(d),
                operator: SensingOperator::TwoSidedFourier {
                    qdft: Qdft2D::new(side)?,
                    masks,
                },
                seed,
            }
        }
        EnsembleKind::Stft => {
            require_quaternion(kind, level)?;
            MeasurementEnsemble::stft(StftWindow::rectangular(m_or_l, n)?, seed)
        }
        EnsembleKind::Wavelet => {
            require_quaternion(kind, level)?;
            MeasurementEnsemble::wavelet(WaveletFamily::haar(n, m_or_l)?, seed)
        }
    };
    Ok(ens)
}

impl MeasurementEnsemble {
    pub fn from_rows(kind: EnsembleKind, a: HMatrix, seed: u64) -> Self {
        MeasurementEnsemble {
            kind,
            level: a.level(),
            n: a.cols(),
            m: a.rows(),
            snapshots: a.rows() / a.cols().max(1),
            code_size: None,
            operator: SensingOperator::Rows(a),
            seed,
        }
    }

    pub fn stft(window: StftWindow, seed: u64) -> Self {
        let n = window.signal_len();
        let sections = window.sections();
        MeasurementEnsemble {
            kind: EnsembleKind::Stft,
            level: Q,
            n,
            m: sections * n,
            snapshots: sections,
            code_size: None,
            operator: SensingOperator::Stft(window),
            seed,
        }
    }

    pub fn wavelet(family: WaveletFamily, seed: u64) -> Self {
        let n = family.signal_len();
        let k = family.filters().len();
        MeasurementEnsemble {
            kind: EnsembleKind::Wavelet,
            level: Q,
            n,
            m: k * n,
            snapshots: k,
            code_size: None,
            operator: SensingOperator::Wavelet(family),
            seed,
        }
    }

    pub fn rows(&self) -> Option<&HMatrix> {
        match &self.operator {
            SensingOperator::Rows(a) => Some(a),
            _ => None,
        }
    }

    /// `|L|_F^2 / (m n)`: mean energy one signal entry contributes to one measurement.
    pub fn entry_energy(&self) -> f64 {
        match &self.operator {
            SensingOperator::Rows(a) => a.mean_entry_energy(),
            SensingOperator::TwoSidedFourier { .. } => 1.0 / self.n as f64,
            SensingOperator::Stft(w) => {
                w.window().norm2_sq() / (w.sections() as f64 * self.n as f64)
            }
            SensingOperator::Wavelet(f) => {
                f.filters().iter().map(|p| p.norm2_sq()).sum::<f64>() / (f.filters().len() * self.n) as f64
            }
        }
    }

    /// One-line `key=value` description for output headers.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "kind={} level={} n={} m={} snapshots={} seed={}",
            self.kind,
            self.level.dim(),
            self.n,
            self.m,
            self.snapshots,
            self.seed
        );
        if let Some(d) = self.code_size {
            s.push_str(&format!(" codes={d}"));
        }
        s
    }
}

impl RealLinearOperator for MeasurementEnsemble {
    fn level(&self) -> AlgebraLevel {
        self.level
    }

    fn input_len(&self) -> usize {
        self.n
    }

    fn output_len(&self) -> usize {
        self.m
    }

    fn apply(&self, x: &HVector) -> Result<HVector> {
        self.level.check_same(x.level())?;
        if x.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "signal length {} for an ensemble with n = {}",
                x.len(),
                self.n
            )));
        }
        match &self.operator {
            SensingOperator::Rows(a) => a.matvec(x),
            SensingOperator::TwoSidedFourier { qdft, masks } => {
                let side = qdft.side();
                let mut out = Vec::with_capacity(self.m * 4);
                for k in 0..masks.snapshots() {
                    let coded = HMatrix::from_fn(Q, side, side, |r, c| {
                        let cell = r * side + c;
                        masks.code(k, cell) * x.get(cell)
                    });
                    let s = qdft.forward(&coded)?;
                    for r in 0..side {
                        for c in 0..side {
                            out.extend_from_slice(s.entry(r, c));
                        }
                    }
                }
                Ok(HVector::aleph_inv(&out, Q)?)
            }
            SensingOperator::Stft(w) => {
                let y = qstft_measure(x, w)?;
                let mut out = Vec::with_capacity(self.m * 4);
                for r in 0..y.rows() {
                    out.extend_from_slice(y.row_data(r));
                }
                HVector::aleph_inv(&out, Q)
            }
            SensingOperator::Wavelet(f) => {
                let bands = qwt_measure(x, f)?;
                let mut out = Vec::with_capacity(self.m * 4);
                for b in &bands {
                    out.extend_from_slice(b.aleph());
                }
                HVector::aleph_inv(&out, Q)
            }
        }
    }

    fn adjoint(&self, v: &HVector) -> Result<HVector> {
        self.level.check_same(v.level())?;
        if v.len() != self.m {
            return Err(Error::ShapeMismatch(format!(
                "adjoint input length {} for m = {}",
                v.len(),
                self.m
            )));
        }
        match &self.operator {
            SensingOperator::Rows(a) => a.conj_transpose_matvec(v),
            SensingOperator::TwoSidedFourier { qdft, masks } => {
                let side = qdft.side();
                let n = self.n;
                let mut out = HVector::zeros(Q, n);
                for k in 0..masks.snapshots() {
                    let s = HMatrix::from_fn(Q, side, side, |r, c| v.get(k * n + r * side + c));
                    let back = qdft.adjoint(&s)?;
                    for r in 0..side {
                        for c in 0..side {
                            let cell = r * side + c;
                            let acc = out.get(cell) + masks.code(k, cell).conj() * back.get(r, c);
                            out.set(cell, acc);
                        }
                    }
                }
                Ok(out)
            }
            SensingOperator::Stft(w) => {
                let n = self.n;
                let y = HMatrix::from_fn(Q, w.sections(), n, |r, s| v.get(r * n + s));
                qstft_adjoint(&y, w)
            }
            SensingOperator::Wavelet(f) => {
                let n = self.n;
                let bands: Vec<HVector> = (0..f.filters().len())
                    .map(|k| HVector::aleph_inv(&v.aleph()[k * n * 4..(k + 1) * n * 4], Q))
                    .collect::<Result<_>>()?;
                qwt_adjoint(&bands, f)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measurements {
    pub y: Vec<f64>,
    pub snr_db: Option<f64>,
    pub noise_seed: Option<u64>,
    /// Entries raised to zero after noise made them negative.
    pub clamped: usize,
}

impl Measurements {
    pub fn noiseless(y: Vec<f64>) -> Self {
        Measurements {
            y,
            snr_db: None,
            noise_seed: None,
            clamped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.y.is_empty() {
            0.0
        } else {
            self.y.iter().sum::<f64>() / self.y.len() as f64
        }
    }
}

/// Squared moduli of the output blocks of `op(x)`.
pub fn intensities(output: &HVector) -> Vec<f64> {
    output
        .aleph()
        .chunks_exact(output.level().dim())
        .map(modulus_sq_slice)
        .collect()
}

pub fn forward(op: &dyn RealLinearOperator, x: &HVector) -> Result<Measurements> {
    Ok(Measurements::noiseless(intensities(&op.apply(x)?)))
}

/// Adds white Gaussian noise at a measurement-domain SNR and clamps negatives to zero.
/// `+inf` leaves the data untouched.
pub fn add_noise(meas: &Measurements, snr_db: f64, seed: u64) -> Result<Measurements> {
    if snr_db == f64::INFINITY {
        return Ok(meas.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("SNR {snr_db} dB")));
    }
    let m = meas.y.len();
    let power = modulus_sq_slice(&meas.y) / m.max(1) as f64;
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = seeded(seed);
    let mut clamped = 0;
    let y = meas
        .y
        .iter()
        .map(|&v| {
            let noisy = v + sigma * rng.sample::<f64, _>(StandardNormal);
            if noisy < 0.0 {
                clamped += 1;
                0.0
            } else {
                noisy
            }
        })
        .collect();
    Ok(Measurements {
        y,
        snr_db: Some(snr_db),
        noise_seed: Some(seed),
        clamped,
    })
}

fn check_pair(x: &HVector, xt: &HVector) -> Result<()> {
    x.level().check_same(xt.level())?;
    if x.len() != xt.len() {
        return Err(Error::ShapeMismatch(format!("lengths {} and {}", x.len(), xt.len())));
    }
    Ok(())
}

fn residual_norm(x: &HVector, xt: &HVector, w: &HyperNum) -> f64 {
    let xw = x.right_mul(w).expect("levels checked");
    xt.sub(&xw).expect("lengths checked").norm2()
}

fn candidate_units(level: AlgebraLevel) -> Vec<HyperNum> {
    (0..level.dim())
        .flat_map(|i| {
            let u = HyperNum::unit(level, i);
            [u, -u]
        })
        .collect()
}

fn best_candidate(x: &HVector, xt: &HVector) -> f64 {
    candidate_units(x.level())
        .iter()
        .map(|w| residual_norm(x, xt, w))
        .fold(f64::INFINITY, f64::min)
}

/// `min_w |xt - x w|` over unit quaternions, via `w = sign(x^H xt)`.
pub fn dist_quaternion(x: &HVector, xt: &HVector) -> Result<f64> {
    check_pair(x, xt)?;
    x.level().check_same(Q)?;
    Ok(dist_by_inner_sign(x, xt))
}

fn dist_by_inner_sign(x: &HVector, xt: &HVector) -> f64 {
    let s = inner(x, xt).expect("pair checked");
    match s.sign() {
        Ok(w) => residual_norm(x, xt, &w),
        Err(_) => best_candidate(x, xt),
    }
}

/// `min_z |xt - x z|` over unit octonions through the real least-squares problem
/// `min_v |aleph(xt) - G v|`, where `G` stacks the left-multiplication matrices of
/// the entries of `x`; the solution is normalized to the unit sphere.
pub fn dist_octonion(x: &HVector, xt: &HVector) -> Result<f64> {
    check_pair(x, xt)?;
    x.level().check_same(AlgebraLevel::Octonion)?;
    dist_by_least_squares(x, xt)
}

/// Best unit right factor `z` minimizing `|xt - x z|`, by normalized least squares.
pub fn best_right_factor(x: &HVector, xt: &HVector) -> Result<HyperNum> {
    check_pair(x, xt)?;
    let level = x.level();
    let d = level.dim();
    if x.norm2() == 0.0 {
        return Err(Error::DivisionByZero);
    }
    let mut normal = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    for j in 0..x.len() {
        let g = DMatrix::from_row_slice(d, d, &left_mul_matrix(&x.get(j)));
        let t = DVector::from_column_slice(xt.entry(j));
        normal += g.transpose() * &g;
        rhs += g.transpose() * t;
    }
    let v = match normal.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let pinv = normal
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            pinv * rhs
        }
    };
    HyperNum::new(level, v.as_slice())?.sign()
}

fn dist_by_least_squares(x: &HVector, xt: &HVector) -> Result<f64> {
    match best_right_factor(x, xt) {
        Ok(z) => Ok(residual_norm(x, xt, &z).min(best_candidate(x, xt))),
        Err(Error::DivisionByZero) if x.norm2() > 0.0 => Ok(best_candidate(x, xt)),
        Err(e) => Err(e),
    }
}

/// Distance modulo a right unit factor at any level: the inner-product sign up
/// to quaternions, normalized least squares above.
pub fn distance(x: &HVector, xt: &HVector) -> Result<f64> {
    check_pair(x, xt)?;
    match x.level() {
        AlgebraLevel::Octonion | AlgebraLevel::Sedenion => dist_by_least_squares(x, xt),
        _ => Ok(dist_by_inner_sign(x, xt)),
    }
}

/// `distance(x, xt) / |x|`.
pub fn relative_distance(x: &HVector, xt: &HVector) -> Result<f64> {
    let n = x.norm2();
    if n == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok(distance(x, xt)? / n)
}

/// Searches for a unit `q` with `forward(q x) != forward(x)`; returns it with the relative change.
pub fn left_noninvariance_witness(
    op: &dyn RealLinearOperator,
    x: &HVector,
    attempts: usize,
    seed: u64,
) -> Result<Option<(HyperNum, f64)>> {
    let base = forward(op, x)?.y;
    let scale = base.iter().map(|v| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut rng = seeded(seed);
    for _ in 0..attempts {
        let q = HyperNum::random_unit(x.level(), &mut rng);
        let y = forward(op, &x.left_mul(&q)?)?.y;
        let change = y.iter().zip(&base).map(|(a, b)| (a - b).abs()).sum::<f64>() / scale;
        if change > 1e-6 {
            return Ok(Some((q, change)));
        }
    }
    Ok(None)
}

/// Ground-truth signal and how it was made.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub x: HVector,
    pub recipe: String,
}

impl GroundTruth {
    pub fn random(level: AlgebraLevel, n: usize, seed: u64) -> Self {
        GroundTruth {
            x: HVector::random(level, n, &mut seeded(seed)),
            recipe: format!("gaussian level={} n={n} seed={seed}", level.dim()),
        }
    }

    /// Quaternion signal with zero scalar parts.
    pub fn random_pure(n: usize, seed: u64) -> Self {
        GroundTruth {
            x: HVector::random(Q, n, &mut seeded(seed)).pure_part(),
            recipe: format!("pure gaussian n={n} seed={seed}"),
        }
    }
}

/// RGB pixels in `[0,1]` to pure quaternions `r i + g j + b k`.
pub fn encode_rgb(pixels: &[[f64; 3]]) -> HVector {
    let mut data = Vec::with_capacity(pixels.len() * 4);
    for p in pixels {
        data.extend_from_slice(&[0.0, p[0], p[1], p[2]]);
    }
    HVector::aleph_inv(&data, Q).expect("multiple of four")
}

pub fn decode_rgb(x: &HVector) -> Vec<[f64; 3]> {
    x.aleph().chunks_exact(4).map(|c| [c[1], c[2], c[3]]).collect()
}

/// Eight-band pixels to octonions, band `b` to coefficient `b`.
pub fn encode_bands(pixels: &[[f64; 8]]) -> HVector {
    let data: Vec<f64> = pixels.iter().flatten().copied().collect();
    HVector::aleph_inv(&data, AlgebraLevel::Octonion).expect("multiple of eight")
}

pub fn decode_bands(x: &HVector) -> Vec<[f64; 8]> {
    x.aleph()
        .chunks_exact(8)
        .map(|c| {
            let mut p = [0.0; 8];
            p.copy_from_slice(c);
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const O: AlgebraLevel = AlgebraLevel::Octonion;

    fn forward_oracle(a: &HMatrix, x: &HVector) -> Vec<f64> {
        let mut y = Vec::new();
        for l in 0..a.rows() {
            let mut acc = HyperNum::zero(a.level());
            for j in 0..a.cols() {
                acc += a.get(l, j) * x.get(j);
            }
            y.push(acc.modulus_sq());
        }
        y
    }

    fn ensembles() -> Vec<MeasurementEnsemble> {
        vec![
            make_ensemble(EnsembleKind::GaussianRows, Q, 6, 20, 0, 1).unwrap(),
            make_ensemble(EnsembleKind::GaussianRows, O, 4, 16, 0, 2).unwrap(),
            make_ensemble(EnsembleKind::RealRows, Q, 5, 12, 0, 3).unwrap(),
            make_ensemble(EnsembleKind::CodedFourierRow, Q, 8, 3, 8, 4).unwrap(),
            make_ensemble(EnsembleKind::CodedFourierTwoSided, Q, 16, 3, 8, 5).unwrap(),
            make_ensemble(EnsembleKind::Stft, Q, 8, 4, 0, 6).unwrap(),
            make_ensemble(EnsembleKind::Wavelet, Q, 8, 2, 0, 7).unwrap(),
        ]
    }

    #[test]
    fn forward_matches_double_loop() {
        let ens = make_ensemble(EnsembleKind::GaussianRows, Q, 3, 5, 0, 17).unwrap();
        let x = HVector::random(Q, 3, &mut seeded(18));
        let y = forward(&ens, &x).unwrap().y;
        for (a, b) in y.iter().zip(forward_oracle(ens.rows().unwrap(), &x)) {
            assert!((a - b).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn forward_trivial_cases() {
        let ens = make_ensemble(EnsembleKind::GaussianRows, Q, 3, 5, 0, 17).unwrap();
        assert!(forward(&ens, &HVector::zeros(Q, 3)).unwrap().y.iter().all(|v| *v == 0.0));
        let q = HyperNum::quaternion(1.0, -2.0, 0.5, 3.0);
        let one = MeasurementEnsemble::from_rows(EnsembleKind::GaussianRows, HMatrix::identity(Q, 1), 0);
        let y = forward(&one, &HVector::from_entries(Q, &[q]).unwrap()).unwrap().y;
        assert!((y[0] - q.modulus_sq()).abs() < 1e-15);
    }

    #[test]
    fn ensembles_are_deterministic() {
        let a = make_ensemble(EnsembleKind::GaussianRows, Q, 2, 3, 0, 7).unwrap();
        let b = make_ensemble(EnsembleKind::GaussianRows, Q, 2, 3, 0, 7).unwrap();
        assert_eq!(a.rows(), b.rows());
        let r = make_ensemble(EnsembleKind::RealRows, Q, 4, 6, 0, 7).unwrap();
        let rows = r.rows().unwrap();
        for l in 0..6 {
            for j in 0..4 {
                assert!(rows.get(l, j).vector_part().is_zero());
            }
        }
        let c = make_ensemble(EnsembleKind::CodedFourierRow, Q, 8, 10, 8, 7).unwrap();
        assert_eq!(c.m, 80);
        assert!(make_ensemble(EnsembleKind::Stft, O, 8, 4, 0, 1).is_err());
        assert!(make_ensemble(EnsembleKind::CodedFourierTwoSided, Q, 10, 2, 8, 1).is_err());
    }

    #[test]
    fn adjoints_validate() {
        for ens in ensembles() {
            let worst = validate_adjoint(&ens, 5, 99, 1e-10).unwrap();
            assert!(worst < 1e-12, "{}: {worst:e}", ens.kind);
        }
    }

    #[test]
    fn right_phase_invariance() {
        let mut rng = seeded(50);
        for ens in ensembles() {
            let associative_action = ens.level != O || ens.kind == EnsembleKind::RealRows;
            if ens.kind == EnsembleKind::CodedFourierTwoSided || !associative_action {
                continue;
            }
            for _ in 0..10 {
                let x = HVector::random(ens.level, ens.n, &mut rng);
                let w = HyperNum::random_unit(ens.level, &mut rng);
                let y0 = forward(&ens, &x).unwrap().y;
                let y1 = forward(&ens, &x.right_mul(&w).unwrap()).unwrap().y;
                for (a, b) in y0.iter().zip(&y1) {
                    assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{}", ens.kind);
                }
            }
        }
    }

    #[test]
    fn two_sided_model_keeps_only_j_plane_phases() {
        let mut rng = seeded(51);
        let ens = make_ensemble(EnsembleKind::CodedFourierTwoSided, Q, 16, 3, 8, 5).unwrap();
        let x = HVector::random(Q, 16, &mut rng);
        let y0 = forward(&ens, &x).unwrap().y;
        let t: f64 = 0.7;
        let w = HyperNum::quaternion(t.cos(), 0.0, t.sin(), 0.0);
        let y1 = forward(&ens, &x.right_mul(&w).unwrap()).unwrap().y;
        for (a, b) in y0.iter().zip(&y1) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
        let k = HyperNum::unit(Q, 3);
        let y2 = forward(&ens, &x.right_mul(&k).unwrap()).unwrap().y;
        let change: f64 = y0.iter().zip(&y2).map(|(a, b)| (a - b).abs()).sum();
        assert!(change > 1e-3);
    }

    #[test]
    fn octonion_rows_break_right_phase_invariance() {
        let mut rng = seeded(53);
        let ens = make_ensemble(EnsembleKind::GaussianRows, O, 2, 4, 0, 9).unwrap();
        let x = HVector::random(O, 2, &mut rng);
        let w = HyperNum::random_unit(O, &mut rng);
        let y0 = forward(&ens, &x).unwrap().y;
        let y1 = forward(&ens, &x.right_mul(&w).unwrap()).unwrap().y;
        let change: f64 = y0.iter().zip(&y1).map(|(a, b)| (a - b).abs()).sum();
        assert!(change > 1e-3);
        let single = make_ensemble(EnsembleKind::GaussianRows, O, 1, 4, 0, 9).unwrap();
        let x = HVector::random(O, 1, &mut rng);
        let y0 = forward(&single, &x).unwrap().y;
        let y1 = forward(&single, &x.right_mul(&w).unwrap()).unwrap().y;
        for (a, b) in y0.iter().zip(&y1) {
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn left_witness_exists() {
        for ens in ensembles().into_iter().take(2) {
            let x = HVector::random(ens.level, ens.n, &mut seeded(52));
            assert!(left_noninvariance_witness(&ens, &x, 10, 1).unwrap().is_some());
        }
    }

    #[test]
    fn quadratic_homogeneity() {
        let ens = make_ensemble(EnsembleKind::GaussianRows, O, 3, 9, 0, 8).unwrap();
        let x = HVector::random(O, 3, &mut seeded(9));
        let y = forward(&ens, &x).unwrap().y;
        let y3 = forward(&ens, &x.scale(3.0)).unwrap().y;
        for (a, b) in y.iter().zip(&y3) {
            assert!((9.0 * a - b).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn noise_levels() {
        let mut rng = seeded(60);
        let y: Vec<f64> = (0..100_000).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).collect();
        let meas = Measurements::noiseless(y.clone());
        assert_eq!(add_noise(&meas, f64::INFINITY, 1).unwrap(), meas);
        let noisy = add_noise(&meas, 10.0, 2).unwrap();
        let w: Vec<f64> = noisy.y.iter().zip(&y).map(|(a, b)| a - b).collect();
        // Clamping shrinks the noise slightly, so compare against the unclamped draw.
        let mut rng = seeded(2);
        let sigma = (modulus_sq_slice(&y) / y.len() as f64 / 10.0).sqrt();
        let raw: Vec<f64> = (0..y.len()).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        let snr = 10.0 * (modulus_sq_slice(&y) / modulus_sq_slice(&raw)).log10();
        assert!((snr - 10.0).abs() < 0.2, "snr {snr}");
        assert!(w.iter().all(|v| v.is_finite()));
        assert!(add_noise(&meas, 0.0, 3).unwrap().clamped > 0);
        assert!(add_noise(&meas, f64::NAN, 3).is_err());
    }

    #[test]
    fn distance_examples() {
        let mut rng = seeded(70);
        for level in [Q, O] {
            let x = HVector::random(level, 5, &mut rng);
            let w = HyperNum::random_unit(level, &mut rng);
            let xw = x.right_mul(&w).unwrap();
            assert!(distance(&x, &xw).unwrap() < 1e-12);
            assert!(distance(&x, &x).unwrap() < 1e-12);
        }
        let x = HVector::random(O, 4, &mut rng);
        let z = HyperNum::random_unit(O, &mut rng);
        assert!(dist_octonion(&x, &x.right_mul(&z).unwrap()).unwrap() < 1e-10);
        assert!(dist_octonion(&HVector::zeros(O, 4), &x).is_err());
        assert!(dist_quaternion(&HVector::zeros(Q, 2), &HVector::zeros(Q, 3)).is_err());
    }

    #[test]
    fn distance_degenerate_inner_product() {
        let i = HyperNum::unit(Q, 1);
        let x = HVector::from_entries(Q, &[HyperNum::one(Q), HyperNum::zero(Q)]).unwrap();
        let xt = HVector::from_entries(Q, &[HyperNum::zero(Q), i]).unwrap();
        assert!(inner(&x, &xt).unwrap().is_zero());
        assert!((dist_quaternion(&x, &xt).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quaternion_distance_agrees_with_least_squares() {
        let mut rng = seeded(71);
        let x = HVector::random(Q, 6, &mut rng);
        let xt = HVector::random(Q, 6, &mut rng);
        let a = dist_quaternion(&x, &xt).unwrap();
        let b = dist_by_least_squares(&x, &xt).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn image_codecs_round_trip() {
        let rgb = vec![[0.1, 0.5, 0.9], [1.0, 0.0, 0.25]];
        let x = encode_rgb(&rgb);
        assert_eq!(x.get(0).scalar_part(), 0.0);
        assert_eq!(decode_rgb(&x), rgb);
        let bands = vec![[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]];
        assert_eq!(decode_bands(&encode_bands(&bands)), bands);
    }
}
