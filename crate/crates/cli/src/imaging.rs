//! Patch-wise image reconstruction from phaseless measurements.
//!
//! RGB pixels become pure quaternions and are recovered with QWF; eight-band
//! pixels become octonions and are recovered with OWF. Each square patch is a
//! separate problem with its own Gaussian ensemble. Edge patches are
//! zero-padded and cropped again on decode. Before scoring, every patch
//! estimate is multiplied by the unit right factor that best aligns it with the
//! truth, which removes the trivial ambiguity.
//!
//! The baselines ignore the cross-channel structure at the same total
//! measurement count: for RGB, complex WF on the concatenated real
//! coefficients; for multispectral input, real WF on every band separately with
//! one eighth of the measurements each.

use std::path::Path;

use anyhow::{bail, Result};
use rayon::prelude::*;

use hpr_core::models::{
    add_noise, best_right_factor, decode_bands, decode_rgb, encode_bands, encode_rgb, forward, make_ensemble,
    relative_distance, EnsembleKind, Measurements, MeasurementEnsemble,
};
use hpr_core::rng::derive_seed;
use hpr_core::solvers::{
    complex_wf_baseline, concatenate_as_complex, solve, split_from_complex, wf_solve, Algorithm, SolverConfig,
};
use hpr_core::{AlgebraLevel, HVector};

use crate::harness::with_pool;
use crate::imageio::{BandStack, RgbImage};
use crate::output::{num, provenance, Table};
use crate::spec::ExperimentSpec;

/// PSNR reported for an exact reconstruction.
pub const PSNR_CAP_DB: f64 = 200.0;

/// Pixels as channel vectors: three channels for RGB, eight for band stacks.
#[derive(Clone, Debug, PartialEq)]
pub struct Picture {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Vec<f64>>,
}

impl Picture {
    pub fn channels(&self) -> usize {
        self.pixels.first().map_or(0, Vec::len)
    }

    pub fn from_rgb(img: &RgbImage) -> Self {
        Picture {
            width: img.width,
            height: img.height,
            pixels: img.pixels.iter().map(|p| p.to_vec()).collect(),
        }
    }

    pub fn from_bands(stack: &BandStack) -> Result<Self> {
        Ok(Picture {
            width: stack.width,
            height: stack.height,
            pixels: stack.octets()?.iter().map(|p| p.to_vec()).collect(),
        })
    }

    pub fn to_rgb(&self) -> RgbImage {
        RgbImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| [p[0], p[1], p[2]]).collect(),
        }
    }

    pub fn to_bands(&self) -> BandStack {
        let octets: Vec<[f64; 8]> = self.pixels.iter().map(|p| std::array::from_fn(|b| p[b])).collect();
        BandStack::from_octets(self.width, self.height, &octets)
    }

    pub fn load(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ppm") => Ok(Picture::from_rgb(&RgbImage::read(path)?)),
            _ => Picture::from_bands(&BandStack::read(path)?),
        }
    }

    /// Writes `<stem>.ppm` for RGB, or a band stack `<stem>.txt` plus PGMs.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        if self.channels() == 3 {
            self.to_rgb().write(&dir.join(format!("{stem}.ppm")))
        } else {
            self.to_bands().write(dir, stem).map(|_| ())
        }
    }
}

/// Top-left corners of the non-overlapping `side x side` patches.
pub fn patch_origins(width: usize, height: usize, side: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in (0..height).step_by(side) {
        for c in (0..width).step_by(side) {
            out.push((r, c));
        }
    }
    out
}

/// Patch pixels in row-major order, zero outside the picture, with a validity mask.
pub fn extract_patch(pic: &Picture, origin: (usize, usize), side: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let ch = pic.channels();
    let mut pixels = Vec::with_capacity(side * side);
    let mut valid = Vec::with_capacity(side * side);
    for dr in 0..side {
        for dc in 0..side {
            let (r, c) = (origin.0 + dr, origin.1 + dc);
            if r < pic.height && c < pic.width {
                pixels.push(pic.pixels[r * pic.width + c].clone());
                valid.push(true);
            } else {
                pixels.push(vec![0.0; ch]);
                valid.push(false);
            }
        }
    }
    (pixels, valid)
}

pub fn insert_patch(pic: &mut Picture, origin: (usize, usize), side: usize, pixels: &[Vec<f64>]) {
    for dr in 0..side {
        for dc in 0..side {
            let (r, c) = (origin.0 + dr, origin.1 + dc);
            if r < pic.height && c < pic.width {
                pic.pixels[r * pic.width + c] = pixels[dr * side + dc].clone();
            }
        }
    }
}

pub fn encode(pixels: &[Vec<f64>]) -> Result<HVector> {
    match pixels.first().map_or(0, Vec::len) {
        3 => Ok(encode_rgb(&pixels.iter().map(|p| [p[0], p[1], p[2]]).collect::<Vec<_>>())),
        8 => Ok(encode_bands(
            &pixels.iter().map(|p| std::array::from_fn(|b| p[b])).collect::<Vec<[f64; 8]>>(),
        )),
        c => bail!("cannot encode {c}-channel pixels"),
    }
}

pub fn decode(x: &HVector) -> Vec<Vec<f64>> {
    match x.level() {
        AlgebraLevel::Quaternion => decode_rgb(x).into_iter().map(|p| p.to_vec()).collect(),
        _ => decode_bands(x).into_iter().map(|p| p.to_vec()).collect(),
    }
}

/// Mean squared error over valid pixels, with the estimate clamped to `[0, 1]`.
fn squared_error(truth: &[Vec<f64>], estimate: &[Vec<f64>], valid: &[bool]) -> (f64, usize) {
    let mut sum = 0.0;
    let mut count = 0;
    for ((t, e), &ok) in truth.iter().zip(estimate).zip(valid) {
        if ok {
            for (a, b) in t.iter().zip(e) {
                sum += (a - b.clamp(0.0, 1.0)).powi(2);
                count += 1;
            }
        }
    }
    (sum, count)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (-10.0 * mse.log10()).min(PSNR_CAP_DB)
    }
}

/// PSNR with peak 1 over all pixels and channels, estimate clamped to `[0, 1]`.
pub fn psnr(truth: &Picture, estimate: &Picture) -> f64 {
    let valid = vec![true; truth.pixels.len()];
    let (sum, count) = squared_error(&truth.pixels, &estimate.pixels, &valid);
    psnr_from_mse(sum / count.max(1) as f64)
}

#[derive(Clone, Debug)]
pub struct PatchResult {
    pub index: usize,
    pub origin: (usize, usize),
    pub relative_distance: f64,
    pub iterations: usize,
    pub stop: String,
    pub psnr: f64,
    pub baseline_psnr: Option<f64>,
    estimate: Vec<Vec<f64>>,
    baseline: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug)]
pub struct ImageReport {
    pub spec: ExperimentSpec,
    pub method: String,
    pub baseline_method: Option<String>,
    pub psnr: f64,
    pub baseline_psnr: Option<f64>,
    pub patches: Vec<PatchResult>,
    pub reconstruction: Picture,
    pub baseline: Option<Picture>,
    pub violations: Vec<String>,
}

struct Problem<'a> {
    spec: &'a ExperimentSpec,
    level: AlgebraLevel,
    cfg: SolverConfig,
    side: usize,
}

impl Problem<'_> {
    fn measurements(&self, ens: &MeasurementEnsemble, x: &HVector, seed: u64) -> Result<Measurements> {
        let meas = forward(ens, x)?;
        match self.spec.image.snr_db {
            Some(snr) => Ok(add_noise(&meas, snr, seed)?),
            None => Ok(meas),
        }
    }

    fn count(&self, n: usize) -> usize {
        ((self.spec.image.ratio * n as f64).round() as usize).max(1)
    }

    fn solve_main(&self, x: &HVector, base: u64) -> Result<(HVector, usize, String)> {
        let n = x.len();
        let ens = make_ensemble(EnsembleKind::GaussianRows, self.level, n, self.count(n), 0, derive_seed(base, &[0]))?;
        let meas = self.measurements(&ens, x, derive_seed(base, &[2]))?;
        let mut cfg = self.cfg.clone();
        cfg.init_seed = derive_seed(base, &[3]);
        match solve(&ens, &meas, &cfg, None) {
            Ok(run) => {
                let aligned = match best_right_factor(&run.estimate, x) {
                    Ok(w) => run.estimate.right_mul(&w)?,
                    Err(_) => run.estimate.clone(),
                };
                Ok((aligned, run.iterations, format!("{:?}", run.stop)))
            }
            Err(e) => Ok((HVector::zeros(self.level, n), 0, format!("error: {e}").replace(',', ";"))),
        }
    }

    fn solve_baseline(&self, x: &HVector, base: u64) -> Result<HVector> {
        let n = x.len();
        let m = self.count(n);
        let cfg = SolverConfig {
            record_trace: false,
            init_seed: derive_seed(base, &[4]),
            ..SolverConfig::new(Algorithm::ComplexWfBaseline)
        };
        if self.level == AlgebraLevel::Quaternion {
            let z = concatenate_as_complex(x);
            let ens = make_ensemble(EnsembleKind::GaussianRows, AlgebraLevel::Complex, z.len(), m, 0, derive_seed(base, &[1]))?;
            let meas = self.measurements(&ens, &z, derive_seed(base, &[5]))?;
            return match complex_wf_baseline(&ens, &meas, &cfg, None) {
                Ok(run) => Ok(split_from_complex(&run.estimate, &z, self.level)?),
                Err(_) => Ok(HVector::zeros(self.level, n)),
            };
        }
        let dim = self.level.dim();
        let per_band = m.div_ceil(dim);
        let mut data = vec![0.0; n * dim];
        for b in 0..dim {
            let band: Vec<f64> = x.aleph().iter().skip(b).step_by(dim).copied().collect();
            let xb = HVector::aleph_inv(&band, AlgebraLevel::Real)?;
            let ens = make_ensemble(
                EnsembleKind::GaussianRows,
                AlgebraLevel::Real,
                n,
                per_band,
                0,
                derive_seed(base, &[1, b as u64]),
            )?;
            let meas = self.measurements(&ens, &xb, derive_seed(base, &[5, b as u64]))?;
            let mut est = match wf_solve(&ens, &meas, &cfg, None) {
                Ok(run) => run.estimate.into_aleph(),
                Err(_) => vec![0.0; n],
            };
            let sign: f64 = est.iter().zip(&band).map(|(a, t)| a * t).sum();
            if sign < 0.0 {
                est.iter_mut().for_each(|v| *v = -*v);
            }
            for (j, v) in est.into_iter().enumerate() {
                data[j * dim + b] = v;
            }
        }
        Ok(HVector::aleph_inv(&data, self.level)?)
    }

    fn run_patch(&self, pic: &Picture, index: usize, origin: (usize, usize)) -> Result<PatchResult> {
        let (pixels, valid) = extract_patch(pic, origin, self.side);
        let x = encode(&pixels)?;
        let base = derive_seed(self.spec.seed, &[index as u64]);
        let (estimate, iterations, stop, relative) = if x.norm2() == 0.0 {
            (x.clone(), 0, "ZeroData".to_string(), 0.0)
        } else {
            let (est, it, stop) = self.solve_main(&x, base)?;
            let rel = relative_distance(&x, &est).unwrap_or(f64::NAN);
            (est, it, stop, rel)
        };
        let decoded = decode(&estimate);
        let (sum, count) = squared_error(&pixels, &decoded, &valid);
        let baseline = if self.spec.image.baseline {
            let b = if x.norm2() == 0.0 {
                x.clone()
            } else {
                self.solve_baseline(&x, base)?
            };
            Some(decode(&b))
        } else {
            None
        };
        let baseline_psnr = baseline.as_ref().map(|b| {
            let (s, c) = squared_error(&pixels, b, &valid);
            psnr_from_mse(s / c.max(1) as f64)
        });
        Ok(PatchResult {
            index,
            origin,
            relative_distance: relative,
            iterations,
            stop,
            psnr: psnr_from_mse(sum / count.max(1) as f64),
            baseline_psnr,
            estimate: decoded,
            baseline,
        })
    }
}

fn clamped(pic: &Picture) -> Picture {
    Picture {
        pixels: pic.pixels.iter().map(|p| p.iter().map(|v| v.clamp(0.0, 1.0)).collect()).collect(),
        ..pic.clone()
    }
}

pub fn recover_picture(spec: &ExperimentSpec, truth: &Picture) -> Result<ImageReport> {
    let level = match truth.channels() {
        3 => AlgebraLevel::Quaternion,
        8 => AlgebraLevel::Octonion,
        c => bail!("unsupported channel count {c}; use RGB or eight bands"),
    };
    if spec.ensemble.level != "quaternion" && spec.ensemble.level != "octonion" {
        bail!("image recovery works at the quaternion or octonion level");
    }
    let cfg = spec.solver_config(level, EnsembleKind::GaussianRows)?;
    let side = spec.image.patch;
    let problem = Problem { spec, level, cfg, side };
    let origins = patch_origins(truth.width, truth.height, side);
    log::info!("recover_image: {} patches of {side}x{side} at {level}", origins.len());
    let results = with_pool(spec.threads, || {
        origins
            .par_iter()
            .enumerate()
            .map(|(i, &o)| problem.run_patch(truth, i, o))
            .collect::<Vec<_>>()
    })?;
    let patches = results.into_iter().collect::<Result<Vec<_>>>()?;
    let blank = Picture {
        width: truth.width,
        height: truth.height,
        pixels: vec![vec![0.0; truth.channels()]; truth.pixels.len()],
    };
    let mut reconstruction = blank.clone();
    let mut baseline = spec.image.baseline.then(|| blank.clone());
    for p in &patches {
        insert_patch(&mut reconstruction, p.origin, side, &p.estimate);
        if let (Some(pic), Some(b)) = (baseline.as_mut(), p.baseline.as_ref()) {
            insert_patch(pic, p.origin, side, b);
        }
    }
    let reconstruction = clamped(&reconstruction);
    let baseline = baseline.map(|b| clamped(&b));
    let psnr_main = psnr(truth, &reconstruction);
    let baseline_psnr = baseline.as_ref().map(|b| psnr(truth, b));
    let mut violations = Vec::new();
    if let Some(b) = baseline_psnr {
        if psnr_main <= b {
            violations.push(format!("reconstruction PSNR {psnr_main:.2} dB does not exceed baseline {b:.2} dB"));
        }
    }
    Ok(ImageReport {
        spec: spec.clone(),
        method: problem.cfg.algorithm.name().to_string(),
        baseline_method: spec.image.baseline.then(|| {
            if level == AlgebraLevel::Quaternion {
                "concatenated_complex_wf".to_string()
            } else {
                "per_band_real_wf".to_string()
            }
        }),
        psnr: psnr_main,
        baseline_psnr,
        patches,
        reconstruction,
        baseline,
        violations,
    })
}

pub fn run_recover_image(spec: &ExperimentSpec) -> Result<(Picture, ImageReport)> {
    let path = spec.resolve_path(&spec.image.path);
    let truth = Picture::load(&path)?;
    let report = recover_picture(spec, &truth)?;
    Ok((truth, report))
}

impl ImageReport {
    pub fn patches_table(&self) -> Table {
        let mut t = Table::new(&[
            "patch",
            "row",
            "col",
            "relative_distance",
            "iterations",
            "stop",
            "psnr_db",
            "baseline_psnr_db",
        ]);
        for p in &self.patches {
            t.push(vec![
                p.index.to_string(),
                p.origin.0.to_string(),
                p.origin.1.to_string(),
                num(p.relative_distance),
                p.iterations.to_string(),
                p.stop.clone(),
                format!("{:.4}", p.psnr),
                p.baseline_psnr.map(|v| format!("{v:.4}")).unwrap_or_default(),
            ]);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&["method", "psnr_db", "patches", "successes"]);
        let tol = self.spec.solver.success_tol.unwrap_or(1e-5);
        let ok = self.patches.iter().filter(|p| p.relative_distance < tol).count();
        t.push(vec![
            self.method.clone(),
            format!("{:.4}", self.psnr),
            self.patches.len().to_string(),
            ok.to_string(),
        ]);
        if let (Some(name), Some(v)) = (&self.baseline_method, self.baseline_psnr) {
            t.push(vec![name.clone(), format!("{v:.4}"), self.patches.len().to_string(), String::new()]);
        }
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let header = provenance(&self.spec);
        self.summary_table().write(&dir.join("summary.csv"), &header)?;
        self.patches_table().write(&dir.join("patches.csv"), &header)?;
        self.reconstruction.save(dir, "reconstruction")?;
        if let Some(b) = &self.baseline {
            b.save(dir, "baseline")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn picture(width: usize, height: usize, channels: usize) -> Picture {
        Picture {
            width,
            height,
            pixels: (0..width * height)
                .map(|p| (0..channels).map(|c| ((p * 7 + c * 3) % 11) as f64 / 10.0).collect())
                .collect(),
        }
    }

    #[test]
    fn patches_cover_and_crop() {
        let pic = picture(5, 3, 3);
        let side = 2;
        let origins = patch_origins(pic.width, pic.height, side);
        assert_eq!(origins.len(), 6);
        let mut back = Picture {
            pixels: vec![vec![0.0; 3]; 15],
            ..pic.clone()
        };
        for o in origins {
            let (px, valid) = extract_patch(&pic, o, side);
            assert_eq!(px.len(), 4);
            for (p, ok) in px.iter().zip(&valid) {
                if !ok {
                    assert!(p.iter().all(|v| *v == 0.0));
                }
            }
            insert_patch(&mut back, o, side, &px);
        }
        assert_eq!(back, pic);
    }

    #[test]
    fn codecs_round_trip_without_measurement() {
        for channels in [3, 8] {
            let pic = picture(4, 4, channels);
            let (px, _) = extract_patch(&pic, (0, 0), 4);
            assert_eq!(decode(&encode(&px).unwrap()), px);
        }
        assert!(encode(&[vec![0.0; 5]]).is_err());
    }

    #[test]
    fn psnr_of_identical_pictures_is_capped() {
        let pic = picture(3, 3, 3);
        assert_eq!(psnr(&pic, &pic), PSNR_CAP_DB);
        let mut off = pic.clone();
        off.pixels[0][0] += 0.3;
        let expected = -10.0 * ((0.3f64.min(1.0 - pic.pixels[0][0])).powi(2) / 27.0).log10();
        assert!((psnr(&pic, &off) - expected).abs() < 1e-9);
    }
}
