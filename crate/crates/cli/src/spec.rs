//! Experiment specification files.
//!
//! A spec is a TOML document. Every field has a default, so the smallest valid
//! file is a single `kind = "..."` line (and even that may come from the
//! subcommand). Command-line flags override file values.
//!
//! ```toml
//! kind = "phase_transition"
//! seed = 7
//! trials = 20
//!
//! [ensemble]
//! kind = "gaussian_rows"
//! level = "quaternion"
//! n = 100
//!
//! [solver]
//! step = 0.4
//!
//! [grid]
//! ratios = [2, 4, 6, 8, 10, 12, 15]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hpr_core::models::EnsembleKind;
use hpr_core::solvers::{Algorithm, InitMethod, InitScale, SolverConfig, StepSchedule};
use hpr_core::AlgebraLevel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PhaseTransition,
    NoiseSweep,
    CodingSweep,
    RecoverImage,
    AlgebraCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PhaseTransition => "phase_transition",
            ExperimentKind::NoiseSweep => "noise_sweep",
            ExperimentKind::CodingSweep => "coding_sweep",
            ExperimentKind::RecoverImage => "recover_image",
            ExperimentKind::AlgebraCheck => "algebra_check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    /// One of `gaussian_rows`, `real_rows`, `coded_fourier_row`,
    /// `coded_fourier_2sided`, `stft`, `wavelet`.
    pub kind: String,
    /// Level name or dimension.
    pub level: String,
    /// Signal length (pixel count for the two-sided Fourier model).
    pub n: usize,
    /// Coding alphabet size for the coded kinds.
    pub code_size: usize,
    /// Draw pure-quaternion ground truths.
    pub pure: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            kind: "gaussian_rows".into(),
            level: "quaternion".into(),
            n: 100,
            code_size: 8,
            pure: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    /// Defaults to `qwf` for quaternion rows, `owf` for octonion rows and
    /// `real_lift_wf` for structured operators.
    pub algorithm: Option<String>,
    pub step: Option<f64>,
    /// `constant` or `backtracking`.
    pub schedule: String,
    pub warmup: Option<usize>,
    pub max_iters: Option<usize>,
    pub success_tol: Option<f64>,
    pub lower_quantile: Option<f64>,
    pub upper_quantile: Option<f64>,
    /// Residual trimming multiple for QTWF; a non-positive value disables it.
    pub residual_trim: Option<f64>,
    pub pure_quaternion: bool,
    /// `spectral` or `random`.
    pub init: String,
    /// `mean_intensity` or `root_mean_square`.
    pub init_scale: String,
    pub cost_floor: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            algorithm: None,
            step: None,
            schedule: "constant".into(),
            warmup: None,
            max_iters: None,
            success_tol: None,
            lower_quantile: None,
            upper_quantile: None,
            residual_trim: None,
            pure_quaternion: false,
            init: "spectral".into(),
            init_scale: "mean_intensity".into(),
            cost_floor: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Sample complexities. For row ensembles `m = round(ratio * n)`; for the
    /// coded kinds the value is the snapshot count `L` (so `m / n = L`); for
    /// `stft` it is the window length and for `wavelet` the Haar depth.
    pub ratios: Vec<f64>,
    /// SNR values in dB; `inf` means noiseless.
    pub snr_db: Vec<f64>,
    /// Coding alphabet sizes for coding sweeps.
    pub codes: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            ratios: vec![15.0],
            snr_db: vec![f64::INFINITY],
            codes: vec![4, 8],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSpec {
    /// A binary PPM for RGB input, or a band manifest for multispectral input.
    /// Relative paths resolve against the spec file's directory.
    pub path: PathBuf,
    /// Square patch side.
    pub patch: usize,
    /// Measurements per unknown pixel, `m / n`.
    pub ratio: f64,
    /// Also run the channel-separated baseline and require the main solver to beat it.
    pub baseline: bool,
    pub snr_db: Option<f64>,
}

impl Default for ImageSpec {
    fn default() -> Self {
        ImageSpec {
            path: PathBuf::new(),
            patch: 8,
            ratio: 15.0,
            baseline: true,
            snr_db: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraSpec {
    /// Random samples per property and level.
    pub samples: usize,
}

impl Default for AlgebraSpec {
    fn default() -> Self {
        AlgebraSpec { samples: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: Option<ExperimentKind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Write `trace_<cell>_<trial>.csv` for every run.
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub image: ImageSpec,
    #[serde(default)]
    pub algebra: AlgebraSpec,
    /// Directory of the spec file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_seed() -> u64 {
    1
}

fn default_trials() -> usize {
    1
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        let mut spec: ExperimentSpec = toml::from_str("").expect("empty spec parses");
        spec.kind = Some(kind);
        spec
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut spec = Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        spec.base_dir = path.parent().map(Path::to_path_buf);
        Ok(spec)
    }

    /// Applies overrides, fixes the kind and validates.
    pub fn resolve(mut self, kind: ExperimentKind, overrides: &Overrides) -> Result<Self> {
        match self.kind {
            Some(k) if k != kind => bail!("spec is a {k} experiment, not {kind}"),
            _ => self.kind = Some(kind),
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.out = Some(out.clone());
        }
        if let Some(trials) = overrides.trials {
            self.trials = trials;
        }
        if let Some(threads) = overrides.threads {
            self.threads = Some(threads);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind.expect("resolved spec has a kind")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        if self.threads == Some(0) {
            bail!("threads must be at least 1");
        }
        let kind = self.kind.ok_or_else(|| anyhow!("experiment kind missing"))?;
        if kind == ExperimentKind::AlgebraCheck {
            if self.algebra.samples == 0 {
                bail!("algebra.samples must be at least 1");
            }
            return Ok(());
        }
        self.level()?;
        if kind == ExperimentKind::RecoverImage {
            if self.image.patch == 0 {
                bail!("image.patch must be at least 1");
            }
            if !(self.image.ratio > 0.0) {
                bail!("image.ratio must be positive");
            }
            if self.image.path.as_os_str().is_empty() {
                bail!("image.path is required");
            }
        } else {
            self.ensemble_kind()?;
            if self.ensemble.n == 0 {
                bail!("ensemble.n must be at least 1");
            }
            if self.grid.ratios.is_empty() {
                bail!("grid.ratios must not be empty");
            }
            if self.grid.ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                bail!("grid.ratios must be positive and finite");
            }
        }
        if kind == ExperimentKind::NoiseSweep && self.grid.snr_db.is_empty() {
            bail!("grid.snr_db must not be empty");
        }
        if self.grid.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            bail!("grid.snr_db entries must be numbers or inf");
        }
        if kind == ExperimentKind::CodingSweep && self.grid.codes.is_empty() {
            bail!("grid.codes must not be empty");
        }
        self.solver_config(self.level()?, self.ensemble_kind()?)?.validate()?;
        Ok(())
    }

    pub fn level(&self) -> Result<AlgebraLevel> {
        Ok(AlgebraLevel::from_str(&self.ensemble.level)?)
    }

    pub fn ensemble_kind(&self) -> Result<EnsembleKind> {
        Ok(EnsembleKind::from_str(&self.ensemble.kind)?)
    }

    /// Solver configuration for one run; seeds are filled in per trial.
    pub fn solver_config(&self, level: AlgebraLevel, kind: EnsembleKind) -> Result<SolverConfig> {
        let s = &self.solver;
        let algorithm = match &s.algorithm {
            Some(name) => Algorithm::from_str(name)?,
            None => default_algorithm(level, kind),
        };
        let mut cfg = SolverConfig::new(algorithm);
        cfg.record_trace = self.trace;
        if let Some(v) = s.step {
            cfg.step = v;
        }
        cfg.schedule = match s.schedule.as_str() {
            "constant" => StepSchedule::ConstantOverNormSq,
            "backtracking" => StepSchedule::Backtracking,
            other => bail!("unknown step schedule '{other}'"),
        };
        if let Some(v) = s.warmup {
            cfg.warmup = v;
        }
        if let Some(v) = s.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = s.success_tol {
            cfg.success_tol = v;
        }
        if let Some(v) = s.lower_quantile {
            cfg.lower_quantile = v;
        }
        if let Some(v) = s.upper_quantile {
            cfg.upper_quantile = v;
        }
        if let Some(v) = s.residual_trim {
            cfg.residual_trim = (v > 0.0).then_some(v);
        }
        if let Some(v) = s.cost_floor {
            cfg.cost_floor = v;
        }
        cfg.pure_quaternion = s.pure_quaternion;
        cfg.init = match s.init.as_str() {
            "spectral" => InitMethod::Spectral,
            "random" => InitMethod::Random,
            other => bail!("unknown init '{other}'"),
        };
        cfg.init_scale = match s.init_scale.as_str() {
            "mean_intensity" => InitScale::MeanIntensity,
            "root_mean_square" => InitScale::RootMeanSquare,
            other => bail!("unknown init scale '{other}'"),
        };
        Ok(cfg)
    }

    /// SHA-256 of the canonical serialization, ignoring where output goes and
    /// how many threads run it.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        canonical.threads = None;
        let text = toml::to_string(&canonical).expect("spec serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from("hpr-out").join(self.kind().name()))
    }

    /// `path` relative to the spec file, unless absolute.
    pub fn resolve_path(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

pub fn default_algorithm(level: AlgebraLevel, kind: EnsembleKind) -> Algorithm {
    if !kind.is_row_based() {
        return Algorithm::RealLiftWf;
    }
    match level {
        AlgebraLevel::Quaternion => Algorithm::Qwf,
        AlgebraLevel::Octonion => Algorithm::Owf,
        AlgebraLevel::Complex => Algorithm::ComplexWfBaseline,
        _ => Algorithm::RealLiftWf,
    }
}
