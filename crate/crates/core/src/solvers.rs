//! Wirtinger-flow recovery: spectral initialization, QWF, the truncated
//! Poisson variant QTWF, OWF on the real representation, a real-lifted WF for
//! structured operators and a complex WF baseline.
//!
//! All solvers share one descent loop working on `aleph` coordinates. Each
//! algorithm supplies its cost, its search direction and the step that turns
//! the configured `step` into an actual step length.

use std::fmt;
use std::str::FromStr;

use crate::algebra::{AlgebraLevel, HyperNum};
use crate::error::{Error, Result};
use crate::linalg::{dot, power_iteration, power_method, HMatrix, HVector, PowerOptions, RealMatrix};
use crate::models::{distance, intensities, MeasurementEnsemble, Measurements, RealLinearOperator};
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Qwf,
    Qtwf,
    Owf,
    RealLiftWf,
    ComplexWfBaseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Qwf,
        Algorithm::Qtwf,
        Algorithm::Owf,
        Algorithm::RealLiftWf,
        Algorithm::ComplexWfBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qwf => "qwf",
            Algorithm::Qtwf => "qtwf",
            Algorithm::Owf => "owf",
            Algorithm::RealLiftWf => "real_lift_wf",
            Algorithm::ComplexWfBaseline => "complex_wf_baseline",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepSchedule {
    /// Fixed step `step / |x0|^2` (scaled by the ensemble energy).
    #[default]
    ConstantOverNormSq,
    /// Armijo backtracking from the constant step, contraction 0.5, slope 1e-4.
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum InitMethod {
    #[default]
    Spectral,
    Random,
    Provided(HVector),
}

/// How the unit spectral vector is scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InitScale {
    /// `sqrt(mean(y) / e)` with `e` the mean energy per sensing entry; `sqrt(mean(y))` for unit-energy entries.
    #[default]
    MeanIntensity,
    /// `sqrt(mean(y^2))`, taken literally.
    RootMeanSquare,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Dimensionless step `eta0`.
    pub step: f64,
    pub schedule: StepSchedule,
    /// Constant-schedule steps ramp up as `1 - exp(-(k + 1) / warmup)`; 0 disables the ramp.
    pub warmup: usize,
    pub max_iters: usize,
    /// Success means relative distance below this.
    pub success_tol: f64,
    /// QTWF keeps terms whose `|a* x|` lies between these quantiles.
    pub lower_quantile: f64,
    pub upper_quantile: f64,
    /// QTWF also drops terms whose residual `|y - |a* x|^2|` exceeds this multiple of the mean residual.
    pub residual_trim: Option<f64>,
    pub pure_quaternion: bool,
    pub init: InitMethod,
    pub init_scale: InitScale,
    pub power: PowerOptions,
    /// Seed for random initialization.
    pub init_seed: u64,
    pub stall_window: usize,
    pub stall_tol: f64,
    /// Stop once the cost falls below `cost_floor * mean(y)^2`.
    pub cost_floor: f64,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            algorithm: Algorithm::Qwf,
            step: 0.4,
            schedule: StepSchedule::ConstantOverNormSq,
            warmup: 10,
            max_iters: 2000,
            success_tol: 1e-5,
            lower_quantile: 0.01,
            upper_quantile: 0.99,
            residual_trim: None,
            pure_quaternion: false,
            init: InitMethod::Spectral,
            init_scale: InitScale::MeanIntensity,
            power: PowerOptions::default(),
            init_seed: 0,
            stall_window: 10,
            stall_tol: 1e-12,
            cost_floor: 1e-22,
            record_trace: true,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        let mut cfg = SolverConfig {
            algorithm,
            ..Default::default()
        };
        match algorithm {
            Algorithm::Qtwf => cfg.residual_trim = Some(DEFAULT_RESIDUAL_TRIM),
            Algorithm::Owf => cfg.step = DEFAULT_OWF_STEP,
            _ => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidArgument(format!("step {} must be positive", self.step)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if !(self.success_tol > 0.0) {
            return Err(Error::InvalidArgument("success_tol must be positive".into()));
        }
        if !(0.0 <= self.lower_quantile && self.lower_quantile < self.upper_quantile && self.upper_quantile <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quantile bounds ({}, {}) must satisfy 0 <= lower < upper <= 1",
                self.lower_quantile, self.upper_quantile
            )));
        }
        Ok(())
    }
}

/// Default `eta0` for OWF, which tolerates a longer step than the quaternion solvers.
pub const DEFAULT_OWF_STEP: f64 = 0.6;

/// Default outlier threshold for QTWF residual trimming.
pub const DEFAULT_RESIDUAL_TRIM: f64 = 5.0;

const ARMIJO_SLOPE: f64 = 1e-4;
const ARMIJO_CONTRACTION: f64 = 0.5;
const ARMIJO_MAX_HALVINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub cost: f64,
    pub distance: Option<f64>,
    pub grad_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Stalled,
    CostFloor,
    /// All measurements are zero; the estimate is the zero vector.
    ZeroData,
    /// Backtracking found no decrease.
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub struct SolverRun {
    pub estimate: HVector,
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    pub converged: bool,
    pub stop: StopReason,
    pub final_cost: f64,
}

impl SolverRun {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,cost,distance,grad_norm\n");
        for row in &self.trace {
            let d = row.distance.map(|d| format!("{d:e}")).unwrap_or_default();
            s.push_str(&format!("{},{:e},{},{:e}\n", row.iteration, row.cost, d, row.grad_norm));
        }
        s
    }
}

/// `Y = (1/m) sum_l y_l a_l a_l^*` where `a_l[j] = conj(A[l, j])`.
pub fn spectral_matrix(a: &HMatrix, y: &[f64]) -> Result<HMatrix> {
    if y.len() != a.rows() {
        return Err(Error::ShapeMismatch(format!("{} intensities for {} rows", y.len(), a.rows())));
    }
    let level = a.level();
    let (m, n) = (a.rows(), a.cols());
    let d = level.dim();
    let mut out = HMatrix::zeros(level, n, n);
    let mut acc = vec![0.0; d];
    for j in 0..n {
        for k in j..n {
            acc.iter_mut().for_each(|v| *v = 0.0);
            let mut term = [0.0; 16];
            for (l, &yl) in y.iter().enumerate() {
                if yl == 0.0 {
                    continue;
                }
                term[..d].iter_mut().for_each(|v| *v = 0.0);
                crate::algebra::conj_mul_acc(level, a.entry(l, j), a.entry(l, k), &mut term[..d]);
                for (o, t) in acc.iter_mut().zip(&term[..d]) {
                    *o += yl * t;
                }
            }
            let v = HyperNum::new(level, &acc)?.scale(1.0 / m as f64);
            out.set(j, k, v);
            if k != j {
                out.set(k, j, v.conj());
            } else {
                out.set(j, j, HyperNum::scalar(level, v.scalar_part()));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SpectralInit {
    pub x0: HVector,
    pub eigenvalue: f64,
    pub converged: bool,
    /// All measurements were zero.
    pub degenerate: bool,
}

fn init_radius(y: &[f64], energy: f64, scale: InitScale) -> f64 {
    let m = y.len().max(1) as f64;
    match scale {
        InitScale::MeanIntensity => (y.iter().sum::<f64>() / m / energy).max(0.0).sqrt(),
        InitScale::RootMeanSquare => (y.iter().map(|v| v * v).sum::<f64>() / m).sqrt(),
    }
}

/// Scaled leading eigenvector of the spectral matrix for row ensembles.
/// Above the quaternions the power method runs on the real representation
/// directly. Ensembles without rows fall back to a random start of the same norm.
pub fn spectral_init(ens: &MeasurementEnsemble, meas: &Measurements, cfg: &SolverConfig) -> Result<SpectralInit> {
    let y = &meas.y;
    if y.len() != ens.m {
        return Err(Error::ShapeMismatch(format!("{} measurements for m = {}", y.len(), ens.m)));
    }
    let radius = init_radius(y, ens.entry_energy(), cfg.init_scale);
    if radius == 0.0 {
        return Ok(SpectralInit {
            x0: HVector::zeros(ens.level, ens.n),
            eigenvalue: 0.0,
            converged: true,
            degenerate: true,
        });
    }
    let Some(a) = ens.rows() else {
        log::warn!("spectral initialization needs explicit rows; using a random start for {}", ens.kind);
        return Ok(SpectralInit {
            x0: random_start(ens.level, ens.n, radius, cfg.init_seed),
            eigenvalue: f64::NAN,
            converged: false,
            degenerate: false,
        });
    };
    if ens.level > AlgebraLevel::Quaternion {
        // gimel is not multiplicative past the quaternions, so gimel(Y) differs from
        // sum_l y_l gimel(a_l^*)^T gimel(a_l^*); the latter is the spectral matrix of
        // the real representation and is the one used.
        return lifted_spectral_init(&RealRepresentation::new(a), y, ens.entry_energy(), cfg);
    }
    let ymat = spectral_matrix(a, y)?;
    let pair = power_method(&ymat, &cfg.power)?;
    Ok(SpectralInit {
        x0: pair.vector.scale(radius),
        eigenvalue: pair.eigenvalue,
        converged: pair.converged,
        degenerate: false,
    })
}

/// Matrix-free spectral start for any operator: leading eigenvector of
/// `v -> (1/m) L^T (y . L v)`, which equals the spectral matrix for row ensembles.
pub fn lifted_spectral_init(
    op: &dyn RealLinearOperator,
    y: &[f64],
    energy: f64,
    cfg: &SolverConfig,
) -> Result<SpectralInit> {
    let level = op.level();
    let n = op.input_len();
    let radius = init_radius(y, energy, cfg.init_scale);
    if radius == 0.0 {
        return Ok(SpectralInit {
            x0: HVector::zeros(level, n),
            eigenvalue: 0.0,
            converged: true,
            degenerate: true,
        });
    }
    let d = level.dim();
    let m = y.len() as f64;
    let mut failure = None;
    let pair = power_iteration(
        |v, out| {
            let result = (|| {
                let mut u = op.apply(&HVector::aleph_inv(v, level)?)?;
                for (block, &yl) in u.aleph_mut().chunks_exact_mut(d).zip(y) {
                    block.iter_mut().for_each(|c| *c *= yl / m);
                }
                op.adjoint(&u)
            })();
            match result {
                Ok(w) => out.copy_from_slice(w.aleph()),
                Err(e) => {
                    failure = Some(e);
                    out.iter_mut().for_each(|c| *c = 0.0);
                }
            }
        },
        n * d,
        &cfg.power,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(SpectralInit {
        x0: HVector::aleph_inv(&pair.vector, level)?.scale(radius),
        eigenvalue: pair.eigenvalue,
        converged: pair.converged,
        degenerate: false,
    })
}

fn random_start(level: AlgebraLevel, n: usize, radius: f64, seed: u64) -> HVector {
    let x = HVector::random(level, n, &mut seeded(seed));
    let norm = x.norm2();
    if norm == 0.0 {
        x
    } else {
        x.scale(radius / norm)
    }
}

fn require_rows(ens: &MeasurementEnsemble, level: Option<AlgebraLevel>, what: &str) -> Result<()> {
    if ens.rows().is_none() {
        return Err(Error::InvalidArgument(format!("{what} needs a row ensemble, got {}", ens.kind)));
    }
    if let Some(level) = level {
        if ens.level != level {
            return Err(Error::UnsupportedLevel {
                level: ens.level,
                op: "this solver",
            });
        }
    }
    Ok(())
}

fn check_lengths(op: &dyn RealLinearOperator, y: &[f64], x: &HVector) -> Result<()> {
    op.level().check_same(x.level())?;
    if y.len() != op.output_len() || x.len() != op.input_len() {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{}, got {} measurements and a signal of length {}",
            op.output_len(),
            op.input_len(),
            y.len(),
            x.len()
        )));
    }
    Ok(())
}

/// Column form of the GHR gradient of `f(x) = (1/2m) sum (|a_l^* x|^2 - y_l)^2`:
/// `(1/m) sum_l a_l (a_l^* x) (|a_l^* x|^2 - y_l)`. The real gradient of `f` is
/// twice this vector.
pub fn qwf_gradient(ens: &MeasurementEnsemble, y: &[f64], xt: &HVector) -> Result<HVector> {
    require_rows(ens, Some(AlgebraLevel::Quaternion), "qwf_gradient")?;
    row_wf_gradient(ens, y, xt)
}

fn row_wf_gradient(op: &dyn RealLinearOperator, y: &[f64], xt: &HVector) -> Result<HVector> {
    check_lengths(op, y, xt)?;
    let (_, grad) = Loss::Quadratic.evaluate(op, y, xt, 1.0 / y.len() as f64)?;
    Ok(grad.scale(0.5))
}

/// Real gradient of `(1/2m) sum (|L x|_l^2 - y_l)^2` for any real-linear operator.
pub fn real_lift_gradient(op: &dyn RealLinearOperator, y: &[f64], x: &HVector) -> Result<HVector> {
    check_lengths(op, y, x)?;
    Ok(Loss::Quadratic.evaluate(op, y, x, 1.0 / y.len() as f64)?.1)
}

/// Real gradient of the Poisson cost `(1/m) sum (|u_l|^2 - y_l log |u_l|^2)`
/// with the trimming rules of `cfg` applied.
pub fn qtwf_gradient(ens: &MeasurementEnsemble, y: &[f64], xt: &HVector, cfg: &SolverConfig) -> Result<HVector> {
    check_lengths(ens, y, xt)?;
    let loss = Loss::poisson(cfg);
    Ok(loss.evaluate(ens, y, xt, 1.0 / y.len() as f64)?.1)
}

/// Real matrix `gimel(A)` of a row ensemble as an operator on `aleph` coordinates.
#[derive(Clone, Debug)]
pub struct RealRepresentation {
    level: AlgebraLevel,
    n: usize,
    matrix: RealMatrix,
}

impl RealRepresentation {
    pub fn new(a: &HMatrix) -> Self {
        RealRepresentation {
            level: a.level(),
            n: a.cols(),
            matrix: a.gimel(),
        }
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.matrix
    }
}

impl RealLinearOperator for RealRepresentation {
    fn level(&self) -> AlgebraLevel {
        self.level
    }

    fn input_len(&self) -> usize {
        self.n
    }

    fn output_len(&self) -> usize {
        self.matrix.rows() / self.level.dim()
    }

    fn apply(&self, x: &HVector) -> Result<HVector> {
        HVector::aleph_inv(&self.matrix.matvec(x.aleph()), self.level)
    }

    fn adjoint(&self, v: &HVector) -> Result<HVector> {
        HVector::aleph_inv(&self.matrix.transpose_matvec(v.aleph()), self.level)
    }
}

/// Real gradient of `sum_l 1/2 (|gimel(a_l^*) aleph(x)|^2 - y_l)^2`, i.e.
/// `2 sum_l r_l gimel(a_l^*)^T gimel(a_l^*) aleph(x)`.
pub fn owf_gradient(ens: &MeasurementEnsemble, y: &[f64], x: &HVector) -> Result<Vec<f64>> {
    require_rows(ens, Some(AlgebraLevel::Octonion), "owf_gradient")?;
    let rep = RealRepresentation::new(ens.rows().expect("checked"));
    check_lengths(&rep, y, x)?;
    Ok(Loss::Quadratic.evaluate(&rep, y, x, 1.0)?.1.into_aleph())
}

#[derive(Clone, Copy, Debug)]
enum Loss {
    /// `c/2 sum (|u|^2 - y)^2`.
    Quadratic,
    /// `c sum (|u|^2 - y - y log(|u|^2 / y))`; equals the Poisson cost up to a constant.
    Poisson {
        lower: f64,
        upper: f64,
        residual_trim: Option<f64>,
    },
}

impl Loss {
    fn poisson(cfg: &SolverConfig) -> Self {
        Loss::Poisson {
            lower: cfg.lower_quantile,
            upper: cfg.upper_quantile,
            residual_trim: cfg.residual_trim,
        }
    }

    fn cost_from(&self, u: &HVector, y: &[f64], c: f64) -> f64 {
        let t = intensities(u);
        match self {
            Loss::Quadratic => 0.5 * c * t.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            Loss::Poisson { .. } => c * t.iter().zip(y).map(|(&a, &b)| poisson_term(a, b)).sum::<f64>(),
        }
    }

    fn cost(&self, op: &dyn RealLinearOperator, y: &[f64], x: &HVector, c: f64) -> Result<f64> {
        Ok(self.cost_from(&op.apply(x)?, y, c))
    }

    /// Cost and real gradient at `x`.
    fn evaluate(&self, op: &dyn RealLinearOperator, y: &[f64], x: &HVector, c: f64) -> Result<(f64, HVector)> {
        let mut u = op.apply(x)?;
        let cost = self.cost_from(&u, y, c);
        let d = x.level().dim();
        let t = intensities(&u);
        let weights: Vec<f64> = match self {
            Loss::Quadratic => t.iter().zip(y).map(|(a, b)| 2.0 * c * (a - b)).collect(),
            Loss::Poisson {
                lower,
                upper,
                residual_trim,
            } => poisson_weights(&t, y, *lower, *upper, *residual_trim, c),
        };
        for (block, w) in u.aleph_mut().chunks_exact_mut(d).zip(&weights) {
            block.iter_mut().for_each(|v| *v *= w);
        }
        Ok((cost, op.adjoint(&u)?))
    }
}

fn poisson_term(t: f64, y: f64) -> f64 {
    if y <= 0.0 {
        t
    } else if t <= 0.0 {
        f64::INFINITY
    } else {
        t - y - y * (t / y).ln()
    }
}

/// Per-measurement gradient weights `2c (1 - y/|u|^2)` with trimmed terms set to zero.
fn poisson_weights(t: &[f64], y: &[f64], lower: f64, upper: f64, residual_trim: Option<f64>, c: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = t.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let (lo, hi) = (quantile(&sorted, lower), quantile(&sorted, upper));
    let keep_all = lower <= 0.0 && upper >= 1.0;
    let residual_cap = residual_trim.map(|k| {
        let mean = t.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / t.len().max(1) as f64;
        k * mean
    });
    t.iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            if ti <= 0.0 {
                return 0.0;
            }
            if !keep_all && (ti < lo || ti > hi) {
                return 0.0;
            }
            if let Some(cap) = residual_cap {
                if (ti - yi).abs() > cap {
                    return 0.0;
                }
            }
            2.0 * c * (1.0 - yi / ti)
        })
        .collect()
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

struct Descent<'a> {
    op: &'a dyn RealLinearOperator,
    y: &'a [f64],
    loss: Loss,
    /// Multiplier `c` on the summed cost.
    weight: f64,
    /// Step length applied to the real gradient.
    step: f64,
    project_pure: bool,
}

impl Descent<'_> {
    fn project(&self, x: HVector) -> HVector {
        if self.project_pure {
            x.pure_part()
        } else {
            x
        }
    }

    fn run(&self, x0: HVector, cfg: &SolverConfig, truth: Option<&HVector>) -> Result<SolverRun> {
        let floor = cfg.cost_floor * mean(self.y).powi(2);
        let mut x = self.project(x0);
        let mut costs = Vec::with_capacity(cfg.max_iters + 1);
        let mut trace = Vec::new();
        let mut stop = StopReason::MaxIters;
        let mut iterations = 0;
        let (mut cost, mut grad) = self.loss.evaluate(self.op, self.y, &x, self.weight)?;
        loop {
            if !cost.is_finite() || !x.is_finite() {
                return Err(Error::NonFinite { iteration: iterations });
            }
            costs.push(cost);
            if cfg.record_trace {
                trace.push(TraceRow {
                    iteration: iterations,
                    cost,
                    distance: truth.map(|t| distance(t, &x)).transpose()?,
                    grad_norm: grad.norm2(),
                });
            }
            if cost <= floor {
                stop = StopReason::CostFloor;
                break;
            }
            let k = costs.len() - 1;
            if k >= cfg.stall_window {
                let before = costs[k - cfg.stall_window];
                if (before - cost).abs() <= cfg.stall_tol * before.abs() {
                    stop = StopReason::Stalled;
                    break;
                }
            }
            if iterations >= cfg.max_iters {
                break;
            }
            let next = match cfg.schedule {
                StepSchedule::ConstantOverNormSq => {
                    let ramp = if cfg.warmup == 0 {
                        1.0
                    } else {
                        1.0 - (-((iterations + 1) as f64) / cfg.warmup as f64).exp()
                    };
                    self.project(x.sub(&grad.scale(self.step * ramp))?)
                }
                StepSchedule::Backtracking => match self.backtrack(&x, cost, &grad)? {
                    Some(next) => next,
                    None => {
                        stop = StopReason::LineSearchFailed;
                        break;
                    }
                },
            };
            x = next;
            iterations += 1;
            (cost, grad) = self.loss.evaluate(self.op, self.y, &x, self.weight)?;
        }
        let converged = matches!(stop, StopReason::CostFloor | StopReason::Stalled);
        Ok(SolverRun {
            estimate: x,
            trace,
            iterations,
            converged,
            stop,
            final_cost: cost,
        })
    }

    fn backtrack(&self, x: &HVector, cost: f64, grad: &HVector) -> Result<Option<HVector>> {
        let g2 = grad.norm2_sq();
        if g2 == 0.0 {
            return Ok(None);
        }
        let mut t = self.step;
        for _ in 0..ARMIJO_MAX_HALVINGS {
            let cand = self.project(x.sub(&grad.scale(t))?);
            let c = self.loss.cost(self.op, self.y, &cand, self.weight)?;
            let decrease = if self.project_pure {
                // Projected step: require descent relative to the actual displacement.
                let delta = x.sub(&cand)?;
                ARMIJO_SLOPE * dot(grad.aleph(), delta.aleph())
            } else {
                ARMIJO_SLOPE * t * g2
            };
            if c <= cost - decrease {
                return Ok(Some(cand));
            }
            t *= ARMIJO_CONTRACTION;
        }
        Ok(None)
    }
}

fn mean(y: &[f64]) -> f64 {
    if y.is_empty() {
        0.0
    } else {
        y.iter().sum::<f64>() / y.len() as f64
    }
}

fn zero_run(level: AlgebraLevel, n: usize) -> SolverRun {
    SolverRun {
        estimate: HVector::zeros(level, n),
        trace: Vec::new(),
        iterations: 0,
        converged: true,
        stop: StopReason::ZeroData,
        final_cost: 0.0,
    }
}

fn starting_point(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
) -> Result<Option<HVector>> {
    let x0 = match &cfg.init {
        InitMethod::Provided(x) => {
            check_lengths(ens, &meas.y, x)?;
            x.clone()
        }
        InitMethod::Random => {
            let r = init_radius(&meas.y, ens.entry_energy(), cfg.init_scale);
            if r == 0.0 {
                return Ok(None);
            }
            random_start(ens.level, ens.n, r, cfg.init_seed)
        }
        InitMethod::Spectral => {
            let init = if ens.rows().is_some() {
                spectral_init(ens, meas, cfg)?
            } else {
                lifted_spectral_init(ens, &meas.y, ens.entry_energy(), cfg)?
            };
            if init.degenerate {
                return Ok(None);
            }
            init.x0
        }
    };
    Ok(Some(if cfg.pure_quaternion { x0.pure_part() } else { x0 }))
}

/// Step on the real gradient of the quadratic cost `(c/2) sum r^2` giving the
/// update `x - (eta0 / (e^2 |x0|^2)) * (half real gradient)` for `c = 1/m`.
fn quadratic_step(eta0: f64, energy: f64, x0: &HVector, c_times_m: f64) -> f64 {
    let n2 = x0.norm2_sq().max(f64::MIN_POSITIVE);
    0.5 * eta0 / (energy * energy * n2 * c_times_m)
}

/// Quaternion Wirtinger flow on a quaternion row ensemble.
pub fn qwf_solve(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
    truth: Option<&HVector>,
) -> Result<SolverRun> {
    require_rows(ens, Some(AlgebraLevel::Quaternion), "qwf")?;
    row_wf_solve(ens, meas, cfg, truth)
}

fn row_wf_solve(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
    truth: Option<&HVector>,
) -> Result<SolverRun> {
    cfg.validate()?;
    let Some(x0) = starting_point(ens, meas, cfg)? else {
        return Ok(zero_run(ens.level, ens.n));
    };
    let descent = Descent {
        op: ens,
        y: &meas.y,
        loss: Loss::Quadratic,
        weight: 1.0 / ens.m as f64,
        step: quadratic_step(cfg.step, ens.entry_energy(), &x0, 1.0),
        project_pure: cfg.pure_quaternion,
    };
    descent.run(x0, cfg, truth)
}

/// Truncated Poisson Wirtinger flow on a quaternion row ensemble.
pub fn qtwf_solve(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
    truth: Option<&HVector>,
) -> Result<SolverRun> {
    require_rows(ens, Some(AlgebraLevel::Quaternion), "qtwf")?;
    cfg.validate()?;
    if meas.y.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidArgument("Poisson cost needs nonnegative intensities".into()));
    }
    let Some(x0) = starting_point(ens, meas, cfg)? else {
        return Ok(zero_run(ens.level, ens.n));
    };
    let descent = Descent {
        op: ens,
        y: &meas.y,
        loss: Loss::poisson(cfg),
        weight: 1.0 / ens.m as f64,
        step: POISSON_STEP_FACTOR * cfg.step / ens.entry_energy(),
        project_pure: cfg.pure_quaternion,
    };
    descent.run(x0, cfg, truth)
}

/// Ratio between the Poisson and quadratic step lengths at equal `step`.
const POISSON_STEP_FACTOR: f64 = 1.0;

/// Octonion Wirtinger flow on the real representation `gimel(A)`.
pub fn owf_solve(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
    truth: Option<&HVector>,
) -> Result<SolverRun> {
    require_rows(ens, Some(AlgebraLevel::Octonion), "owf")?;
    cfg.validate()?;
    let Some(x0) = starting_point(ens, meas, cfg)? else {
        return Ok(zero_run(ens.level, ens.n));
    };
    let rep = RealRepresentation::new(ens.rows().expect("checked"));
    let descent = Descent {
        op: &rep,
        y: &meas.y,
        loss: Loss::Quadratic,
        weight: 1.0,
        step: quadratic_step(cfg.step, ens.entry_energy(), &x0, ens.m as f64),
        project_pure: false,
    };
    descent.run(x0, cfg, truth)
}

/// Wirtinger flow on `aleph` coordinates for any ensemble, including the
/// structured operators without explicit rows. The adjoint is validated first.
pub fn real_lift_solve(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
    truth: Option<&HVector>,
) -> Result<SolverRun> {
    cfg.validate()?;
    crate::models::validate_adjoint(ens, 2, cfg.init_seed ^ 0xad70, 1e-10)?;
    let Some(x0) = starting_point(ens, meas, cfg)? else {
        return Ok(zero_run(ens.level, ens.n));
    };
    let descent = Descent {
        op: ens,
        y: &meas.y,
        loss: Loss::Quadratic,
        weight: 1.0 / ens.m as f64,
        step: quadratic_step(cfg.step, ens.entry_energy(), &x0, 1.0),
        project_pure: cfg.pure_quaternion,
    };
    descent.run(x0, cfg, truth)
}

/// Standard complex Wirtinger flow; the reference the quaternion solvers are compared against.
pub fn complex_wf_baseline(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
    truth: Option<&HVector>,
) -> Result<SolverRun> {
    require_rows(ens, Some(AlgebraLevel::Complex), "complex WF")?;
    row_wf_solve(ens, meas, cfg, truth)
}

/// Row-ensemble Wirtinger flow at any level up to quaternions (real WF at level 1).
pub fn wf_solve(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
    truth: Option<&HVector>,
) -> Result<SolverRun> {
    require_rows(ens, None, "WF")?;
    row_wf_solve(ens, meas, cfg, truth)
}

/// Dispatches on `cfg.algorithm`.
pub fn solve(
    ens: &MeasurementEnsemble,
    meas: &Measurements,
    cfg: &SolverConfig,
    truth: Option<&HVector>,
) -> Result<SolverRun> {
    match cfg.algorithm {
        Algorithm::Qwf => qwf_solve(ens, meas, cfg, truth),
        Algorithm::Qtwf => qtwf_solve(ens, meas, cfg, truth),
        Algorithm::Owf => owf_solve(ens, meas, cfg, truth),
        Algorithm::RealLiftWf => real_lift_solve(ens, meas, cfg, truth),
        Algorithm::ComplexWfBaseline => complex_wf_baseline(ens, meas, cfg, truth),
    }
}

/// Zeroes every scalar part.
pub fn project_pure_quaternion(xt: &HVector) -> Result<HVector> {
    xt.level().check_same(AlgebraLevel::Quaternion)?;
    Ok(xt.pure_part())
}

/// Real coefficients of a quaternion signal laid out as a complex signal of length `4n`.
pub fn concatenate_as_complex(x: &HVector) -> HVector {
    let data: Vec<f64> = x.aleph().iter().flat_map(|&v| [v, 0.0]).collect();
    HVector::aleph_inv(&data, AlgebraLevel::Complex).expect("even length")
}

/// Inverse of [`concatenate_as_complex`] after removing the global phase that best
/// aligns `z` with `reference` (itself a concatenated signal).
pub fn split_from_complex(z: &HVector, reference: &HVector, level: AlgebraLevel) -> Result<HVector> {
    z.level().check_same(AlgebraLevel::Complex)?;
    let s = crate::linalg::inner(z, reference)?;
    let w = s.sign().unwrap_or_else(|_| HyperNum::one(AlgebraLevel::Complex));
    let aligned = z.right_mul(&w)?;
    let real: Vec<f64> = aligned.aleph().chunks_exact(2).map(|c| c[0]).collect();
    HVector::aleph_inv(&real, level)
}

/// Central-difference realization of the GHR conjugate derivative
/// `df/dq^{mu*} = 1/4 (f_a + f_b i^mu + f_c j^mu + f_d k^mu)` with
/// `i^mu = mu i mu^-1`, entrywise over a quaternion vector.
pub fn ghr_conj_derivative<F>(f: F, x: &HVector, mu: &HyperNum, h: f64) -> Result<HVector>
where
    F: Fn(&HVector) -> f64,
{
    ghr_partial(f, x, mu, h, 1.0)
}

/// The non-conjugate GHR derivative `df/dq^mu = 1/4 (f_a - f_b i^mu - f_c j^mu - f_d k^mu)`.
pub fn ghr_derivative<F>(f: F, x: &HVector, mu: &HyperNum, h: f64) -> Result<HVector>
where
    F: Fn(&HVector) -> f64,
{
    ghr_partial(f, x, mu, h, -1.0)
}

fn ghr_partial<F>(f: F, x: &HVector, mu: &HyperNum, h: f64, sign: f64) -> Result<HVector>
where
    F: Fn(&HVector) -> f64,
{
    let q = AlgebraLevel::Quaternion;
    x.level().check_same(q)?;
    let rotated: Vec<HyperNum> = (1..4)
        .map(|u| HyperNum::unit(q, u).rotate(mu))
        .collect::<Result<_>>()?;
    let partials = central_differences(&f, x, h);
    let mut out = HVector::zeros(q, x.len());
    for j in 0..x.len() {
        let p = &partials[j * 4..(j + 1) * 4];
        let mut v = HyperNum::scalar(q, p[0]);
        for (u, r) in rotated.iter().enumerate() {
            v += r.scale(sign * p[u + 1]);
        }
        out.set(j, v.scale(0.25));
    }
    Ok(out)
}

/// Central finite differences of `f` along every `aleph` coordinate.
pub fn central_differences<F>(f: &F, x: &HVector, h: f64) -> Vec<f64>
where
    F: Fn(&HVector) -> f64,
{
    let mut probe = x.clone();
    (0..x.aleph().len())
        .map(|i| {
            let orig = probe.aleph()[i];
            probe.aleph_mut()[i] = orig + h;
            let up = f(&probe);
            probe.aleph_mut()[i] = orig - h;
            let down = f(&probe);
            probe.aleph_mut()[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Quadratic WF cost `(1/2m) sum (|L x|^2 - y)^2`.
pub fn quadratic_cost(op: &dyn RealLinearOperator, y: &[f64], x: &HVector) -> Result<f64> {
    check_lengths(op, y, x)?;
    Loss::Quadratic.cost(op, y, x, 1.0 / y.len() as f64)
}

/// OWF cost `sum 1/2 (|gimel(a^*) aleph(x)|^2 - y)^2`.
pub fn owf_cost(ens: &MeasurementEnsemble, y: &[f64], x: &HVector) -> Result<f64> {
    require_rows(ens, Some(AlgebraLevel::Octonion), "owf_cost")?;
    check_lengths(ens, y, x)?;
    Loss::Quadratic.cost(ens, y, x, 1.0)
}

/// Poisson cost `(1/m) sum (|u|^2 - y - y log(|u|^2/y))`.
pub fn poisson_cost(op: &dyn RealLinearOperator, y: &[f64], x: &HVector) -> Result<f64> {
    check_lengths(op, y, x)?;
    let loss = Loss::Poisson {
        lower: 0.0,
        upper: 1.0,
        residual_trim: None,
    };
    loss.cost(op, y, x, 1.0 / y.len() as f64)
}
