//! Monte-Carlo sweeps: phase transitions, noise sweeps and coding sweeps.
//!
//! Every trial derives its seeds from `(master seed, m/n index, trial)`, so
//! the same truth, ensemble and starting point appear in every sweep that
//! shares a sample-complexity grid. Noise seeds additionally depend on the SNR
//! index. Trials run on a rayon pool and are collected in (cell, trial) order,
//! which keeps the CSV output independent of the thread count.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use hpr_core::models::{add_noise, forward, make_ensemble, relative_distance, EnsembleKind, GroundTruth};
use hpr_core::rng::derive_seed;
use hpr_core::solvers::{concatenate_as_complex, solve, split_from_complex, Algorithm, SolverConfig};
use hpr_core::AlgebraLevel;

use crate::output::{coord, median, monotone_violation, num, provenance, Table};
use crate::spec::{ExperimentKind, ExperimentSpec};

/// A phase-transition curve may dip by this many binomial standard deviations
/// (at p = 1/2) before it counts as non-monotone.
pub const MONOTONE_SIGMAS: f64 = 2.0;

/// Allowed rise of the median error between SNR levels, in decades.
pub const NOISE_LOG_TOLERANCE: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub ratio_index: usize,
    pub ratio: f64,
    pub snr_index: Option<usize>,
    pub snr_db: Option<f64>,
    pub code: Option<usize>,
}

impl Cell {
    fn coords(&self, kind: ExperimentKind) -> Vec<String> {
        match kind {
            ExperimentKind::NoiseSweep => vec![coord(self.ratio), coord(self.snr_db.unwrap_or(f64::INFINITY))],
            ExperimentKind::CodingSweep => vec![self.code.unwrap_or(0).to_string(), coord(self.ratio)],
            _ => vec![coord(self.ratio)],
        }
    }
}

fn coord_names(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::NoiseSweep => &["ratio", "snr_db"],
        ExperimentKind::CodingSweep => &["code_size", "ratio"],
        _ => &["ratio"],
    }
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub cell: usize,
    pub trial: usize,
    pub seed: u64,
    pub distance: f64,
    pub relative_distance: f64,
    pub success: bool,
    pub iterations: usize,
    /// Stop reason, or the solver error for aborted runs.
    pub stop: String,
    pub wall_seconds: f64,
    pub trace: Option<String>,
}

#[derive(Clone, Debug)]
pub struct CellSummary {
    pub cell: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_relative_distance: f64,
    pub mean_iterations: f64,
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub spec: ExperimentSpec,
    pub cells: Vec<Cell>,
    pub trials: Vec<TrialResult>,
    pub summaries: Vec<CellSummary>,
    /// Failed acceptance properties, human readable.
    pub violations: Vec<String>,
}

pub fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let ratios = spec.grid.ratios.iter().copied().enumerate();
    match spec.kind() {
        ExperimentKind::NoiseSweep => ratios
            .flat_map(|(ri, ratio)| {
                spec.grid.snr_db.iter().enumerate().map(move |(si, &snr)| Cell {
                    ratio_index: ri,
                    ratio,
                    snr_index: Some(si),
                    snr_db: Some(snr),
                    code: None,
                })
            })
            .collect(),
        ExperimentKind::CodingSweep => spec
            .grid
            .codes
            .iter()
            .flat_map(|&d| {
                spec.grid.ratios.iter().enumerate().map(move |(ri, &ratio)| Cell {
                    ratio_index: ri,
                    ratio,
                    snr_index: None,
                    snr_db: None,
                    code: Some(d),
                })
            })
            .collect(),
        _ => ratios
            .map(|(ri, ratio)| Cell {
                ratio_index: ri,
                ratio,
                snr_index: None,
                snr_db: None,
                code: None,
            })
            .collect(),
    }
}

/// The `m_or_l` argument of `make_ensemble` for a grid value.
pub fn measurement_param(kind: EnsembleKind, n: usize, ratio: f64) -> usize {
    let v = if kind.is_row_based() && kind != EnsembleKind::CodedFourierRow {
        ratio * n as f64
    } else {
        ratio
    };
    (v.round() as usize).max(1)
}

struct Setup {
    level: AlgebraLevel,
    kind: EnsembleKind,
    n: usize,
    cfg: SolverConfig,
}

fn setup(spec: &ExperimentSpec) -> Result<Setup> {
    let level = spec.level()?;
    let kind = spec.ensemble_kind()?;
    if spec.ensemble.pure && level != AlgebraLevel::Quaternion {
        bail!("pure ground truths exist only for quaternions");
    }
    let cfg = spec.solver_config(level, kind)?;
    if cfg.algorithm == Algorithm::ComplexWfBaseline && !(kind.is_row_based() && level >= AlgebraLevel::Complex) {
        bail!("the complex baseline needs a row ensemble");
    }
    Ok(Setup {
        level,
        kind,
        n: spec.ensemble.n,
        cfg,
    })
}

fn run_trial(spec: &ExperimentSpec, s: &Setup, cell: &Cell, cell_index: usize, trial: usize) -> Result<TrialResult> {
    let base = derive_seed(spec.seed, &[cell.ratio_index as u64, trial as u64]);
    let truth_seed = derive_seed(base, &[1]);
    let x = if spec.ensemble.pure {
        GroundTruth::random_pure(s.n, truth_seed).x
    } else {
        GroundTruth::random(s.level, s.n, truth_seed).x
    };
    let d = cell.code.unwrap_or(spec.ensemble.code_size);
    let m_or_l = measurement_param(s.kind, s.n, cell.ratio);
    let concatenated = s.cfg.algorithm == Algorithm::ComplexWfBaseline && s.level != AlgebraLevel::Complex;
    let (ens_level, ens_n, signal) = if concatenated {
        let z = concatenate_as_complex(&x);
        (AlgebraLevel::Complex, z.len(), z)
    } else {
        (s.level, s.n, x.clone())
    };
    let ens = make_ensemble(s.kind, ens_level, ens_n, m_or_l, d, derive_seed(base, &[0]))
        .with_context(|| format!("building the ensemble for m/n = {}", cell.ratio))?;
    let mut meas = forward(&ens, &signal)?;
    if let (Some(snr), Some(si)) = (cell.snr_db, cell.snr_index) {
        meas = add_noise(&meas, snr, derive_seed(base, &[2, si as u64]))?;
    }
    let mut cfg = s.cfg.clone();
    cfg.init_seed = derive_seed(base, &[3]);
    let start = Instant::now();
    let outcome = solve(&ens, &meas, &cfg, spec.trace.then_some(&signal));
    let wall_seconds = start.elapsed().as_secs_f64();
    let result = match outcome {
        Ok(run) => {
            let estimate = if concatenated {
                split_from_complex(&run.estimate, &signal, s.level)?
            } else {
                run.estimate.clone()
            };
            let relative = relative_distance(&x, &estimate).unwrap_or(f64::NAN);
            TrialResult {
                cell: cell_index,
                trial,
                seed: base,
                distance: relative * x.norm2(),
                relative_distance: relative,
                success: relative < cfg.success_tol,
                iterations: run.iterations,
                stop: format!("{:?}", run.stop),
                wall_seconds,
                trace: spec.trace.then(|| run.trace_csv()),
            }
        }
        Err(e) => TrialResult {
            cell: cell_index,
            trial,
            seed: base,
            distance: f64::NAN,
            relative_distance: f64::NAN,
            success: false,
            iterations: 0,
            stop: format!("error: {e}").replace(',', ";"),
            wall_seconds,
            trace: None,
        },
    };
    Ok(result)
}

/// Runs `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    Ok(builder.build()?.install(f))
}

pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepReport> {
    let kind = spec.kind();
    if !matches!(
        kind,
        ExperimentKind::PhaseTransition | ExperimentKind::NoiseSweep | ExperimentKind::CodingSweep
    ) {
        bail!("{kind} is not a sweep");
    }
    let s = setup(spec)?;
    let cells = cells(spec);
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();
    log::info!("{kind}: {} cells x {} trials", cells.len(), spec.trials);
    let results = with_pool(spec.threads, || {
        jobs.par_iter()
            .map(|&(c, t)| run_trial(spec, &s, &cells[c], c, t))
            .collect::<Vec<_>>()
    })?;
    let mut trials = results.into_iter().collect::<Result<Vec<_>>>()?;
    trials.sort_by_key(|r| (r.cell, r.trial));
    let summaries = summarize(&cells, &trials);
    let violations = check_properties(kind, spec.trials, &cells, &summaries);
    Ok(SweepReport {
        spec: spec.clone(),
        cells,
        trials,
        summaries,
        violations,
    })
}

fn summarize(cells: &[Cell], trials: &[TrialResult]) -> Vec<CellSummary> {
    (0..cells.len())
        .map(|c| {
            let rows: Vec<&TrialResult> = trials.iter().filter(|r| r.cell == c).collect();
            let successes = rows.iter().filter(|r| r.success).count();
            let rel: Vec<f64> = rows
                .iter()
                .map(|r| if r.relative_distance.is_nan() { f64::INFINITY } else { r.relative_distance })
                .collect();
            CellSummary {
                cell: c,
                trials: rows.len(),
                successes,
                success_rate: successes as f64 / rows.len().max(1) as f64,
                median_relative_distance: median(&rel),
                mean_iterations: rows.iter().map(|r| r.iterations as f64).sum::<f64>() / rows.len().max(1) as f64,
            }
        })
        .collect()
}

/// Cells sharing everything but the coordinate selected by `key`, ordered by it.
fn series<K: Fn(&Cell) -> f64, G: Fn(&Cell) -> String>(cells: &[Cell], group: G, key: K) -> Vec<(String, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        let g = group(c);
        match groups.iter_mut().find(|(name, _)| *name == g) {
            Some((_, members)) => members.push(i),
            None => groups.push((g, vec![i])),
        }
    }
    for (_, members) in &mut groups {
        members.sort_by(|&a, &b| key(&cells[a]).total_cmp(&key(&cells[b])));
    }
    groups
}

pub fn check_properties(kind: ExperimentKind, trials: usize, cells: &[Cell], summaries: &[CellSummary]) -> Vec<String> {
    let mut out = Vec::new();
    match kind {
        ExperimentKind::PhaseTransition => {
            let order = series(cells, |_| String::new(), |c| c.ratio);
            for (_, members) in order {
                let rates: Vec<f64> = members.iter().map(|&i| summaries[i].success_rate).collect();
                let tol = MONOTONE_SIGMAS * (0.25 / trials as f64).sqrt();
                let v = monotone_violation(&rates, true);
                if v > tol {
                    out.push(format!("success rate not monotone in m/n: deviation {v:.3} > {tol:.3}"));
                }
            }
        }
        ExperimentKind::NoiseSweep => {
            let order = series(cells, |c| coord(c.ratio), |c| c.snr_db.unwrap_or(f64::INFINITY));
            for (ratio, members) in order {
                let logs: Vec<f64> = members
                    .iter()
                    .map(|&i| summaries[i].median_relative_distance.max(1e-16).log10())
                    .collect();
                let v = monotone_violation(&logs, false);
                if v > NOISE_LOG_TOLERANCE {
                    out.push(format!(
                        "median error not decreasing in SNR at m/n = {ratio}: deviation {v:.2} decades"
                    ));
                }
            }
        }
        ExperimentKind::CodingSweep => {
            let order = series(cells, |c| coord(c.ratio), |c| c.code.unwrap_or(0) as f64);
            for (ratio, members) in order {
                for w in members.windows(2) {
                    let (a, b) = (&summaries[w[0]], &summaries[w[1]]);
                    if b.success_rate < a.success_rate {
                        out.push(format!(
                            "at m/n = {ratio}, d = {} succeeds less often ({}) than d = {} ({})",
                            cells[w[1]].code.unwrap_or(0),
                            b.success_rate,
                            cells[w[0]].code.unwrap_or(0),
                            a.success_rate
                        ));
                    }
                }
            }
        }
        _ => {}
    }
    out
}

impl SweepReport {
    pub fn trials_table(&self) -> Table {
        let kind = self.spec.kind();
        let mut header: Vec<&str> = coord_names(kind).to_vec();
        header.extend([
            "trial",
            "seed",
            "distance",
            "relative_distance",
            "success",
            "iterations",
            "stop",
        ]);
        let mut t = Table::new(&header);
        for r in &self.trials {
            let mut row = self.cells[r.cell].coords(kind);
            row.extend([
                r.trial.to_string(),
                r.seed.to_string(),
                num(r.distance),
                num(r.relative_distance),
                r.success.to_string(),
                r.iterations.to_string(),
                r.stop.clone(),
            ]);
            t.push(row);
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let kind = self.spec.kind();
        let mut header: Vec<&str> = coord_names(kind).to_vec();
        header.extend([
            "trials",
            "successes",
            "success_rate",
            "median_relative_distance",
            "mean_iterations",
        ]);
        let mut t = Table::new(&header);
        for s in &self.summaries {
            let mut row = self.cells[s.cell].coords(kind);
            row.extend([
                s.trials.to_string(),
                s.successes.to_string(),
                format!("{:.4}", s.success_rate),
                num(s.median_relative_distance),
                format!("{:.1}", s.mean_iterations),
            ]);
            t.push(row);
        }
        t
    }

    /// Wall-clock times live apart from the deterministic tables.
    pub fn timing_table(&self) -> Table {
        let kind = self.spec.kind();
        let mut header: Vec<&str> = coord_names(kind).to_vec();
        header.extend(["trial", "wall_seconds"]);
        let mut t = Table::new(&header);
        for r in &self.trials {
            let mut row = self.cells[r.cell].coords(kind);
            row.extend([r.trial.to_string(), format!("{:.4}", r.wall_seconds)]);
            t.push(row);
        }
        t
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let header = provenance(&self.spec);
        self.summary_table().write(&dir.join("summary.csv"), &header)?;
        self.trials_table().write(&dir.join("trials.csv"), &header)?;
        self.timing_table().write(&dir.join("timing.csv"), &header)?;
        for r in &self.trials {
            if let Some(trace) = &r.trace {
                crate::output::write_file(&dir.join(format!("trace_{}_{}.csv", r.cell, r.trial)), trace)?;
            }
        }
        Ok(())
    }

    /// Success rate per cell in cell order.
    pub fn rates(&self) -> Vec<f64> {
        self.summaries.iter().map(|s| s.success_rate).collect()
    }
}

/// Relative distances of one cell's trials, for callers inspecting a sweep.
pub fn cell_relative_distances(report: &SweepReport, cell: usize) -> Vec<f64> {
    report
        .trials
        .iter()
        .filter(|r| r.cell == cell)
        .map(|r| r.relative_distance)
        .collect()
}
