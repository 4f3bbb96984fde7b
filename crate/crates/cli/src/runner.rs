//! Loads a spec, runs the requested experiment and writes its outputs.

use std::path::{Path, PathBuf};

use anyhow::Result;

use crate::algebra_check::run_algebra_check;
use crate::harness::run_sweep;
use crate::imaging::run_recover_image;
use crate::spec::{ExperimentKind, ExperimentSpec, Overrides};

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    /// One line per violated expected property; empty when all hold.
    pub violations: Vec<String>,
    /// Short human-readable summary for the terminal.
    pub summary: String,
}

pub fn load_spec(kind: ExperimentKind, path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentSpec> {
    let spec = match path {
        Some(p) => ExperimentSpec::load(p)?,
        None => ExperimentSpec::new(kind),
    };
    spec.resolve(kind, overrides)
}

pub fn execute(spec: &ExperimentSpec) -> Result<Outcome> {
    let out_dir = spec.out_dir();
    std::fs::create_dir_all(&out_dir)?;
    let (violations, summary) = match spec.kind() {
        ExperimentKind::PhaseTransition | ExperimentKind::NoiseSweep | ExperimentKind::CodingSweep => {
            let report = run_sweep(spec)?;
            report.write(&out_dir)?;
            let summary = report.summary_table().to_csv("");
            (report.violations, summary)
        }
        ExperimentKind::RecoverImage => {
            let (_, report) = run_recover_image(spec)?;
            report.write(&out_dir)?;
            let summary = report.summary_table().to_csv("");
            (report.violations, summary)
        }
        ExperimentKind::AlgebraCheck => {
            let report = run_algebra_check(spec);
            report.write(&out_dir)?;
            let summary = report.render();
            (report.violations, summary)
        }
    };
    Ok(Outcome {
        out_dir,
        violations,
        summary,
    })
}
