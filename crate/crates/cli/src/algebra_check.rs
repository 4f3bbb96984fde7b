//! Structural property table of the five Cayley-Dickson levels, checked
//! against the known pattern.

use std::path::Path;

use anyhow::Result;

use hpr_core::structure::{analyze, expected_pattern, StructureReport, COLUMN_NAMES};
use hpr_core::AlgebraLevel;

use crate::output::{provenance, Table};
use crate::spec::ExperimentSpec;

#[derive(Clone, Debug)]
pub struct AlgebraReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<StructureReport>,
    pub violations: Vec<String>,
}

pub fn run_algebra_check(spec: &ExperimentSpec) -> AlgebraReport {
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for level in AlgebraLevel::ALL {
        let report = analyze(level, spec.algebra.samples, spec.seed);
        let expected = expected_pattern(level);
        for ((name, got), want) in COLUMN_NAMES.iter().zip(report.pattern()).zip(expected) {
            if got != want {
                violations.push(format!("{level}: {name} is {got}, expected {want}"));
            }
        }
        rows.push(report);
    }
    AlgebraReport {
        spec: spec.clone(),
        rows,
        violations,
    }
}

fn mark(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl AlgebraReport {
    pub fn table(&self) -> Table {
        let mut header = vec!["level", "dim"];
        header.extend(COLUMN_NAMES);
        header.extend(["associativity_witness", "alternativity_witness", "zero_divisor_witness"]);
        let mut t = Table::new(&header);
        for r in &self.rows {
            let mut row = vec![r.level.to_string(), r.level.dim().to_string()];
            row.extend(r.pattern().iter().map(|&b| mark(b).to_string()));
            for check in [&r.associative, &r.alternative, &r.zero_divisors] {
                row.push(check.witness.clone().unwrap_or_default().replace(',', ";"));
            }
            t.push(row);
        }
        t
    }

    /// Fixed-width text rendering for the terminal.
    pub fn render(&self) -> String {
        let mut s = format!("{:<11}{:>4}", "level", "dim");
        for name in COLUMN_NAMES {
            s.push_str(&format!("  {name:>19}"));
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!("{:<11}{:>4}", r.level.to_string(), r.level.dim()));
            for b in r.pattern() {
                s.push_str(&format!("  {:>19}", mark(b)));
            }
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.table().write(&dir.join("summary.csv"), &provenance(&self.spec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::ExperimentKind;

    #[test]
    fn all_levels_match_the_reference_pattern() {
        let mut spec = ExperimentSpec::new(ExperimentKind::AlgebraCheck);
        spec.algebra.samples = 200;
        let report = run_algebra_check(&spec);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert_eq!(report.table().len(), 5);
        assert!(report.render().contains("sedenion"));
    }
}
