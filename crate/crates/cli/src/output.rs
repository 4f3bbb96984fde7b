//! CSV writing with a provenance header, plus the small statistics the
//! property checks need.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use crate::spec::ExperimentSpec;

/// Multiplication conventions baked into every result.
pub const CONVENTIONS: &str = "quaternion=hamilton(ij=k);octonion=left-regular-gimel;qdft=unitary";

pub fn provenance(spec: &ExperimentSpec) -> String {
    format!(
        "# hpr {}\n# experiment: {}\n# spec_sha256: {}\n# seed: {}\n# conventions: {}\n",
        env!("CARGO_PKG_VERSION"),
        spec.kind(),
        spec.hash(),
        spec.seed,
        CONVENTIONS
    )
}

/// A CSV document with a fixed header row.
#[derive(Clone, Debug)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self, preamble: &str) -> String {
        let mut s = String::from(preamble);
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path, preamble: &str) -> Result<()> {
        write_file(path, &self.to_csv(preamble))
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Fixed-precision scientific notation; `inf`/`nan` spelled out.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Compact form for grid coordinates: integers without a fraction.
pub fn coord(v: f64) -> String {
    if v.is_infinite() {
        return num(v);
    }
    let mut s = String::new();
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(s, "{}", v as i64).unwrap();
    } else {
        write!(s, "{v}").unwrap();
    }
    s
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// Least-squares non-decreasing fit (pool adjacent violators).
pub fn isotonic_increasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (b, nb) = blocks[blocks.len() - 1];
            let (a, na) = blocks[blocks.len() - 2];
            if a <= b {
                break;
            }
            blocks.pop();
            let merged = (a * na as f64 + b * nb as f64) / (na + nb) as f64;
            *blocks.last_mut().unwrap() = (merged, na + nb);
        }
    }
    blocks.into_iter().flat_map(|(v, n)| std::iter::repeat_n(v, n)).collect()
}

pub fn isotonic_decreasing(values: &[f64]) -> Vec<f64> {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    isotonic_increasing(&neg).into_iter().map(|v| -v).collect()
}

/// Largest distance between the data and its monotone fit.
pub fn monotone_violation(values: &[f64], increasing: bool) -> f64 {
    let fit = if increasing {
        isotonic_increasing(values)
    } else {
        isotonic_decreasing(values)
    };
    values.iter().zip(&fit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
