//! Structural property matrix of the Cayley-Dickson levels.
//!
//! Each property is decided by an exhaustive scan over basis elements (or
//! two-unit sums where single units are too symmetric to expose a failure)
//! and, when the scan finds no counterexample, confirmed on random samples at
//! [`IDENTITY_TOL`] relative tolerance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{search_zero_divisor, AlgebraLevel, HyperNum, IDENTITY_TOL};

#[derive(Clone, Debug)]
pub struct PropertyCheck {
    pub holds: bool,
    /// Human-readable counterexample (or the zero-divisor witness).
    pub witness: Option<String>,
    /// Random samples evaluated when no basis counterexample existed.
    pub samples: usize,
}

impl PropertyCheck {
    fn holds(samples: usize) -> Self {
        PropertyCheck {
            holds: true,
            witness: None,
            samples,
        }
    }

    fn fails(witness: String) -> Self {
        PropertyCheck {
            holds: false,
            witness: Some(witness),
            samples: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StructureReport {
    pub level: AlgebraLevel,
    pub commutative: PropertyCheck,
    pub associative: PropertyCheck,
    pub alternative: PropertyCheck,
    /// `holds` means a zero divisor pair was found.
    pub zero_divisors: PropertyCheck,
    pub norm_multiplicative: PropertyCheck,
}

impl StructureReport {
    pub fn division_algebra(&self) -> bool {
        !self.zero_divisors.holds && self.norm_multiplicative.holds
    }

    /// Pattern as `[commutative, associative, alternative, division, zero divisors, norm]`.
    pub fn pattern(&self) -> [bool; 6] {
        [
            self.commutative.holds,
            self.associative.holds,
            self.alternative.holds,
            self.division_algebra(),
            self.zero_divisors.holds,
            self.norm_multiplicative.holds,
        ]
    }
}

/// Reference pattern for the real Cayley-Dickson rows, same column order as [`StructureReport::pattern`].
pub fn expected_pattern(level: AlgebraLevel) -> [bool; 6] {
    match level {
        AlgebraLevel::Real | AlgebraLevel::Complex => [true, true, true, true, false, true],
        AlgebraLevel::Quaternion => [false, true, true, true, false, true],
        AlgebraLevel::Octonion => [false, false, true, true, false, true],
        AlgebraLevel::Sedenion => [false, false, false, false, true, false],
    }
}

pub const COLUMN_NAMES: [&str; 6] = [
    "commutative",
    "associative",
    "alternative",
    "division",
    "zero_divisors",
    "norm_multiplicative",
];

fn units(level: AlgebraLevel) -> Vec<HyperNum> {
    (0..level.dim()).map(|i| HyperNum::unit(level, i)).collect()
}

fn two_unit_sums(level: AlgebraLevel) -> Vec<HyperNum> {
    let dim = level.dim();
    let mut out = Vec::new();
    for i in 0..dim {
        for j in (i + 1)..dim {
            out.push(HyperNum::unit(level, i) + HyperNum::unit(level, j));
        }
    }
    out
}

fn check_commutative(level: AlgebraLevel, samples: usize, rng: &mut ChaCha8Rng) -> PropertyCheck {
    let basis = units(level);
    for x in &basis {
        for y in &basis {
            if *x * *y != *y * *x {
                return PropertyCheck::fails(format!("{x} * {y} != {y} * {x}"));
            }
        }
    }
    for _ in 0..samples {
        let x = HyperNum::random(level, rng);
        let y = HyperNum::random(level, rng);
        let scale = x.modulus() * y.modulus();
        if !(x * y).approx_eq(&(y * x), IDENTITY_TOL * scale) {
            return PropertyCheck::fails(format!("random pair {x:?}, {y:?}"));
        }
    }
    PropertyCheck::holds(samples)
}

fn check_associative(level: AlgebraLevel, samples: usize, rng: &mut ChaCha8Rng) -> PropertyCheck {
    let basis = units(level);
    for x in &basis {
        for y in &basis {
            for z in &basis {
                if (*x * *y) * *z != *x * (*y * *z) {
                    return PropertyCheck::fails(format!("({x} * {y}) * {z} != {x} * ({y} * {z})"));
                }
            }
        }
    }
    for _ in 0..samples {
        let x = HyperNum::random(level, rng);
        let y = HyperNum::random(level, rng);
        let z = HyperNum::random(level, rng);
        let scale = x.modulus() * y.modulus() * z.modulus();
        if !((x * y) * z).approx_eq(&(x * (y * z)), IDENTITY_TOL * scale) {
            return PropertyCheck::fails(format!("random triple {x:?}, {y:?}, {z:?}"));
        }
    }
    PropertyCheck::holds(samples)
}

fn check_alternative(level: AlgebraLevel, samples: usize, rng: &mut ChaCha8Rng) -> PropertyCheck {
    // Single units always satisfy (yx)x = y(xx); two-unit sums expose failures.
    let xs = two_unit_sums(level);
    let ys = units(level);
    for x in &xs {
        for y in &ys {
            if (*y * *x) * *x != *y * (*x * *x) {
                return PropertyCheck::fails(format!(
                    "y = {y}, x = {x}: (y x) x != y (x x)"
                ));
            }
        }
    }
    for _ in 0..samples {
        let x = HyperNum::random(level, rng);
        let y = HyperNum::random(level, rng);
        let scale = x.modulus_sq() * y.modulus();
        if !((y * x) * x).approx_eq(&(y * (x * x)), IDENTITY_TOL * scale) {
            return PropertyCheck::fails(format!("random pair {x:?}, {y:?}"));
        }
    }
    PropertyCheck::holds(samples)
}

fn check_norm(
    level: AlgebraLevel,
    zero_divisor: Option<(HyperNum, HyperNum)>,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> PropertyCheck {
    if let Some((u, v)) = zero_divisor {
        return PropertyCheck::fails(format!(
            "|u v| = {:e} but |u||v| = {}",
            (u * v).modulus(),
            u.modulus() * v.modulus()
        ));
    }
    for _ in 0..samples {
        let x = HyperNum::random(level, rng);
        let y = HyperNum::random(level, rng);
        let prod = x.modulus() * y.modulus();
        if ((x * y).modulus() - prod).abs() > IDENTITY_TOL * prod {
            return PropertyCheck::fails(format!("random pair {x:?}, {y:?}"));
        }
    }
    PropertyCheck::holds(samples)
}

/// Runs every structural check on one level with `samples` random draws per property.
pub fn analyze(level: AlgebraLevel, samples: usize, seed: u64) -> StructureReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (level.dim() as u64));
    let commutative = check_commutative(level, samples, &mut rng);
    let associative = check_associative(level, samples, &mut rng);
    let alternative = check_alternative(level, samples, &mut rng);
    let zd = search_zero_divisor(level);
    let zero_divisors = match zd {
        Some((u, v)) => PropertyCheck {
            holds: true,
            witness: Some(format!("({u}) * ({v}) = 0")),
            samples: 0,
        },
        None => PropertyCheck {
            holds: false,
            witness: None,
            samples: 0,
        },
    };
    let norm_multiplicative = check_norm(level, zd, samples, &mut rng);
    StructureReport {
        level,
        commutative,
        associative,
        alternative,
        zero_divisors,
        norm_multiplicative,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_row() {
        let r = analyze(AlgebraLevel::Quaternion, 1000, 1);
        assert!(!r.commutative.holds);
        assert!(r.associative.holds);
        assert_eq!(r.pattern(), expected_pattern(AlgebraLevel::Quaternion));
    }

    #[test]
    fn octonion_row_has_non_associative_witness() {
        let r = analyze(AlgebraLevel::Octonion, 1000, 1);
        assert!(r.associative.witness.is_some());
        assert!(r.alternative.holds);
        assert_eq!(r.pattern(), expected_pattern(AlgebraLevel::Octonion));
    }

    #[test]
    fn sedenion_row() {
        let r = analyze(AlgebraLevel::Sedenion, 200, 1);
        assert!(!r.alternative.holds);
        assert!(r.zero_divisors.holds);
        assert_eq!(r.pattern(), expected_pattern(AlgebraLevel::Sedenion));
    }

    #[test]
    fn complex_row() {
        let r = analyze(AlgebraLevel::Complex, 1000, 1);
        assert_eq!(r.pattern(), [true, true, true, true, false, true]);
    }
}
