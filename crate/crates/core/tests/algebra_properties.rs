use hpr_core::algebra::{find_zero_divisor, search_zero_divisor, HyperNum, IDENTITY_TOL};
use hpr_core::AlgebraLevel;
use proptest::prelude::*;

fn num(level: AlgebraLevel) -> impl Strategy<Value = HyperNum> {
    prop::collection::vec(-10.0f64..10.0, level.dim()).prop_map(move |c| HyperNum::new(level, &c).unwrap())
}

fn close(a: &HyperNum, b: &HyperNum, scale: f64) -> bool {
    (*a - *b).modulus() <= IDENTITY_TOL * scale.max(1.0)
}

proptest! {
    #[test]
    fn norm_is_multiplicative_through_octonions(level in prop::sample::select(vec![
        AlgebraLevel::Real, AlgebraLevel::Complex, AlgebraLevel::Quaternion, AlgebraLevel::Octonion,
    ]), seed in any::<u64>()) {
        let mut rng = hpr_core::rng::seeded(seed);
        let x = HyperNum::random(level, &mut rng);
        let y = HyperNum::random(level, &mut rng);
        let lhs = (x * y).modulus();
        let rhs = x.modulus() * y.modulus();
        prop_assert!((lhs - rhs).abs() <= IDENTITY_TOL * rhs.max(1.0));
    }

    #[test]
    fn conjugation_reverses_products_at_every_level(x in num(AlgebraLevel::Sedenion), y in num(AlgebraLevel::Sedenion)) {
        let lhs = (x * y).conj();
        let rhs = y.conj() * x.conj();
        prop_assert!(close(&lhs, &rhs, x.modulus() * y.modulus()));
    }

    #[test]
    fn quaternions_associate(x in num(AlgebraLevel::Quaternion), y in num(AlgebraLevel::Quaternion), z in num(AlgebraLevel::Quaternion)) {
        let scale = x.modulus() * y.modulus() * z.modulus();
        prop_assert!(close(&((x * y) * z), &(x * (y * z)), scale));
    }

    #[test]
    fn octonions_are_alternative_and_moufang(x in num(AlgebraLevel::Octonion), y in num(AlgebraLevel::Octonion), z in num(AlgebraLevel::Octonion)) {
        let s2 = x.modulus() * x.modulus() * y.modulus();
        prop_assert!(close(&((y * x) * x), &(y * (x * x)), s2));
        prop_assert!(close(&((x * x) * y), &(x * (x * y)), s2));
        let s3 = z.modulus() * z.modulus() * x.modulus() * y.modulus();
        prop_assert!(close(&(z * (x * (z * y))), &(((z * x) * z) * y), s3));
    }

    #[test]
    fn inverse_round_trips_in_division_algebras(level in prop::sample::select(vec![
        AlgebraLevel::Complex, AlgebraLevel::Quaternion, AlgebraLevel::Octonion,
    ]), seed in any::<u64>()) {
        let x = HyperNum::random(level, &mut hpr_core::rng::seeded(seed));
        let inv = x.inverse().unwrap();
        prop_assert!(close(&(x * inv), &HyperNum::one(level), 1.0));
        prop_assert!(close(&(inv * x), &HyperNum::one(level), 1.0));
    }

    #[test]
    fn sign_has_unit_modulus(x in num(AlgebraLevel::Octonion)) {
        prop_assume!(x.modulus() > 1e-6);
        prop_assert!((x.sign().unwrap().modulus() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn sedenion_zero_divisor_pair_is_exact() {
    let (u, v) = find_zero_divisor(AlgebraLevel::Sedenion).unwrap();
    assert!(u.modulus() > 0.0 && v.modulus() > 0.0);
    assert!((u * v).modulus() < 1e-12);
}

#[test]
fn octonions_have_no_basis_zero_divisors() {
    assert!(search_zero_divisor(AlgebraLevel::Octonion).is_none());
}

#[test]
fn hamilton_rules_hold() {
    let [i, j, k] = [1, 2, 3].map(|u| HyperNum::unit(AlgebraLevel::Quaternion, u));
    let minus_one = HyperNum::scalar(AlgebraLevel::Quaternion, -1.0);
    assert_eq!(i * j, k);
    assert_eq!(j * k, i);
    assert_eq!(k * i, j);
    assert_eq!(i * j * k, minus_one);
}
