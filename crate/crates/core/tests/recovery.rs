use hpr_core::models::{
    distance, forward, make_ensemble, relative_distance, EnsembleKind, GroundTruth, Measurements,
};
use hpr_core::rng::seeded;
use hpr_core::solvers::{
    central_differences, complex_wf_baseline, concatenate_as_complex, qtwf_gradient, qtwf_solve, qwf_solve,
    real_lift_gradient, real_lift_solve, spectral_init, split_from_complex, quadratic_cost, Algorithm, InitMethod,
    SolverConfig,
};
use hpr_core::transforms::WaveletFamily;
use hpr_core::models::MeasurementEnsemble;
use hpr_core::{AlgebraLevel, HVector};
use rand::Rng;

const Q: AlgebraLevel = AlgebraLevel::Quaternion;

fn gaussian(level: AlgebraLevel, n: usize, m: usize, seed: u64) -> (MeasurementEnsemble, HVector, Measurements) {
    let ens = make_ensemble(EnsembleKind::GaussianRows, level, n, m, 0, seed).unwrap();
    let x = GroundTruth::random(level, n, seed + 1000).x;
    let y = forward(&ens, &x).unwrap();
    (ens, x, y)
}

/// Diverged runs count as infinitely far.
fn final_distance(x: &HVector, run: hpr_core::Result<hpr_core::solvers::SolverRun>) -> f64 {
    run.map(|r| distance(x, &r.estimate).unwrap()).unwrap_or(f64::INFINITY)
}

fn quiet(alg: Algorithm) -> SolverConfig {
    SolverConfig {
        record_trace: false,
        ..SolverConfig::new(alg)
    }
}

#[test]
fn spectral_start_is_close_with_many_measurements() {
    let mut rel: Vec<f64> = (0..20)
        .map(|seed| {
            let (ens, x, y) = gaussian(Q, 20, 1000, seed);
            let init = spectral_init(&ens, &y, &SolverConfig::default()).unwrap();
            relative_distance(&x, &init.x0).unwrap()
        })
        .collect();
    rel.sort_by(f64::total_cmp);
    // One seed in twenty lands just above one half.
    assert!(rel[10] < 0.5, "median {}", rel[10]);
    assert!(rel[18] < 0.5, "{rel:?}");
    assert!(rel[19] < 0.55, "{rel:?}");
}

#[test]
fn full_quantile_window_is_the_untrimmed_gradient() {
    let (ens, _, y) = gaussian(Q, 5, 40, 2);
    let xt = HVector::random(Q, 5, &mut seeded(3));
    let plain = SolverConfig {
        lower_quantile: 0.0,
        upper_quantile: 1.0,
        residual_trim: None,
        ..SolverConfig::new(Algorithm::Qtwf)
    };
    let g = qtwf_gradient(&ens, &y.y, &xt, &plain).unwrap();
    let fd = central_differences(&|v: &HVector| hpr_core::solvers::poisson_cost(&ens, &y.y, v).unwrap(), &xt, 1e-6);
    let err: f64 = g.aleph().iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(err < 1e-5 * g.norm2());
}

#[test]
fn truncated_flow_is_stationary_at_truth() {
    let (ens, x, y) = gaussian(Q, 6, 60, 4);
    let g = qtwf_gradient(&ens, &y.y, &x, &SolverConfig::new(Algorithm::Qtwf)).unwrap();
    assert!(g.norm2() < 1e-10);
}

#[test]
fn truncated_flow_resists_outliers() {
    let mut wins = 0;
    for seed in 0..20 {
        let (ens, x, mut y) = gaussian(Q, 50, 600, seed);
        let mean = y.mean();
        let mut rng = seeded(seed + 5000);
        for v in y.y.iter_mut() {
            if rng.random::<f64>() < 0.05 {
                *v += 10.0 * mean * (1.0 + rng.random::<f64>());
            }
        }
        let plain = qwf_solve(&ens, &y, &quiet(Algorithm::Qwf), None)
            .map(|r| relative_distance(&x, &r.estimate).unwrap())
            .unwrap_or(f64::INFINITY);
        let trimmed = qtwf_solve(&ens, &y, &quiet(Algorithm::Qtwf), None)
            .map(|r| relative_distance(&x, &r.estimate).unwrap())
            .unwrap_or(f64::INFINITY);
        if trimmed < plain {
            wins += 1;
        }
    }
    assert!(wins >= 15, "truncated flow better on {wins}/20 seeds");
}

#[test]
fn pure_projection_helps_pure_signals() {
    let mut wins = 0;
    for seed in 0..20 {
        let ens = make_ensemble(EnsembleKind::GaussianRows, Q, 50, 400, 0, seed).unwrap();
        let x = GroundTruth::random_pure(50, seed + 1000).x;
        let y = forward(&ens, &x).unwrap();
        let plain = quiet(Algorithm::Qwf);
        let pure = SolverConfig {
            pure_quaternion: true,
            ..plain.clone()
        };
        let d_plain = final_distance(&x, qwf_solve(&ens, &y, &plain, None));
        let d_pure = final_distance(&x, qwf_solve(&ens, &y, &pure, None));
        if d_pure < d_plain {
            wins += 1;
        }
    }
    assert!(wins >= 12, "projection better on {wins}/20 seeds");
}

#[test]
fn complex_flow_recovers_complex_signals() {
    let (ens, x, y) = gaussian(AlgebraLevel::Complex, 64, 640, 9);
    let run = complex_wf_baseline(&ens, &y, &quiet(Algorithm::ComplexWfBaseline), None).unwrap();
    assert!(distance(&x, &run.estimate).unwrap() < 1e-5);
}

#[test]
fn complex_flow_of_zero_data_is_zero() {
    let ens = make_ensemble(EnsembleKind::GaussianRows, AlgebraLevel::Complex, 8, 40, 0, 1).unwrap();
    let run = complex_wf_baseline(&ens, &Measurements::noiseless(vec![0.0; 40]), &quiet(Algorithm::ComplexWfBaseline), None)
        .unwrap();
    assert_eq!(run.estimate.norm2(), 0.0);
}

#[test]
fn quaternion_flow_beats_concatenated_baseline_at_matched_count() {
    let (n, m) = (25, 200);
    let (mut qwf_ok, mut base_ok) = (0, 0);
    for seed in 0..20 {
        let (ens, x, y) = gaussian(Q, n, m, seed);
        if final_distance(&x, qwf_solve(&ens, &y, &quiet(Algorithm::Qwf), None)) < 1e-5 * x.norm2() {
            qwf_ok += 1;
        }
        let z = concatenate_as_complex(&x);
        let cens = make_ensemble(EnsembleKind::GaussianRows, AlgebraLevel::Complex, 4 * n, m, 0, seed + 77).unwrap();
        let cy = forward(&cens, &z).unwrap();
        if let Ok(crun) = complex_wf_baseline(&cens, &cy, &quiet(Algorithm::ComplexWfBaseline), None) {
            let back = split_from_complex(&crun.estimate, &z, Q).unwrap();
            if relative_distance(&x, &back).unwrap() < 1e-5 {
                base_ok += 1;
            }
        }
    }
    assert!(qwf_ok >= base_ok, "qwf {qwf_ok} vs baseline {base_ok}");
    assert!(qwf_ok >= 18);
}

#[test]
fn lifted_gradient_matches_finite_differences() {
    for kind in [EnsembleKind::CodedFourierTwoSided, EnsembleKind::Stft, EnsembleKind::Wavelet] {
        let n = if kind == EnsembleKind::CodedFourierTwoSided { 4 } else { 8 };
        let ens = make_ensemble(kind, Q, n, 3, 8, 21).unwrap();
        let x = HVector::random(Q, n, &mut seeded(22));
        let y = forward(&ens, &x).unwrap();
        let xt = HVector::random(Q, n, &mut seeded(23));
        let g = real_lift_gradient(&ens, &y.y, &xt).unwrap();
        let fd = central_differences(&|v: &HVector| quadratic_cost(&ens, &y.y, v).unwrap(), &xt, 1e-6);
        let err: f64 = g.aleph().iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-5 * g.norm2(), "{kind}: {err:e}");
    }
}

#[test]
fn coded_fourier_recovery_majority() {
    let mut ok = 0;
    for seed in 0..20 {
        let ens = make_ensemble(EnsembleKind::CodedFourierTwoSided, Q, 64, 10, 8, seed).unwrap();
        let x = GroundTruth::random(Q, 64, seed + 1000).x;
        let y = forward(&ens, &x).unwrap();
        let run = real_lift_solve(&ens, &y, &quiet(Algorithm::RealLiftWf), None).unwrap();
        if relative_distance(&x, &run.estimate).unwrap() < 1e-5 {
            ok += 1;
        }
    }
    assert!(ok > 10, "{ok}/20");
}

#[test]
fn delta_wavelet_only_sees_moduli() {
    let fam = WaveletFamily::delta(6).unwrap();
    let ens = MeasurementEnsemble::wavelet(fam, 0);
    let x = HVector::random(Q, 6, &mut seeded(1));
    let y = forward(&ens, &x).unwrap();
    let mut rng = seeded(2);
    let mut other = x.clone();
    for i in 0..6 {
        let w = hpr_core::HyperNum::random_unit(Q, &mut rng);
        other.set(i, w * x.get(i));
    }
    assert!(quadratic_cost(&ens, &y.y, &other).unwrap() < 1e-24);
    assert!(distance(&x, &other).unwrap() > 1e-3);
}

#[test]
fn random_start_is_honoured_by_lifted_flow() {
    let ens = make_ensemble(EnsembleKind::CodedFourierTwoSided, Q, 64, 10, 8, 3).unwrap();
    let x = GroundTruth::random(Q, 64, 1003).x;
    let y = forward(&ens, &x).unwrap();
    let cfg = SolverConfig {
        init: InitMethod::Random,
        init_seed: 3,
        ..quiet(Algorithm::RealLiftWf)
    };
    let run = real_lift_solve(&ens, &y, &cfg, None).unwrap();
    assert!(relative_distance(&x, &run.estimate).unwrap() < 1e-5);
}

#[test]
fn mean_spectral_matrix_is_identity_plus_rank_one() {
    use hpr_core::linalg::inner;
    use hpr_core::solvers::spectral_matrix;
    let n = 3;
    let (ens, x, meas) = gaussian(Q, n, 40_000, 71);
    let x = x.scale(1.0 / x.norm2());
    let y: Vec<f64> = meas.y.iter().map(|v| v / meas.mean()).collect();
    let big = spectral_matrix(ens.rows().unwrap(), &y).unwrap();
    let yx = big.matvec(&x).unwrap();
    let along = inner(&x, &yx).unwrap().scalar_part();
    assert!(yx.sub(&x.scale(along)).unwrap().norm2() < 0.05 * along);
    let mut rng = seeded(72);
    let mut across = Vec::new();
    for _ in 0..4 {
        let v = HVector::random(Q, n, &mut rng);
        let v = v.sub(&x.right_mul(&inner(&x, &v).unwrap()).unwrap()).unwrap();
        let v = v.scale(1.0 / v.norm2());
        let yv = big.matvec(&v).unwrap();
        let lambda = inner(&v, &yv).unwrap().scalar_part();
        assert!(yv.sub(&v.scale(lambda)).unwrap().norm2() < 0.05 * lambda);
        across.push(lambda);
    }
    let spread = across.iter().fold(0.0f64, |a, b| a.max((b - across[0]).abs()));
    assert!(spread < 0.05 * across[0]);
    assert!(along > 1.2 * across[0], "along {along} across {:?}", across);
}
