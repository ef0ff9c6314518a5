//! Structural properties of the estimators, geometry and envelopes.

mod common;

use std::f64::consts::PI;

use common::{max_rel_err, random_case};
use fmark::estimators::{
    Characteristic as C, EstimationConfig, Estimator, MeanNormalization, StatisticRequest, Weight,
};
use fmark::geometry::{pairwise_distance, Point, Topology, Window};
use fmark::inference::{label_permutation, EnvelopeOptions};
use fmark::marks::{functional_mean, integrate_over_t, FunctionalMarkSet, TimeGrid};
use fmark::simulate::{simulate_growth_marks, simulate_pattern, GrowthMode, GrowthParams, Process, SimulationSpec};
use fmark::testfn::TestFunction;
use proptest::prelude::*;

fn growth_scenario(seed: u64, mode: GrowthMode) -> (fmark::geometry::PointPattern, FunctionalMarkSet) {
    let spec = SimulationSpec {
        process: Process::Poisson { intensity: 200.0 },
        window: Window::unit_torus(),
        seed,
    };
    let p = simulate_pattern(&spec).unwrap();
    let mut g = GrowthParams::scenario(mode);
    g.initial = fmark::simulate::InitialValues::Uniform {
        lo: 0.05,
        hi: 0.15,
        seed,
    };
    let m = simulate_growth_marks(&p, &g).unwrap();
    (p, m)
}

#[test]
fn symmetric_test_functions_ignore_channel_order() {
    for seed in 0..10 {
        let case = random_case(300 + seed);
        let est = Estimator::new(&case.pattern(), &case.config()).unwrap();
        let m = case.mark_set();
        for ch in [
            C::MarkVariogram,
            C::MarkCorrelation,
            C::Differentiation,
            C::MeanProduct,
            C::CovStoyan,
            C::CovCressie,
            C::Isham,
            C::IshamConditional,
            C::Beisbart,
            C::MarkWeightedK(Weight::Test(TestFunction::Product)),
            C::MarkWeightedPcf(Weight::Test(TestFunction::HalfSquaredDiff)),
            C::TfProductDensity(TestFunction::Ratio),
        ] {
            let a = est.estimate(&m, &StatisticRequest::new(ch, 0, 1)).unwrap();
            let b = est.estimate(&m, &StatisticRequest::new(ch, 1, 0)).unwrap();
            let e = max_rel_err(&a.values, &b.values);
            assert!(e <= 1e-12, "{ch:?} seed {seed}: {e:e}");
        }
    }
}

#[test]
fn scalar_marks_reproduce_classical_characteristics() {
    // curve averages fed as T = 1 marks: the classical scalar mark variogram
    // and conditional mean product, computed directly
    let case = random_case(77);
    let pattern = case.pattern();
    let avg: Vec<Vec<f64>> = (0..2)
        .map(|c| case.marks.iter().map(|m| m[c].iter().sum::<f64>() / m[c].len() as f64).collect())
        .collect();
    let scalar = FunctionalMarkSet::from_scalars(&avg).unwrap();
    let est = Estimator::new(&pattern, &case.config()).unwrap();
    let n = case.n();
    let rho = case.rho2();
    let mut gamma = vec![0.0; case.r.len()];
    let mut prod = vec![0.0; case.r.len()];
    for (q, &r) in case.r.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let w = case.kern(case.dist(i, j) - r) * case.edge(i, j) / (2.0 * PI * r * case.area());
                    gamma[q] += w * 0.5 * (avg[0][i] - avg[0][j]).powi(2);
                    prod[q] += w * avg[0][i] * avg[0][j];
                }
            }
        }
        gamma[q] = if rho[q] > 0.0 { gamma[q] / rho[q] } else { f64::NAN };
        prod[q] = if rho[q] > 0.0 { prod[q] / rho[q] } else { f64::NAN };
    }
    let raw = est.estimate(&scalar, &StatisticRequest::new(C::MarkVariogramRaw, 0, 0)).unwrap();
    assert!(max_rel_err(&raw.values, &gamma) <= 1e-12);
    let c = est.estimate(&scalar, &StatisticRequest::new(C::MeanProduct, 0, 0)).unwrap();
    assert!(max_rel_err(&c.values, &prod) <= 1e-12);
}

#[test]
fn k_is_monotone_and_l_is_its_root() {
    for seed in 0..10 {
        let case = random_case(500 + seed);
        let est = Estimator::new(&case.pattern(), &case.config()).unwrap();
        let m = case.mark_set();
        for w in [Weight::Unit, Weight::Test(TestFunction::Product), Weight::Test(TestFunction::Ratio)] {
            let k = est.estimate(&m, &StatisticRequest::new(C::MarkWeightedK(w), 0, 1)).unwrap().values;
            let l = est.estimate(&m, &StatisticRequest::new(C::MarkWeightedL(w), 0, 1)).unwrap().values;
            assert!(k.windows(2).all(|p| p[1] >= p[0]), "K not monotone");
            assert!(k.iter().all(|v| *v >= 0.0));
            for (kv, lv) in k.iter().zip(&l) {
                assert!((lv - (kv / PI).sqrt()).abs() <= 1e-15 * lv.abs().max(1.0));
            }
            let g = est.estimate(&m, &StatisticRequest::new(C::MarkWeightedPcf(w), 0, 1)).unwrap().values;
            assert!(g.iter().all(|v| *v >= 0.0));
        }
        assert!(est.ground_density().iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn lmatrix_and_pointwise_paths_agree() {
    let (p, m) = growth_scenario(4, GrowthMode::Positive);
    let cfg = EstimationConfig {
        keep_pointwise: true,
        ..Default::default()
    };
    let est = Estimator::new(&p, &cfg).unwrap();
    let grid = m.grid();
    for ch in [
        C::MarkVariogram,
        C::MarkCorrelation,
        C::Differentiation,
        C::CovStoyan,
        C::MeanProduct,
        C::RMarkH,
        C::TfProductDensity(TestFunction::HalfSquaredDiff),
    ] {
        let c = est.estimate(&m, &StatisticRequest::new(ch, 0, 1)).unwrap();
        let pw = c.pointwise.as_ref().expect("pointwise values kept");
        let integrated: Vec<f64> = (0..c.values.len())
            .map(|r| {
                let col: Vec<f64> = pw.iter().map(|row| row[r]).collect();
                integrate_over_t(&col, grid).unwrap()
            })
            .collect();
        let e = max_rel_err(&c.values, &integrated);
        assert!(e <= 1e-12, "{ch:?}: {e:e}");
    }
    // mean normalisation per t agrees with the scalar form when the mean
    // product is constant in t
    let flat = FunctionalMarkSet::from_channels(
        TimeGrid::uniform(0.0, 1.0, 4).unwrap(),
        &[
            (0..p.len()).map(|i| vec![1.0 + (i % 3) as f64; 4]).collect(),
            (0..p.len()).map(|i| vec![2.0 + (i % 5) as f64; 4]).collect(),
        ],
    )
    .unwrap();
    let pointwise = Estimator::new(
        &p,
        &EstimationConfig {
            normalization: MeanNormalization::Pointwise,
            ..Default::default()
        },
    )
    .unwrap();
    let a = est.estimate(&flat, &StatisticRequest::new(C::MarkCorrelation, 0, 1)).unwrap();
    let b = pointwise.estimate(&flat, &StatisticRequest::new(C::MarkCorrelation, 0, 1)).unwrap();
    assert!(max_rel_err(&a.values, &b.values) <= 1e-12);
}

#[test]
fn mark_scale_equivariance() {
    let (p, m) = growth_scenario(9, GrowthMode::Negative);
    let est = Estimator::new(&p, &EstimationConfig::default()).unwrap();
    let get = |marks: &FunctionalMarkSet, ch: C| est.estimate(marks, &StatisticRequest::new(ch, 0, 1)).unwrap().values;
    for alpha in [0.37, 2.5, 1e3] {
        let only_h = m.map_channel(0, |v| alpha * v).unwrap();
        let both = only_h.map_channel(1, |v| alpha * v).unwrap();
        for ch in [C::MarkCorrelation, C::Isham, C::IshamConditional] {
            let e = max_rel_err(&get(&only_h, ch), &get(&m, ch));
            assert!(e <= 1e-12, "{ch:?} alpha {alpha}: {e:e}");
        }
        for ch in [C::Beisbart, C::Differentiation, C::MarkVariogram] {
            let e = max_rel_err(&get(&both, ch), &get(&m, ch));
            assert!(e <= 1e-12, "{ch:?} alpha {alpha}: {e:e}");
        }
        let scaled: Vec<f64> = get(&m, C::MeanProduct).iter().map(|v| alpha * v).collect();
        assert!(max_rel_err(&get(&only_h, C::MeanProduct), &scaled) <= 1e-12);
    }
}

proptest! {
    #[test]
    fn torus_metric_axioms(
        a in (0.0..1.0f64, 0.0..1.0f64),
        b in (0.0..1.0f64, 0.0..1.0f64),
        c in (0.0..1.0f64, 0.0..1.0f64),
    ) {
        let w = Window::unit_torus();
        let plane = Window::unit_square();
        let (a, b, c) = (Point::new(a.0, a.1), Point::new(b.0, b.1), Point::new(c.0, c.1));
        let d = |x, y| pairwise_distance(&w, x, y).unwrap();
        prop_assert_eq!(d(a, a), 0.0);
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-15);
        prop_assert!(d(a, b) <= pairwise_distance(&plane, a, b).unwrap() + 1e-15);
        prop_assert!(d(a, b) <= 0.5f64.sqrt() + 1e-15);
    }

    #[test]
    fn integration_is_linear(
        f in prop::collection::vec(-10.0..10.0f64, 6),
        g in prop::collection::vec(-10.0..10.0f64, 6),
        s in -3.0..3.0f64,
    ) {
        let grid = TimeGrid::new(vec![0.0, 0.1, 0.5, 0.6, 1.7, 2.0]).unwrap();
        let comb: Vec<f64> = f.iter().zip(&g).map(|(a, b)| s * a + b).collect();
        let lhs = integrate_over_t(&comb, &grid).unwrap();
        let rhs = s * integrate_over_t(&f, &grid).unwrap() + integrate_over_t(&g, &grid).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn functional_mean_commutes_with_affine_maps(
        vals in prop::collection::vec(-5.0..5.0f64, 15),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let grid = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        let m = FunctionalMarkSet::new(grid, 5, 1, vals).unwrap();
        let mapped = m.map_channel(0, |v| alpha * v + beta).unwrap();
        let a = functional_mean(&mapped, 0).unwrap();
        let b = functional_mean(&m, 0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - (alpha * y + beta)).abs() <= 1e-12);
        }
    }
}

#[test]
fn plane_and_torus_windows_differ_only_by_wrap() {
    let w = Window::new(0.0, 2.0, 0.0, 1.0, Topology::Torus).unwrap();
    let d = pairwise_distance(&w, Point::new(0.1, 0.5), Point::new(1.9, 0.5)).unwrap();
    assert!((d - 0.2).abs() < 1e-12);
    assert!(pairwise_distance(&w, Point::new(2.5, 0.5), Point::new(0.1, 0.5)).is_err());
}

#[test]
fn permutations_preserve_mark_tuples() {
    let (p, m) = growth_scenario(2, GrowthMode::Positive);
    let n = p.len();
    let key = |ms: &FunctionalMarkSet| {
        let mut rows: Vec<Vec<u64>> = (0..n)
            .map(|i| (0..2).flat_map(|c| ms.curve(i, c).iter().map(|v| v.to_bits())).collect())
            .collect();
        rows.sort();
        rows
    };
    let base = key(&m);
    for sim in 0..5 {
        let perm = label_permutation(n, 11, sim);
        assert_eq!(key(&m.permuted(&perm)), base);
    }
}

#[test]
fn envelope_bounds_are_simulated_values() {
    let (p, m) = growth_scenario(3, GrowthMode::Independent);
    let est = Estimator::new(&p, &EstimationConfig::default()).unwrap();
    let req = StatisticRequest::new(C::MarkVariogram, 0, 1);
    let opts = EnvelopeOptions {
        nsim: 39,
        k_env: 2,
        seed: 17,
    };
    let band = est.random_label_envelope(&m, &req, &opts).unwrap();
    let prep = est.prepare(&m, &req).unwrap();
    let sims: Vec<Vec<f64>> = (0..opts.nsim)
        .map(|s| {
            let perm = label_permutation(p.len(), opts.seed, s);
            est.evaluate(&m, &prep, Some(&perm)).unwrap().values
        })
        .collect();
    for r in 0..band.r.len() {
        if !band.lower[r].is_finite() {
            continue;
        }
        let col: Vec<f64> = sims.iter().map(|s| s[r]).collect();
        assert!(band.lower[r] <= band.upper[r]);
        assert!(col.contains(&band.lower[r]) && col.contains(&band.upper[r]));
        let below = col.iter().filter(|v| **v < band.lower[r]).count();
        let above = col.iter().filter(|v| **v > band.upper[r]).count();
        assert!(below < opts.k_env && above < opts.k_env);
    }
    // permuted evaluation equals estimation on explicitly permuted marks
    let perm = label_permutation(p.len(), 5, 0);
    let a = est.evaluate(&m, &prep, Some(&perm)).unwrap();
    let b = est.estimate(&m.permuted(&perm), &req).unwrap();
    assert!(max_rel_err(&a.values, &b.values) <= 1e-12);
}

#[test]
fn constant_marks_collapse_the_band() {
    let (p, _) = growth_scenario(6, GrowthMode::Independent);
    let m = FunctionalMarkSet::from_channels(
        TimeGrid::uniform(0.0, 1.0, 3).unwrap(),
        &[vec![vec![2.0; 3]; p.len()], vec![vec![3.0; 3]; p.len()]],
    )
    .unwrap();
    let est = Estimator::new(&p, &EstimationConfig::default()).unwrap();
    let opts = EnvelopeOptions {
        nsim: 19,
        k_env: 1,
        seed: 1,
    };
    for ch in [C::MarkCorrelation, C::MarkVariogram, C::Differentiation] {
        let band = est.random_label_envelope(&m, &StatisticRequest::new(ch, 0, 1), &opts).unwrap();
        for r in 0..band.r.len() {
            if band.observed[r].is_finite() {
                assert_eq!(band.lower[r], band.observed[r], "{ch:?}");
                assert_eq!(band.upper[r], band.observed[r], "{ch:?}");
            }
        }
    }
}

#[test]
fn too_few_simulations_are_rejected() {
    let (p, m) = growth_scenario(6, GrowthMode::Independent);
    let est = Estimator::new(&p, &EstimationConfig::default()).unwrap();
    let opts = EnvelopeOptions {
        nsim: 9,
        k_env: 5,
        seed: 1,
    };
    assert!(est
        .random_label_envelope(&m, &StatisticRequest::new(C::MarkCorrelation, 0, 1), &opts)
        .is_err());
}
