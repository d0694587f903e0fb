use std::sync::Arc;

use gtseq_core::estimators::{EstimatorSpec, SeriesEstimator};
use gtseq_core::model::{indep_misclass, IndepErrorParams, OneDiseaseModel, TestAccuracy, TwoDiseaseModel};
use gtseq_core::plans::{truncated_expectation, ExpectationOptions};

fn options(tol: f64) -> ExpectationOptions {
    ExpectationOptions { tol, max_total: 5000 }
}

#[test]
fn one_trait_perfect_is_unbiased() {
    for (p, k, c) in [(0.01, 2, 1), (0.1, 10, 20), (0.05, 5, 5), (0.3, 3, 2)] {
        let model = OneDiseaseModel::perfect(p, k, c).unwrap();
        let spec = EstimatorSpec::UbOnePerfect { c, k };
        let r = truncated_expectation(&spec, &[model.theta()], options(1e-12)).unwrap();
        assert!(r.converged && r.certified());
        assert!((r.values[0] - p).abs() <= 1e-8 + r.tail_bound.unwrap(), "{r:?}");
    }
}

#[test]
fn one_trait_misclassified_is_unbiased() {
    let acc = TestAccuracy::new(0.98, 0.95).unwrap();
    for (p, k, c) in [(0.01, 2, 1), (0.1, 10, 20), (0.05, 5, 5)] {
        let model = OneDiseaseModel::new(p, k, c, acc).unwrap();
        let spec = EstimatorSpec::UbOneMisclass { c, k, accuracy: acc };
        let r = truncated_expectation(&spec, &[model.theta()], options(1e-13)).unwrap();
        assert!(r.converged && !r.certified());
        assert!(r.decay_ratio.unwrap() < 1.0);
        assert!((r.values[0] - p).abs() <= 1e-6, "p={p} k={k} c={c}: {r:?}");
    }
}

#[test]
fn two_trait_perfect_is_unbiased() {
    for (p, k, c) in [([0.01, 0.02, 0.005], 2, 1), ([0.1, 0.1, 0.05], 10, 20), ([0.05, 0.02, 0.01], 5, 5)] {
        let model = TwoDiseaseModel::new(p, k, c, None).unwrap();
        let spec = EstimatorSpec::UbTwoPerfect { c, k };
        let r = truncated_expectation(&spec, &model.theta().observed(), options(1e-12)).unwrap();
        assert!(r.converged);
        let want = model.p().into_array();
        for (got, want) in r.values.iter().zip(want) {
            assert!((got - want).abs() <= 1e-8 + r.tail_bound.unwrap(), "{r:?}");
        }
    }
}

#[test]
fn two_trait_series_estimator_is_unbiased() {
    // Small c and k keep the walk short enough for the series order to
    // cover nearly all of the mass.
    let m = indep_misclass(&IndepErrorParams::new(0.98, 0.95, 0.97, 0.9).unwrap());
    let (k, c) = (2, 1);
    let model = TwoDiseaseModel::new([0.01, 0.01, 0.005], k, c, Some(m.clone())).unwrap();
    let series = SeriesEstimator::<f64>::two_disease(k, c, Some(&m), 60).unwrap();
    let spec = EstimatorSpec::UbTwoMisclassSeries(Arc::new(series));
    let eta = model.eta().unwrap().observed();
    let r = truncated_expectation(&spec, &eta, ExpectationOptions { tol: 1e-12, max_total: 60 }).unwrap();
    assert!(r.tail_mass < 1e-12, "{r:?}");
    for (got, want) in r.values.iter().zip(model.p().into_array()) {
        assert!((got - want).abs() <= 1e-6, "{r:?}");
    }
}
