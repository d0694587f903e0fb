use gtseq_core::estimators::{
    mle_one, mle_two, scan_properness, ub_one_misclass, ub_one_perfect, ub_two_perfect, ub_two_perfect_exact,
    EstimatorSpec,
};
use gtseq_core::exact::{self, int, ratio, Rational};
use gtseq_core::model::{
    det3, eta_affine, eta_mixture, eta_two, h_one, h_two, identifiable, indep_misclass, theta_one, theta_two,
    IndepErrorParams, TestAccuracy,
};
use gtseq_core::series::{build_g_one, AffinePower, PowerProduct, SeriesTarget};
use num_traits::Zero;
use proptest::prelude::*;

fn accuracy_grid() -> Vec<TestAccuracy> {
    let mut out = vec![TestAccuracy::PERFECT];
    for pi0 in [0.8, 0.9, 0.95, 0.99] {
        for pi1 in [0.75, 0.9, 0.97] {
            out.push(TestAccuracy::new(pi0, pi1).unwrap());
        }
    }
    out
}

#[test]
fn one_trait_round_trip_grid() {
    let mut checked = 0;
    for acc in accuracy_grid() {
        for k in [1, 2, 3, 5, 10, 20, 64] {
            for i in 0..40 {
                let p = i as f64 / 40.0;
                let theta = theta_one(p, k, &acc);
                // Inverting loses about eps / (k * radicand); keep the grid
                // where the radicand is at least 1e-3.
                if (acc.pi1() - theta) / acc.nu() < 1e-3 {
                    continue;
                }
                let q = h_one(theta, k, &acc).unwrap();
                assert!((q - (1.0 - p)).abs() < 1e-12, "p={p} k={k} {acc:?}: {q}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 1000);
}

#[test]
fn two_trait_round_trip_grid() {
    let mut checked = 0;
    let steps = [0.0, 0.01, 0.05, 0.1, 0.2, 0.3];
    for k in [1, 2, 5, 10] {
        for &a in &steps {
            for &b in &steps {
                for &c in &steps {
                    if a + b + c >= 1.0 {
                        continue;
                    }
                    let theta = theta_two([a, b, c], k);
                    if theta.c00 < 1e-3 {
                        continue;
                    }
                    let sum: f64 = theta.as_array().into_iter().sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                    assert!(theta.as_array().iter().all(|v| **v >= -1e-12));
                    let p = h_two(theta.observed(), k).unwrap();
                    for (got, want) in p.observed().iter().zip([a, b, c]) {
                        assert!((got - want).abs() < 1e-12, "k={k} p=({a},{b},{c}): {p:?}");
                    }
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 200);
}

#[test]
fn k1_maps_are_identities() {
    let acc = TestAccuracy::PERFECT;
    for p in [0.0, 0.1, 0.5, 0.9] {
        assert!((theta_one(p, 1, &acc) - p).abs() < 1e-15);
    }
    let theta = theta_two([0.1, 0.2, 0.3], 1);
    assert!((theta.c10 - 0.1).abs() < 1e-15 && (theta.c01 - 0.2).abs() < 1e-15 && (theta.c11 - 0.3).abs() < 1e-15);
}

#[test]
fn determinant_identity_exact() {
    let values = [ratio(1, 2), ratio(7, 10), ratio(9, 10), ratio(19, 20), int(1)];
    for a in &values {
        for b in &values {
            for c in &values {
                for d in &values {
                    let params = IndepErrorParams::new(
                        exact::to_f64(a),
                        exact::to_f64(b),
                        exact::to_f64(c),
                        exact::to_f64(d),
                    )
                    .unwrap();
                    let m = indep_misclass(&params);
                    let nu1: Rational = a + b - int(1);
                    let nu2: Rational = c + d - int(1);
                    let expected = (&nu1 * &nu2) * (&nu1 * &nu2);
                    let id = identifiable(&m);
                    assert_eq!(id.det_exact, expected);
                    assert_eq!(det3(&m.phi()), expected);
                    assert_eq!(id.det_exact.is_zero(), nu1.is_zero() || nu2.is_zero());
                    assert_eq!(id.identifiable, !expected.is_zero());
                }
            }
        }
    }
}

#[test]
fn counterexample_identity() {
    for c in 1..=5u32 {
        for k in 1..=6u32 {
            let e = ub_two_perfect_exact([1, 1, 0], c, k);
            let excess = &e.c00 + &e.c10 + &e.c01 - int(1);
            let kc = int((k * c) as i64);
            let expected = (int(1) / &kc) * (int(1) - (int(c as i64) + ratio(1, k as i64)) / int(c as i64 + 1));
            assert_eq!(excess, expected, "c={c} k={k}");
            if k == 1 {
                assert!(excess.is_zero());
            } else {
                assert!(excess > Rational::zero());
            }
        }
    }
    let z = ub_two_perfect([1, 1, 0], 1, 2).into_array();
    assert_eq!(z, [0.375, 0.375, 0.375, -0.125]);
}

#[test]
fn one_trait_perfect_is_proper_up_to_ten_thousand() {
    for c in [1, 2, 3, 5, 10] {
        for k in [1, 2, 3, 8, 16, 64] {
            let mut last = -1.0;
            for y in 0..=10_000 {
                let p = ub_one_perfect(y, c, k);
                assert!(p >= 0.0 && p <= 1.0, "c={c} k={k} y={y}: {p}");
                if (k, c) != (1, 1) {
                    assert!(p < 1.0, "c={c} k={k} y={y}: {p}");
                }
                assert!(p >= last);
                last = p;
            }
        }
    }
}

#[test]
fn misclassified_reduces_to_perfect() {
    for c in [1, 2, 5, 20] {
        for k in [1, 2, 4, 10] {
            for y in 0..=100 {
                let a = ub_one_misclass(y, c, k, &TestAccuracy::PERFECT).unwrap();
                let b = ub_one_perfect(y, c, k);
                assert!((a - b).abs() < 1e-12, "c={c} k={k} y={y}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn zero_positive_estimate_is_negative_for_imperfect_specificity() {
    for pi0 in [0.7, 0.8, 0.9, 0.95, 0.99] {
        for pi1 in [0.85, 0.95] {
            let acc = TestAccuracy::new(pi0, pi1).unwrap();
            let (e0, e1) = acc.exact();
            let nu = &e0 + &e1 - int(1);
            // (pi1/nu)^(1/k) > 1 iff pi1 > nu iff pi0 < 1
            assert!(e1 > nu);
            for k in [1, 2, 5] {
                let p = ub_one_misclass(0, 1, k, &acc).unwrap();
                let expected = 1.0 - (pi1 / (pi0 + pi1 - 1.0)).powf(1.0 / k as f64);
                assert!(p < 0.0 && (p - expected).abs() < 1e-12);
            }
        }
    }
    let acc = TestAccuracy::new(0.9, 0.95).unwrap();
    let v = ub_one_misclass(0, 1, 2, &acc).unwrap();
    assert!((v - (1.0 - (0.95f64 / 0.85).sqrt())).abs() < 1e-15);
    assert!((v + 0.05719).abs() < 1e-5);
}

#[test]
fn scanner_examples() {
    let spec = EstimatorSpec::UbOnePerfect { c: 1, k: 2 };
    assert!(scan_properness(&spec, 1000).unwrap().is_empty());

    let spec = EstimatorSpec::UbTwoPerfect { c: 1, k: 2 };
    let found = scan_properness(&spec, 2).unwrap();
    let sum = found
        .iter()
        .find(|v| v.point == [1, 1, 0] && v.component == "p00+p10+p01")
        .unwrap();
    assert_eq!(sum.value, 1.125);
}

#[test]
fn mle_baselines_are_proper() {
    let acc = TestAccuracy::new(0.95, 0.9).unwrap();
    for y in 0..200 {
        for (c, k) in [(1, 2), (5, 10), (20, 5)] {
            let m = mle_one(y, c, k, &acc);
            assert!((0.0..=1.0).contains(&m.value));
        }
    }
    for z in gtseq_core::lattice::points_up_to(3, 15) {
        let m = mle_two([z[0], z[1], z[2]], 2, 3);
        let cells = m.value.as_array();
        assert!(cells.iter().all(|v| (0.0..=1.0).contains(*v)));
        assert!((m.value.sum() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn expectation_identity_is_exact_at_polynomial_level() {
    // sum_{y<=N} f(y) C(c+y-1, y) (1-t)^c t^y agrees with (1-t)^(1/k) through degree N.
    const N: usize = 20;
    for c in [1u32, 2, 4] {
        for k in [1u32, 2, 3, 7] {
            let mut total = vec![Rational::zero(); N + 1];
            for y in 0..=N as u32 {
                let q = int(1) - gtseq_core::estimators::ub_one_perfect_exact(y, c, k);
                let w = exact::binom((c + y - 1) as u64, y as u64) * q;
                // (1-t)^c t^y
                for j in 0..=c as usize {
                    let deg = y as usize + j;
                    if deg > N {
                        break;
                    }
                    let sign = if j % 2 == 0 { int(1) } else { int(-1) };
                    total[deg] += &w * exact::binom(c as u64, j as u64) * sign;
                }
            }
            let q_series = SeriesTarget {
                dim: 1,
                terms: vec![PowerProduct::new(
                    exact::Surd::one(),
                    vec![AffinePower::new(int(1), vec![int(-1)], ratio(1, k as i64)).unwrap()],
                )],
            }
            .expand::<Rational>(N)
            .unwrap()
            .as_series()
            .unwrap();
            for (deg, got) in total.iter().enumerate() {
                assert_eq!(*got, q_series.coeff(&[deg as u32]).unwrap(), "c={c} k={k} deg={deg}");
            }
        }
    }
}

#[test]
fn truncation_is_stable() {
    let (e0, e1) = TestAccuracy::new(0.98, 0.95).unwrap().exact();
    let g = build_g_one(3, 2, &e0, &e1).unwrap();
    let short = g.expand::<Rational>(10).unwrap();
    let long = g.expand::<Rational>(25).unwrap();
    for ((r1, s1), (r2, s2)) in short.parts().iter().zip(long.parts()) {
        assert_eq!(r1, r2);
        assert_eq!(*s1, s2.truncate(10));
    }
}

fn prob() -> impl Strategy<Value = f64> {
    (0.5f64..=1.0).prop_filter("nonzero", |v| *v > 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn eta_paths_agree_and_stay_on_simplex(
        a in prob(), b in prob(), c in prob(), d in prob(),
        w in proptest::array::uniform4(0.0f64..1.0),
        k in 1u32..12,
    ) {
        let m = indep_misclass(&IndepErrorParams::new(a, b, c, d).unwrap());
        let s: f64 = w.iter().sum::<f64>() + 1e-9;
        let p = [w[1] / s, w[2] / s, w[3] / s];
        prop_assume!(p.iter().sum::<f64>() < 1.0);
        let theta = theta_two(p, k);
        let eta = eta_two(&m, &theta).unwrap();
        let mix = eta_mixture(m.cond_f64(), &theta);
        let aff = eta_affine(&m.pi00_f64(), &m.phi_f64(), &theta.observed());
        for ((x, y), z) in eta.as_array().iter().zip(mix.as_array()).zip(aff.as_array()) {
            prop_assert!((**x - *y).abs() < 1e-12);
            prop_assert!((**x - *z).abs() < 1e-12);
            prop_assert!(**x >= -1e-15);
        }
        prop_assert!((eta.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn determinant_identity_float(a in prob(), b in prob(), c in prob(), d in prob()) {
        let m = indep_misclass(&IndepErrorParams::new(a, b, c, d).unwrap());
        let nu = (a + b - 1.0) * (c + d - 1.0);
        let id = identifiable(&m);
        prop_assert!((id.det - nu * nu).abs() < 1e-12);
        prop_assert!((det3(&m.phi_f64()) - nu * nu).abs() < 1e-12);
    }

    #[test]
    fn two_trait_estimate_sums_to_one(z in proptest::array::uniform3(0u32..40), c in 1u32..8, k in 1u32..12) {
        let e = ub_two_perfect_exact(z, c, k);
        prop_assert_eq!(&e.c00 + &e.c10 + &e.c01 + &e.c11, int(1));
        prop_assert!((ub_two_perfect(z, c, k).sum() - 1.0).abs() < 1e-12);
    }
}
