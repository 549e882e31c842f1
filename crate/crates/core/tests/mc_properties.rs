use binpath::mc::sample_variance;
use binpath::{
    derive_crr, estimate_basic, estimate_partitioned, estimate_partitioned_equal, estimate_shared, repeat,
    value_exact_serial, Estimate, MarketInputs, McConfig, PayoffKind, Result, ValuationRequest,
};

type Estimator = fn(&ValuationRequest, &McConfig) -> Result<Estimate>;

fn setting(kind: PayoffKind, n: u32) -> ValuationRequest {
    let inputs = MarketInputs::new(20.0, 100.0, 0.06, 3.0, 1.0, n).unwrap();
    let params = derive_crr(&inputs).unwrap();
    ValuationRequest::new(inputs, params, kind)
}

fn values(estimates: &[Estimate]) -> Vec<f64> {
    estimates.iter().map(|e| e.value).collect()
}

#[test]
fn estimators_are_unbiased() {
    let estimators: [(Estimator, u64); 4] = [
        (estimate_basic, 1),
        (estimate_partitioned, 8),
        (estimate_partitioned_equal, 8),
        (estimate_shared, 8),
    ];
    for kind in PayoffKind::ALL {
        let req = setting(kind, 12);
        let exact = value_exact_serial(&req).unwrap();
        for (i, (f, m)) in estimators.iter().enumerate() {
            let cfg = McConfig::new(256, *m, 1000 + i as u64).with_reps(2000);
            let study = repeat(&cfg, |c| f(&req, c)).unwrap();
            let se = (study.empirical_variance / 2000.0).sqrt();
            let gap = (study.mean_estimate - exact).abs();
            assert!(gap <= 4.0 * se.max(1e-12), "{kind} estimator {i}: gap {gap} se {se}");
        }
    }
}

#[test]
fn variance_estimates_are_calibrated() {
    let req = setting(PayoffKind::AsianPut, 12);
    let estimators: [(Estimator, u64); 2] = [(estimate_basic, 1), (estimate_partitioned, 16)];
    for (f, m) in estimators {
        let cfg = McConfig::new(4096, m, 77).with_reps(2000);
        let study = repeat(&cfg, |c| f(&req, c)).unwrap();
        let gap = (study.mean_variance - study.empirical_variance).abs() / study.empirical_variance;
        assert!(
            gap < 0.20,
            "M={m}: reported {} empirical {}",
            study.mean_variance,
            study.empirical_variance
        );
    }
}

#[test]
fn stratification_never_increases_variance() {
    let req = setting(PayoffKind::FixedLookbackPut, 12);
    let reps = 1000;
    let basic = repeat(&McConfig::new(512, 1, 5).with_reps(reps), |c| estimate_basic(&req, c)).unwrap();
    let vb = sample_variance(&values(&basic.estimates));
    for m in [2u64, 8, 32] {
        let pmc = repeat(&McConfig::new(512, m, 5).with_reps(reps), |c| {
            estimate_partitioned(&req, c)
        })
        .unwrap();
        let vp = sample_variance(&values(&pmc.estimates));
        // Noise allowance of 15% for the ratio of two 1000-rep sample variances.
        assert!(vp <= 1.15 * vb, "M={m}: {vp} vs {vb}");
    }
}

#[test]
fn single_stratum_matches_basic_study() {
    let req = setting(PayoffKind::AsianPut, 10);
    let cfg = McConfig::new(300, 1, 9).with_reps(50);
    let basic = repeat(&cfg, |c| estimate_basic(&req, c)).unwrap();
    let pmc = repeat(&cfg, |c| estimate_partitioned(&req, c)).unwrap();
    assert_eq!(basic.mean_estimate, pmc.mean_estimate);
    assert_eq!(basic.mean_variance, pmc.mean_variance);
    assert_eq!(basic.empirical_variance, pmc.empirical_variance);
}
