//! Statistical behavior of the estimators under the binomial model, checked
//! with seeded Monte-Carlo runs sized so the assertions hold with wide
//! margins.

use disparity_core::{
    bootstrap_estimators, draw_replicate, meta_metric, replicate_study, rng::substream,
    standard_scenarios, BootstrapConfig, EntropyAlpha, MetaMetricKind, Scenario,
    VarianceEstimator,
};

fn equally_spaced(lower: f64, upper: f64, k: usize) -> Vec<f64> {
    let step = (upper - lower) / (k - 1) as f64;
    (0..k).map(|i| lower + step * i as f64).collect()
}

#[derive(Default)]
struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std_error(&self) -> f64 {
        (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
    }
}

/// Every plug-in summary of observed rates overshoots its true value when
/// groups are noisy, visibly so at n = 50 per group.
#[test]
fn plug_in_summaries_are_biased_upward() {
    let k = 12;
    let mu = equally_spaced(0.3, 0.9, k);
    let scenario = Scenario::new("bias_check", mu.clone(), vec![50; k]).unwrap();
    let kinds = MetaMetricKind::standard(EntropyAlpha::new(2.0).unwrap());
    let truths: Vec<f64> = kinds
        .iter()
        .map(|&kind| meta_metric(&mu, kind).unwrap().value)
        .collect();

    let mut acc: Vec<MeanAccumulator> = kinds.iter().map(|_| MeanAccumulator::default()).collect();
    for rep in 0..1500u64 {
        let mut rng = substream(2024, rep);
        let data = draw_replicate(&scenario, &mut rng);
        let rates = data.rates();
        for (j, &kind) in kinds.iter().enumerate() {
            // The smallest true rate is 0.3 on n = 50; a zero draw has
            // probability under 2e-8 and would fail loudly here.
            acc[j].push(meta_metric(&rates, kind).unwrap().value - truths[j]);
        }
    }

    for (j, kind) in kinds.iter().enumerate() {
        let bias = acc[j].mean;
        let se = acc[j].std_error();
        assert!(
            bias > 3.0 * se,
            "{kind}: mean bias {bias:.3e} not positive beyond 3 se ({se:.3e})"
        );
    }
}

/// The observed between-group variance decomposes into true variance plus
/// mean sampling variance, and the corrected estimator recovers the truth.
#[test]
fn variance_decomposition_holds_in_expectation() {
    let k = 20;
    let mu = equally_spaced(0.2, 0.8, k);
    let sizes: Vec<u64> = (0..k).map(|i| 30 + 7 * i as u64).collect();
    let scenario = Scenario::new("decomposition", mu, sizes).unwrap();
    let study = replicate_study(&scenario, 1500, 91).unwrap();

    let expected_uncorrected = study.true_variance + study.analytic_correction;
    assert!(
        (study.mean_uncorrected - expected_uncorrected).abs() < 4.0 * study.se_uncorrected,
        "uncorrected mean {:.6e} vs analytic {:.6e} (se {:.2e})",
        study.mean_uncorrected,
        expected_uncorrected,
        study.se_uncorrected,
    );
    assert!(
        (study.mean_corrected_raw - study.true_variance).abs() < 4.0 * study.se_corrected_raw,
        "corrected mean {:.6e} vs truth {:.6e} (se {:.2e})",
        study.mean_corrected_raw,
        study.true_variance,
        study.se_corrected_raw,
    );
    // With truth well above zero, truncation almost never binds.
    assert!((study.mean_corrected - study.mean_corrected_raw).abs() < 1e-12);
}

/// One draw from a population with perfectly equal group rates: the naive
/// interval confidently reports disparity that is not there, while the
/// double-corrected interval reaches zero.
#[test]
fn equal_rates_draw_fools_only_the_uncorrected_interval() {
    let scenario = &standard_scenarios()[0];
    assert!(scenario.true_variance().abs() < 1e-12);
    let mut rng = substream(7, 0);
    let data = draw_replicate(scenario, &mut rng);

    let config = BootstrapConfig { b: 500, level: 0.95, seed: 11 };
    let results = bootstrap_estimators(&data, &VarianceEstimator::ALL, &config).unwrap();
    let by_name = |name: &str| {
        results
            .iter()
            .find(|r| r.statistic_name == name)
            .unwrap()
    };

    let uncorrected = by_name("uncorrected_variance");
    assert!(uncorrected.point_estimate > 0.0);
    assert!(
        uncorrected.lower > 0.0,
        "uncorrected interval should exclude the true value 0, got lower {}",
        uncorrected.lower
    );

    let double = by_name("double_corrected_variance");
    assert_eq!(double.lower, 0.0, "double-corrected interval should reach 0");
    assert!(double.upper >= double.lower);
}
