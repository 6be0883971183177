use funbandit::distributions::{sample_n, DistributionSpec};
use funbandit::estimators::{estimate_mean, SampleBuffer};
use funbandit::harness::{sweep_budgets, ExperimentConfig, RunOptions, SchedulePolicy};
use funbandit::{BanditInstance, BoundConstants, FunctionalSpec, Rng};

#[test]
fn sample_mean_deviation_respects_q_mean() {
    let coin = DistributionSpec::Bernoulli { p: 0.5 };
    let reps = 10_000u64;
    for n in [100usize, 400] {
        for x in [0.05, 0.1] {
            let root = Rng::new(n as u64 * 1000 + (x * 100.0) as u64);
            let (mut above, mut below) = (0u32, 0u32);
            for rep in 0..reps {
                let mut rng = root.substream(rep);
                let m = estimate_mean(&SampleBuffer::from(sample_n(&coin, &mut rng, n))).unwrap();
                above += u32::from(m - 0.5 >= x);
                below += u32::from(0.5 - m >= x);
            }
            let q = (-(n as f64) * x * x).exp();
            for count in [above, below] {
                let freq = count as f64 / reps as f64;
                let se = (freq * (1.0 - freq) / reps as f64).sqrt();
                assert!(freq <= q + 3.0 * se, "n = {n}, x = {x}: {freq} > {q}");
            }
        }
    }
}

#[test]
fn error_shrinks_along_a_budget_sweep() {
    let arms = [0.6, 0.5, 0.45, 0.4]
        .into_iter()
        .map(|p| DistributionSpec::Bernoulli { p })
        .collect();
    let instance = BanditInstance::new(arms, FunctionalSpec::Mean).unwrap();
    let h = 9;
    let config = ExperimentConfig::new(
        instance,
        SchedulePolicy::SuccessiveRejects,
        vec![10 * h, 100 * h, 1000 * h],
        1000,
        99,
        BoundConstants::default(),
    )
    .unwrap();
    let report = sweep_budgets(&config, RunOptions::default()).unwrap();
    for pair in report.rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let slack = 2.0 * (a.error_stderr.unwrap().powi(2) + b.error_stderr.unwrap().powi(2)).sqrt();
        assert!(
            b.empirical_error.unwrap() <= a.empirical_error.unwrap() + slack,
            "T = {} -> {}: {:?} then {:?}",
            a.budget,
            b.budget,
            a.empirical_error,
            b.empirical_error
        );
    }
    assert!(report.rows[0].empirical_error.unwrap() > report.rows[2].empirical_error.unwrap());
}
