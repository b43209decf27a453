mod common;

use mec_core::model::NetworkConfig;
use mec_core::policies::PolicySpec;
use mec_core::scenario::{reference_network, Traffic};
use mec_core::sim::{parse_trace, run_replication, RunOptions, TraceRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_config;

fn reference() -> NetworkConfig {
    NetworkConfig::from_spec(&reference_network(1, &Traffic::Uniform(7.5)).unwrap()).unwrap()
}

#[test]
fn stationary_arrival_counts_within_three_sigma() {
    let config = reference();
    let opts = RunOptions::new(2.0e4, 4);
    let run = run_replication(&config, &PolicySpec::HeeAccZero, &opts).unwrap();
    let window = opts.horizon - opts.warm_up;
    for j in 0..config.num_classes() {
        let mean = config.arrival_rate(j) * window;
        let got = run.metrics.arrivals[j] as f64;
        assert!(
            (got - mean).abs() <= 3.0 * mean.sqrt(),
            "class {j}: {got} vs {mean}"
        );
    }
}

#[test]
fn two_bucket_trace_counts_within_three_sigma() {
    let config = reference();
    let (t1, t2) = (4000.0, 6000.0);
    let mut text = String::from("bucket_start,class,multiplier\n");
    for j in 1..=4 {
        text += &format!("0,{j},2.0\n{t1},{j},0.5\n");
    }
    let mut opts = RunOptions::new(t1 + t2, 8);
    opts.warm_up = 0.0;
    opts.schedule = Some(parse_trace(&text).unwrap());
    opts.record_trace = true;
    let run = run_replication(&config, &PolicySpec::HeeAccZero, &opts).unwrap();
    let mut counts = vec![[0u64; 2]; config.num_classes()];
    for rec in run.trace.unwrap() {
        if let TraceRecord::Arrival { time, class, .. } = rec {
            counts[class][(time >= t1) as usize] += 1;
        }
    }
    for (j, [first, second]) in counts.into_iter().enumerate() {
        let lambda = config.arrival_rate(j);
        for (got, mean) in [(first, 2.0 * lambda * t1), (second, 0.5 * lambda * t2)] {
            let got = got as f64;
            assert!(
                (got - mean).abs() <= 3.0 * mean.sqrt(),
                "class {j}: {got} vs {mean}"
            );
        }
    }
}

#[test]
fn flow_balances_and_static_power_is_a_floor() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 0..40 {
        let config = random_config(&mut rng);
        let policy = PolicySpec::from_name(PolicySpec::NAMES[n % 5]).unwrap();
        let opts = RunOptions::new(400.0, n as u64);
        let m = run_replication(&config, &policy, &opts).unwrap().metrics;
        assert_eq!(m.total_arrivals, m.total_admissions + m.total_blocks);
        assert_eq!(m.total_admissions, m.total_completions + m.in_flight_at_end);
        let floor = config.total_static_power() * (opts.horizon - opts.warm_up);
        assert!(
            m.energy >= floor * (1.0 - 1e-12),
            "run {n}: {} < {floor}",
            m.energy
        );
    }
}
