use std::sync::Arc;

use poolsim::kpi::{gini, occupancy, wait_stats_of};
use poolsim::{run, KpiReport, Network, Policy, ScenarioConfig};
use proptest::prelude::*;

/// Mean absolute difference over twice the mean.
fn gini_mad(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let mad: f64 = x.iter().flat_map(|a| x.iter().map(move |b| (a - b).abs())).sum::<f64>() / (n * n);
    mad / (2.0 * mean)
}

fn table(path: &std::path::Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn cents(s: &str) -> i64 {
    let (e, c) = s.split_once('.').unwrap();
    let sign = if e.starts_with('-') { -1 } else { 1 };
    sign * (e.trim_start_matches('-').parse::<i64>().unwrap() * 100 + c.parse::<i64>().unwrap())
}

#[test]
fn report_matches_recomputation_from_files() {
    let g = Arc::new(Network::grid(5, 5, 400.0).unwrap());
    let mut cfg = ScenarioConfig::new(g, 150.0, 6, Policy::ProfitMax, 21);
    cfg.horizon = 7200.0;
    let log = run(&cfg).unwrap();
    let report = KpiReport::from_log(&log);
    let dir = tempfile::tempdir().unwrap();
    log.write_all(dir.path()).unwrap();
    std::fs::write(dir.path().join("kpi.toml"), report.to_toml()).unwrap();

    let outcomes = table(&dir.path().join("outcomes.csv"));
    let drivers = table(&dir.path().join("drivers.csv"));
    let kpi: toml::Table = std::fs::read_to_string(dir.path().join("kpi.toml")).unwrap().parse().unwrap();

    let served: Vec<&Vec<String>> = outcomes.iter().filter(|r| r[1] == "served").collect();
    assert_eq!(kpi["n_requests"].as_integer().unwrap() as usize, outcomes.len());
    assert_eq!(kpi["n_served"].as_integer().unwrap() as usize, served.len());
    let sr = served.len() as f64 / outcomes.len() as f64;
    assert!((kpi["service_rate"].as_float().unwrap() - sr).abs() < 1e-6);

    let waits: Vec<f64> = served.iter().map(|r| r[2].parse().unwrap()).collect();
    let mean = waits.iter().sum::<f64>() / waits.len() as f64;
    assert!((kpi["wait_mean_s"].as_float().unwrap() - mean).abs() < 1e-3);

    let fares: i64 = served.iter().map(|r| cents(&r[4])).sum();
    let revenues: Vec<i64> = drivers.iter().map(|r| cents(&r[3])).collect();
    let commission = (kpi["platform_commission_eur"].as_float().unwrap() * 100.0).round() as i64;
    assert_eq!(fares, revenues.iter().sum::<i64>() + commission);

    let g_file = gini_mad(&revenues.iter().map(|&c| c as f64).collect::<Vec<_>>());
    assert!((kpi["revenue_gini"].as_float().unwrap() - g_file).abs() < 1e-6);

    let riding: f64 = served.iter().map(|r| r[3].parse::<f64>().unwrap()).sum();
    let driving: f64 = drivers.iter().map(|r| r[6].parse::<f64>().unwrap()).sum();
    assert!((kpi["occupancy"].as_float().unwrap() - riding / driving).abs() < 1e-5);
}

#[test]
fn solo_occupancy_at_most_one() {
    for seed in 0..5 {
        let g = Arc::new(Network::grid(5, 5, 500.0).unwrap());
        let mut cfg = ScenarioConfig::new(g, 100.0, 4, Policy::SoloOnly, seed);
        cfg.horizon = 3600.0;
        let log = run(&cfg).unwrap();
        let u = occupancy(&log);
        assert!((0.0..=1.0).contains(&u), "{u}");
    }
}

#[test]
fn wait_quantiles() {
    let s = wait_stats_of(&mut [60.0]).unwrap();
    assert_eq!((s.mean, s.median, s.p90), (60.0, 60.0, 60.0));
    let s = wait_stats_of(&mut [180.0, 60.0, 120.0]).unwrap();
    assert_eq!(s.mean, 120.0);
    assert_eq!(s.median, 120.0);
    assert!(wait_stats_of::<f64>(&mut []).is_none());
}

proptest! {
    #[test]
    fn gini_agrees_with_mean_difference(v in prop::collection::vec(0.0f64..1000.0, 1..40)) {
        prop_assert!((gini(&v) - gini_mad(&v)).abs() < 1e-9);
    }

    #[test]
    fn gini_is_scale_invariant(v in prop::collection::vec(0.0f64..1000.0, 1..40), c in 0.001f64..1000.0) {
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!((gini(&v) - gini(&scaled)).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&gini(&v)));
    }
}
