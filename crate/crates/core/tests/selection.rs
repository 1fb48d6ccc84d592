mod common;

use multidirsbm::selection::{bic_penalty, icl_penalty, Criterion};
use multidirsbm::{bic, fit, icl, scenario, select_k, FitConfig};

#[test]
fn single_cluster_single_layer_penalty() {
    for n in [3usize, 10, 57] {
        let expect = ((n * (n - 1)) as f64).ln();
        assert!((bic_penalty(1, 1, n) - expect).abs() < 1e-12);
        assert!((icl_penalty(1, 1, n) - expect).abs() < 1e-12);
    }
    let (_, sample) = common::random_instance(1, 12, 1, 1);
    let f = fit(&sample.network, &FitConfig { k: 1, restarts: 1, ..FitConfig::default() }).unwrap();
    assert!((bic(&f, &sample.network) - (f.hybrid_ll - 132f64.ln())).abs() < 1e-9);
    assert!((icl(&f, &sample.network) - (f.complete_ll - 132f64.ln())).abs() < 1e-9);
}

#[test]
fn bic_minus_icl_identity() {
    for seed in 0..4 {
        let (_, sample) = common::random_instance(seed, 25, 2, 3);
        let net = &sample.network;
        let f = fit(net, &FitConfig { k: 3, restarts: 2, seed, ..FitConfig::default() }).unwrap();
        let lhs = bic(&f, net) - icl(&f, net);
        let rhs = (f.hybrid_ll - f.complete_ll) + 0.5 * 2.0 * 25f64.ln();
        assert!((lhs - rhs).abs() < 1e-9 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn singleton_sweep() {
    let (_, sample) = common::random_instance(2, 20, 2, 3);
    let config = FitConfig { restarts: 2, ..FitConfig::default() };
    let report = select_k(&sample.network, 3, 3, &config).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.chosen_k_bic, Some(3));
    assert_eq!(report.chosen_k_icl, Some(3));
    assert_eq!(report.chosen(Criterion::Bic), Some(3));
    assert!(report.fit_for(3).is_some());
}

#[test]
fn sweep_reuses_per_k_seeds() {
    let (_, sample) = common::random_instance(3, 24, 2, 2);
    let config = FitConfig { restarts: 2, seed: 17, ..FitConfig::default() };
    let report = select_k(&sample.network, 1, 3, &config).unwrap();
    for row in &report.rows {
        let alone = fit(&sample.network, &FitConfig { k: row.k, seed: row.seed, ..config.clone() }).unwrap();
        assert_eq!(row.hybrid_ll, Some(alone.hybrid_ll), "K={}", row.k);
        assert_eq!(row.bic, Some(bic(&alone, &sample.network)));
    }
    let best = report.rows.iter().max_by(|a, b| a.bic.unwrap().total_cmp(&b.bic.unwrap())).unwrap();
    assert_eq!(report.chosen_k_bic, Some(best.k));
}

#[test]
fn easy_two_cluster_scenario_selects_two() {
    let sc = scenario("t1-row1").unwrap();
    let sample = sc.generate(42);
    let report = select_k(&sample.network, 1, 4, &FitConfig { seed: 1, ..FitConfig::default() }).unwrap();
    assert_eq!(report.chosen_k_bic, Some(2));
}

#[test]
fn bad_ranges_are_rejected() {
    let (_, sample) = common::random_instance(4, 6, 1, 2);
    let config = FitConfig::default();
    assert!(select_k(&sample.network, 0, 2, &config).is_err());
    assert!(select_k(&sample.network, 3, 2, &config).is_err());
    assert!(select_k(&sample.network, 1, 7, &config).is_err());
}

#[test]
fn report_serializes_without_fits() {
    let (_, sample) = common::random_instance(5, 15, 1, 2);
    let report = select_k(&sample.network, 1, 2, &FitConfig { restarts: 1, ..FitConfig::default() }).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert!(json.get("fits").is_none());
}
