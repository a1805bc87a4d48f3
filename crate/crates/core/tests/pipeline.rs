use termfit_core::calibration::{read_fits_jsonl, write_fits_jsonl};
use termfit_core::market_data::write_auctions;
use termfit_core::stats::Selection;
use termfit_core::synthetic::NsScenario;
use termfit_core::{
    bootstrap_zero_curve, calibrate_all, compare_models, group_by_date, ns_rate, parse_auctions, DeConfig, Execution,
    MaturityGrid, Model,
};

fn scenario(dates: usize, noise: f64) -> NsScenario {
    NsScenario { seed: 21, dates, noise_sd_pct: noise, ..NsScenario::default() }
}

#[test]
fn auctions_survive_a_csv_round_trip() {
    let grid = MaturityGrid::default();
    let recs = scenario(3, 0.05).auctions(&grid).unwrap();
    let mut buf = Vec::new();
    write_auctions(&recs, &mut buf).unwrap();
    assert_eq!(parse_auctions(buf.as_slice()).unwrap(), recs);
}

#[test]
fn noise_free_scenario_recovers_its_curves() {
    let grid = MaturityGrid::default();
    let sc = NsScenario { beta_jitter: 0.0, ..scenario(2, 0.0) };
    let (ds, diags) = group_by_date(&sc.auctions(&grid).unwrap(), &grid).unwrap();
    assert!(diags.is_empty());
    for obs in &ds.observations {
        let curve = bootstrap_zero_curve(obs, &grid).unwrap();
        for (t, z) in curve.points() {
            assert!((z - ns_rate(&sc.truth, t).unwrap()).abs() < 1e-8, "t={t}");
        }
    }
    let out = calibrate_all(&ds, Model::NelsonSiegel, &DeConfig::default().with_seed(8)).unwrap();
    assert!(out.failures.is_empty());
    for f in &out.results {
        assert!(f.rmse < 1e-6);
        let got = f.params.to_vec();
        let want = [sc.truth.beta0, sc.truth.beta1, sc.truth.beta2, sc.truth.tau];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-3, "{got:?}");
        }
    }
}

#[test]
fn batch_results_do_not_depend_on_execution() {
    let grid = MaturityGrid::default();
    let (ds, _) = group_by_date(&scenario(4, 0.05).auctions(&grid).unwrap(), &grid).unwrap();
    let cfg = DeConfig { max_generations: 200, ..DeConfig::default().with_seed(3) };
    let seq = calibrate_all(&ds, Model::Svensson, &DeConfig { execution: Execution::Sequential, ..cfg.clone() }).unwrap();
    let par = calibrate_all(&ds, Model::Svensson, &DeConfig { execution: Execution::Parallel, ..cfg }).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn fits_round_trip_and_feed_the_comparison() {
    let grid = MaturityGrid::default();
    let (ds, _) = group_by_date(&scenario(6, 0.05).auctions(&grid).unwrap(), &grid).unwrap();
    let cfg = DeConfig::default().with_seed(17);
    let ns = calibrate_all(&ds, Model::NelsonSiegel, &cfg).unwrap().results;
    let sv = calibrate_all(&ds, Model::Svensson, &cfg).unwrap().results;
    for (a, b) in ns.iter().zip(&sv) {
        assert!(b.rmse <= a.rmse + 1e-4, "{}: sv {} ns {}", a.date, b.rmse, a.rmse);
    }

    let mut buf = Vec::new();
    write_fits_jsonl(&[ns.clone(), sv.clone()].concat(), &mut buf).unwrap();
    assert_eq!(read_fits_jsonl(buf.as_slice()).unwrap(), [ns.clone(), sv.clone()].concat());

    let report = compare_models(&ns, &sv, 0.05).unwrap();
    assert_eq!(report.dates.len(), 6);
    // the nested model never fits worse in-sample
    assert_ne!(report.selected, Selection::NelsonSiegel);
}
