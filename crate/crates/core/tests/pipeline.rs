use panel_coreset::bench::{run_benchmark, BenchConfig, BenchReport, ReportFormat};
use panel_coreset::coresets::{cglse, cglse_with_sensitivity, CoresetConfig};
use panel_coreset::datagen::{random_queries, synthetic_panel, ErrorDist, GenConfig};
use panel_coreset::objectives::glse_total;
use panel_coreset::sensitivity::glse_sensitivity;
use panel_coreset::solver::{irls_glse_fit, SolverConfig};
use panel_coreset::{PanelDataset, WeightedCoreset};

#[test]
fn dataset_and_coreset_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(&GenConfig { n: 5, t: 4, d: 3, seed: 1, ..Default::default() }).unwrap();
    let data_path = dir.path().join("panel.csv");
    panel.dataset.save_csv(&data_path).unwrap();
    let loaded = PanelDataset::load_csv(&data_path).unwrap();
    assert_eq!(loaded.fingerprint(), panel.dataset.fingerprint());

    let cfg = CoresetConfig { size_override: Some(12), seed: 4, ..Default::default() };
    let coreset = cglse(&loaded, &cfg).unwrap();
    let coreset_path = dir.path().join("coreset.csv");
    coreset.save_csv(&coreset_path, &loaded).unwrap();
    let back = WeightedCoreset::load_csv(&coreset_path, &loaded).unwrap();
    assert_eq!(back.entries(), coreset.entries());
    assert_eq!(back.meta.draws, Some(12));
}

#[test]
fn report_json_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(&GenConfig { n: 8, t: 6, d: 3, ..Default::default() }).unwrap();
    let cfg = BenchConfig {
        epsilons: vec![0.3],
        n_queries: 4,
        size_override: Some(30),
        raw: true,
        ..Default::default()
    };
    let report = run_benchmark(&panel.dataset, &cfg).unwrap();
    let path = dir.path().join("report.json");
    report.emit(ReportFormat::Json, std::fs::File::create(&path).unwrap()).unwrap();
    let back = BenchReport::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn generator_residual_autocorrelation_tracks_rho() {
    let cfg = GenConfig { n: 20, t: 500, d: 3, seed: 8, ..Default::default() };
    let panel = synthetic_panel(&cfg).unwrap();
    let ds = &panel.dataset;
    let mut acf = 0.0;
    for i in 0..cfg.n {
        let e: Vec<f64> = (0..cfg.t).map(|t| ds.residual(i, t, &panel.beta)).collect();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let var: f64 = e.iter().map(|v| (v - mean).powi(2)).sum();
        let cov: f64 = e.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        acf += cov / var;
    }
    acf /= cfg.n as f64;
    assert!((acf - panel.rho[0]).abs() < 0.1, "acf {acf} vs ρ {}", panel.rho[0]);
}

#[test]
fn query_coefficients_center_on_zero() {
    let draws = 10_000;
    let qs = random_queries(3, 1, 0.2, draws, 11).unwrap();
    for k in 0..3 {
        let mean = qs.iter().map(|q| q.beta[k]).sum::<f64>() / draws as f64;
        assert!(mean.abs() < 5.0 / (draws as f64).sqrt(), "coordinate {k} mean {mean}");
    }
}

#[test]
fn coreset_fit_transfers_to_full_data() {
    let eps = 0.3;
    let factor = (1.0 + eps) / (1.0 - eps);
    for seed in 0..10 {
        let panel = synthetic_panel(&GenConfig { n: 60, t: 40, d: 4, seed, ..Default::default() }).unwrap();
        let ds = &panel.dataset;
        let sens = glse_sensitivity(ds, 0.2, 1).unwrap();
        let cfg = CoresetConfig { epsilon: eps, size_override: Some(1500), seed, ..Default::default() };
        let coreset = cglse_with_sensitivity(ds, &cfg, &sens).unwrap();
        let solver = SolverConfig::default();
        let on_coreset = irls_glse_fit(ds, &coreset, &solver).unwrap();
        let on_full = irls_glse_fit(ds, &WeightedCoreset::full(ds), &solver).unwrap();
        let transferred = glse_total(ds, &on_coreset.query());
        assert!(
            transferred <= factor * on_full.objective,
            "seed {seed}: {transferred} > {factor} × {}",
            on_full.objective
        );
    }
}

#[test]
fn heavy_tails_are_generated() {
    let g = synthetic_panel(&GenConfig { n: 10, t: 100, d: 2, seed: 2, ..Default::default() }).unwrap();
    let c = synthetic_panel(&GenConfig { error_dist: ErrorDist::Cauchy, ..g.config.clone() }).unwrap();
    let peak = |p: &panel_coreset::datagen::SyntheticPanel| {
        (0..10)
            .flat_map(|i| (0..100).map(move |t| (i, t)))
            .map(|(i, t)| p.dataset.residual(i, t, &p.beta).abs())
            .fold(0.0, f64::max)
    };
    assert!(peak(&c) > 5.0 * peak(&g));
}
