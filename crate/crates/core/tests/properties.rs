use proptest::prelude::*;

use panel_coreset::coresets::{cglse_with_sensitivity, CoresetConfig};
use panel_coreset::dataset::{gram_extremes, m_bound, PanelDataset};
use panel_coreset::objectives::{
    glse_individual, glse_total, glsek_individual, glsek_total, olse_individual, olse_total, GlseKQuery,
    GlseQuery,
};
use panel_coreset::sensitivity::{glse_sensitivity, glsek_sensitivity, olse_leverage};

fn panel(max_n: usize, max_t: usize, max_d: usize) -> impl Strategy<Value = PanelDataset> {
    (1..=max_n, 1..=max_t, 1..=max_d).prop_flat_map(|(n, t, d)| {
        (
            prop::collection::vec(-5.0..5.0f64, n * t * d),
            prop::collection::vec(-5.0..5.0f64, n * t),
        )
            .prop_map(move |(x, y)| PanelDataset::new(n, t, d, x, y).unwrap())
    })
}

fn query(d: usize, q: usize, lambda: f64) -> impl Strategy<Value = GlseQuery> {
    (
        prop::collection::vec(-3.0..3.0f64, d),
        prop::collection::vec(-1.0..1.0f64, q),
        0.0..1.0f64,
    )
        .prop_map(move |(beta, dir, r)| {
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let radius = (r * (1.0 - lambda)).sqrt();
            let rho = dir.iter().map(|v| radius * v / norm).collect();
            GlseQuery::new(beta, rho, lambda).unwrap()
        })
}

fn panel_and_query() -> impl Strategy<Value = (PanelDataset, GlseQuery, f64)> {
    (panel(5, 6, 3), 1..=3usize, 0.05..0.95f64).prop_flat_map(|(ds, q, lambda)| {
        let d = ds.n_features();
        (Just(ds), query(d, q, lambda), Just(lambda))
    })
}

fn scaled(ds: &PanelDataset, c: f64) -> PanelDataset {
    let (n, t, d) = (ds.n_individuals(), ds.n_periods(), ds.n_features());
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        for s in 0..t {
            x.extend(ds.x(i, s).iter().map(|v| c * v));
            y.push(c * ds.y(i, s));
        }
    }
    PanelDataset::new(n, t, d, x, y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objectives_add_over_individuals((ds, z, _) in panel_and_query()) {
        let n = ds.n_individuals();
        let glse: f64 = (0..n).map(|i| glse_individual(&ds, i, &z)).sum();
        let olse: f64 = (0..n).map(|i| olse_individual(&ds, i, &z.beta)).sum();
        prop_assert!((glse - glse_total(&ds, &z)).abs() <= 1e-9 * (1.0 + glse));
        prop_assert!((olse - olse_total(&ds, &z.beta)).abs() <= 1e-9 * (1.0 + olse));
        prop_assert!(glse >= 0.0 && glse.is_finite());
    }

    #[test]
    fn duplicated_tuple_matches_single((ds, z, _) in panel_and_query()) {
        let k = GlseKQuery::new(vec![z.clone(), z.clone()]).unwrap();
        prop_assert_eq!(glsek_total(&ds, &k), glse_total(&ds, &z));
        let per: f64 = (0..ds.n_individuals()).map(|i| glsek_individual(&ds, i, &k)).sum();
        prop_assert!((per - glsek_total(&ds, &k)).abs() <= 1e-9 * (1.0 + per));
    }

    #[test]
    fn sensitivities_ignore_global_scale(ds in panel(5, 6, 3), c in 0.01..100.0f64, q in 1..=2usize) {
        let other = scaled(&ds, c);
        let a = glse_sensitivity(&ds, 0.3, q).unwrap();
        let b = glse_sensitivity(&other, 0.3, q).unwrap();
        for (u, v) in a.scores.iter().zip(&b.scores) {
            prop_assert!((u - v).abs() <= 1e-8);
        }
        let lev_a = olse_leverage(&ds);
        let lev_b = olse_leverage(&other);
        for (u, v) in lev_a.scores.iter().zip(&lev_b.scores) {
            prop_assert!((u - v).abs() <= 1e-8);
        }
        if let (Ok(a), Ok(b)) = (glsek_sensitivity(&ds, 0.3, q), glsek_sensitivity(&other, 0.3, q)) {
            for (u, v) in a.scores.iter().zip(&b.scores) {
                prop_assert!((u - v).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn gram_extremes_ignore_period_order(ds in panel(4, 6, 3), shift in 1..6usize) {
        let (n, t, d) = (ds.n_individuals(), ds.n_periods(), ds.n_features());
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            for s in 0..t {
                let src = (s + shift) % t;
                x.extend_from_slice(ds.x(i, src));
                y.push(ds.y(i, src));
            }
        }
        let rotated = PanelDataset::new(n, t, d, x, y).unwrap();
        let a = gram_extremes(&ds);
        let b = gram_extremes(&rotated);
        for i in 0..n {
            prop_assert!((a.upper[i] - b.upper[i]).abs() <= 1e-9 * (1.0 + a.upper[i]));
            prop_assert!((a.lower[i] - b.lower[i]).abs() <= 1e-9 * (1.0 + a.upper[i]));
        }
    }

    #[test]
    fn m_bound_finite_iff_all_full_rank(ds in panel(4, 6, 3)) {
        let gram = gram_extremes(&ds);
        let all_full = (0..ds.n_individuals()).all(|i| !gram.is_rank_deficient(i));
        prop_assert_eq!(m_bound(&ds).is_finite(), all_full);
    }

    #[test]
    fn masked_rows_leave_gram_unchanged(
        ys in prop::collection::vec(-3.0..3.0f64, 6),
        xs in prop::collection::vec(-3.0..3.0f64, 6),
        mask in prop::collection::vec(any::<bool>(), 6),
    ) {
        let masked = PanelDataset::with_mask(1, 6, 1, xs.clone(), ys.clone(), mask.clone()).unwrap();
        let keep: Vec<usize> = (0..6).filter(|&s| !mask[s]).collect();
        prop_assume!(!keep.is_empty());
        let compact = PanelDataset::new(
            1,
            keep.len(),
            1,
            keep.iter().map(|&s| xs[s]).collect(),
            keep.iter().map(|&s| ys[s]).collect(),
        )
        .unwrap();
        let a = gram_extremes(&masked);
        let b = gram_extremes(&compact);
        prop_assert!((a.upper[0] - b.upper[0]).abs() <= 1e-9 * (1.0 + b.upper[0]));
        prop_assert!((a.lower[0] - b.lower[0]).abs() <= 1e-9 * (1.0 + b.upper[0]));
    }

    #[test]
    fn weight_mass_telescopes(ds in panel(5, 6, 3), seed in any::<u64>(), m in 1..200usize) {
        let sens = glse_sensitivity(&ds, 0.2, 1).unwrap();
        prop_assume!(sens.total > 0.0);
        let cfg = CoresetConfig { size_override: Some(m), seed, ..Default::default() };
        let c = cglse_with_sensitivity(&ds, &cfg, &sens).unwrap();
        let mass: f64 = c.entries().iter().map(|e| e.weight * sens.pair(e.individual, e.period)).sum();
        prop_assert!((mass - sens.total).abs() <= 1e-9 * sens.total);
    }
}

#[test]
fn equal_sensitivities_sample_uniformly() {
    // four rows of equal leverage 1/2; with q = 1 every score caps at 1
    let x = vec![1.0, 0.0, -1.0, 0.0];
    let y = vec![0.0, 1.0, 0.0, -1.0];
    let ds = PanelDataset::new(1, 4, 1, x, y).unwrap();
    let sens = glse_sensitivity(&ds, 0.2, 1).unwrap();
    assert!(sens.scores.iter().all(|&s| s == 1.0));
    let m = 40_000;
    let cfg = CoresetConfig { size_override: Some(m), seed: 3, ..Default::default() };
    let c = cglse_with_sensitivity(&ds, &cfg, &sens).unwrap();
    let sigma = (m as f64 * 0.25 * 0.75).sqrt();
    assert_eq!(c.len(), 4);
    for e in c.entries() {
        let count = e.weight * m as f64 / sens.total;
        assert!((count - m as f64 / 4.0).abs() <= 3.0 * sigma, "pair {} drew {count}", e.period);
    }
}
