//! Inputs on which the λ lower bound and the GLSE pair sensitivity bound
//! built on it do not hold. The formulas are kept as specified; these tests
//! pin the counterexamples.

use panel_coreset::objectives::{glse_pair, glse_total, olse_total, GlseQuery};
use panel_coreset::sensitivity::glse_sensitivity;
use panel_coreset::PanelDataset;

#[test]
fn lower_bound_fails_for_smooth_residuals() {
    // β = 0 leaves r ≡ 1; ρ on the boundary of the feasible ball
    let t = 10;
    let ds = PanelDataset::new(1, t, 1, vec![0.0; t], vec![1.0; t]).unwrap();
    let lambda: f64 = 0.2;
    let z = GlseQuery::new(vec![0.0], vec![(1.0 - lambda).sqrt()], lambda).unwrap();
    let glse = glse_total(&ds, &z);
    let olse = olse_total(&ds, &z.beta);
    assert!((glse - 0.30031).abs() < 1e-4);
    assert!(glse < lambda * olse);
}

#[test]
fn pair_sensitivity_can_be_exceeded() {
    // constant outcome, zero first regressor: the first pair's leverage is
    // about 1/T while its share stays near 0.08
    let t = 200;
    let x: Vec<f64> = (0..t)
        .map(|s| if s == 0 { 0.0 } else { ((s * 7919) % 200) as f64 / 100.0 - 1.0 })
        .collect();
    let ds = PanelDataset::new(1, t, 1, x, vec![1.0; t]).unwrap();
    let lambda: f64 = 0.2;
    let sens = glse_sensitivity(&ds, lambda, 1).unwrap();
    let z = GlseQuery::new(vec![0.0], vec![(1.0 - lambda).sqrt()], lambda).unwrap();
    let share = glse_pair(&ds, 0, 0, &z) / glse_total(&ds, &z);
    assert!(share > sens.pair(0, 0) + 0.01, "share {share} vs s {}", sens.pair(0, 0));
}
