//! GLSE fitting by alternating weighted least squares.
//!
//! Each iteration solves for β with ρ fixed (ordinary least squares on the
//! whitened rows), then regresses residuals on their lags to update ρ. A step
//! is only kept when the exact objective does not go up.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::linalg::lstsq_min_norm;
use crate::objectives::{check_lambda, coreset_glse_objective, glse_total, GlseQuery};
use crate::weighted::WeightedCoreset;

const MAX_HALVINGS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop once `(prev − cur) / prev` falls below this.
    pub tolerance: f64,
    pub lambda: f64,
    pub q: usize,
    /// Starting β; the weighted OLS solution when `None`.
    pub initial_beta: Option<Vec<f64>>,
    /// Starting ρ; zero when `None`.
    pub initial_rho: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-8,
            lambda: 0.2,
            q: 1,
            initial_beta: None,
            initial_rho: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be >= 1".into()));
        }
        if let Some(beta) = &self.initial_beta {
            if beta.len() != d {
                return Err(Error::Shape(format!("initial β has length {}, expected {d}", beta.len())));
            }
        }
        if let Some(rho) = &self.initial_rho {
            GlseQuery::new(vec![0.0; d], rho.clone(), self.lambda)?;
            if rho.len() != self.q {
                return Err(Error::Shape(format!("initial ρ has length {}, expected {}", rho.len(), self.q)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub rho: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start and after every iteration.
    pub trace: Vec<f64>,
}

impl FitResult {
    pub fn query(&self) -> GlseQuery {
        GlseQuery {
            beta: self.beta.clone(),
            rho: self.rho.clone(),
        }
    }

    /// `key=value` lines, vectors comma-separated.
    pub fn to_report(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let _ = writeln!(out, "beta={}", join(&self.beta));
        let _ = writeln!(out, "rho={}", join(&self.rho));
        let _ = writeln!(out, "objective={}", self.objective);
        let _ = writeln!(out, "iterations={}", self.iterations);
        let _ = writeln!(out, "converged={}", self.converged);
        out
    }
}

/// Stacks `√w · row` for every support entry; `row_fn` fills `(x̃, ỹ)`.
fn weighted_system(
    ds: &PanelDataset,
    support: &WeightedCoreset,
    mut row_fn: impl FnMut(usize, usize, &mut [f64]) -> f64,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let d = ds.n_features();
    let rows: Vec<_> = support.entries().iter().filter(|e| e.weight > 0.0).collect();
    if rows.is_empty() {
        return Err(Error::NoData);
    }
    let mut a = DMatrix::zeros(rows.len(), d);
    let mut b = DVector::zeros(rows.len());
    let mut buf = vec![0.0; d];
    for (r, e) in rows.iter().enumerate() {
        let s = e.weight.sqrt();
        let y = row_fn(e.individual, e.period, &mut buf);
        for k in 0..d {
            a[(r, k)] = s * buf[k];
        }
        b[r] = s * y;
    }
    Ok((a, b))
}

/// Weighted OLS β on a support set (minimum-norm when rank deficient).
pub fn ols_fit(ds: &PanelDataset, support: &WeightedCoreset) -> Result<Vec<f64>> {
    let (a, b) = weighted_system(ds, support, |i, t, buf| {
        buf.copy_from_slice(ds.x(i, t));
        ds.y(i, t)
    })?;
    Ok(lstsq_min_norm(a, b).iter().copied().collect())
}

/// Minimizes the weighted GLSE objective over β with ρ fixed.
fn beta_step(ds: &PanelDataset, support: &WeightedCoreset, rho: &[f64]) -> Result<Vec<f64>> {
    let head = (1.0 - rho.iter().map(|r| r * r).sum::<f64>()).max(0.0).sqrt();
    let (a, b) = weighted_system(ds, support, |i, t, buf| {
        let x = ds.x(i, t);
        if t == 0 {
            for (o, v) in buf.iter_mut().zip(x) {
                *o = head * v;
            }
            return head * ds.y(i, t);
        }
        buf.copy_from_slice(x);
        let mut y = ds.y(i, t);
        for j in 1..=t.min(rho.len()) {
            for (o, v) in buf.iter_mut().zip(ds.x(i, t - j)) {
                *o -= rho[j - 1] * v;
            }
            y -= rho[j - 1] * ds.y(i, t - j);
        }
        y
    })?;
    Ok(lstsq_min_norm(a, b).iter().copied().collect())
}

/// Pooled weighted regression of `r_t` on its lags, projected into the ρ ball.
fn rho_step(ds: &PanelDataset, support: &WeightedCoreset, beta: &[f64], q: usize, lambda: f64) -> Option<Vec<f64>> {
    let rows: Vec<_> = support
        .entries()
        .iter()
        .filter(|e| e.period > 0 && e.weight > 0.0)
        .collect();
    if rows.is_empty() {
        return None;
    }
    let mut a = DMatrix::zeros(rows.len(), q);
    let mut b = DVector::zeros(rows.len());
    for (r, e) in rows.iter().enumerate() {
        let s = e.weight.sqrt();
        b[r] = s * ds.residual(e.individual, e.period, beta);
        for j in 1..=e.period.min(q) {
            a[(r, j - 1)] = s * ds.residual(e.individual, e.period - j, beta);
        }
    }
    let mut rho: Vec<f64> = lstsq_min_norm(a, b).iter().copied().collect();
    let norm2: f64 = rho.iter().map(|r| r * r).sum();
    if norm2 > 1.0 - lambda {
        let scale = ((1.0 - lambda) / norm2).sqrt();
        rho.iter_mut().for_each(|r| *r *= scale);
    }
    Some(rho)
}

fn objective(ds: &PanelDataset, support: &WeightedCoreset, beta: &[f64], rho: &[f64]) -> f64 {
    let query = GlseQuery {
        beta: beta.to_vec(),
        rho: rho.to_vec(),
    };
    coreset_glse_objective(support, ds, &query)
}

/// Alternating fit of `(β, ρ)` minimizing the weighted GLSE objective over `support`.
///
/// Pass [`WeightedCoreset::full`] to fit the whole dataset.
pub fn irls_glse_fit(ds: &PanelDataset, support: &WeightedCoreset, cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate(ds.n_features())?;
    let mut beta = match &cfg.initial_beta {
        Some(b) => b.clone(),
        None => ols_fit(ds, support)?,
    };
    let mut rho = cfg.initial_rho.clone().unwrap_or_else(|| vec![0.0; cfg.q]);
    let mut obj = objective(ds, support, &beta, &rho);
    let mut trace = vec![obj];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let prev = obj;

        let candidate = beta_step(ds, support, &rho)?;
        let value = objective(ds, support, &candidate, &rho);
        if value <= obj {
            beta = candidate;
            obj = value;
        }

        if let Some(mut candidate) = rho_step(ds, support, &beta, cfg.q, cfg.lambda) {
            for _ in 0..=MAX_HALVINGS {
                let value = objective(ds, support, &beta, &candidate);
                if value <= obj {
                    rho = candidate;
                    obj = value;
                    break;
                }
                for (c, r) in candidate.iter_mut().zip(&rho) {
                    *c = 0.5 * (*c + r);
                }
            }
        }

        trace.push(obj);
        log::debug!("iteration {iterations}: objective {obj:.6e}");
        if prev <= 0.0 || (prev - obj) / prev < cfg.tolerance {
            converged = true;
            break;
        }
    }

    Ok(FitResult {
        beta,
        rho,
        objective: obj,
        iterations,
        converged,
        trace,
    })
}

/// Full-data GLSE objective at the fitted parameters.
pub fn evaluate_fit(ds: &PanelDataset, fit: &FitResult) -> f64 {
    glse_total(ds, &fit.query())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::olse_total;
    use crate::weighted::CoresetEntry;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_panel(n: usize, t: usize, d: usize, seed: u64) -> PanelDataset {
        let mut rng = crate::rng::substream(seed, crate::rng::Stage::Queries, 7);
        let x = (0..n * t * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = (0..n * t).map(|_| rng.random_range(-1.0..1.0)).collect();
        PanelDataset::new(n, t, d, x, y).unwrap()
    }

    #[test]
    fn exact_line() {
        let ds = PanelDataset::new(1, 3, 1, vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]).unwrap();
        let beta = ols_fit(&ds, &WeightedCoreset::full(&ds)).unwrap();
        assert_abs_diff_eq!(beta[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn weights_match_duplicated_rows() {
        let ds = random_panel(2, 4, 2, 1);
        let doubled = WeightedCoreset::new(
            2,
            4,
            (0..8)
                .map(|p| CoresetEntry { individual: p / 4, period: p % 4, weight: 2.0 })
                .collect(),
        )
        .unwrap();
        let a = ols_fit(&ds, &WeightedCoreset::full(&ds)).unwrap();
        let b = ols_fit(&ds, &doubled).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn residual_orthogonal_to_design() {
        let ds = random_panel(5, 6, 3, 2);
        let beta = ols_fit(&ds, &WeightedCoreset::full(&ds)).unwrap();
        for k in 0..3 {
            let mut dot = 0.0;
            for i in 0..5 {
                for t in 0..6 {
                    dot += ds.x(i, t)[k] * ds.residual(i, t, &beta);
                }
            }
            assert!(dot.abs() < 1e-9, "{dot}");
        }
    }

    #[test]
    fn empty_support_is_no_data() {
        let ds = random_panel(1, 2, 1, 0);
        let empty = WeightedCoreset::new(1, 2, vec![]).unwrap();
        assert!(matches!(ols_fit(&ds, &empty), Err(Error::NoData)));
        assert!(matches!(
            irls_glse_fit(&ds, &empty, &SolverConfig::default()),
            Err(Error::NoData)
        ));
    }

    #[test]
    fn one_iteration_from_zero_rho_is_ols() {
        let ds = random_panel(4, 5, 2, 3);
        let full = WeightedCoreset::full(&ds);
        let cfg = SolverConfig {
            max_iterations: 1,
            initial_beta: Some(vec![0.0, 0.0]),
            ..Default::default()
        };
        let fit = irls_glse_fit(&ds, &full, &cfg).unwrap();
        let ols = ols_fit(&ds, &full).unwrap();
        for (u, v) in fit.beta.iter().zip(&ols) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-10);
        }
    }

    #[test]
    fn trace_monotone_and_feasible() {
        for seed in 0..5 {
            let ds = random_panel(6, 8, 2, seed);
            let cfg = SolverConfig { q: 2, lambda: 0.3, ..Default::default() };
            let fit = irls_glse_fit(&ds, &WeightedCoreset::full(&ds), &cfg).unwrap();
            assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
            assert!(fit.rho.iter().map(|r| r * r).sum::<f64>() <= 0.7 + 1e-12);
            assert_abs_diff_eq!(evaluate_fit(&ds, &fit), fit.objective, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_rho_fit_evaluates_to_olse() {
        let ds = random_panel(3, 4, 2, 9);
        let fit = FitResult {
            beta: vec![0.1, -0.3],
            rho: vec![0.0],
            objective: 0.0,
            iterations: 0,
            converged: false,
            trace: vec![],
        };
        assert_abs_diff_eq!(evaluate_fit(&ds, &fit), olse_total(&ds, &fit.beta), epsilon = 1e-12);
    }

    #[test]
    fn report_lists_fields() {
        let fit = FitResult {
            beta: vec![1.0, 2.5],
            rho: vec![0.25],
            objective: 3.0,
            iterations: 4,
            converged: true,
            trace: vec![],
        };
        assert_eq!(
            fit.to_report(),
            "beta=1,2.5\nrho=0.25\nobjective=3\niterations=4\nconverged=true\n"
        );
    }

    #[test]
    fn config_checks() {
        assert!(SolverConfig { tolerance: 0.0, ..Default::default() }.validate(1).is_err());
        assert!(SolverConfig { max_iterations: 0, ..Default::default() }.validate(1).is_err());
        assert!(SolverConfig { initial_rho: Some(vec![0.95]), ..Default::default() }
            .validate(1)
            .is_err());
        assert!(SolverConfig { initial_beta: Some(vec![0.0; 3]), ..Default::default() }
            .validate(2)
            .is_err());
    }
}
