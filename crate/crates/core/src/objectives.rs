//! OLSE, GLSE and GLSE_k objectives on full panels and on weighted coresets.
//!
//! The GLSE per-pair cost for individual `i` with residuals `r_it = y_it − x_itᵀβ` is
//!
//! ```text
//! t = 1:  (1 − ‖ρ‖²) · r_i1²
//! t ≥ 2:  (r_it − Σ_{j=1..min(t−1,q)} ρ_j r_{i,t−j})²
//! ```
//!
//! Periods are 0-based in this API, so the first period is `t = 0`.
//! Masked pairs have a zero residual, which also makes them contribute zero
//! inside lag windows.

use nalgebra::{DMatrix, DVector};

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::weighted::WeightedCoreset;

/// Absolute slack on the `‖ρ‖² ≤ 1 − λ` check, absorbing round-off from
/// projections that land exactly on the boundary.
const BALL_SLACK: f64 = 1e-12;

/// Regression parameters `ζ = (β, ρ)`; the AR order `q` is `rho.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlseQuery {
    pub beta: Vec<f64>,
    pub rho: Vec<f64>,
}

impl GlseQuery {
    /// Validated query with `‖ρ‖² ≤ 1 − λ`.
    pub fn new(beta: Vec<f64>, rho: Vec<f64>, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if beta.iter().chain(&rho).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("query parameters".into()));
        }
        let q = Self { beta, rho };
        let norm2 = q.rho_norm2();
        if norm2 > 1.0 - lambda + BALL_SLACK {
            return Err(Error::InvalidParameter(format!(
                "‖ρ‖² = {norm2} exceeds 1 − λ = {}",
                1.0 - lambda
            )));
        }
        Ok(q)
    }

    /// Ordinary least-squares query (`q = 0`).
    pub fn ols(beta: Vec<f64>) -> Self {
        Self { beta, rho: Vec::new() }
    }

    pub fn order(&self) -> usize {
        self.rho.len()
    }

    pub fn rho_norm2(&self) -> f64 {
        self.rho.iter().map(|r| r * r).sum()
    }
}

/// A `k`-tuple of GLSE parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GlseKQuery {
    pub params: Vec<GlseQuery>,
}

impl GlseKQuery {
    pub fn new(params: Vec<GlseQuery>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::InvalidParameter("GLSE_k query needs k >= 1".into()));
        }
        let (d, q) = (params[0].beta.len(), params[0].order());
        if params.iter().any(|p| p.beta.len() != d || p.order() != q) {
            return Err(Error::InvalidParameter(
                "all GLSE_k members must share d and q".into(),
            ));
        }
        Ok(Self { params })
    }

    pub fn k(&self) -> usize {
        self.params.len()
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!("λ = {lambda} must lie in (0, 1)")));
    }
    Ok(())
}

/// OLSE per-pair cost `(y_it − x_itᵀβ)²`.
pub fn olse_pair(ds: &PanelDataset, i: usize, t: usize, beta: &[f64]) -> f64 {
    let r = ds.residual(i, t, beta);
    r * r
}

pub fn olse_individual(ds: &PanelDataset, i: usize, beta: &[f64]) -> f64 {
    (0..ds.n_periods()).map(|t| olse_pair(ds, i, t, beta)).sum()
}

pub fn olse_total(ds: &PanelDataset, beta: &[f64]) -> f64 {
    (0..ds.n_individuals()).map(|i| olse_individual(ds, i, beta)).sum()
}

/// GLSE per-pair cost given the residual at `t` and its predecessors.
#[inline]
fn glse_term(t: usize, rho: &[f64], rho_norm2: f64, lagged: impl Fn(usize) -> f64) -> f64 {
    let r = lagged(0);
    if t == 0 {
        return (1.0 - rho_norm2) * r * r;
    }
    let window = t.min(rho.len());
    let mut v = r;
    for j in 1..=window {
        v -= rho[j - 1] * lagged(j);
    }
    v * v
}

/// GLSE per-pair cost `ψ_it(ζ)`.
pub fn glse_pair(ds: &PanelDataset, i: usize, t: usize, query: &GlseQuery) -> f64 {
    glse_term(t, &query.rho, query.rho_norm2(), |j| {
        ds.residual(i, t - j, &query.beta)
    })
}

/// Individual GLSE objective `ψ_i(ζ) = Σ_t ψ_it(ζ)`.
pub fn glse_individual(ds: &PanelDataset, i: usize, query: &GlseQuery) -> f64 {
    let residuals: Vec<f64> = (0..ds.n_periods())
        .map(|t| ds.residual(i, t, &query.beta))
        .collect();
    glse_from_residuals(&residuals, &query.rho)
}

/// `Σ_t ψ_it` for one individual from its residual sequence.
pub fn glse_from_residuals(residuals: &[f64], rho: &[f64]) -> f64 {
    let norm2: f64 = rho.iter().map(|r| r * r).sum();
    (0..residuals.len())
        .map(|t| glse_term(t, rho, norm2, |j| residuals[t - j]))
        .sum()
}

pub fn glse_total(ds: &PanelDataset, query: &GlseQuery) -> f64 {
    (0..ds.n_individuals())
        .map(|i| glse_individual(ds, i, query))
        .sum()
}

/// `min_l ψ_i(β^(l), ρ^(l))`.
pub fn glsek_individual(ds: &PanelDataset, i: usize, query: &GlseKQuery) -> f64 {
    query
        .params
        .iter()
        .map(|p| glse_individual(ds, i, p))
        .fold(f64::INFINITY, f64::min)
}

pub fn glsek_total(ds: &PanelDataset, query: &GlseKQuery) -> f64 {
    (0..ds.n_individuals())
        .map(|i| glsek_individual(ds, i, query))
        .sum()
}

/// Cluster assignment of every individual: the minimizing `l`, smallest on ties.
pub fn glsek_assignment(ds: &PanelDataset, query: &GlseKQuery) -> Vec<usize> {
    (0..ds.n_individuals())
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (l, p) in query.params.iter().enumerate() {
                let v = glse_individual(ds, i, p);
                if v < best.1 {
                    best = (l, v);
                }
            }
            best.0
        })
        .collect()
}

/// `ψ_S(ζ) = Σ_{(i,t)∈S} w(i,t) · ψ_it(ζ)`.
pub fn coreset_glse_objective(coreset: &WeightedCoreset, ds: &PanelDataset, query: &GlseQuery) -> f64 {
    debug_assert_eq!(coreset.shape(), (ds.n_individuals(), ds.n_periods()));
    let norm2 = query.rho_norm2();
    coreset
        .entries()
        .iter()
        .map(|e| {
            e.weight
                * glse_term(e.period, &query.rho, norm2, |j| {
                    ds.residual(e.individual, e.period - j, &query.beta)
                })
        })
        .sum()
}

/// `Σ_{i∈I_S} min_l Σ_{t∈J_{S,i}} w(i,t) · ψ_it(β^(l), ρ^(l))`.
pub fn coreset_glsek_objective(
    coreset: &WeightedCoreset,
    ds: &PanelDataset,
    query: &GlseKQuery,
) -> f64 {
    debug_assert_eq!(coreset.shape(), (ds.n_individuals(), ds.n_periods()));
    let norms: Vec<f64> = query.params.iter().map(GlseQuery::rho_norm2).collect();
    coreset
        .groups()
        .map(|(i, entries)| {
            query
                .params
                .iter()
                .zip(&norms)
                .map(|(p, &norm2)| {
                    entries
                        .iter()
                        .map(|e| {
                            e.weight
                                * glse_term(e.period, &p.rho, norm2, |j| {
                                    ds.residual(i, e.period - j, &p.beta)
                                })
                        })
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// The `T × T` lower-triangular whitening matrix `P_ρ` with `Ω_ρ⁻¹ = P_ρᵀ P_ρ`.
pub fn whitening_matrix(rho: &[f64], periods: usize) -> DMatrix<f64> {
    let norm2: f64 = rho.iter().map(|r| r * r).sum();
    let mut p = DMatrix::zeros(periods, periods);
    if periods == 0 {
        return p;
    }
    p[(0, 0)] = (1.0 - norm2).max(0.0).sqrt();
    for t in 1..periods {
        p[(t, t)] = 1.0;
        for j in 1..=t.min(rho.len()) {
            p[(t, t - j)] = -rho[j - 1];
        }
    }
    p
}

/// `‖P_ρ (y_i − X_i β)‖²`, the matrix form of the individual GLSE objective.
pub fn glse_individual_matrix_form(ds: &PanelDataset, i: usize, query: &GlseQuery) -> f64 {
    let t_len = ds.n_periods();
    let r = DVector::from_fn(t_len, |t, _| ds.residual(i, t, &query.beta));
    (whitening_matrix(&query.rho, t_len) * r).norm_squared()
}
