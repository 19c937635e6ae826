//! Sensitivity scores driving importance sampling.
//!
//! * OLSE: leverage scores of the stacked `NT × (d+1)` matrix `Z`.
//! * GLSE: each pair's leverage plus the leverages in its lag window, scaled
//!   by `2/λ` and capped at 1.
//! * GLSE_k: per individual, `u_i / (u_i + Σ_{i'≠i} l_{i'})` scaled by
//!   `2(q+1)/λ` and capped at 1, where `u`, `l` are extreme Gram eigenvalues.

use std::io::Write;

use crate::dataset::{gram_extremes, IndividualGram, PanelDataset};
use crate::error::{Error, Result};
use crate::linalg::column_basis;
use crate::objectives::check_lambda;

/// What a [`SensitivityMap`] is keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityDomain {
    /// Score index `i·T + t`.
    Pairs { n_individuals: usize, n_periods: usize },
    /// Score index `i`.
    Individuals { n_individuals: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMap {
    pub domain: SensitivityDomain,
    pub scores: Vec<f64>,
    /// `𝒢 = Σ scores`.
    pub total: f64,
    /// [`PanelDataset::fingerprint`] of the dataset the scores belong to.
    pub fingerprint: u64,
}

impl SensitivityMap {
    fn new(domain: SensitivityDomain, scores: Vec<f64>, fingerprint: u64) -> Self {
        let total = scores.iter().sum();
        Self {
            domain,
            scores,
            total,
            fingerprint,
        }
    }

    /// Score of pair `(i, t)`; panics on an individual-keyed map.
    pub fn pair(&self, i: usize, t: usize) -> f64 {
        match self.domain {
            SensitivityDomain::Pairs { n_periods, .. } => self.scores[i * n_periods + t],
            SensitivityDomain::Individuals { .. } => panic!("sensitivity map is keyed by individual"),
        }
    }

    pub fn ensure_matches(&self, ds: &PanelDataset) -> Result<()> {
        if self.fingerprint != ds.fingerprint() {
            return Err(Error::FingerprintMismatch);
        }
        Ok(())
    }

    /// Dump as `i,t,score` or `i,score` (external ids, 1-based periods).
    pub fn write_csv<W: Write>(&self, mut w: W, ds: &PanelDataset) -> Result<()> {
        let ids = ds.individual_ids();
        match self.domain {
            SensitivityDomain::Pairs { n_periods, .. } => {
                writeln!(w, "i,t,score")?;
                for (p, s) in self.scores.iter().enumerate() {
                    writeln!(w, "{},{},{s}", ids[p / n_periods], p % n_periods + 1)?;
                }
            }
            SensitivityDomain::Individuals { .. } => {
                writeln!(w, "i,score")?;
                for (i, s) in self.scores.iter().enumerate() {
                    writeln!(w, "{},{s}", ids[i])?;
                }
            }
        }
        Ok(())
    }
}

/// OLSE leverage scores: squared row norms of an orthonormal basis of `col(Z)`.
pub fn olse_leverage(ds: &PanelDataset) -> SensitivityMap {
    let basis = column_basis(&ds.z_matrix());
    let scores: Vec<f64> = basis
        .row_iter()
        .map(|row| row.norm_squared().min(1.0))
        .collect();
    SensitivityMap::new(
        SensitivityDomain::Pairs {
            n_individuals: ds.n_individuals(),
            n_periods: ds.n_periods(),
        },
        scores,
        ds.fingerprint(),
    )
}

fn check_order(q: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::InvalidParameter("AR order q must be >= 1".into()));
    }
    Ok(())
}

/// GLSE pair sensitivities derived from OLSE leverages.
pub fn glse_sensitivity(ds: &PanelDataset, lambda: f64, q: usize) -> Result<SensitivityMap> {
    glse_sensitivity_from_leverage(&olse_leverage(ds), lambda, q)
}

pub fn glse_sensitivity_from_leverage(
    leverage: &SensitivityMap,
    lambda: f64,
    q: usize,
) -> Result<SensitivityMap> {
    check_lambda(lambda)?;
    check_order(q)?;
    let SensitivityDomain::Pairs { n_individuals, n_periods } = leverage.domain else {
        return Err(Error::InvalidParameter("leverage must be keyed by pair".into()));
    };
    let scale = 2.0 / lambda;
    let mut scores = Vec::with_capacity(leverage.scores.len());
    for i in 0..n_individuals {
        let row = &leverage.scores[i * n_periods..(i + 1) * n_periods];
        for t in 0..n_periods {
            let window: f64 = row[t - t.min(q)..=t].iter().sum();
            scores.push((scale * window).min(1.0));
        }
    }
    Ok(SensitivityMap::new(leverage.domain, scores, leverage.fingerprint))
}

/// Per-individual OLSE_k sensitivities `u_i / (u_i + Σ_{i'≠i} l_{i'})`.
pub fn olsek_sensitivity_from_gram(gram: &IndividualGram) -> Result<Vec<f64>> {
    if gram.upper.iter().all(|&u| u <= 0.0) {
        return Err(Error::Degenerate(
            "every individual has an all-zero Gram matrix".into(),
        ));
    }
    let lower_sum: f64 = gram.lower.iter().sum();
    Ok(gram
        .upper
        .iter()
        .zip(&gram.lower)
        .map(|(&u, &l)| {
            if u <= 0.0 {
                0.0
            } else {
                let others = (lower_sum - l).max(0.0);
                u / (u + others)
            }
        })
        .collect())
}

/// GLSE_k individual sensitivities.
pub fn glsek_sensitivity(ds: &PanelDataset, lambda: f64, q: usize) -> Result<SensitivityMap> {
    glsek_sensitivity_from_gram(ds, &gram_extremes(ds), lambda, q)
}

pub fn glsek_sensitivity_from_gram(
    ds: &PanelDataset,
    gram: &IndividualGram,
    lambda: f64,
    q: usize,
) -> Result<SensitivityMap> {
    check_lambda(lambda)?;
    check_order(q)?;
    let scale = 2.0 * (q as f64 + 1.0) / lambda;
    let scores = olsek_sensitivity_from_gram(gram)?
        .into_iter()
        .map(|s| (scale * s).min(1.0))
        .collect();
    Ok(SensitivityMap::new(
        SensitivityDomain::Individuals {
            n_individuals: ds.n_individuals(),
        },
        scores,
        ds.fingerprint(),
    ))
}
