//! Coreset constructions.
//!
//! * [`cglse`]: importance sampling of individual-time pairs proportional to
//!   GLSE sensitivities, weight `𝒢 / (M · s(i,t))` per draw.
//! * [`cglse_k`]: two stages. Individuals are sampled by their GLSE_k
//!   sensitivity, then [`cglse`] runs inside each selected individual.
//! * [`uniform_coreset`]: the uniform baseline.
//! * [`caratheodory_olse_coreset`]: an exact OLSE coreset of size at most
//!   `(d+1)² + 1`.

mod caratheodory;

pub use caratheodory::{caratheodory_olse_coreset, caratheodory_size_bound};

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::{gram_extremes, m_bound_from, PanelDataset};
use crate::error::{Error, Result};
use crate::objectives::check_lambda;
use crate::rng::{substream, Stage};
use crate::sensitivity::{
    glse_sensitivity, glsek_sensitivity_from_gram, SensitivityDomain, SensitivityMap,
};
use crate::weighted::{CoresetEntry, CoresetMeta, WeightedCoreset};

/// Parameters shared by the sampling-based constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoresetConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub lambda: f64,
    pub q: usize,
    /// Number of parameter tuples (GLSE_k only).
    pub k: usize,
    /// Multiplier on the sample-size formula, whose constant is unspecified.
    pub fl_constant: f64,
    /// Explicit draw count `M` (for [`cglse_k`]: the individual count `Γ`).
    pub size_override: Option<usize>,
    /// Explicit per-individual draw count for the second stage of [`cglse_k`].
    pub period_size_override: Option<usize>,
    pub seed: u64,
}

impl Default for CoresetConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.3,
            delta: 0.1,
            lambda: 0.2,
            q: 1,
            k: 1,
            fl_constant: 1.0,
            size_override: None,
            period_size_override: None,
            seed: 0,
        }
    }
}

impl CoresetConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1)")))
            }
        };
        unit("ε", self.epsilon)?;
        unit("δ", self.delta)?;
        check_lambda(self.lambda)?;
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if !(self.fl_constant.is_finite() && self.fl_constant > 0.0) {
            return Err(Error::InvalidParameter("fl_constant must be positive".into()));
        }
        if self.size_override == Some(0) || self.period_size_override == Some(0) {
            return Err(Error::InvalidParameter("size overrides must be >= 1".into()));
        }
        Ok(())
    }

    fn meta(&self, method: &str) -> CoresetMeta {
        CoresetMeta {
            method: Some(method.to_string()),
            epsilon: Some(self.epsilon),
            delta: Some(self.delta),
            lambda: Some(self.lambda),
            q: Some(self.q),
            k: Some(self.k),
            seed: Some(self.seed),
            total_sensitivity: None,
            draws: None,
        }
    }
}

/// Pseudo-dimension bound used for GLSE: `(q + d) · q · d`.
pub fn glse_dim(q: usize, d: usize) -> usize {
    (q + d) * q * d
}

/// Pseudo-dimension bound used for GLSE_k: `k² · q² · (q + d) · d²`.
pub fn glsek_dim(k: usize, q: usize, d: usize) -> usize {
    k * k * q * q * (q + d) * d * d
}

const MAX_DRAWS: f64 = 1e12;

/// `⌈c · ε⁻² · 𝒢 · (dim · ln 𝒢 + ln(1/δ))⌉`, at least 1; `size_override` wins.
/// `ln 𝒢` is clamped at zero for `𝒢 ≤ 1`.
pub fn fl_sample_size(cfg: &CoresetConfig, total_sensitivity: f64, dim: usize) -> Result<usize> {
    if let Some(m) = cfg.size_override {
        return Ok(m);
    }
    if !(total_sensitivity > 0.0 && total_sensitivity.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "total sensitivity {total_sensitivity} must be positive"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dim must be >= 1".into()));
    }
    let log_g = total_sensitivity.ln().max(0.0);
    let m = cfg.fl_constant / (cfg.epsilon * cfg.epsilon)
        * total_sensitivity
        * (dim as f64 * log_g + (1.0 / cfg.delta).ln());
    let m = m.ceil().max(1.0);
    if m > MAX_DRAWS {
        return Err(Error::InvalidParameter(format!(
            "sample size {m:.3e} is impractically large; set a size override or lower fl_constant"
        )));
    }
    Ok(m as usize)
}

/// `m` i.i.d. draws with probability `s/𝒢`, weight `𝒢/(m·s)` each, merged.
fn sample_pairs<R: Rng>(
    n: usize,
    t_len: usize,
    sens: &SensitivityMap,
    m: usize,
    rng: &mut R,
) -> Result<WeightedCoreset> {
    let total = sens.total;
    let dist = WeightedIndex::new(&sens.scores)
        .map_err(|_| Error::Degenerate("every pair has zero sensitivity".into()))?;
    let draws = (0..m).map(|_| {
        let p = dist.sample(rng);
        CoresetEntry {
            individual: p / t_len,
            period: p % t_len,
            weight: total / (m as f64 * sens.scores[p]),
        }
    });
    WeightedCoreset::merged(n, t_len, draws.collect::<Vec<_>>())
}

/// GLSE coreset: sensitivity computation followed by importance sampling.
pub fn cglse(ds: &PanelDataset, cfg: &CoresetConfig) -> Result<WeightedCoreset> {
    cfg.validate()?;
    let sens = glse_sensitivity(ds, cfg.lambda, cfg.q)?;
    cglse_with_sensitivity(ds, cfg, &sens)
}

/// [`cglse`] with precomputed sensitivities (must belong to `ds`).
pub fn cglse_with_sensitivity(
    ds: &PanelDataset,
    cfg: &CoresetConfig,
    sens: &SensitivityMap,
) -> Result<WeightedCoreset> {
    cfg.validate()?;
    sens.ensure_matches(ds)?;
    if !matches!(sens.domain, SensitivityDomain::Pairs { .. }) {
        return Err(Error::InvalidParameter("pair sensitivities required".into()));
    }
    if sens.total <= 0.0 {
        return Err(Error::Degenerate("every pair has zero sensitivity".into()));
    }
    let m = fl_sample_size(cfg, sens.total, glse_dim(cfg.q, ds.n_features()))?;
    let mut rng = substream(cfg.seed, Stage::PairDraws, 0);
    let coreset = sample_pairs(ds.n_individuals(), ds.n_periods(), sens, m, &mut rng)?;
    let mut meta = cfg.meta("cglse");
    meta.k = None;
    meta.total_sensitivity = Some(sens.total);
    meta.draws = Some(m);
    Ok(coreset.with_meta(meta))
}

/// GLSE_k coreset (two-stage construction).
pub fn cglse_k(ds: &PanelDataset, cfg: &CoresetConfig) -> Result<WeightedCoreset> {
    cfg.validate()?;
    let gram = gram_extremes(ds);
    let m_bound = m_bound_from(&gram);
    if m_bound.is_infinite() {
        log::warn!("dataset is not M-bounded for any finite M; GLSE_k guarantee does not apply");
    }
    let sens = glsek_sensitivity_from_gram(ds, &gram, cfg.lambda, cfg.q)?;
    let d = ds.n_features();
    let gamma = fl_sample_size(cfg, sens.total, glsek_dim(cfg.k, cfg.q, d))?;

    // stage 1: individuals
    let dist = WeightedIndex::new(&sens.scores)
        .map_err(|_| Error::Degenerate("every individual has zero sensitivity".into()))?;
    let mut rng = substream(cfg.seed, Stage::IndividualDraws, 0);
    let mut individual_weight: BTreeMap<usize, f64> = BTreeMap::new();
    for _ in 0..gamma {
        let i = dist.sample(&mut rng);
        *individual_weight.entry(i).or_insert(0.0) += sens.total / (gamma as f64 * sens.scores[i]);
    }

    // stage 2: periods within each selected individual
    let stage_two = CoresetConfig {
        epsilon: cfg.epsilon / 3.0,
        delta: 1.0 / (20.0 * gamma as f64),
        size_override: cfg.period_size_override,
        ..cfg.clone()
    };
    let per_individual: Vec<Result<Vec<CoresetEntry>>> = individual_weight
        .par_iter()
        .map(|(&i, &w_individual)| {
            let sub = ds.individual(i);
            let sub_sens = glse_sensitivity(&sub, stage_two.lambda, stage_two.q)?;
            let m = fl_sample_size(&stage_two, sub_sens.total, glse_dim(stage_two.q, d))?;
            let mut rng = substream(cfg.seed, Stage::PeriodDraws, i as u64);
            let local = sample_pairs(1, ds.n_periods(), &sub_sens, m, &mut rng)?;
            Ok(local
                .entries()
                .iter()
                .map(|e| CoresetEntry {
                    individual: i,
                    period: e.period,
                    weight: w_individual * e.weight,
                })
                .collect())
        })
        .collect();
    let mut entries = Vec::new();
    for part in per_individual {
        entries.extend(part?);
    }
    let mut meta = cfg.meta("cglse-k");
    meta.total_sensitivity = Some(sens.total);
    meta.draws = Some(gamma);
    Ok(WeightedCoreset::new(ds.n_individuals(), ds.n_periods(), entries)?.with_meta(meta))
}

/// `m` distinct observed pairs drawn uniformly without replacement, each with weight `NT/m`.
pub fn uniform_coreset(ds: &PanelDataset, m: usize, seed: u64) -> Result<WeightedCoreset> {
    let support: Vec<usize> = (0..ds.n_pairs())
        .filter(|&p| !ds.is_missing(p / ds.n_periods(), p % ds.n_periods()))
        .collect();
    if m == 0 || m > support.len() {
        return Err(Error::InvalidSize {
            requested: m,
            available: support.len(),
        });
    }
    let mut rng = substream(seed, Stage::Uniform, 0);
    let weight = ds.n_pairs() as f64 / m as f64;
    let t_len = ds.n_periods();
    let entries = rand::seq::index::sample(&mut rng, support.len(), m)
        .into_iter()
        .map(|k| CoresetEntry {
            individual: support[k] / t_len,
            period: support[k] % t_len,
            weight,
        })
        .collect();
    let meta = CoresetMeta {
        method: Some("uniform".into()),
        seed: Some(seed),
        draws: Some(m),
        ..CoresetMeta::default()
    };
    Ok(WeightedCoreset::new(ds.n_individuals(), t_len, entries)?.with_meta(meta))
}
