//! Synthetic panels, random queries and the adversarial lower-bound instance.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::objectives::{check_lambda, GlseKQuery, GlseQuery};
use crate::rng::{substream, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorDist {
    Gaussian,
    /// Cauchy with location 0 and scale 2.
    Cauchy,
}

impl std::str::FromStr for ErrorDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "cauchy" => Ok(Self::Cauchy),
            other => Err(Error::InvalidParameter(format!("unknown error distribution {other:?}"))),
        }
    }
}

impl std::fmt::Display for ErrorDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Cauchy => "cauchy",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub t: usize,
    pub d: usize,
    pub q: usize,
    pub lambda: f64,
    pub error_dist: ErrorDist,
    pub seed: u64,
    /// Multiplier on the innovations; 0 gives noiseless outcomes.
    pub noise_scale: f64,
    /// Pin the last feature to 1.
    pub intercept: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 500,
            t: 500,
            d: 10,
            q: 1,
            lambda: 0.2,
            error_dist: ErrorDist::Gaussian,
            seed: 0,
            noise_scale: 1.0,
            intercept: true,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.n == 0 || self.t == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("N, T and d must be >= 1".into()));
        }
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be >= 1".into()));
        }
        if self.intercept && self.d < 2 {
            return Err(Error::InvalidParameter("d must be >= 2 with an intercept column".into()));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::InvalidParameter("noise scale must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// A generated dataset together with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub dataset: PanelDataset,
    pub beta: Vec<f64>,
    pub rho: Vec<f64>,
    pub config: GenConfig,
}

impl SyntheticPanel {
    /// Generator metadata as `key=value` lines.
    pub fn write_truth<W: Write>(&self, mut w: W) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let c = &self.config;
        writeln!(w, "seed={}", c.seed)?;
        writeln!(w, "n={}", c.n)?;
        writeln!(w, "t={}", c.t)?;
        writeln!(w, "d={}", c.d)?;
        writeln!(w, "q={}", c.q)?;
        writeln!(w, "lambda={}", c.lambda)?;
        writeln!(w, "dist={}", c.error_dist)?;
        writeln!(w, "beta={}", join(&self.beta))?;
        writeln!(w, "rho={}", join(&self.rho))?;
        Ok(())
    }

    pub fn save_truth(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_truth(std::io::BufWriter::new(f))
    }
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn unit_vector(rng: &mut ChaCha20Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Direction uniform on the sphere, length uniform on `[0, 1 − λ]`.
fn random_rho(rng: &mut ChaCha20Rng, q: usize, lambda: f64) -> Vec<f64> {
    let len = rng.random_range(0.0..=1.0 - lambda);
    unit_vector(rng, q).into_iter().map(|x| len * x).collect()
}

fn random_query_from(rng: &mut ChaCha20Rng, d: usize, q: usize, lambda: f64) -> GlseQuery {
    let beta = (0..d).map(|_| normal(rng)).collect();
    let rho = random_rho(rng, q, lambda);
    GlseQuery { beta, rho }
}

fn innovation(rng: &mut ChaCha20Rng, dist: ErrorDist) -> f64 {
    match dist {
        ErrorDist::Gaussian => normal(rng),
        ErrorDist::Cauchy => {
            let u: f64 = rng.random();
            2.0 * (std::f64::consts::PI * (u - 0.5)).tan()
        }
    }
}

/// Panel with per-individual Gaussian features and AR(q) errors.
pub fn synthetic_panel(cfg: &GenConfig) -> Result<SyntheticPanel> {
    cfg.validate()?;
    let (n, t_len, d, q) = (cfg.n, cfg.t, cfg.d, cfg.q);
    let mut global = substream(cfg.seed, Stage::GenGlobal, 0);
    let GlseQuery { beta, rho } = random_query_from(&mut global, d, q, cfg.lambda);

    let blocks: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, Stage::GenIndividual, i as u64);
            let tau = rng.random_range(0.0..=5.0);
            let mean: Vec<f64> = unit_vector(&mut rng, d).into_iter().map(|v| tau * v).collect();
            let sd = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut x = Vec::with_capacity(t_len * d);
            let mut y = Vec::with_capacity(t_len);
            let mut e = Vec::with_capacity(t_len);
            for t in 0..t_len {
                let start = x.len();
                for m in &mean {
                    x.push(m + sd * normal(&mut rng));
                }
                if cfg.intercept {
                    x[start + d - 1] = 1.0;
                }
                let mut err = cfg.noise_scale * innovation(&mut rng, cfg.error_dist);
                for a in 1..=t.min(q) {
                    err += rho[a - 1] * e[t - a];
                }
                e.push(err);
                let fit: f64 = x[start..].iter().zip(&beta).map(|(u, v)| u * v).sum();
                y.push(fit + err);
            }
            (x, y)
        })
        .collect();

    let mut x = Vec::with_capacity(n * t_len * d);
    let mut y = Vec::with_capacity(n * t_len);
    for (bx, by) in blocks {
        x.extend(bx);
        y.extend(by);
    }
    let dataset = PanelDataset::new(n, t_len, d, x, y)?;
    Ok(SyntheticPanel {
        dataset,
        beta,
        rho,
        config: cfg.clone(),
    })
}

/// One random GLSE query drawn like the generator's parameters.
pub fn random_query(d: usize, q: usize, lambda: f64, seed: u64) -> Result<GlseQuery> {
    Ok(random_queries(d, q, lambda, 1, seed)?.remove(0))
}

/// `count` independent queries; query `j` uses its own substream.
pub fn random_queries(d: usize, q: usize, lambda: f64, count: usize, seed: u64) -> Result<Vec<GlseQuery>> {
    check_lambda(lambda)?;
    if d == 0 || q == 0 {
        return Err(Error::InvalidParameter("d and q must be >= 1".into()));
    }
    Ok((0..count)
        .map(|j| {
            let mut rng = substream(seed, Stage::Queries, j as u64);
            random_query_from(&mut rng, d, q, lambda)
        })
        .collect())
}

/// `count` GLSE_k queries of `k` independent tuples each.
pub fn random_k_queries(
    d: usize,
    q: usize,
    lambda: f64,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<GlseKQuery>> {
    check_lambda(lambda)?;
    if d == 0 || q == 0 || k == 0 {
        return Err(Error::InvalidParameter("d, q and k must be >= 1".into()));
    }
    (0..count)
        .map(|j| {
            let mut rng = substream(seed, Stage::Queries, j as u64);
            GlseKQuery::new((0..k).map(|_| random_query_from(&mut rng, d, q, lambda)).collect())
        })
        .collect()
}

/// Largest `N` accepted by [`lower_bound_instance`].
pub const LOWER_BOUND_MAX_N: usize = 15;

#[derive(Debug, Clone)]
pub struct LowerBoundInstance {
    pub dataset: PanelDataset,
    /// `certificates[i]` isolates individual `i` (0-based).
    pub certificates: Vec<GlseKQuery>,
}

/// `x_i = (4^i, 4^−i)`, `y_i = 0`, `T = 1`, with the two-tuple query at which
/// individual `i` carries more than half of the cost.
pub fn lower_bound_instance(n: usize) -> Result<LowerBoundInstance> {
    if n == 0 || n > LOWER_BOUND_MAX_N {
        return Err(Error::Overflow(n));
    }
    let pow = |i: usize| 4f64.powi(i as i32);
    let mut x = Vec::with_capacity(2 * n);
    for i in 1..=n {
        x.push(pow(i));
        x.push(1.0 / pow(i));
    }
    let dataset = PanelDataset::new(n, 1, 2, x, vec![0.0; n])?;
    let certificates = (1..=n)
        .map(|i| {
            GlseKQuery::new(vec![
                GlseQuery { beta: vec![1.0 / pow(i), 0.0], rho: vec![0.0] },
                GlseQuery { beta: vec![0.0, pow(i)], rho: vec![0.0] },
            ])
        })
        .collect::<Result<_>>()?;
    Ok(LowerBoundInstance { dataset, certificates })
}

/// Panel whose every individual Gram matrix `(Z^(i))ᵀ Z^(i)` is a multiple of
/// the identity, so the condition-number bound is 1. Needs `t ≥ d + 1`.
pub fn identity_gram_panel(n: usize, t: usize, d: usize, seed: u64) -> Result<PanelDataset> {
    if n == 0 || d == 0 || t < d + 1 {
        return Err(Error::InvalidParameter(format!(
            "identity-Gram panel needs N >= 1, d >= 1 and T >= d + 1 (got N={n}, T={t}, d={d})"
        )));
    }
    let mut x = Vec::with_capacity(n * t * d);
    let mut y = Vec::with_capacity(n * t);
    for i in 0..n {
        let mut rng = substream(seed, Stage::GenIndividual, i as u64);
        let scale = rng.random_range(0.5..2.0);
        let g = DMatrix::from_fn(t, d + 1, |_, _| normal(&mut rng));
        let basis = g.qr().q();
        for r in 0..t {
            for c in 0..d {
                x.push(scale * basis[(r, c)]);
            }
            y.push(scale * basis[(r, d)]);
        }
    }
    PanelDataset::new(n, t, d, x, y)
}
