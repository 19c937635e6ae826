//! Empirical-error benchmark: coreset vs. uniform sampling on shared random queries.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coresets::{cglse_k, cglse_with_sensitivity, uniform_coreset, CoresetConfig};
use crate::datagen::{random_k_queries, random_queries};
use crate::dataset::PanelDataset;
use crate::error::{Error, Result};
use crate::objectives::{
    coreset_glse_objective, coreset_glsek_objective, glse_total, glsek_total, GlseKQuery, GlseQuery,
};
use crate::sensitivity::glse_sensitivity;
use crate::solver::{irls_glse_fit, SolverConfig};
use crate::weighted::WeightedCoreset;

/// `|ψ_S/ψ − 1|`, or `None` when `ψ` is zero or not finite.
pub fn empirical_error(ds: &PanelDataset, coreset: &WeightedCoreset, query: &GlseQuery) -> Option<f64> {
    ratio_error(coreset_glse_objective(coreset, ds, query), glse_total(ds, query))
}

/// [`empirical_error`] for clustered queries.
pub fn empirical_error_k(ds: &PanelDataset, coreset: &WeightedCoreset, query: &GlseKQuery) -> Option<f64> {
    ratio_error(coreset_glsek_objective(coreset, ds, query), glsek_total(ds, query))
}

fn ratio_error(approx: f64, full: f64) -> Option<f64> {
    if full > 0.0 && full.is_finite() {
        Some((approx / full - 1.0).abs())
    } else {
        None
    }
}

/// Summary of a batch of empirical errors (population standard deviation).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    pub max: f64,
    pub avg: f64,
    pub std: f64,
    pub rmse: f64,
    pub count: usize,
    /// Queries skipped because the full objective was zero.
    pub undefined: usize,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64], undefined: usize) -> Self {
        if errors.is_empty() {
            return Self { undefined, ..Self::default() };
        }
        let n = errors.len() as f64;
        let avg = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - avg) * (e - avg)).sum::<f64>() / n;
        let mean_sq = errors.iter().map(|e| e * e).sum::<f64>() / n;
        Self {
            max: errors.iter().copied().fold(0.0, f64::max),
            avg,
            std: var.sqrt(),
            rmse: mean_sq.sqrt(),
            count: errors.len(),
            undefined,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub epsilons: Vec<f64>,
    pub n_queries: usize,
    pub seeds: Vec<u64>,
    pub lambda: f64,
    pub q: usize,
    pub delta: f64,
    pub fl_constant: f64,
    /// Pinned CGLSE draw count (Γ for the clustered path).
    pub size_override: Option<usize>,
    pub period_size_override: Option<usize>,
    /// `Some(k)` benchmarks GLSE_k with `k`-tuple queries.
    pub k: Option<usize>,
    /// Time IRLS fits for T_S/T_X; otherwise time the query evaluations.
    pub solve: bool,
    /// Keep per-query errors in the report.
    pub raw: bool,
    pub query_seed: u64,
    pub label: String,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            n_queries: 100,
            seeds: vec![0],
            lambda: 0.2,
            q: 1,
            delta: 0.1,
            fl_constant: 1.0,
            size_override: None,
            period_size_override: None,
            k: None,
            solve: false,
            raw: false,
            query_seed: 0,
            label: "dataset".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawErrors {
    pub cglse: Vec<f64>,
    pub uniform: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub epsilon: f64,
    pub seed: u64,
    /// Distinct pairs in the coreset; the uniform baseline uses the same count.
    pub size: usize,
    /// Draws before merging duplicates.
    pub draws: usize,
    pub cglse: ErrorStats,
    pub uniform: ErrorStats,
    /// Construction seconds, including the one-time sensitivity computation.
    pub t_c: f64,
    pub t_s: f64,
    pub t_x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawErrors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub label: String,
    pub n: usize,
    pub t: usize,
    pub d: usize,
    pub q: usize,
    pub lambda: f64,
    #[serde(default)]
    pub k: Option<usize>,
    pub n_queries: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<BenchRow>,
}

enum Queries {
    Glse(Vec<GlseQuery>),
    Glsek(Vec<GlseKQuery>),
}

impl Queries {
    fn full(&self, ds: &PanelDataset) -> Vec<f64> {
        match self {
            Queries::Glse(qs) => qs.par_iter().map(|q| glse_total(ds, q)).collect(),
            Queries::Glsek(qs) => qs.par_iter().map(|q| glsek_total(ds, q)).collect(),
        }
    }

    fn on_coreset(&self, ds: &PanelDataset, c: &WeightedCoreset) -> Vec<f64> {
        match self {
            Queries::Glse(qs) => qs.par_iter().map(|q| coreset_glse_objective(c, ds, q)).collect(),
            Queries::Glsek(qs) => qs.par_iter().map(|q| coreset_glsek_objective(c, ds, q)).collect(),
        }
    }
}

fn errors(approx: &[f64], full: &[f64]) -> (Vec<f64>, usize) {
    let mut out = Vec::with_capacity(full.len());
    let mut undefined = 0;
    for (&a, &f) in approx.iter().zip(full) {
        match ratio_error(a, f) {
            Some(e) => out.push(e),
            None => undefined += 1,
        }
    }
    (out, undefined)
}

fn seconds_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}

/// Runs the protocol for every `(ε, seed)`: build the coreset, build a uniform
/// sample of the same pair count, and score both on shared queries.
pub fn run_benchmark(ds: &PanelDataset, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.epsilons.is_empty() || cfg.seeds.is_empty() || cfg.n_queries == 0 {
        return Err(Error::InvalidParameter(
            "need at least one ε, one seed and one query".into(),
        ));
    }
    let d = ds.n_features();
    let queries = match cfg.k {
        None => Queries::Glse(random_queries(d, cfg.q, cfg.lambda, cfg.n_queries, cfg.query_seed)?),
        Some(k) => Queries::Glsek(random_k_queries(d, cfg.q, cfg.lambda, k, cfg.n_queries, cfg.query_seed)?),
    };
    let solver = SolverConfig {
        lambda: cfg.lambda,
        q: cfg.q,
        ..SolverConfig::default()
    };

    let start = Instant::now();
    let full = queries.full(ds);
    let mut t_x = seconds_since(start);
    if cfg.solve {
        let start = Instant::now();
        irls_glse_fit(ds, &WeightedCoreset::full(ds), &solver)?;
        t_x = seconds_since(start);
    }

    let start = Instant::now();
    let sensitivity = match cfg.k {
        None => Some(glse_sensitivity(ds, cfg.lambda, cfg.q)?),
        Some(_) => None,
    };
    let t_sens = seconds_since(start);

    let mut rows = Vec::with_capacity(cfg.epsilons.len() * cfg.seeds.len());
    for &epsilon in &cfg.epsilons {
        for &seed in &cfg.seeds {
            let ccfg = CoresetConfig {
                epsilon,
                delta: cfg.delta,
                lambda: cfg.lambda,
                q: cfg.q,
                k: cfg.k.unwrap_or(1),
                fl_constant: cfg.fl_constant,
                size_override: cfg.size_override,
                period_size_override: cfg.period_size_override,
                seed,
            };
            let start = Instant::now();
            let coreset = match &sensitivity {
                Some(s) => cglse_with_sensitivity(ds, &ccfg, s)?,
                None => cglse_k(ds, &ccfg)?,
            };
            let t_c = seconds_since(start) + t_sens;
            let size = coreset.len().min(ds.n_observed());
            let uniform = uniform_coreset(ds, size, seed)?;

            let start = Instant::now();
            let on_cglse = queries.on_coreset(ds, &coreset);
            let mut t_s = seconds_since(start);
            if cfg.solve {
                let start = Instant::now();
                irls_glse_fit(ds, &coreset, &solver)?;
                t_s = seconds_since(start);
            }
            let on_uniform = queries.on_coreset(ds, &uniform);

            let (err_c, und_c) = errors(&on_cglse, &full);
            let (err_u, und_u) = errors(&on_uniform, &full);
            log::info!("ε={epsilon} seed={seed}: {size} pairs");
            rows.push(BenchRow {
                epsilon,
                seed,
                size,
                draws: coreset.meta.draws.unwrap_or(size),
                cglse: ErrorStats::from_errors(&err_c, und_c),
                uniform: ErrorStats::from_errors(&err_u, und_u),
                t_c,
                t_s,
                t_x,
                raw: cfg.raw.then_some(RawErrors { cglse: err_c, uniform: err_u }),
            });
        }
    }

    Ok(BenchReport {
        label: cfg.label.clone(),
        n: ds.n_individuals(),
        t: ds.n_periods(),
        d,
        q: cfg.q,
        lambda: cfg.lambda,
        k: cfg.k,
        n_queries: cfg.n_queries,
        seeds: cfg.seeds.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::InvalidParameter(format!("unknown report format {other:?}"))),
        }
    }
}

impl BenchReport {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn emit<W: Write>(&self, format: ReportFormat, mut w: W) -> Result<()> {
        match format {
            ReportFormat::Json => {
                serde_json::to_writer_pretty(&mut w, self)?;
                writeln!(w)?;
            }
            ReportFormat::Csv => {
                writeln!(
                    w,
                    "dataset,epsilon,seed,method,max,avg,std,rmse,count,undefined,size,t_c,t_s,t_x"
                )?;
                for r in &self.rows {
                    for (method, s) in [("cglse", &r.cglse), ("uniform", &r.uniform)] {
                        writeln!(
                            w,
                            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                            self.label, r.epsilon, r.seed, method, s.max, s.avg, s.std, s.rmse,
                            s.count, s.undefined, r.size, r.t_c, r.t_s, r.t_x
                        )?;
                    }
                }
            }
            ReportFormat::Markdown => {
                writeln!(
                    w,
                    "| ε | seed | max CGLSE | max Uni | avg/std/RMSE CGLSE | avg/std/RMSE Uni | size | T_C | T_C+T_S | T_X (s) |"
                )?;
                writeln!(w, "|---|---|---|---|---|---|---|---|---|---|")?;
                for r in &self.rows {
                    let triple = |s: &ErrorStats| format!("{:.3}/{:.3}/{:.3}", s.avg, s.std, s.rmse);
                    writeln!(
                        w,
                        "| {} | {} | {:.3} | {:.3} | {} | {} | {} | {:.3} | {:.3} | {:.3} |",
                        r.epsilon,
                        r.seed,
                        r.cglse.max,
                        r.uniform.max,
                        triple(&r.cglse),
                        triple(&r.uniform),
                        r.size,
                        r.t_c,
                        r.t_c + r.t_s,
                        r.t_x
                    )?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{synthetic_panel, GenConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ratio_arithmetic() {
        assert_abs_diff_eq!(ratio_error(1.1, 1.0).unwrap(), 0.1, epsilon = 1e-12);
        assert_eq!(ratio_error(1.0, 0.0), None);
    }

    #[test]
    fn stats_of_two_errors() {
        let s = ErrorStats::from_errors(&[0.3, 0.4], 0);
        assert_abs_diff_eq!(s.rmse, 0.35355339, epsilon = 1e-8);
        assert_abs_diff_eq!(s.avg, 0.35, epsilon = 1e-12);
        assert_abs_diff_eq!(s.std, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(s.rmse * s.rmse, s.avg * s.avg + s.std * s.std, epsilon = 1e-12);
        assert_eq!(s.max, 0.4);
    }

    #[test]
    fn full_coreset_has_zero_error() {
        let p = synthetic_panel(&GenConfig { n: 4, t: 5, d: 3, ..Default::default() }).unwrap();
        let full = WeightedCoreset::full(&p.dataset);
        for q in random_queries(3, 1, 0.2, 5, 0).unwrap() {
            assert_abs_diff_eq!(empirical_error(&p.dataset, &full, &q).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    fn small_report(raw: bool, k: Option<usize>) -> BenchReport {
        let p = synthetic_panel(&GenConfig { n: 6, t: 6, d: 3, seed: 3, ..Default::default() }).unwrap();
        let cfg = BenchConfig {
            epsilons: vec![0.2, 0.4],
            n_queries: 5,
            seeds: vec![1, 2],
            size_override: Some(20),
            period_size_override: Some(4),
            k,
            raw,
            solve: true,
            ..Default::default()
        };
        run_benchmark(&p.dataset, &cfg).unwrap()
    }

    #[test]
    fn report_shape_and_invariants() {
        let r = small_report(true, None);
        assert_eq!(r.rows.len(), 4);
        for row in &r.rows {
            for s in [&row.cglse, &row.uniform] {
                assert!(s.max >= s.avg && s.avg >= 0.0);
                assert!((s.rmse * s.rmse - s.avg * s.avg - s.std * s.std).abs() < 1e-9);
            }
            assert!(row.t_c >= 0.0 && row.t_s >= 0.0 && row.t_x >= 0.0);
            let raw = row.raw.as_ref().unwrap();
            assert_eq!(ErrorStats::from_errors(&raw.cglse, row.cglse.undefined), row.cglse);
            assert_eq!(row.draws, 20);
        }
    }

    #[test]
    fn clustered_path_runs() {
        let r = small_report(false, Some(2));
        assert_eq!(r.k, Some(2));
        assert!(r.rows.iter().all(|row| row.raw.is_none() && row.cglse.count == 5));
    }

    #[test]
    fn formats() {
        let r = small_report(false, None);
        let mut json = Vec::new();
        r.emit(ReportFormat::Json, &mut json).unwrap();
        assert_eq!(BenchReport::from_json(std::str::from_utf8(&json).unwrap()).unwrap(), r);

        let mut csv = Vec::new();
        r.emit(ReportFormat::Csv, &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 2 * r.rows.len());

        let mut md = Vec::new();
        r.emit(ReportFormat::Markdown, &mut md).unwrap();
        let md = String::from_utf8(md).unwrap();
        assert!(md.starts_with("| ε | seed | max CGLSE | max Uni |"));
        assert_eq!(md.lines().count(), 2 + r.rows.len());
        assert!("md".parse::<ReportFormat>().is_ok());
    }
}
