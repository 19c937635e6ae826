//! Panel-data container, CSV ingestion and per-individual Gram diagnostics.
//!
//! A panel holds `N` individuals observed over `T` periods with `d` features.
//! Observations absent from the input are stored as masked pairs whose
//! features and outcome are exactly zero, so they contribute nothing to any
//! least-squares residual.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{sym_extreme_eigenvalues, RANK_RTOL};

/// Dense `N × T × d` panel with a missing-observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    n_individuals: usize,
    n_periods: usize,
    n_features: usize,
    /// Row-major `[i][t][k]`.
    x: Vec<f64>,
    /// Row-major `[i][t]`.
    y: Vec<f64>,
    missing: Vec<bool>,
    individual_ids: Vec<i64>,
}

impl PanelDataset {
    /// Fully observed panel from row-major `x` (`N·T·d`) and `y` (`N·T`).
    pub fn new(n: usize, t: usize, d: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let missing = vec![false; n * t];
        Self::with_mask(n, t, d, x, y, missing)
    }

    /// Panel with an explicit mask (`true` = missing). Masked entries are zeroed.
    pub fn with_mask(
        n: usize,
        t: usize,
        d: usize,
        mut x: Vec<f64>,
        mut y: Vec<f64>,
        missing: Vec<bool>,
    ) -> Result<Self> {
        if n == 0 || t == 0 || d == 0 {
            return Err(Error::Shape(format!(
                "need N, T, d >= 1 (got N={n}, T={t}, d={d})"
            )));
        }
        if x.len() != n * t * d || y.len() != n * t || missing.len() != n * t {
            return Err(Error::Shape(format!(
                "expected {} features, {} outcomes and {} mask entries; got {}, {}, {}",
                n * t * d,
                n * t,
                n * t,
                x.len(),
                y.len(),
                missing.len()
            )));
        }
        for (p, &m) in missing.iter().enumerate() {
            if m {
                y[p] = 0.0;
                x[p * d..(p + 1) * d].iter_mut().for_each(|v| *v = 0.0);
            }
        }
        if let Some(p) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "outcome of individual {}, time {}",
                p / t,
                p % t + 1
            )));
        }
        if let Some(p) = x.iter().position(|v| !v.is_finite()) {
            let pair = p / d;
            return Err(Error::NonFinite(format!(
                "feature {} of individual {}, time {}",
                p % d + 1,
                pair / t,
                pair % t + 1
            )));
        }
        Ok(Self {
            n_individuals: n,
            n_periods: t,
            n_features: d,
            x,
            y,
            missing,
            individual_ids: (1..=n as i64).collect(),
        })
    }

    /// Replace the external individual ids (one per individual, strictly increasing).
    pub fn with_individual_ids(mut self, ids: Vec<i64>) -> Result<Self> {
        if ids.len() != self.n_individuals || ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Shape(
                "individual ids must be strictly increasing, one per individual".into(),
            ));
        }
        self.individual_ids = ids;
        Ok(self)
    }

    pub fn n_individuals(&self) -> usize {
        self.n_individuals
    }

    pub fn n_periods(&self) -> usize {
        self.n_periods
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// `N · T`.
    pub fn n_pairs(&self) -> usize {
        self.n_individuals * self.n_periods
    }

    /// Number of pairs that are actually observed.
    pub fn n_observed(&self) -> usize {
        self.missing.iter().filter(|m| !**m).count()
    }

    pub fn individual_ids(&self) -> &[i64] {
        &self.individual_ids
    }

    /// Internal index of an external individual id.
    pub fn individual_index(&self, id: i64) -> Option<usize> {
        self.individual_ids.binary_search(&id).ok()
    }

    #[inline]
    pub fn x(&self, i: usize, t: usize) -> &[f64] {
        let p = i * self.n_periods + t;
        &self.x[p * self.n_features..(p + 1) * self.n_features]
    }

    #[inline]
    pub fn y(&self, i: usize, t: usize) -> f64 {
        self.y[i * self.n_periods + t]
    }

    #[inline]
    pub fn is_missing(&self, i: usize, t: usize) -> bool {
        self.missing[i * self.n_periods + t]
    }

    /// `y_it − x_itᵀβ`; zero for masked pairs.
    #[inline]
    pub fn residual(&self, i: usize, t: usize, beta: &[f64]) -> f64 {
        let x = self.x(i, t);
        self.y(i, t) - x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
    }

    /// The `T × (d+1)` matrix `Z^(i)` with rows `(x_it, y_it)`.
    pub fn z_block(&self, i: usize) -> DMatrix<f64> {
        let d = self.n_features;
        DMatrix::from_fn(self.n_periods, d + 1, |t, c| {
            if c < d {
                self.x(i, t)[c]
            } else {
                self.y(i, t)
            }
        })
    }

    /// The stacked `NT × (d+1)` matrix `Z` with row `i·T + t` equal to `(x_it, y_it)`.
    pub fn z_matrix(&self) -> DMatrix<f64> {
        let d = self.n_features;
        let t_len = self.n_periods;
        DMatrix::from_fn(self.n_pairs(), d + 1, |r, c| {
            let (i, t) = (r / t_len, r % t_len);
            if c < d {
                self.x(i, t)[c]
            } else {
                self.y(i, t)
            }
        })
    }

    /// Single-individual panel (`N = 1`) holding individual `i`.
    pub fn individual(&self, i: usize) -> PanelDataset {
        let t = self.n_periods;
        let d = self.n_features;
        let p0 = i * t;
        PanelDataset {
            n_individuals: 1,
            n_periods: t,
            n_features: d,
            x: self.x[p0 * d..(p0 + t) * d].to_vec(),
            y: self.y[p0..p0 + t].to_vec(),
            missing: self.missing[p0..p0 + t].to_vec(),
            individual_ids: vec![self.individual_ids[i]],
        }
    }

    /// Content hash used to tie cached sensitivities to their dataset.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        (self.n_individuals, self.n_periods, self.n_features).hash(&mut h);
        for v in self.x.iter().chain(&self.y) {
            v.to_bits().hash(&mut h);
        }
        self.missing.hash(&mut h);
        self.individual_ids.hash(&mut h);
        h.finish()
    }

    /// Read the `individual,time,x_1,...,x_d,y` CSV format.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let cols = header.len();
        if cols < 4
            || &header[0] != "individual"
            || &header[1] != "time"
            || &header[cols - 1] != "y"
        {
            return Err(Error::Parse {
                line: 1,
                message: "header must be `individual,time,x_1,...,x_d,y` with d >= 1".into(),
            });
        }
        let d = cols - 3;

        let mut rows: BTreeMap<(i64, usize), (Vec<f64>, f64)> = BTreeMap::new();
        for record in rdr.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != cols {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {cols} fields, found {}", record.len()),
                });
            }
            let individual: i64 = record[0].parse().map_err(|_| Error::Parse {
                line,
                message: format!("individual id `{}` is not an integer", &record[0]),
            })?;
            let time: usize = match record[1].parse() {
                Ok(t) if t >= 1 => t,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("time `{}` is not a positive integer", &record[1]),
                    })
                }
            };
            let mut values = Vec::with_capacity(d + 1);
            for k in 2..cols {
                let v: f64 = record[k].parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("`{}` is not a number", &record[k]),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "column `{}` on line {line}",
                        &header[k]
                    )));
                }
                values.push(v);
            }
            let y = values.pop().expect("d >= 1");
            if rows.insert((individual, time), (values, y)).is_some() {
                return Err(Error::DuplicateKey {
                    line,
                    individual,
                    time,
                });
            }
        }
        if rows.is_empty() {
            return Err(Error::Shape("no observations".into()));
        }

        let ids: Vec<i64> = rows
            .keys()
            .map(|(i, _)| *i)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let n = ids.len();
        let t_len = rows.keys().map(|(_, t)| *t).max().expect("non-empty");
        let mut x = vec![0.0; n * t_len * d];
        let mut y = vec![0.0; n * t_len];
        let mut missing = vec![true; n * t_len];
        for ((id, time), (xs, yv)) in rows {
            let i = ids.binary_search(&id).expect("id collected above");
            let p = i * t_len + (time - 1);
            x[p * d..(p + 1) * d].copy_from_slice(&xs);
            y[p] = yv;
            missing[p] = false;
        }
        Self::with_mask(n, t_len, d, x, y, missing)?.with_individual_ids(ids)
    }

    /// Write observed pairs in the CSV format read by [`PanelDataset::read_csv`].
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.n_features;
        write!(w, "individual,time")?;
        for k in 1..=d {
            write!(w, ",x_{k}")?;
        }
        writeln!(w, ",y")?;
        for i in 0..self.n_individuals {
            for t in 0..self.n_periods {
                if self.is_missing(i, t) {
                    continue;
                }
                write!(w, "{},{}", self.individual_ids[i], t + 1)?;
                for v in self.x(i, t) {
                    write!(w, ",{v}")?;
                }
                writeln!(w, ",{}", self.y(i, t))?;
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Extreme eigenvalues of each individual's `(d+1) × (d+1)` Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IndividualGram {
    /// `u_i = λ_max((Z^(i))ᵀ Z^(i))`.
    pub upper: Vec<f64>,
    /// `l_i = λ_min((Z^(i))ᵀ Z^(i))`.
    pub lower: Vec<f64>,
}

impl IndividualGram {
    /// Whether `l_i` is numerically zero relative to `u_i`.
    pub fn is_rank_deficient(&self, i: usize) -> bool {
        self.lower[i] <= RANK_RTOL * self.upper[i]
    }
}

pub fn gram_extremes(ds: &PanelDataset) -> IndividualGram {
    let (upper, lower): (Vec<f64>, Vec<f64>) = (0..ds.n_individuals())
        .into_par_iter()
        .map(|i| {
            let z = ds.z_block(i);
            sym_extreme_eigenvalues(z.transpose() * &z)
        })
        .unzip();
    IndividualGram { upper, lower }
}

/// Smallest `M` for which the panel is M-bounded: `max_i u_i / l_i`, or
/// infinity when some individual's Gram matrix is singular.
pub fn m_bound(ds: &PanelDataset) -> f64 {
    m_bound_from(&gram_extremes(ds))
}

pub fn m_bound_from(gram: &IndividualGram) -> f64 {
    let mut m: f64 = 1.0;
    for i in 0..gram.upper.len() {
        if gram.is_rank_deficient(i) {
            return f64::INFINITY;
        }
        m = m.max(gram.upper[i] / gram.lower[i]);
    }
    m
}
