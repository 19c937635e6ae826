//! Weighted subsets of individual-time pairs.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::dataset::PanelDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoresetEntry {
    /// Internal (0-based) individual index.
    pub individual: usize,
    /// Internal (0-based) period index.
    pub period: usize,
    pub weight: f64,
}

/// Provenance recorded alongside a coreset and written as CSV header comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoresetMeta {
    pub method: Option<String>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub q: Option<usize>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    /// Total sensitivity `𝒢` of the sampling distribution.
    pub total_sensitivity: Option<f64>,
    /// Number of i.i.d. draws before duplicate merging (`M`, or `Γ` for stage one).
    pub draws: Option<usize>,
}

/// A weighted set `S ⊆ [N] × [T]` with distinct pairs, sorted by `(individual, period)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCoreset {
    n_individuals: usize,
    n_periods: usize,
    entries: Vec<CoresetEntry>,
    pub meta: CoresetMeta,
}

impl WeightedCoreset {
    /// Build from distinct entries; rejects duplicates, negative weights and
    /// out-of-range indices.
    pub fn new(n_individuals: usize, n_periods: usize, mut entries: Vec<CoresetEntry>) -> Result<Self> {
        for e in &entries {
            check_entry(e, n_individuals, n_periods)?;
        }
        entries.sort_by_key(|e| (e.individual, e.period));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].individual, w[0].period) == (w[1].individual, w[1].period))
        {
            return Err(Error::InvalidParameter(format!(
                "pair ({}, {}) appears twice in coreset",
                w[0].individual,
                w[0].period + 1
            )));
        }
        Ok(Self {
            n_individuals,
            n_periods,
            entries,
            meta: CoresetMeta::default(),
        })
    }

    /// Build from possibly repeated draws, summing the weights of repeated pairs.
    pub fn merged<I>(n_individuals: usize, n_periods: usize, draws: I) -> Result<Self>
    where
        I: IntoIterator<Item = CoresetEntry>,
    {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in draws {
            check_entry(&e, n_individuals, n_periods)?;
            *acc.entry((e.individual, e.period)).or_insert(0.0) += e.weight;
        }
        let entries = acc
            .into_iter()
            .map(|((individual, period), weight)| CoresetEntry {
                individual,
                period,
                weight,
            })
            .collect();
        Ok(Self {
            n_individuals,
            n_periods,
            entries,
            meta: CoresetMeta::default(),
        })
    }

    /// Every pair of the dataset with weight 1.
    pub fn full(ds: &PanelDataset) -> Self {
        let entries = (0..ds.n_individuals())
            .flat_map(|i| {
                (0..ds.n_periods()).map(move |t| CoresetEntry {
                    individual: i,
                    period: t,
                    weight: 1.0,
                })
            })
            .collect();
        Self {
            n_individuals: ds.n_individuals(),
            n_periods: ds.n_periods(),
            entries,
            meta: CoresetMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: CoresetMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn entries(&self) -> &[CoresetEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_individuals, self.n_periods)
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    /// `I_S`: individuals with at least one entry, ascending.
    pub fn individuals(&self) -> Vec<usize> {
        self.groups().map(|(i, _)| i).collect()
    }

    /// `(i, J_{S,i})` for every `i ∈ I_S`, as contiguous entry slices.
    pub fn groups(&self) -> impl Iterator<Item = (usize, &[CoresetEntry])> {
        self.entries
            .chunk_by(|a, b| a.individual == b.individual)
            .map(|chunk| (chunk[0].individual, chunk))
    }

    /// Entries of individual `i` (empty if `i ∉ I_S`).
    pub fn periods_of(&self, i: usize) -> &[CoresetEntry] {
        let lo = self.entries.partition_point(|e| e.individual < i);
        let hi = self.entries.partition_point(|e| e.individual <= i);
        &self.entries[lo..hi]
    }

    /// Write `i,t,weight` rows (external individual ids, 1-based periods)
    /// preceded by `# key=value` metadata comments.
    pub fn write_csv<W: Write>(&self, mut w: W, ds: &PanelDataset) -> Result<()> {
        let m = &self.meta;
        if let Some(v) = &m.method {
            writeln!(w, "# method={v}")?;
        }
        let floats = [
            ("epsilon", m.epsilon),
            ("delta", m.delta),
            ("lambda", m.lambda),
            ("total_sensitivity", m.total_sensitivity),
        ];
        for (key, value) in floats {
            if let Some(v) = value {
                writeln!(w, "# {key}={v}")?;
            }
        }
        let ints = [
            ("q", m.q.map(|v| v as u64)),
            ("k", m.k.map(|v| v as u64)),
            ("seed", m.seed),
            ("draws", m.draws.map(|v| v as u64)),
        ];
        for (key, value) in ints {
            if let Some(v) = value {
                writeln!(w, "# {key}={v}")?;
            }
        }
        writeln!(w, "i,t,weight")?;
        let ids = ds.individual_ids();
        for e in &self.entries {
            writeln!(w, "{},{},{}", ids[e.individual], e.period + 1, e.weight)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, ds: &PanelDataset) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file, ds)
    }

    /// Read a coreset written by [`WeightedCoreset::write_csv`] against `ds`.
    pub fn read_csv<R: Read>(reader: R, ds: &PanelDataset) -> Result<Self> {
        let mut meta = CoresetMeta::default();
        let mut entries = Vec::new();
        let mut seen_header = false;
        for (lineno, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let lineno = lineno as u64 + 1;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(comment) = text.strip_prefix('#') {
                if let Some((key, value)) = comment.trim().split_once('=') {
                    parse_meta(&mut meta, key.trim(), value.trim(), lineno)?;
                }
                continue;
            }
            if !seen_header {
                if text != "i,t,weight" {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "expected header `i,t,weight`".into(),
                    });
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = text.split(',').map(str::trim).collect();
            let bad = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            if fields.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", fields.len())));
            }
            let id: i64 = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad individual `{}`", fields[0])))?;
            let individual = ds
                .individual_index(id)
                .ok_or_else(|| bad(format!("individual {id} not in dataset")))?;
            let period: usize = match fields[1].parse::<usize>() {
                Ok(t) if t >= 1 && t <= ds.n_periods() => t - 1,
                _ => return Err(bad(format!("bad time `{}`", fields[1]))),
            };
            let weight: f64 = fields[2]
                .parse()
                .map_err(|_| bad(format!("bad weight `{}`", fields[2])))?;
            entries.push(CoresetEntry {
                individual,
                period,
                weight,
            });
        }
        Ok(Self::new(ds.n_individuals(), ds.n_periods(), entries)?.with_meta(meta))
    }

    pub fn load_csv(path: impl AsRef<Path>, ds: &PanelDataset) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, ds)
    }
}

fn check_entry(e: &CoresetEntry, n: usize, t: usize) -> Result<()> {
    if e.individual >= n || e.period >= t {
        return Err(Error::InvalidParameter(format!(
            "pair ({}, {}) outside {n} x {t} panel",
            e.individual,
            e.period + 1
        )));
    }
    if !(e.weight.is_finite() && e.weight >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "weight {} must be finite and nonnegative",
            e.weight
        )));
    }
    Ok(())
}

fn parse_meta(meta: &mut CoresetMeta, key: &str, value: &str, line: u64) -> Result<()> {
    let err = || Error::Parse {
        line,
        message: format!("bad metadata value `{value}` for `{key}`"),
    };
    let f = || value.parse::<f64>().map_err(|_| err());
    let u = || value.parse::<u64>().map_err(|_| err());
    match key {
        "method" => meta.method = Some(value.to_string()),
        "epsilon" => meta.epsilon = Some(f()?),
        "delta" => meta.delta = Some(f()?),
        "lambda" => meta.lambda = Some(f()?),
        "total_sensitivity" => meta.total_sensitivity = Some(f()?),
        "q" => meta.q = Some(u()? as usize),
        "k" => meta.k = Some(u()? as usize),
        "seed" => meta.seed = Some(u()?),
        "draws" => meta.draws = Some(u()? as usize),
        _ => {}
    }
    Ok(())
}
