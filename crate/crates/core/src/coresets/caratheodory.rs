use nalgebra::DMatrix;

use crate::dataset::PanelDataset;
use crate::linalg::null_vector;
use crate::weighted::{CoresetEntry, CoresetMeta, WeightedCoreset};

const DROP_RTOL: f64 = 1e-12;

/// Largest coreset [`caratheodory_olse_coreset`] can return: `(d+1)² + 1`.
pub fn caratheodory_size_bound(d: usize) -> usize {
    (d + 1) * (d + 1) + 1
}

/// Upper triangle of `z zᵀ`, `z = (x, y)`.
fn embed(ds: &PanelDataset, i: usize, t: usize) -> Vec<f64> {
    let mut z = ds.x(i, t).to_vec();
    z.push(ds.y(i, t));
    let mut out = Vec::with_capacity(z.len() * (z.len() + 1) / 2);
    for a in 0..z.len() {
        for b in a..z.len() {
            out.push(z[a] * z[b]);
        }
    }
    out
}

/// Drives `weights` to at most `dim + 1` nonzero entries while preserving
/// `Σ w` and `Σ w p`. `points[j]` has length `dim`.
fn caratheodory(points: &[Vec<f64>], weights: &mut [f64], dim: usize) {
    let total: f64 = weights.iter().sum();
    loop {
        let active: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > 0.0).collect();
        if active.len() <= dim + 1 {
            break;
        }
        let cols = &active[..dim + 2];
        let a = DMatrix::from_fn(dim + 1, dim + 2, |r, c| {
            if r < dim {
                points[cols[c]][r]
            } else {
                1.0
            }
        });
        let mut v = null_vector(&a);
        if v.iter().all(|&x| x <= 0.0) {
            v.neg_mut();
        }
        let (mut pivot, mut alpha) = (0, f64::INFINITY);
        for (c, &vc) in v.iter().enumerate() {
            if vc > 0.0 {
                let ratio = weights[cols[c]] / vc;
                if ratio < alpha {
                    alpha = ratio;
                    pivot = c;
                }
            }
        }
        let scale = cols.iter().map(|&j| weights[j]).fold(0.0, f64::max);
        for (c, &j) in cols.iter().enumerate() {
            weights[j] -= alpha * v[c];
            if weights[j] < DROP_RTOL * scale {
                weights[j] = 0.0;
            }
        }
        weights[cols[pivot]] = 0.0;
    }
    let kept: f64 = weights.iter().sum();
    if kept > 0.0 {
        let fix = total / kept;
        weights.iter_mut().for_each(|w| *w *= fix);
    }
}

/// Exact OLSE coreset: weights on at most `(d+1)² + 1` observed pairs with
/// `Σ w z zᵀ = Zᵀ Z`, so every OLSE cost is reproduced.
///
/// Points are merged in balanced contiguous clusters of `3(d+1)²` so each
/// elimination runs on a fixed-size system.
pub fn caratheodory_olse_coreset(ds: &PanelDataset) -> WeightedCoreset {
    let t_len = ds.n_periods();
    let d = ds.n_features();
    let meta = CoresetMeta {
        method: Some("caratheodory".into()),
        ..CoresetMeta::default()
    };
    let pairs: Vec<usize> = (0..ds.n_pairs())
        .filter(|&p| !ds.is_missing(p / t_len, p % t_len))
        .collect();
    if pairs.len() <= caratheodory_size_bound(d) {
        let entries = pairs
            .iter()
            .map(|&p| CoresetEntry { individual: p / t_len, period: p % t_len, weight: 1.0 })
            .collect();
        return WeightedCoreset::new(ds.n_individuals(), t_len, entries)
            .expect("observed pairs are distinct")
            .with_meta(meta);
    }

    let mut points: Vec<Vec<f64>> = pairs.iter().map(|&p| embed(ds, p / t_len, p % t_len)).collect();
    let dim = points[0].len();
    let scale = points
        .iter()
        .flatten()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        points.iter_mut().flatten().for_each(|v| *v /= scale);
    }

    let mut weights = vec![1.0; points.len()];
    let mut active: Vec<usize> = (0..points.len()).collect();
    let n_clusters = 3 * (d + 1) * (d + 1);
    while active.len() > n_clusters {
        let n = active.len();
        let mut bounds = Vec::with_capacity(n_clusters + 1);
        for c in 0..=n_clusters {
            bounds.push(c * n / n_clusters);
        }
        let mut means = Vec::with_capacity(n_clusters);
        let mut masses = Vec::with_capacity(n_clusters);
        for c in 0..n_clusters {
            let members = &active[bounds[c]..bounds[c + 1]];
            let mass: f64 = members.iter().map(|&j| weights[j]).sum();
            let mut mean = vec![0.0; dim];
            for &j in members {
                for (m, p) in mean.iter_mut().zip(&points[j]) {
                    *m += weights[j] * p;
                }
            }
            mean.iter_mut().for_each(|m| *m /= mass);
            means.push(mean);
            masses.push(mass);
        }
        let mut reduced = masses.clone();
        caratheodory(&means, &mut reduced, dim);
        let mut next = Vec::new();
        for c in 0..n_clusters {
            if reduced[c] > 0.0 {
                let members = &active[bounds[c]..bounds[c + 1]];
                let ratio = reduced[c] / masses[c];
                for &j in members {
                    weights[j] *= ratio;
                }
                next.extend_from_slice(members);
            }
        }
        active = next;
    }

    let local_points: Vec<Vec<f64>> = active.iter().map(|&j| points[j].clone()).collect();
    let mut local_weights: Vec<f64> = active.iter().map(|&j| weights[j]).collect();
    caratheodory(&local_points, &mut local_weights, dim);

    let entries = active
        .iter()
        .zip(&local_weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&j, &w)| CoresetEntry {
            individual: pairs[j] / t_len,
            period: pairs[j] % t_len,
            weight: w,
        })
        .collect();
    WeightedCoreset::new(ds.n_individuals(), t_len, entries)
        .expect("observed pairs are distinct")
        .with_meta(meta)
}
