//! Fixtures shared by the construction benchmarks.

use panel_coreset::datagen::{synthetic_panel, GenConfig};
use panel_coreset::PanelDataset;

/// Gaussian synthetic panel with an intercept column.
pub fn fixture(n: usize, t: usize, d: usize) -> PanelDataset {
    synthetic_panel(&GenConfig { n, t, d, seed: 1, ..GenConfig::default() })
        .expect("valid generator config")
        .dataset
}
