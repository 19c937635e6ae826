//! Coresets for least-squares regression on panel data.
//!
//! A panel holds `N` individuals observed over `T` periods with `d`
//! features. The crate evaluates three objectives on it (OLSE, GLSE with
//! AR(q) errors and the clustered GLSE_k), computes sensitivity scores, draws
//! weighted coresets whose objective tracks the full one for every query, and
//! fits GLSE parameters on either.
//!
//! ```
//! use panel_coreset::{cglse, coreset_glse_objective, glse_total, CoresetConfig};
//! use panel_coreset::datagen::{random_query, synthetic_panel, GenConfig};
//!
//! let panel = synthetic_panel(&GenConfig { n: 20, t: 10, d: 3, ..Default::default() }).unwrap();
//! let cfg = CoresetConfig { size_override: Some(150), ..Default::default() };
//! let coreset = cglse(&panel.dataset, &cfg).unwrap();
//! let query = random_query(3, 1, 0.2, 7).unwrap();
//! let ratio = coreset_glse_objective(&coreset, &panel.dataset, &query) / glse_total(&panel.dataset, &query);
//! assert!(ratio > 0.0);
//! ```

pub mod bench;
pub mod coresets;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod objectives;
pub mod rng;
pub mod sensitivity;
pub mod solver;
pub mod weighted;

pub use coresets::{
    caratheodory_olse_coreset, cglse, cglse_k, cglse_with_sensitivity, fl_sample_size, uniform_coreset,
    CoresetConfig,
};
pub use dataset::{gram_extremes, m_bound, IndividualGram, PanelDataset};
pub use error::{Error, Result};
pub use objectives::{
    coreset_glse_objective, coreset_glsek_objective, glse_pair, glse_total, glsek_total, olse_total,
    GlseKQuery, GlseQuery,
};
pub use sensitivity::{glse_sensitivity, glsek_sensitivity, olse_leverage, SensitivityDomain, SensitivityMap};
pub use solver::{evaluate_fit, irls_glse_fit, ols_fit, FitResult, SolverConfig};
pub use weighted::{CoresetEntry, CoresetMeta, WeightedCoreset};
