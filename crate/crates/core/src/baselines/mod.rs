//! Comparison methods. Every method returns a [`TimeSeriesGraph`] with the
//! same schema as PCMCI, its name recorded in `method` and in the config echo.

mod bivci;
mod fullci;
mod lasso;
mod mci0;
mod pairwise;
mod pc_stable;

use crate::dataset::{LaggedVariable, TimeSeriesDataset};
use crate::graph::{canonical_order, LinkResult, TimeSeriesGraph};
use crate::pcmci::{config_json, DiscoveryConfig};

pub use bivci::bivci;
pub use fullci::{fullci, fullci_generic, fullci_regression};
pub use lasso::{
    adaptive_lasso, adaptive_lasso_regression, adaptive_lasso_with, lasso_coordinate_descent, time_series_splits,
    LassoConfig, LassoResult,
};
pub use mci0::{ar1_coefficients, mci0_and_prewhiten, prewhiten};
pub use pairwise::{pairwise, DcorPermutation, PairwiseMeasure};
pub use pc_stable::{pc_stable_standalone, PC_STABLE_Q_MAX};

/// All lagged variables `X^i_{t-tau}`, `tau = 1..=tau_max`, in `(lag, var)` order.
pub(crate) fn past_variables(n_vars: usize, tau_max: usize) -> Vec<LaggedVariable> {
    (1..=tau_max)
        .flat_map(|lag| (0..n_vars).map(move |var| LaggedVariable::new(var, lag)))
        .collect()
}

pub(crate) fn assemble(
    ds: &TimeSeriesDataset,
    cfg: &DiscoveryConfig,
    test: &str,
    method: &str,
    mut links: Vec<LinkResult>,
) -> TimeSeriesGraph {
    canonical_order(&mut links);
    TimeSeriesGraph {
        config: config_json(cfg, test, method),
        names: ds.names().to_vec(),
        links,
        runtime_ms: None,
        seed: cfg.seed,
        method: method.to_string(),
    }
}
