//! MCI without source-parent conditions, optionally on AR(1)-prewhitened data.

use super::assemble;
use crate::dataset::TimeSeriesDataset;
use crate::error::Result;
use crate::graph::TimeSeriesGraph;
use crate::indep_tests::CondIndTest;
use crate::pcmci::{fdr_adjust, select_parents_with, sweep_with, DiscoveryConfig, Runner};
use crate::stats::lag1_autocorr;

/// Lag-1 sample autocorrelation of every column.
pub fn ar1_coefficients(ds: &TimeSeriesDataset) -> Vec<f64> {
    (0..ds.n_vars()).map(|j| lag1_autocorr(ds.column(j))).collect()
}

/// `X̃_t = X_t - â·X_{t-1}` per column with `â` the lag-1 autocorrelation;
/// the result is one sample shorter.
pub fn prewhiten(ds: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
    let a = ar1_coefficients(ds);
    let cols = (0..ds.n_vars())
        .map(|j| {
            let c = ds.column(j);
            c.windows(2).map(|w| w[1] - a[j] * w[0]).collect()
        })
        .collect();
    TimeSeriesDataset::new(ds.names().to_vec(), cols)
}

/// Condition selection as configured, then MCI with `p_x = 0`.
pub fn mci0_and_prewhiten(
    ds: &TimeSeriesDataset,
    cfg: &DiscoveryConfig,
    test: &dyn CondIndTest,
    prewhitened: bool,
) -> Result<TimeSeriesGraph> {
    let data = if prewhitened { prewhiten(ds)? } else { ds.clone() };
    let cfg = DiscoveryConfig {
        p_x: Some(0),
        ..cfg.clone()
    };
    cfg.validate(&data)?;
    let method = if prewhitened { "prewhitened_mci0" } else { "mci0" };
    let runner = Runner::new(&data, test, cfg.tau_max, cfg.seed, true);
    let parents = select_parents_with(&runner, &cfg)?;
    let mut graph = sweep_with(&runner, &parents, &cfg, method)?;
    if cfg.fdr {
        fdr_adjust(&mut graph, cfg.alpha_mci);
    }
    // Names and config echo refer to the analyzed data.
    Ok(assemble(&data, &cfg, test.name(), method, graph.links))
}
