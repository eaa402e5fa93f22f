//! The condition-selection stage used as a causal discovery method on its own.

use rayon::prelude::*;

use super::assemble;
use crate::dataset::TimeSeriesDataset;
use crate::error::Result;
use crate::graph::{LinkResult, TimeSeriesGraph};
use crate::indep_tests::CondIndTest;
use crate::pcmci::{condition_selection, DiscoveryConfig, Runner};

/// Subsets tested per candidate and condition size.
pub const PC_STABLE_Q_MAX: usize = 10;

/// Runs condition selection at `cfg.alpha_mci` with [`PC_STABLE_Q_MAX`]
/// subsets. Each link reports the largest p-value over the tests run on it
/// and is decided by that maximum, so surviving candidates are exactly the
/// detected links.
pub fn pc_stable_standalone(
    ds: &TimeSeriesDataset,
    cfg: &DiscoveryConfig,
    test: &dyn CondIndTest,
) -> Result<TimeSeriesGraph> {
    cfg.validate(ds)?;
    let runner = Runner::new(ds, test, cfg.tau_max, cfg.seed, true);
    let p_max = cfg.p_max_for(ds.n_vars());
    let per_target = (0..ds.n_vars())
        .into_par_iter()
        .map(|j| {
            let trace = condition_selection(&runner, j, cfg.alpha_mci, PC_STABLE_Q_MAX, p_max)?;
            Ok(trace
                .records
                .iter()
                .map(|r| LinkResult {
                    source: r.var.var,
                    lag: r.var.lag,
                    target: j,
                    stat: r.stat,
                    p: r.max_p,
                    q: None,
                    decided: r.max_p <= cfg.alpha_mci,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(
        ds,
        cfg,
        test.name(),
        "pc_stable",
        per_target.into_iter().flatten().collect(),
    ))
}
