//! Bivariate lag-specific conditional independence: each cross-link is
//! tested given only the target's own past, which leaves common drivers
//! unaccounted for.

use rayon::prelude::*;

use super::assemble;
use crate::dataset::{LaggedVariable, TimeSeriesDataset};
use crate::error::Result;
use crate::graph::{LinkResult, TimeSeriesGraph};
use crate::indep_tests::CondIndTest;
use crate::pcmci::{DiscoveryConfig, Runner};

pub fn bivci(ds: &TimeSeriesDataset, cfg: &DiscoveryConfig, test: &dyn CondIndTest) -> Result<TimeSeriesGraph> {
    cfg.validate(ds)?;
    let n = ds.n_vars();
    let runner = Runner::new(ds, test, cfg.tau_max, cfg.seed, false);
    let slots: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|j| (1..=cfg.tau_max).flat_map(move |tau| (0..n).map(move |i| (i, tau, j))))
        .filter(|(i, _, j)| i != j)
        .collect();
    let links = slots
        .par_iter()
        .map(|&(i, tau, j)| {
            let z: Vec<LaggedVariable> = (1..=cfg.tau_max).map(|l| LaggedVariable::new(j, l)).collect();
            let o = runner.test(LaggedVariable::new(i, tau), LaggedVariable::new(j, 0), &z)?;
            Ok(LinkResult {
                source: i,
                lag: tau,
                target: j,
                stat: o.statistic,
                p: o.p_value,
                q: None,
                decided: o.p_value <= cfg.alpha_mci,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(ds, cfg, test.name(), "bivci", links))
}
