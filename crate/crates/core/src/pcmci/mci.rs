//! Momentary conditional independence tests over all lagged links.

use rayon::prelude::*;

use super::{config_json, DiscoveryConfig, ParentSet, Runner};
use crate::dataset::{LaggedVariable, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::{canonical_order, LinkResult, TimeSeriesGraph};
use crate::indep_tests::CondIndTest;

/// Conditions for testing `X^i_{t-tau} → X^j_t`: the target's parents without
/// the tested variable, then the first `p_x` parents of `X^i` shifted by `tau`.
/// Shifted parents beyond `tau_max` fall outside the shared window and are
/// left out; duplicates appear once.
pub fn mci_conditions(
    parents: &[ParentSet],
    i: usize,
    tau: usize,
    j: usize,
    p_x: Option<usize>,
    tau_max: usize,
) -> Vec<LaggedVariable> {
    let x = LaggedVariable::new(i, tau);
    let mut z: Vec<LaggedVariable> = parents[j].parents.iter().copied().filter(|v| *v != x).collect();
    let limit = p_x.unwrap_or(usize::MAX);
    for v in parents[i].parents.iter().take(limit) {
        let s = v.shifted(tau);
        if s.lag <= tau_max && s != x && !z.contains(&s) {
            z.push(s);
        }
    }
    z
}

pub(crate) fn sweep_with(
    runner: &Runner<'_>,
    parents: &[ParentSet],
    cfg: &DiscoveryConfig,
    method: &str,
) -> Result<TimeSeriesGraph> {
    let ds = runner.ds;
    let n = ds.n_vars();
    if parents.len() != n {
        return Err(Error::Contract(format!(
            "{} parent sets for {n} variables",
            parents.len()
        )));
    }
    let tau_min = usize::from(!cfg.contemporaneous);
    let slots: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|j| (tau_min..=cfg.tau_max).flat_map(move |tau| (0..n).map(move |i| (i, tau, j))))
        .filter(|&(i, tau, j)| !(tau == 0 && i == j))
        .collect();
    let mut links = slots
        .par_iter()
        .map(|&(i, tau, j)| {
            let z = mci_conditions(parents, i, tau, j, cfg.p_x, cfg.tau_max);
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
    canonical_order(&mut links);
    Ok(TimeSeriesGraph {
        config: config_json(cfg, runner.test.name(), method),
        names: ds.names().to_vec(),
        links,
        runtime_ms: None,
        seed: cfg.seed,
        method: method.to_string(),
    })
}

/// MCI tests for every link given precomputed parent sets.
pub fn mci_sweep(
    ds: &TimeSeriesDataset,
    parents: &[ParentSet],
    cfg: &DiscoveryConfig,
    test: &dyn CondIndTest,
) -> Result<TimeSeriesGraph> {
    cfg.validate(ds)?;
    let runner = Runner::new(ds, test, cfg.tau_max, cfg.seed, false);
    sweep_with(&runner, parents, cfg, "pcmci")
}
