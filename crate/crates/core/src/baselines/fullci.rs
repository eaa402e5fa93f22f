//! Full conditional independence: every link is tested given the whole past
//! up to `tau_max` except the tested variable.

use rayon::prelude::*;

use super::{assemble, past_variables};
use crate::dataset::{build_lagged_arrays, LaggedVariable, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::{LinkResult, TimeSeriesGraph};
use crate::indep_tests::CondIndTest;
use crate::linalg::{t_two_sided_p, HouseholderQr};
use crate::pcmci::{DiscoveryConfig, Runner};

/// Regression route for the linear test, generic route otherwise.
pub fn fullci(ds: &TimeSeriesDataset, cfg: &DiscoveryConfig, test: &dyn CondIndTest) -> Result<TimeSeriesGraph> {
    if test.name() == "parcorr" {
        fullci_regression(ds, cfg)
    } else {
        fullci_generic(ds, cfg, test)
    }
}

fn check_dimension(ds: &TimeSeriesDataset, cfg: &DiscoveryConfig) -> Result<()> {
    let regressors = ds.n_vars() * cfg.tau_max;
    let n = ds.len_t().saturating_sub(cfg.tau_max);
    if regressors >= n {
        return Err(Error::Dimensionality { regressors, n });
    }
    Ok(())
}

/// One multivariate OLS regression per target on all `N·tau_max` lagged
/// variables; each coefficient is tested by a two-sided t-test with
/// `n - N·tau_max - 1` degrees of freedom. The reported statistic is the
/// partial correlation `t / sqrt(t² + dof)`.
pub fn fullci_regression(ds: &TimeSeriesDataset, cfg: &DiscoveryConfig) -> Result<TimeSeriesGraph> {
    cfg.validate(ds)?;
    check_dimension(ds, cfg)?;
    let past = past_variables(ds.n_vars(), cfg.tau_max);
    let per_target = (0..ds.n_vars())
        .into_par_iter()
        .map(|j| {
            let y = LaggedVariable::new(j, 0);
            let arrays = build_lagged_arrays(ds, y, y, &past, cfg.tau_max)?;
            let cols: Vec<&[f64]> = arrays.z.iter().map(Vec::as_slice).collect();
            let fit = HouseholderQr::new(arrays.n(), &cols, true).ols(&arrays.y)?;
            let dof = fit.dof as f64;
            Ok(past
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    let t = fit.t_stat(k);
                    let p = t_two_sided_p(t, dof);
                    LinkResult {
                        source: v.var,
                        lag: v.lag,
                        target: j,
                        stat: t / (t * t + dof).sqrt(),
                        p,
                        q: None,
                        decided: p <= cfg.alpha_mci,
                    }
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(
        ds,
        cfg,
        "parcorr",
        "fullci",
        per_target.into_iter().flatten().collect(),
    ))
}

/// One conditional independence test per link with the full past as conditions.
pub fn fullci_generic(
    ds: &TimeSeriesDataset,
    cfg: &DiscoveryConfig,
    test: &dyn CondIndTest,
) -> Result<TimeSeriesGraph> {
    cfg.validate(ds)?;
    if test.name() == "parcorr" {
        check_dimension(ds, cfg)?;
    }
    let past = past_variables(ds.n_vars(), cfg.tau_max);
    let runner = Runner::new(ds, test, cfg.tau_max, cfg.seed, false);
    let slots: Vec<(LaggedVariable, usize)> = (0..ds.n_vars())
        .flat_map(|j| past.iter().map(move |v| (*v, j)))
        .collect();
    let links = slots
        .par_iter()
        .map(|&(x, j)| {
            let z: Vec<LaggedVariable> = past.iter().copied().filter(|v| *v != x).collect();
            let o = runner.test(x, LaggedVariable::new(j, 0), &z)?;
            Ok(LinkResult {
                source: x.var,
                lag: x.lag,
                target: j,
                stat: o.statistic,
                p: o.p_value,
                q: None,
                decided: o.p_value <= cfg.alpha_mci,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(ds, cfg, test.name(), "fullci", links))
}
