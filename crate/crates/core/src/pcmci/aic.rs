//! Selection of the condition-selection threshold by Akaike's criterion.

use super::{pc1, DiscoveryConfig, ParentSet, Runner};
use crate::dataset::{build_lagged_arrays, LaggedVariable, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::indep_tests::CondIndTest;
use crate::linalg::HouseholderQr;

/// `n·ln(RSS) + 2·|parents|` for the OLS regression (with intercept) of the
/// target on `parents` over the shared window, with `n = T - tau_max`.
pub fn aic_score(ds: &TimeSeriesDataset, target: usize, parents: &[LaggedVariable], tau_max: usize) -> Result<f64> {
    let y = LaggedVariable::new(target, 0);
    let arrays = build_lagged_arrays(ds, y, y, parents, tau_max)?;
    let cols: Vec<&[f64]> = arrays.z.iter().map(Vec::as_slice).collect();
    let res = HouseholderQr::new(arrays.n(), &cols, true).residual(&arrays.y);
    let rss: f64 = res.iter().map(|e| e * e).sum();
    Ok(arrays.n() as f64 * rss.ln() + 2.0 * parents.len() as f64)
}

pub(crate) fn select_with(
    runner: &Runner<'_>,
    target: usize,
    grid: &[f64],
    cfg: &DiscoveryConfig,
) -> Result<(f64, ParentSet)> {
    if grid.is_empty() {
        return Err(Error::Contract("empty AIC grid".into()));
    }
    let mut alphas = grid.to_vec();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let mut best: Option<(f64, f64, ParentSet)> = None;
    for a in alphas {
        let ps = pc1::pc1_with(runner, target, cfg, a)?;
        let score = aic_score(runner.ds, target, &ps.parents, runner.tau_max)?;
        // Strict improvement only, so ties keep the smaller threshold.
        if best.as_ref().is_none_or(|(_, s, _)| score < *s) {
            best = Some((a, score, ps));
        }
    }
    let (a, _, ps) = best.expect("grid is nonempty");
    Ok((a, ps))
}

/// Threshold from `grid` minimizing the AIC of the resulting parent set, with its parents.
pub fn select_alpha_by_aic(
    ds: &TimeSeriesDataset,
    target: usize,
    grid: &[f64],
    cfg: &DiscoveryConfig,
    test: &dyn CondIndTest,
) -> Result<(f64, ParentSet)> {
    cfg.validate(ds)?;
    let runner = Runner::new(ds, test, cfg.tau_max, cfg.seed, true);
    select_with(&runner, target, grid, cfg)
}
