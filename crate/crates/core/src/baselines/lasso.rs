//! Adaptive Lasso with time-ordered cross-validation.
//!
//! The Lasso objective is `(1/2n)·‖y - Xβ‖² + λ·‖β‖₁` without intercept on
//! standardized data, solved by cyclic coordinate descent with a duality-gap
//! stopping rule. `λ` is chosen on a log-spaced path by mean squared
//! prediction error over expanding-window splits.

use std::ops::Range;

use rayon::prelude::*;

use super::{assemble, past_variables};
use crate::dataset::{build_lagged_arrays, LaggedVariable, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::{LinkResult, TimeSeriesGraph};
use crate::linalg::{t_two_sided_p, HouseholderQr};
use crate::pcmci::DiscoveryConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoConfig {
    /// Reweighting iterations.
    pub k_max: usize,
    pub n_splits: usize,
    /// Smallest admissible validation fold.
    pub min_fold: usize,
    pub n_lambdas: usize,
    /// Ratio of the smallest to the largest path value.
    pub path_eps: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            k_max: 5,
            n_splits: 5,
            min_fold: 20,
            n_lambdas: 100,
            path_eps: 1e-3,
            tol: 1e-4,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoResult {
    /// Reweighted Lasso coefficients after the last iteration.
    pub coefficients: Vec<f64>,
    /// Indices with nonzero reweighted coefficient, ascending.
    pub active: Vec<usize>,
    /// OLS refit coefficients on the active set, zero elsewhere.
    pub refit: Vec<f64>,
    /// OLS refit p-values on the active set, exactly 1 elsewhere.
    pub p_values: Vec<f64>,
    /// Penalty chosen in the last iteration, in the `1/2n` scaling.
    pub lambda: f64,
}

/// Expanding-window splits: `n_splits` consecutive validation blocks of
/// `n / (n_splits + 1)` samples at the end, each trained on everything before it.
pub fn time_series_splits(n: usize, n_splits: usize, min_fold: usize) -> Result<Vec<(Range<usize>, Range<usize>)>> {
    if n_splits < 2 {
        return Err(Error::Config("at least 2 cross-validation splits are needed".into()));
    }
    let size = n / (n_splits + 1);
    if size < min_fold {
        return Err(Error::Config(format!(
            "cross-validation folds of {size} samples are shorter than {min_fold}"
        )));
    }
    Ok((0..n_splits)
        .map(|k| {
            let start = n - (n_splits - k) * size;
            (0..start, start..start + size)
        })
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Coordinate descent from the warm start `beta`; returns the iterations used.
/// Stops once the duality gap falls below `tol·‖y‖²`.
pub fn lasso_coordinate_descent(
    x: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    beta: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> usize {
    let n = y.len();
    let nl = lambda * n as f64;
    let norms: Vec<f64> = x.iter().map(|c| dot(c, c)).collect();
    let mut r: Vec<f64> = y.to_vec();
    for (c, b) in x.iter().zip(beta.iter()) {
        if *b != 0.0 {
            r.iter_mut().zip(c).for_each(|(ri, ci)| *ri -= b * ci);
        }
    }
    let y_norm = dot(y, y);
    let gap_tol = tol * y_norm;
    for it in 1..=max_iter {
        let (mut w_max, mut dw_max) = (0.0f64, 0.0f64);
        for j in 0..x.len() {
            if norms[j] == 0.0 {
                continue;
            }
            let old = beta[j];
            let c = &x[j];
            let rho = dot(c, &r) + old * norms[j];
            let new = rho.signum() * (rho.abs() - nl).max(0.0) / norms[j];
            if new != old {
                let d = new - old;
                r.iter_mut().zip(c).for_each(|(ri, ci)| *ri -= d * ci);
                beta[j] = new;
            }
            dw_max = dw_max.max((new - old).abs());
            w_max = w_max.max(new.abs());
        }
        if w_max == 0.0 || dw_max / w_max < tol || it == max_iter {
            let dual_norm = x.iter().map(|c| dot(c, &r).abs()).fold(0.0, f64::max);
            let r_norm = dot(&r, &r);
            let l1: f64 = beta.iter().map(|b| b.abs()).sum();
            let (scale, mut gap) = if dual_norm > nl {
                let s = nl / dual_norm;
                (s, 0.5 * (r_norm + r_norm * s * s))
            } else {
                (1.0, r_norm)
            };
            gap += nl * l1 - scale * dot(&r, y);
            if gap < gap_tol || y_norm == 0.0 {
                return it;
            }
        }
    }
    max_iter
}

fn rows(x: &[Vec<f64>], range: &Range<usize>) -> Vec<Vec<f64>> {
    x.iter().map(|c| c[range.clone()].to_vec()).collect()
}

/// Log-spaced path from the smallest penalty zeroing every coefficient.
fn lambda_path(x: &[Vec<f64>], y: &[f64], cfg: &LassoConfig) -> Vec<f64> {
    let n = y.len() as f64;
    let max = x.iter().map(|c| dot(c, y).abs()).fold(0.0, f64::max) / n;
    if !(max > 0.0) {
        return vec![0.0];
    }
    let steps = cfg.n_lambdas.max(2) - 1;
    (0..=steps)
        .map(|k| max * cfg.path_eps.powf(k as f64 / steps as f64))
        .collect()
}

/// Lasso with `λ` chosen by expanding-window cross-validation; ties keep the larger `λ`.
fn lasso_cv(x: &[Vec<f64>], y: &[f64], cfg: &LassoConfig) -> Result<(Vec<f64>, f64)> {
    let d = x.len();
    let path = lambda_path(x, y, cfg);
    let splits = time_series_splits(y.len(), cfg.n_splits, cfg.min_fold)?;
    let fold_mse: Vec<Vec<f64>> = splits
        .par_iter()
        .map(|(train, test)| {
            let xt = rows(x, train);
            let yt = &y[train.clone()];
            let mut beta = vec![0.0; d];
            path.iter()
                .map(|&l| {
                    lasso_coordinate_descent(&xt, yt, l, &mut beta, cfg.tol, cfg.max_iter);
                    let sse: f64 = test
                        .clone()
                        .map(|t| {
                            let pred: f64 = (0..d).map(|j| x[j][t] * beta[j]).sum();
                            (y[t] - pred).powi(2)
                        })
                        .sum();
                    sse / test.len() as f64
                })
                .collect()
        })
        .collect();
    let mut best = (0usize, f64::INFINITY);
    for (k, _) in path.iter().enumerate() {
        let m = fold_mse.iter().map(|f| f[k]).sum::<f64>() / fold_mse.len() as f64;
        if m < best.1 {
            best = (k, m);
        }
    }
    let lambda = path[best.0];
    let mut beta = vec![0.0; d];
    lasso_coordinate_descent(x, y, lambda, &mut beta, cfg.tol, cfg.max_iter);
    Ok((beta, lambda))
}

/// Adaptive Lasso on standardized columns `x` and target `y`, followed by an
/// OLS refit (no intercept) on the active set.
pub fn adaptive_lasso_regression(x: &[Vec<f64>], y: &[f64], cfg: &LassoConfig) -> Result<LassoResult> {
    let d = x.len();
    if cfg.k_max == 0 {
        return Err(Error::Config("k_max must be at least 1".into()));
    }
    let mut w = vec![1.0; d];
    let mut coef = vec![0.0; d];
    let mut dropped = vec![false; d];
    let mut lambda = 0.0;
    for _ in 0..cfg.k_max {
        // A zero coefficient gets weight 1 / MIN_POSITIVE; its scaled column
        // is exactly zero instead of subnormal, which keeps it out of the fit.
        let scaled: Vec<Vec<f64>> = x
            .iter()
            .zip(&w)
            .zip(&dropped)
            .map(|((c, wj), &gone)| {
                if gone {
                    vec![0.0; c.len()]
                } else {
                    c.iter().map(|v| v / wj).collect()
                }
            })
            .collect();
        let (beta_star, l) = lasso_cv(&scaled, y, cfg)?;
        lambda = l;
        for j in 0..d {
            coef[j] = if dropped[j] { 0.0 } else { beta_star[j] / w[j] };
            w[j] = 1.0 / (2.0 * coef[j].abs().sqrt() + f64::MIN_POSITIVE);
            dropped[j] = coef[j] == 0.0;
        }
    }
    let active: Vec<usize> = (0..d).filter(|&j| coef[j] != 0.0).collect();
    let mut refit = vec![0.0; d];
    let mut p_values = vec![1.0; d];
    if !active.is_empty() {
        let cols: Vec<&[f64]> = active.iter().map(|&j| x[j].as_slice()).collect();
        let fit = HouseholderQr::new(y.len(), &cols, false).ols(y)?;
        for (k, &j) in active.iter().enumerate() {
            refit[j] = fit.beta[k];
            p_values[j] = t_two_sided_p(fit.t_stat(k), fit.dof as f64);
        }
    }
    Ok(LassoResult {
        coefficients: coef,
        active,
        refit,
        p_values,
        lambda,
    })
}

pub fn adaptive_lasso(ds: &TimeSeriesDataset, cfg: &DiscoveryConfig) -> Result<TimeSeriesGraph> {
    adaptive_lasso_with(ds, cfg, &LassoConfig::default())
}

/// One adaptive Lasso regression per target on all `N·tau_max` lagged
/// variables. Link statistics are the refit coefficients.
pub fn adaptive_lasso_with(
    ds: &TimeSeriesDataset,
    cfg: &DiscoveryConfig,
    lasso: &LassoConfig,
) -> Result<TimeSeriesGraph> {
    cfg.validate(ds)?;
    let past = past_variables(ds.n_vars(), cfg.tau_max);
    let per_target = (0..ds.n_vars())
        .into_par_iter()
        .map(|j| {
            let y = LaggedVariable::new(j, 0);
            let arrays = build_lagged_arrays(ds, y, y, &past, cfg.tau_max)?.standardized()?;
            let res = adaptive_lasso_regression(&arrays.z, &arrays.y, lasso)?;
            Ok(past
                .iter()
                .enumerate()
                .map(|(k, v)| LinkResult {
                    source: v.var,
                    lag: v.lag,
                    target: j,
                    stat: res.refit[k],
                    p: res.p_values[k],
                    q: None,
                    decided: res.p_values[k] <= cfg.alpha_mci,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(
        ds,
        cfg,
        "ols",
        "lasso",
        per_target.into_iter().flatten().collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::seed::rng(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    /// Accelerated proximal gradient on the same objective.
    fn fista(x: &[Vec<f64>], y: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
        let n = y.len();
        let d = x.len();
        let xm = DMatrix::from_fn(n, d, |r, c| x[c][r]);
        let gram = xm.transpose() * &xm / n as f64;
        let step = 1.0 / gram.symmetric_eigenvalues().max();
        let xty: Vec<f64> = (0..d).map(|j| dot(&x[j], y) / n as f64).collect();
        let (mut b, mut v, mut t) = (vec![0.0; d], vec![0.0; d], 1.0f64);
        for _ in 0..iters {
            let grad: Vec<f64> = (0..d)
                .map(|j| (0..d).map(|k| gram[(j, k)] * v[k]).sum::<f64>() - xty[j])
                .collect();
            let next: Vec<f64> = (0..d)
                .map(|j| {
                    let u = v[j] - step * grad[j];
                    u.signum() * (u.abs() - step * lambda).max(0.0)
                })
                .collect();
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            v = (0..d)
                .map(|j| next[j] + (t - 1.0) / t_next * (next[j] - b[j]))
                .collect();
            b = next;
            t = t_next;
        }
        b
    }

    #[test]
    fn coordinate_descent_matches_proximal_gradient() {
        let n = 80;
        let z = normals(n, 1);
        let x = vec![
            normals(n, 2),
            normals(n, 3).iter().zip(&z).map(|(a, b)| 0.5 * a + b).collect(),
            z.clone(),
        ];
        let noise = normals(n, 4);
        let y: Vec<f64> = (0..n).map(|t| 1.5 * x[0][t] - 0.7 * x[2][t] + 0.5 * noise[t]).collect();
        for lambda in [0.05, 0.3] {
            let mut beta = vec![0.0; 3];
            lasso_coordinate_descent(&x, &y, lambda, &mut beta, 1e-14, 100_000);
            let reference = fista(&x, &y, lambda, 20_000);
            for (a, b) in beta.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-6, "{beta:?} vs {reference:?}");
            }
        }
    }

    #[test]
    fn large_penalty_zeroes_everything() {
        let x = vec![normals(50, 5), normals(50, 6)];
        let y = normals(50, 7);
        let path = lambda_path(&x, &y, &LassoConfig::default());
        let mut beta = vec![0.0; 2];
        lasso_coordinate_descent(&x, &y, path[0] * 1.0001, &mut beta, 1e-10, 1000);
        assert_eq!(beta, vec![0.0, 0.0]);
        assert!((path.last().unwrap() / path[0] - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn splits_expand_in_time_order() {
        let s = time_series_splits(145, 5, 20).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], (0..25, 25..49));
        assert_eq!(s[4], (0..121, 121..145));
        assert!(matches!(time_series_splits(100, 5, 20), Err(Error::Config(_))));
    }

    #[test]
    fn inactive_regressors_have_unit_p_values() {
        let n = 150;
        let x: Vec<Vec<f64>> = (0..6).map(|k| normals(n, 10 + k)).collect();
        let e = normals(n, 20);
        let y: Vec<f64> = (0..n).map(|t| 0.8 * x[1][t] + e[t]).collect();
        let mut x = x;
        x.iter_mut().for_each(|c| {
            crate::stats::standardize(c);
        });
        let res = adaptive_lasso_regression(&x, &y, &LassoConfig::default()).unwrap();
        assert!(res.active.contains(&1));
        assert!(res.p_values[1] < 1e-6);
        for j in 0..6 {
            if !res.active.contains(&j) {
                assert_eq!(res.p_values[j], 1.0);
                assert_eq!(res.refit[j], 0.0);
                assert_eq!(res.coefficients[j], 0.0);
            }
        }
        assert_eq!(res, adaptive_lasso_regression(&x, &y, &LassoConfig::default()).unwrap());
    }
}
