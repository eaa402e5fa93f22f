//! Gaussian-process regression residuals with ML-II hyperparameters.
//!
//! Kernel: `s²·(exp(-d²/(2ℓ²)) + r·δ)`, i.e. a squared-exponential term plus
//! white noise whose variance is the ratio `r` of the signal variance. The
//! signal variance is profiled out of the marginal likelihood in closed form,
//! leaving a two-dimensional search over `(ln ℓ, ln r)`.

use std::f64::consts::LN_10;

use faer::prelude::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::stats;

/// Diagonal jitter added to the scaled kernel matrix.
pub const JITTER: f64 = 1e-5;

// ln 0.01 to ln 100, and ln 1e-5 to ln 10.
const LN_ELL_BOUNDS: (f64, f64) = (-2.0 * LN_10, 2.0 * LN_10);
const LN_R_BOUNDS: (f64, f64) = (-5.0 * LN_10, LN_10);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpConfig {
    /// Candidate starting points screened; the search runs from the best one.
    pub restarts: usize,
    /// Objective evaluations allowed per start.
    pub max_evals: usize,
    /// Convergence threshold on the simplex spread of objective values.
    pub f_tol: f64,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            max_evals: 80,
            f_tol: 1e-6,
        }
    }
}

/// Fitted hyperparameters in the units of the standardized inputs, plus the residual.
#[derive(Debug, Clone)]
pub struct GpFit {
    pub length_scale: f64,
    pub noise_ratio: f64,
    pub signal_var: f64,
    /// Profiled negative log marginal likelihood, up to an additive constant.
    pub objective: f64,
    /// `x - E[f(z) | x]` at the training inputs, in the units of `x`.
    pub residual: Vec<f64>,
}

/// Pairwise squared Euclidean distances of the standardized rows of `z`.
#[derive(Debug, Clone)]
pub struct SqDist {
    n: usize,
    d: Vec<f64>,
}

impl SqDist {
    pub fn new(z: &[Vec<f64>]) -> Self {
        let n = z.first().map_or(0, |c| c.len());
        let mut d = vec![0.0; n * n];
        for col in z {
            let mut c = col.clone();
            if !stats::standardize(&mut c) {
                continue;
            }
            for i in 0..n {
                let ci = c[i];
                for j in 0..i {
                    let diff = ci - c[j];
                    d[i * n + j] += diff * diff;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                d[j * n + i] = d[i * n + j];
            }
        }
        Self { n, d }
    }
}

struct Objective<'a> {
    dist: &'a SqDist,
    x: &'a Mat<f64>,
}

struct Eval {
    value: f64,
    alpha: Vec<f64>,
    quad: f64,
}

impl Objective<'_> {
    /// Lower triangle of the scaled kernel matrix; the factorization reads no more.
    fn kernel(&self, ln_ell: f64, ln_r: f64) -> Mat<f64> {
        let n = self.dist.n;
        let inv = -0.5 * (-2.0 * ln_ell).exp();
        let diag = 1.0 + ln_r.exp() + JITTER;
        let d = &self.dist.d;
        Mat::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => diag,
            std::cmp::Ordering::Greater => (inv * d[j * n + i]).exp(),
            std::cmp::Ordering::Less => 0.0,
        })
    }

    fn eval(&self, ln_ell: f64, ln_r: f64) -> Option<Eval> {
        let n = self.dist.n as f64;
        let chol = self.kernel(ln_ell, ln_r).llt(Side::Lower).ok()?;
        let sol = chol.solve(self.x);
        let alpha: Vec<f64> = (0..sol.nrows()).map(|i| sol[(i, 0)]).collect();
        let quad: f64 = (0..self.x.nrows()).map(|i| self.x[(i, 0)] * alpha[i]).sum();
        if !(quad > 0.0) || !quad.is_finite() {
            return None;
        }
        let l = chol.L();
        let logdet: f64 = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
        let value = 0.5 * n * (quad / n).ln() + 0.5 * logdet;
        value.is_finite().then_some(Eval { value, alpha, quad })
    }

    fn value(&self, p: [f64; 2]) -> f64 {
        let p = clamp(p);
        self.eval(p[0], p[1]).map_or(f64::INFINITY, |e| e.value)
    }
}

fn clamp(p: [f64; 2]) -> [f64; 2] {
    [
        p[0].clamp(LN_ELL_BOUNDS.0, LN_ELL_BOUNDS.1),
        p[1].clamp(LN_R_BOUNDS.0, LN_R_BOUNDS.1),
    ]
}

/// Deterministic starting points for the search, in `(ln ℓ, ln r)`.
const STARTS: [[f64; 2]; 3] = [[0.0, -LN_10], [-1.0, 0.0], [1.0, -2.0 * LN_10]];

/// Minimizes `f` over two dimensions with the Nelder-Mead simplex method.
pub(crate) fn nelder_mead(
    f: impl Fn([f64; 2]) -> f64,
    start: [f64; 2],
    step: f64,
    max_evals: usize,
    f_tol: f64,
) -> ([f64; 2], f64) {
    let mut s = [start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    let mut fv = [f(s[0]), f(s[1]), f(s[2])];
    let mut evals = 3;
    let comb = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while evals < max_evals {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        s = [s[idx[0]], s[idx[1]], s[idx[2]]];
        fv = [fv[idx[0]], fv[idx[1]], fv[idx[2]]];
        if fv[2].is_finite() && (fv[2] - fv[0]).abs() <= f_tol * (1.0 + fv[0].abs()) {
            break;
        }
        let centroid = comb(s[0], s[1], 0.5);
        let xr = comb(centroid, s[2], -1.0);
        let fr = f(xr);
        evals += 1;
        if fr < fv[0] {
            let xe = comb(centroid, s[2], -2.0);
            let fe = f(xe);
            evals += 1;
            if fe < fr {
                s[2] = xe;
                fv[2] = fe;
            } else {
                s[2] = xr;
                fv[2] = fr;
            }
        } else if fr < fv[1] {
            s[2] = xr;
            fv[2] = fr;
        } else {
            let (xc, fc) = if fr < fv[2] {
                let xc = comb(centroid, xr, 0.5);
                (xc, f(xc))
            } else {
                let xc = comb(centroid, s[2], 0.5);
                (xc, f(xc))
            };
            evals += 1;
            if fc < fv[2].min(fr) {
                s[2] = xc;
                fv[2] = fc;
            } else {
                for k in 1..3 {
                    s[k] = comb(s[0], s[k], 0.5);
                    fv[k] = f(s[k]);
                }
                evals += 2;
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).unwrap();
    (s[best], fv[best])
}

/// Fits the GP of `x` on `z` against a precomputed distance matrix of `z`.
pub fn fit_with_distances(x: &[f64], dist: &SqDist, cfg: &GpConfig) -> Result<GpFit> {
    let n = x.len();
    if dist.n != n {
        return Err(Error::Contract("distance matrix does not match target length".into()));
    }
    let mean = stats::mean(x);
    let mut xs: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let sd = stats::sample_sd(&xs);
    if !(sd > 1e-14 * mean.abs().max(1.0)) {
        return Ok(GpFit {
            length_scale: 1.0,
            noise_ratio: 0.0,
            signal_var: 0.0,
            objective: f64::NEG_INFINITY,
            residual: vec![0.0; n],
        });
    }
    xs.iter_mut().for_each(|v| *v /= sd);
    let xv = Mat::from_fn(n, 1, |i, _| xs[i]);
    let obj = Objective { dist, x: &xv };
    let start = STARTS
        .iter()
        .take(cfg.restarts.max(1))
        .map(|s| (*s, obj.value(*s)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(s, _)| s)
        .expect("at least one start");
    let (p, v) = nelder_mead(|p| obj.value(p), start, 0.5, cfg.max_evals, cfg.f_tol);
    if !v.is_finite() {
        return Err(Error::Conditioning);
    }
    let p = clamp(p);
    let e = obj.eval(p[0], p[1]).ok_or(Error::Conditioning)?;
    let r = p[1].exp();
    // E[f | x] = K A⁻¹ x = x - (r + jitter) A⁻¹ x at the training inputs.
    let residual = e.alpha.iter().map(|a| (r + JITTER) * a * sd).collect();
    Ok(GpFit {
        length_scale: p[0].exp(),
        noise_ratio: r,
        signal_var: e.quad / n as f64 * sd * sd,
        objective: e.value,
        residual,
    })
}

pub fn fit(x: &[f64], z: &[Vec<f64>], cfg: &GpConfig) -> Result<GpFit> {
    if x.len() < 10 {
        return Err(Error::InsufficientSamples {
            n: x.len(),
            required: 10,
        });
    }
    fit_with_distances(x, &SqDist::new(z), cfg)
}

/// Residuals of `x` after GP regression on `z`; an empty `z` only centers `x`.
pub fn gp_regress_residuals(x: &[f64], z: &[Vec<f64>]) -> Result<Vec<f64>> {
    if z.is_empty() {
        let m = stats::mean(x);
        return Ok(x.iter().map(|v| v - m).collect());
    }
    Ok(fit(x, z, &GpConfig::default())?.residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use nalgebra::{DMatrix, DVector};
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, s: u64) -> Vec<f64> {
        let mut r = seed::rng(s);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    fn rms(v: &[f64]) -> f64 {
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let (p, v) = nelder_mead(
            |p| (p[0] - 1.0).powi(2) + 3.0 * (p[1] + 2.0).powi(2),
            [0.0, 0.0],
            0.5,
            400,
            1e-14,
        );
        assert!((p[0] - 1.0).abs() < 1e-4 && (p[1] + 2.0).abs() < 1e-4, "{p:?}");
        assert!(v < 1e-8);
    }

    #[test]
    fn independent_target_keeps_its_variance() {
        let z = normals(200, 11);
        let x = normals(200, 12);
        let res = gp_regress_residuals(&x, &[z]).unwrap();
        let ratio = stats::sample_var(&res) / stats::sample_var(&x);
        assert!((0.75..=1.25).contains(&ratio), "variance ratio {ratio}");
    }

    #[test]
    fn noiseless_linear_target_is_fit() {
        let z = normals(200, 13);
        let x: Vec<f64> = z.iter().map(|v| 2.0 * v).collect();
        let fit = fit(&x, std::slice::from_ref(&z), &GpConfig::default()).unwrap();
        assert!(rms(&fit.residual) < 0.05 * rms(&x), "{}", rms(&fit.residual));

        // Exact posterior mean at the fitted hyperparameters by direct solve.
        let n = z.len();
        let mut zs = z.clone();
        stats::standardize(&mut zs);
        let mean = stats::mean(&x);
        let sd = stats::sample_sd(&x);
        let xs: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
        let k = DMatrix::from_fn(n, n, |i, j| {
            (-(zs[i] - zs[j]).powi(2) / (2.0 * fit.length_scale.powi(2))).exp()
        });
        let a = &k + DMatrix::identity(n, n) * (fit.noise_ratio + JITTER);
        let sol = a.lu().solve(&DVector::from_vec(xs.clone())).unwrap();
        let post = &k * sol;
        for i in 0..n {
            let direct = (xs[i] - post[i]) * sd;
            assert!((direct - fit.residual[i]).abs() < 1e-6, "row {i}");
        }
    }

    #[test]
    fn constant_target_gives_zero_residuals() {
        let z = normals(50, 14);
        let res = gp_regress_residuals(&[3.5; 50], &[z]).unwrap();
        assert!(res.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gp_recovers_smooth_nonlinearity() {
        let z = normals(150, 15);
        let noise = normals(150, 16);
        let x: Vec<f64> = z.iter().zip(&noise).map(|(a, e)| (2.0 * a).sin() + 0.1 * e).collect();
        let fit = fit(&x, &[z], &GpConfig::default()).unwrap();
        let ratio = stats::sample_var(&fit.residual) / 0.01;
        assert!((0.5..2.0).contains(&ratio), "ratio {ratio}, ell {}", fit.length_scale);
    }
}
