//! Exact stationary covariances of a linear model.
//!
//! The stacked state `s_t = [X_t; X_{t-1}]` follows `s_t = F s_{t-1} + e_t`
//! with `Cov(e_t) = diag(I, 0)`, so its covariance solves the discrete
//! Lyapunov equation `Σ = F Σ Fᵀ + Q`. Lagged covariances are `F^h Σ`.

use std::sync::Mutex;

use nalgebra::DMatrix;

use super::stationarity::{check_stationarity, companion};
use super::SyntheticModelSpec;
use crate::dataset::LaggedVariable;
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct PopulationCovariance {
    n: usize,
    obs_var: f64,
    f: DMatrix<f64>,
    /// `gamma[h] = F^h Σ`, extended on demand.
    gamma: Mutex<Vec<DMatrix<f64>>>,
}

impl PopulationCovariance {
    /// Requires a stationary model with linear couplings only.
    pub fn new(spec: &SyntheticModelSpec) -> Result<Self> {
        if spec.links.iter().any(|l| !l.func.is_linear()) {
            return Err(Error::Contract("population covariance needs linear couplings".into()));
        }
        if !check_stationarity(spec) {
            return Err(Error::Contract("population covariance needs a stationary model".into()));
        }
        let n = spec.N;
        let f = companion(spec);
        let d = 2 * n;
        // vec(Σ) = (I - F⊗F)⁻¹ vec(Q), column-major vec.
        let kron = f.kronecker(&f);
        let lhs = DMatrix::<f64>::identity(d * d, d * d) - kron;
        let mut q = DMatrix::<f64>::zeros(d * d, 1);
        for k in 0..n {
            q[(k * d + k, 0)] = 1.0;
        }
        let sol = lhs.lu().solve(&q).ok_or(Error::Conditioning)?;
        let sigma = DMatrix::from_column_slice(d, d, sol.as_slice());
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        Ok(Self {
            n,
            obs_var: spec.obs_noise_sd * spec.obs_noise_sd,
            f,
            gamma: Mutex::new(vec![sigma]),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    /// `Cov(X^a_{t+h}, X^b_t)` of the latent process.
    pub fn autocov(&self, h: usize, a: usize, b: usize) -> f64 {
        let mut g = self.gamma.lock().expect("gamma cache");
        while g.len() <= h {
            let next = &self.f * g.last().expect("nonempty");
            g.push(next);
        }
        g[h][(a, b)]
    }

    /// Covariance of two observed lagged variables.
    pub fn cov(&self, x: LaggedVariable, y: LaggedVariable) -> f64 {
        let latent = if y.lag >= x.lag {
            self.autocov(y.lag - x.lag, x.var, y.var)
        } else {
            self.autocov(x.lag - y.lag, y.var, x.var)
        };
        if x == y {
            latent + self.obs_var
        } else {
            latent
        }
    }

    pub fn cov_matrix(&self, vars: &[LaggedVariable]) -> DMatrix<f64> {
        DMatrix::from_fn(vars.len(), vars.len(), |r, c| self.cov(vars[r], vars[c]))
    }

    /// Partial correlation of `x` and `y` given `z` from the precision matrix.
    pub fn partial_corr(&self, x: LaggedVariable, y: LaggedVariable, z: &[LaggedVariable]) -> Result<f64> {
        let mut vars = vec![x, y];
        vars.extend_from_slice(z);
        let p = self.cov_matrix(&vars).try_inverse().ok_or(Error::Conditioning)?;
        let denom = (p[(0, 0)] * p[(1, 1)]).sqrt();
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(Error::Conditioning);
        }
        Ok(-p[(0, 1)] / denom)
    }
}
