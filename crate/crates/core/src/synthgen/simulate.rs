//! Forward simulation of a synthetic model.

use rand_distr::{Distribution, Normal, StandardNormal};

use super::SyntheticModelSpec;
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_TRANSIENT: usize = 1000;
/// Magnitude treated as an escape from the stationary regime.
const DIVERGENCE_BOUND: f64 = 1e6;

/// Simulates `t` steps after discarding `transient` burn-in steps, then adds
/// observational noise of sd `spec.obs_noise_sd`. Realizations differ by `seed`.
pub fn simulate(spec: &SyntheticModelSpec, t: usize, transient: usize, seed: u64) -> Result<TimeSeriesDataset> {
    if t < 10 {
        return Err(Error::Config(format!("T = {t} is below the minimum of 10")));
    }
    if transient < 100 {
        return Err(Error::Config(format!(
            "transient = {transient} is below the minimum of 100"
        )));
    }
    let n = spec.N;
    let total = t + transient;
    let mut rng = seed::rng(seed);
    // Row-major state history, `total x n`.
    let mut x = vec![0.0f64; total * n];
    for step in 0..total {
        for j in 0..n {
            let mut v: f64 = StandardNormal.sample(&mut rng);
            if step >= 1 {
                v += spec.autos[j] * x[(step - 1) * n + j];
            }
            x[step * n + j] = v;
        }
        for l in &spec.links {
            if step >= l.tau {
                x[step * n + l.j] += l.coeff * l.func.eval(x[(step - l.tau) * n + l.i]);
            }
        }
        if x[step * n..(step + 1) * n]
            .iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
        {
            return Err(Error::Diverged { step });
        }
    }
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (transient..total).map(|s| x[s * n + j]).collect())
        .collect();
    if spec.obs_noise_sd > 0.0 {
        let noise = Normal::new(0.0, spec.obs_noise_sd).expect("valid sd");
        for c in &mut cols {
            c.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
        }
    }
    TimeSeriesDataset::from_columns(cols)
}
