//! Partial correlation with an analytic Student-t null.

use super::{ArrayTest, CiOutcome};
use crate::dataset::LaggedSampleArrays;
use crate::error::{Error, Result};
use crate::linalg::{t_two_sided_p, HouseholderQr};

#[derive(Debug, Clone, Copy, Default)]
pub struct ParCorr;

impl ArrayTest for ParCorr {
    fn name(&self) -> &'static str {
        "parcorr"
    }

    fn test_arrays(&self, arrays: &LaggedSampleArrays, _seed: u64) -> Result<CiOutcome> {
        parcorr_test(arrays)
    }
}

/// Correlation of the OLS residuals of `x` and `y` on `z` (with intercept).
pub fn parcorr_test(arrays: &LaggedSampleArrays) -> Result<CiOutcome> {
    let n = arrays.n();
    let dz = arrays.dim_z();
    if n < dz + 3 {
        return Err(Error::InsufficientSamples { n, required: dz + 3 });
    }
    let cols: Vec<&[f64]> = arrays.z.iter().map(Vec::as_slice).collect();
    let qr = HouseholderQr::new(n, &cols, true);
    let rx = qr.residual(&arrays.x);
    let ry = qr.residual(&arrays.y);
    let rho = residual_correlation(&rx, &ry, &arrays.x, &arrays.y)?;
    let dof = n - 2 - dz;
    Ok(CiOutcome {
        statistic: rho,
        p_value: rho_p_value(rho, dof),
        dof_or_n: dof,
    })
}

fn residual_correlation(rx: &[f64], ry: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let ss = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    let centered_ss = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - m) * (a - m)).sum::<f64>()
    };
    let (sxx, syy) = (ss(rx), ss(ry));
    // Residual energy below rounding level of the raw data means z explains x exactly.
    if !(sxx > 1e-24 * centered_ss(x).max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate("x residuals have zero variance".into()));
    }
    if !(syy > 1e-24 * centered_ss(y).max(f64::MIN_POSITIVE)) {
        return Err(Error::Degenerate("y residuals have zero variance".into()));
    }
    let sxy: f64 = rx.iter().zip(ry).map(|(a, b)| a * b).sum();
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a sample partial correlation with `dof` degrees of freedom.
pub fn rho_p_value(rho: f64, dof: usize) -> f64 {
    if rho == 0.0 {
        return 1.0;
    }
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = rho * (dof as f64 / denom).sqrt();
    t_two_sided_p(t, dof as f64)
}
