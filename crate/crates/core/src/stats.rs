//! Small descriptive-statistics helpers shared across modules.

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the n - 1 denominator.
pub fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn sample_sd(x: &[f64]) -> f64 {
    sample_var(x).sqrt()
}

/// Centers and scales `x` in place; returns `false` (leaving `x` centered)
/// when the spread is zero relative to the magnitude of the data.
pub fn standardize(x: &mut [f64]) -> bool {
    let m = mean(x);
    x.iter_mut().for_each(|v| *v -= m);
    let ss: f64 = x.iter().map(|v| v * v).sum();
    let sd = (ss / (x.len() as f64 - 1.0)).sqrt();
    let scale = m.abs().max(1.0);
    if !(sd > 1e-14 * scale) || !sd.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= sd);
    true
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Sample lag-1 autocorrelation `corr(x_{t-1}, x_t)`; zero for constant input.
pub fn lag1_autocorr(x: &[f64]) -> f64 {
    if x.len() < 3 {
        return 0.0;
    }
    pearson(&x[..x.len() - 1], &x[1..]).unwrap_or(0.0)
}

/// Quantile with linear interpolation between order statistics of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
