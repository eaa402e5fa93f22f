//! Stationarity screen on the linearized model.

use nalgebra::DMatrix;

use super::SyntheticModelSpec;

/// Accepted models have companion spectral radius below `1 - STATIONARITY_MARGIN`.
pub const STATIONARITY_MARGIN: f64 = 1e-6;

/// Companion matrix `[[A1, A2], [I, 0]]` of the model with every coupling
/// function replaced by the identity.
pub(crate) fn companion(spec: &SyntheticModelSpec) -> DMatrix<f64> {
    let n = spec.N;
    let mut f = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for (j, a) in spec.autos.iter().enumerate() {
        f[(j, j)] += a;
    }
    for l in &spec.links {
        f[(l.j, (l.tau - 1) * n + l.i)] += l.coeff;
    }
    for k in 0..n {
        f[(n + k, k)] = 1.0;
    }
    f
}

/// Iteration cap of the Schur decomposition, which can stall on some
/// companion matrices; those fall back to [`gelfand_radius`].
const SCHUR_MAX_ITER: usize = 20_000;

pub fn spectral_radius(spec: &SyntheticModelSpec) -> f64 {
    if spec.N == 0 {
        return 0.0;
    }
    let f = companion(spec);
    match f.clone().try_schur(f64::EPSILON, SCHUR_MAX_ITER) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_radius(&f),
    }
}

/// `lim ‖F^k‖^(1/k)` evaluated at `k = 2^64` by normalized repeated squaring.
pub(crate) fn gelfand_radius(f: &DMatrix<f64>) -> f64 {
    let mut b = f.clone();
    let mut log_scale = 0.0f64;
    let mut weight = 1.0f64;
    for _ in 0..=64 {
        let s = b.amax();
        if s == 0.0 {
            return 0.0;
        }
        b /= s;
        log_scale += weight * s.ln();
        b = &b * &b;
        weight /= 2.0;
    }
    // After m squarings, F^(2^m) = exp(2^m·log_scale)·B, and the max
    // entry of B is of order one.
    log_scale.exp()
}

pub fn check_stationarity(spec: &SyntheticModelSpec) -> bool {
    let r = spectral_radius(spec);
    r.is_finite() && r < 1.0 - STATIONARITY_MARGIN
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_variable_cases() {
        let s = SyntheticModelSpec::linear(vec![0.95], vec![]).unwrap();
        assert!(check_stationarity(&s));
        let s = SyntheticModelSpec::linear(vec![1.0], vec![]).unwrap();
        assert!(!check_stationarity(&s));
    }

    #[test]
    fn two_cycle_matches_hand_eigenvalues() {
        // [[0.5, 0.8], [0.8, 0.5]] has eigenvalues 0.5 ± 0.8.
        let s = SyntheticModelSpec::linear(vec![0.5, 0.5], vec![(0, 1, 1, 0.8), (1, 0, 1, 0.8)]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&s), 1.3, epsilon = 1e-10);
        assert!(!check_stationarity(&s));
    }

    #[test]
    fn gelfand_fallback_matches_eigenvalues() {
        use rand::Rng;
        let mut rng = crate::seed::rng(5);
        for _ in 0..20 {
            let m = DMatrix::from_fn(6, 6, |_, _| rng.random_range(-0.5..0.5));
            let eig = m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert_abs_diff_eq!(gelfand_radius(&m), eig, epsilon = 1e-9);
        }
        // Nilpotent and Jordan cases.
        let mut j = DMatrix::<f64>::zeros(3, 3);
        j[(0, 1)] = 1.0;
        j[(1, 2)] = 1.0;
        assert_eq!(gelfand_radius(&j), 0.0);
        j.fill_diagonal(0.9);
        assert_abs_diff_eq!(gelfand_radius(&j), 0.9, epsilon = 1e-9);
    }

    #[test]
    fn lag_two_root() {
        // x_t = 0.5 x_{t-1} + y_{t-2}·0.3, y white: roots of the 0.5 AR part only.
        let s = SyntheticModelSpec::linear(vec![0.5, 0.0], vec![(1, 0, 2, 0.3)]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&s), 0.5, epsilon = 1e-10);
    }
}
