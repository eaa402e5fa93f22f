//! Distance correlation of two univariate samples.

use crate::error::{Error, Result};

/// Squared distance covariance and variances in one pass over pairs.
///
/// Uses `dCov² = S1 + S2 - 2·S3` with `S1` the mean of `a_jk·b_jk`, `S2` the
/// product of the grand means and `S3` the mean of the row-mean products, which
/// equals the mean of the doubly-centered product `A_jk·B_jk`. Every term is a
/// commutative product, so swapping the arguments is bit-identical.
fn dcov_terms(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    let nf = n as f64;
    let mut row_a = vec![0.0; n];
    let mut row_b = vec![0.0; n];
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for j in 0..n {
        let (xj, yj) = (x[j], y[j]);
        let (mut ra, mut rb) = (0.0, 0.0);
        let (mut pab, mut paa, mut pbb) = (0.0, 0.0, 0.0);
        for k in 0..j {
            let a = (xj - x[k]).abs();
            let b = (yj - y[k]).abs();
            ra += a;
            rb += b;
            row_a[k] += a;
            row_b[k] += b;
            pab += a * b;
            paa += a * a;
            pbb += b * b;
        }
        row_a[j] += ra;
        row_b[j] += rb;
        sab += pab;
        saa += paa;
        sbb += pbb;
    }
    let n2 = nf * nf;
    let (s1ab, s1aa, s1bb) = (2.0 * sab / n2, 2.0 * saa / n2, 2.0 * sbb / n2);
    let ma: f64 = row_a.iter().sum::<f64>() / n2;
    let mb: f64 = row_b.iter().sum::<f64>() / n2;
    let (mut s3ab, mut s3aa, mut s3bb) = (0.0, 0.0, 0.0);
    for j in 0..n {
        let (ra, rb) = (row_a[j] / nf, row_b[j] / nf);
        s3ab += ra * rb;
        s3aa += ra * ra;
        s3bb += rb * rb;
    }
    let (s3ab, s3aa, s3bb) = (s3ab / nf, s3aa / nf, s3bb / nf);
    (
        s1ab + ma * mb - 2.0 * s3ab,
        s1aa + ma * ma - 2.0 * s3aa,
        s1bb + mb * mb - 2.0 * s3bb,
    )
}

/// Sample distance correlation in `[0, 1]`.
pub fn dcor(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Contract("dcor inputs differ in length".into()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientSamples {
            n: x.len(),
            required: 2,
        });
    }
    let (cov, vx, vy) = dcov_terms(x, y);
    let denom = (vx * vy).sqrt();
    if !(denom > 0.0) {
        return Err(Error::Degenerate("zero distance variance".into()));
    }
    Ok((cov.max(0.0) / denom).sqrt().min(1.0))
}

/// Maps values to `rank / n` with rank 1 for the smallest; the largest value maps
/// to `(n - 0.5) / n` instead of 1. Ties are ranked in index order.
pub fn copula_ranks(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 || x.iter().all(|v| *v == x[0]) {
        return Err(Error::Degenerate("all values tie, ranks are degenerate".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let nf = n as f64;
    let mut out = vec![0.0; n];
    for (r, &i) in idx.iter().enumerate() {
        out[i] = (r + 1) as f64 / nf;
    }
    out[idx[n - 1]] = (nf - 0.5) / nf;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    /// Direct O(n²)-memory double centering.
    fn dcor_reference(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let centered = |v: &[f64]| {
            let d: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|k| (v[j] - v[k]).abs()).collect()).collect();
            let rows: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
            let grand = rows.iter().sum::<f64>() / n as f64;
            (0..n)
                .map(|j| (0..n).map(|k| d[j][k] - rows[j] - rows[k] + grand).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        };
        let (a, b) = (centered(x), centered(y));
        let mean_prod = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| {
            p.iter()
                .zip(q)
                .map(|(r, s)| r.iter().zip(s).map(|(u, v)| u * v).sum::<f64>())
                .sum::<f64>()
                / (n * n) as f64
        };
        (mean_prod(&a, &b) / (mean_prod(&a, &a) * mean_prod(&b, &b)).sqrt()).sqrt()
    }

    fn uniforms(n: usize, s: u64, lo: f64, hi: f64) -> Vec<f64> {
        let mut r = seed::rng(s);
        (0..n).map(|_| r.random_range(lo..hi)).collect()
    }

    #[test]
    fn matches_double_centering() {
        let x = uniforms(120, 1, -1.0, 1.0);
        let y: Vec<f64> = x
            .iter()
            .zip(uniforms(120, 2, 0.0, 0.3))
            .map(|(a, e)| a * a + e)
            .collect();
        assert_abs_diff_eq!(dcor(&x, &y).unwrap(), dcor_reference(&x, &y), epsilon = 1e-10);
    }

    #[test]
    fn self_dependence_is_one() {
        let x = uniforms(80, 3, 0.0, 1.0);
        assert_abs_diff_eq!(dcor(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_and_shift_invariant() {
        let x = uniforms(90, 4, 0.0, 1.0);
        let y = uniforms(90, 5, 0.0, 1.0);
        assert_eq!(dcor(&x, &y).unwrap().to_bits(), dcor(&y, &x).unwrap().to_bits());
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.75).collect();
        assert_abs_diff_eq!(dcor(&shifted, &y).unwrap(), dcor(&x, &y).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn copula_mapping() {
        let r = copula_ranks(&[0.3, -1.0, 2.0, 0.5]).unwrap();
        assert_eq!(r, vec![0.5, 0.25, 0.875, 0.75]);
        assert!(copula_ranks(&[1.0; 5]).is_err());
    }
}
