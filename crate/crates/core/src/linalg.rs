//! Householder least squares on column-major designs.
//!
//! Columns that are numerically dependent on earlier ones are skipped rather
//! than producing a singular factor, so projections stay well defined for
//! rank-deficient conditioning sets.

use crate::error::{Error, Result};

/// Relative tolerance below which a column's remaining norm marks it dependent.
const RANK_TOL: f64 = 1e-10;

/// QR factorization of `[1 | Z]` (intercept optional), stored as reflectors.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    n: usize,
    p: usize,
    /// Working matrix after elimination, column-major `n x p`.
    a: Vec<f64>,
    /// For each accepted column: (column index, reflector vector over rows `r..n`, 2 / vᵀv).
    reflectors: Vec<(usize, Vec<f64>, f64)>,
    intercept: bool,
}

impl HouseholderQr {
    /// Factorizes the columns; with `intercept` every column is centered first,
    /// which is equivalent to prepending a column of ones. Every column has `n` rows.
    pub fn new(n: usize, cols: &[&[f64]], intercept: bool) -> Self {
        let p = cols.len();
        let mut a = Vec::with_capacity(n * p);
        let mut col_norms = Vec::with_capacity(p);
        for c in cols {
            debug_assert_eq!(c.len(), n);
            let m = if intercept {
                c.iter().sum::<f64>() / n as f64
            } else {
                0.0
            };
            let start = a.len();
            a.extend(c.iter().map(|v| v - m));
            col_norms.push(norm(&a[start..]));
        }
        let mut reflectors = Vec::with_capacity(p);
        let mut r = 0usize;
        for k in 0..p {
            if r >= n {
                break;
            }
            let col = &mut a[k * n..(k + 1) * n];
            let sub = &col[r..];
            let s = norm(sub);
            if !(s > RANK_TOL * col_norms[k]) || s == 0.0 {
                continue;
            }
            let alpha = if sub[0] > 0.0 { -s } else { s };
            let mut v = sub.to_vec();
            v[0] -= alpha;
            let vtv: f64 = v.iter().map(|x| x * x).sum();
            if vtv == 0.0 {
                // Column already equals alpha·e_r; no reflection needed.
                reflectors.push((k, v, 0.0));
                r += 1;
                continue;
            }
            let beta = 2.0 / vtv;
            for j in k..p {
                let cj = &mut a[j * n + r..(j + 1) * n];
                let d: f64 = v.iter().zip(cj.iter()).map(|(x, y)| x * y).sum::<f64>() * beta;
                cj.iter_mut().zip(&v).for_each(|(y, x)| *y -= d * x);
            }
            reflectors.push((k, v, beta));
            r += 1;
        }
        Self {
            n,
            p,
            a,
            reflectors,
            intercept,
        }
    }

    pub fn rank(&self) -> usize {
        self.reflectors.len() + usize::from(self.intercept)
    }

    pub fn is_full_rank(&self) -> bool {
        self.reflectors.len() == self.p
    }

    fn apply_qt(&self, y: &mut [f64]) {
        for (r, (_, v, beta)) in self.reflectors.iter().enumerate() {
            let seg = &mut y[r..];
            let d: f64 = v.iter().zip(seg.iter()).map(|(x, y)| x * y).sum::<f64>() * beta;
            seg.iter_mut().zip(v).for_each(|(y, x)| *y -= d * x);
        }
    }

    fn apply_q(&self, y: &mut [f64]) {
        for (r, (_, v, beta)) in self.reflectors.iter().enumerate().rev() {
            let seg = &mut y[r..];
            let d: f64 = v.iter().zip(seg.iter()).map(|(x, y)| x * y).sum::<f64>() * beta;
            seg.iter_mut().zip(v).for_each(|(y, x)| *y -= d * x);
        }
    }

    /// Residual of `y` after projection onto the column space (plus intercept).
    pub fn residual(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n);
        let mut out = y.to_vec();
        if self.intercept {
            let m = out.iter().sum::<f64>() / self.n as f64;
            out.iter_mut().for_each(|v| *v -= m);
        }
        self.apply_qt(&mut out);
        out[..self.reflectors.len()].iter_mut().for_each(|v| *v = 0.0);
        self.apply_q(&mut out);
        out
    }

    /// R entry in accepted-column coordinates.
    fn r(&self, row: usize, acc_col: usize) -> f64 {
        let k = self.reflectors[acc_col].0;
        self.a[k * self.n + row]
    }

    /// Least-squares fit with classical standard errors; requires full column rank.
    pub fn ols(&self, y: &[f64]) -> Result<OlsFit> {
        if !self.is_full_rank() {
            return Err(Error::Degenerate(format!(
                "design of {} columns has rank {}",
                self.p,
                self.reflectors.len()
            )));
        }
        let p = self.p;
        let dof = self.n as isize - p as isize - isize::from(self.intercept);
        if dof <= 0 {
            return Err(Error::Dimensionality {
                regressors: p,
                n: self.n,
            });
        }
        let mut qty = y.to_vec();
        if self.intercept {
            let m = qty.iter().sum::<f64>() / self.n as f64;
            qty.iter_mut().for_each(|v| *v -= m);
        }
        self.apply_qt(&mut qty);
        let rss: f64 = qty[p..].iter().map(|v| v * v).sum();
        let mut beta = vec![0.0; p];
        for i in (0..p).rev() {
            let mut s = qty[i];
            for (j, b) in beta.iter().enumerate().skip(i + 1) {
                s -= self.r(i, j) * b;
            }
            beta[i] = s / self.r(i, i);
        }
        // diag((RᵀR)⁻¹) = row norms² of R⁻¹.
        let mut rinv = vec![0.0; p * p];
        for j in 0..p {
            rinv[j * p + j] = 1.0 / self.r(j, j);
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in i + 1..=j {
                    s += self.r(i, k) * rinv[j * p + k];
                }
                rinv[j * p + i] = -s / self.r(i, i);
            }
        }
        let sigma2 = rss / dof as f64;
        let se = (0..p)
            .map(|i| {
                let d: f64 = (i..p).map(|j| rinv[j * p + i].powi(2)).sum();
                (sigma2 * d).sqrt()
            })
            .collect();
        Ok(OlsFit {
            beta,
            se,
            rss,
            dof: dof as usize,
        })
    }
}

#[derive(Debug, Clone)]
pub struct OlsFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub rss: f64,
    pub dof: usize,
}

impl OlsFit {
    pub fn t_stat(&self, j: usize) -> f64 {
        self.beta[j] / self.se[j]
    }
}

fn norm(x: &[f64]) -> f64 {
    // Scaled to avoid overflow on large inputs.
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * x.iter().map(|v| (v / m).powi(2)).sum::<f64>().sqrt()
}

/// Two-sided t-distribution tail probability.
pub fn t_two_sided_p(t: f64, dof: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    if t.is_infinite() {
        return 0.0;
    }
    if t.is_nan() {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, s: u64) -> Vec<f64> {
        let mut r = seed::rng(s);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    #[test]
    fn residual_is_orthogonal_to_design() {
        let z1 = normals(40, 1);
        let z2 = normals(40, 2);
        let y = normals(40, 3);
        let qr = HouseholderQr::new(z1.len(), &[&z1, &z2], true);
        let e = qr.residual(&y);
        for c in [&z1, &z2] {
            let d: f64 = c.iter().zip(&e).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(d, 0.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(e.iter().sum::<f64>(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn dependent_columns_are_skipped() {
        let z1 = normals(30, 4);
        let z2: Vec<f64> = z1.iter().map(|v| 2.0 * v).collect();
        let y = normals(30, 5);
        let full = HouseholderQr::new(z1.len(), &[&z1, &z2], true);
        let single = HouseholderQr::new(z1.len(), &[&z1], true);
        assert_eq!(full.rank(), 2);
        for (a, b) in full.residual(&y).iter().zip(single.residual(&y)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn ols_matches_normal_equations() {
        let n = 25;
        let x1 = normals(n, 6);
        let x2 = normals(n, 7);
        let y: Vec<f64> = (0..n)
            .map(|i| 0.5 * x1[i] - 1.5 * x2[i] + 0.1 * (i as f64).cos())
            .collect();
        let fit = HouseholderQr::new(y.len(), &[&x1, &x2], false).ols(&y).unwrap();
        // 2x2 normal equations solved by Cramer's rule.
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (a11, a12, a22) = (dot(&x1, &x1), dot(&x1, &x2), dot(&x2, &x2));
        let (b1, b2) = (dot(&x1, &y), dot(&x2, &y));
        let det = a11 * a22 - a12 * a12;
        assert_abs_diff_eq!(fit.beta[0], (b1 * a22 - b2 * a12) / det, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.beta[1], (a11 * b2 - a12 * b1) / det, epsilon = 1e-12);
        let rss: f64 = (0..n)
            .map(|i| (y[i] - fit.beta[0] * x1[i] - fit.beta[1] * x2[i]).powi(2))
            .sum();
        assert_abs_diff_eq!(fit.rss, rss, epsilon = 1e-12);
        let s2 = rss / (n - 2) as f64;
        assert_abs_diff_eq!(fit.se[0], (s2 * a22 / det).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(fit.se[1], (s2 * a11 / det).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn t_tail_reference_values() {
        assert_eq!(t_two_sided_p(0.0, 10.0), 1.0);
        assert_eq!(t_two_sided_p(f64::INFINITY, 10.0), 0.0);
        // Two-sided 5% critical value for 10 dof.
        assert_abs_diff_eq!(t_two_sided_p(2.228138851986, 10.0), 0.05, epsilon = 1e-9);
    }
}
