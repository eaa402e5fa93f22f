//! Nearest-neighbor conditional mutual information with a local permutation null.
//!
//! The estimator uses the maximum norm in every subspace. For each sample the
//! distance `ε_i` to its k-th neighbor in the joint `(x, y, z)` space fixes the
//! subspace counts, which include the sample itself and count neighbors
//! strictly closer than `ε_i`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ArrayTest, CiOutcome};
use crate::dataset::LaggedSampleArrays;
use crate::error::{Error, Result};
use crate::seed;

/// Ties are broken by noise of this amplitude relative to the column sd.
const TIE_NOISE: f64 = 1e-10;
/// Largest sample size for which sorted distance rows are cached across surrogates.
const CACHE_MAX_N: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmiTestConfig {
    pub k_cmi: usize,
    pub k_perm: usize,
    pub b: usize,
    pub rng_seed: u64,
}

impl Default for CmiTestConfig {
    fn default() -> Self {
        Self {
            k_cmi: 50,
            k_perm: 5,
            b: 500,
            rng_seed: 0,
        }
    }
}

impl CmiTestConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k_cmi == 0 || self.k_perm == 0 || self.b == 0 {
            return Err(Error::Config("k_cmi, k_perm and B must all be at least 1".into()));
        }
        if self.k_cmi >= n {
            return Err(Error::Contract(format!("k = {} must be below n = {n}", self.k_cmi)));
        }
        Ok(())
    }
}

/// `ψ(m)` for integer `m` in `1..=n`, via `ψ(1) = -γ` and `ψ(m+1) = ψ(m) + 1/m`.
pub fn digamma_table(n: usize) -> Vec<f64> {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut t = vec![f64::NAN; n + 1];
    if n >= 1 {
        t[1] = -EULER_GAMMA;
    }
    for m in 1..n {
        t[m + 1] = t[m] + 1.0 / m as f64;
    }
    t
}

/// Distance rows of every sample to all others, each sorted ascending.
struct SortedRows {
    m: usize,
    dist: Vec<f64>,
    idx: Vec<u32>,
}

impl SortedRows {
    fn build(n: usize, mut row_fn: impl FnMut(usize, &mut [f64])) -> Self {
        let m = n - 1;
        let mut dist = Vec::with_capacity(n * m);
        let mut idx = Vec::with_capacity(n * m);
        let mut row = vec![0.0; n];
        let mut order: Vec<u32> = Vec::with_capacity(m);
        for i in 0..n {
            row_fn(i, &mut row);
            order.clear();
            order.extend((0..n as u32).filter(|&j| j as usize != i));
            order.sort_unstable_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
            dist.extend(order.iter().map(|&j| row[j as usize]));
            idx.extend_from_slice(&order);
        }
        Self { m, dist, idx }
    }

    fn row(&self, i: usize) -> (&[f64], &[u32]) {
        let r = i * self.m..(i + 1) * self.m;
        (&self.dist[r.clone()], &self.idx[r])
    }
}

/// Pairwise max-norm distances for the fixed `(y, z)` part of the problem.
struct Space<'a> {
    n: usize,
    y: &'a [f64],
    z: &'a [Vec<f64>],
    /// Sorted `dz` and `dyz` rows when `n` is small enough to cache them.
    sorted: Option<(SortedRows, SortedRows)>,
}

impl<'a> Space<'a> {
    fn new(y: &'a [f64], z: &'a [Vec<f64>], cache: bool) -> Self {
        let n = y.len();
        let mut s = Self { n, y, z, sorted: None };
        if cache && (2..=CACHE_MAX_N).contains(&n) {
            let dz = SortedRows::build(n, |i, out| s.dz_row(i, out));
            let dyz = SortedRows::build(n, |i, out| s.dyz_row(i, out));
            s.sorted = Some((dz, dyz));
        }
        s
    }

    fn dz_row(&self, i: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for col in self.z {
            let ci = col[i];
            for (o, c) in out.iter_mut().zip(col) {
                *o = o.max((ci - c).abs());
            }
        }
    }

    fn dyz_row(&self, i: usize, out: &mut [f64]) {
        self.dz_row(i, out);
        let yi = self.y[i];
        for (o, y) in out.iter_mut().zip(self.y) {
            *o = o.max((yi - y).abs());
        }
    }

    /// Sum over samples of `ψ(k_z) - ψ(k_xz) - ψ(k_yz)`, plus `ψ(k)`, divided by n.
    fn estimate(&self, x: &[f64], k: usize, psi: &[f64]) -> f64 {
        if let Some((dz, dyz)) = &self.sorted {
            return self.estimate_sorted(dz, dyz, x, k, psi);
        }
        let n = self.n;
        let mut joint = vec![0.0; n];
        let mut dz = vec![0.0; n];
        let mut dyz = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            self.dz_row(i, &mut dz);
            let yi = self.y[i];
            for j in 0..n {
                dyz[j] = dz[j].max((yi - self.y[j]).abs());
            }
            let xi = x[i];
            let mut m = 0;
            for j in 0..n {
                if j != i {
                    joint[m] = dyz[j].max((xi - x[j]).abs());
                    m += 1;
                }
            }
            let (_, eps, _) = joint[..m].select_nth_unstable_by(k - 1, f64::total_cmp);
            let eps = *eps;
            // Self is always counted; the loop below covers j ≠ i.
            let (mut kxz, mut kyz, mut kz) = (1usize, 1usize, 1usize);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let dzj = dz[j];
                if dzj < eps {
                    kz += 1;
                    let dx = (xi - x[j]).abs();
                    if dx < eps {
                        kxz += 1;
                    }
                    if dyz[j] < eps {
                        kyz += 1;
                    }
                }
            }
            if self.z.is_empty() {
                kz = n;
            }
            acc += psi[kz] - psi[kxz] - psi[kyz];
        }
        psi[k] + acc / n as f64
    }

    /// Same counts as the direct scan, from rows sorted once per `(y, z)`.
    ///
    /// The joint distance is at least `dyz`. The largest joint distance `u`
    /// among the k nearest in `dyz` bounds the k-th joint distance, so only the
    /// prefix with `dyz < u` can hold it. `k_z` and `k_yz` are prefix lengths;
    /// `k_xz` scans only the z-ball.
    fn estimate_sorted(&self, dz: &SortedRows, dyz: &SortedRows, x: &[f64], k: usize, psi: &[f64]) -> f64 {
        let n = self.n;
        let unconditional = self.z.is_empty();
        // Samples ordered by x, used for k_xz when z is empty.
        let mut x_order: Vec<u32> = Vec::new();
        let mut x_pos: Vec<usize> = Vec::new();
        if unconditional {
            x_order = (0..n as u32).collect();
            x_order.sort_unstable_by(|&a, &b| x[a as usize].total_cmp(&x[b as usize]));
            x_pos = vec![0; n];
            for (p, &j) in x_order.iter().enumerate() {
                x_pos[j as usize] = p;
            }
        }
        let mut joint = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            let xi = x[i];
            let (dyz_d, dyz_j) = dyz.row(i);
            let joint_at = |t: usize| dyz_d[t].max((xi - x[dyz_j[t] as usize]).abs());
            let u = (0..k).map(joint_at).fold(f64::NEG_INFINITY, f64::max);
            let len = dyz_d.partition_point(|&d| d < u).max(k);
            joint.clear();
            joint.extend((0..len).map(joint_at));
            let (_, eps, _) = joint.select_nth_unstable_by(k - 1, f64::total_cmp);
            let eps = *eps;
            let kyz = 1 + dyz_d.partition_point(|&d| d < eps);
            let (kz, kxz) = if unconditional {
                let p = x_pos[i];
                let close = |j: u32| (xi - x[j as usize]).abs() < eps;
                let left = x_order[..p].iter().rev().take_while(|&&j| close(j)).count();
                let right = x_order[p + 1..].iter().take_while(|&&j| close(j)).count();
                (n, 1 + left + right)
            } else {
                let (dz_d, dz_j) = dz.row(i);
                let inside = dz_d.partition_point(|&d| d < eps);
                let kxz = 1 + dz_j[..inside]
                    .iter()
                    .filter(|&&j| (xi - x[j as usize]).abs() < eps)
                    .count();
                (1 + inside, kxz)
            };
            acc += psi[kz] - psi[kxz] - psi[kyz];
        }
        psi[k] + acc / n as f64
    }
}

/// CMI estimate `Î(x; y | z)` in nats on the raw arrays.
pub fn cmi_estimate(arrays: &LaggedSampleArrays, k: usize) -> Result<f64> {
    let n = arrays.n();
    if k == 0 || k >= n {
        return Err(Error::Contract(format!("k = {k} must lie in 1..{n}")));
    }
    let space = Space::new(&arrays.y, &arrays.z, false);
    Ok(space.estimate(&arrays.x, k, &digamma_table(n)))
}

/// Standardized copy with seeded tie-breaking noise on every column.
fn jittered(arrays: &LaggedSampleArrays, rng: &mut impl Rng) -> Result<LaggedSampleArrays> {
    let mut a = arrays.standardized()?;
    let mut jitter = |v: &mut Vec<f64>| {
        for x in v.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *x += TIE_NOISE * e;
        }
    };
    jitter(&mut a.x);
    jitter(&mut a.y);
    a.z.iter_mut().for_each(&mut jitter);
    Ok(a)
}

/// `k_perm` nearest neighbors in z-space of every sample, the sample itself included.
fn z_neighbors(space: &Space<'_>, k_perm: usize) -> Vec<Vec<usize>> {
    let n = space.n;
    let k = k_perm.min(n);
    let mut row = vec![0.0; n];
    let mut idx: Vec<usize> = Vec::with_capacity(n);
    (0..n)
        .map(|i| {
            space.dz_row(i, &mut row);
            idx.clear();
            idx.extend(0..n);
            let cmp = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
            if k < n {
                idx.select_nth_unstable_by(k - 1, cmp);
            }
            let mut nb = idx[..k].to_vec();
            nb.sort_by(cmp);
            nb
        })
        .collect()
}

/// Surrogate index map drawing from z-neighbors without reuse where possible.
fn restricted_permutation(neighbors: &mut [Vec<usize>], rng: &mut impl Rng) -> Vec<usize> {
    let n = neighbors.len();
    for nb in neighbors.iter_mut() {
        nb.shuffle(rng);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut used = vec![false; n];
    let mut out = vec![0; n];
    for &i in &order {
        let nb = &neighbors[i];
        let mut pick = nb[0];
        for &c in nb {
            pick = c;
            if !used[c] {
                break;
            }
        }
        out[i] = pick;
        used[pick] = true;
    }
    out
}

/// Local permutation test; `p = (1 + #{surrogate ≥ observed}) / (B + 1)`.
pub fn cmi_local_permutation_test(arrays: &LaggedSampleArrays, cfg: &CmiTestConfig) -> Result<CiOutcome> {
    let n = arrays.n();
    cfg.validate(n)?;
    let mut rng = seed::rng(cfg.rng_seed);
    let a = jittered(arrays, &mut rng)?;
    let psi = digamma_table(n);
    let space = Space::new(&a.y, &a.z, true);
    let observed = space.estimate(&a.x, cfg.k_cmi, &psi);
    let mut neighbors = (!a.z.is_empty()).then(|| z_neighbors(&space, cfg.k_perm));
    let mut surrogate = vec![0.0; n];
    let mut perm: Vec<usize> = (0..n).collect();
    let mut exceed = 0usize;
    for _ in 0..cfg.b {
        let map = match neighbors.as_mut() {
            Some(nb) => restricted_permutation(nb, &mut rng),
            None => {
                perm.shuffle(&mut rng);
                perm.clone()
            }
        };
        for (s, &j) in surrogate.iter_mut().zip(&map) {
            *s = a.x[j];
        }
        if space.estimate(&surrogate, cfg.k_cmi, &psi) >= observed {
            exceed += 1;
        }
    }
    Ok(CiOutcome {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (cfg.b + 1) as f64,
        dof_or_n: n,
    })
}

/// CMI test with a fixed configuration; the per-query seed is mixed into `rng_seed`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Cmi {
    pub cfg: CmiTestConfig,
}

impl Cmi {
    pub fn new(cfg: CmiTestConfig) -> Self {
        Self { cfg }
    }
}

impl ArrayTest for Cmi {
    fn name(&self) -> &'static str {
        "cmi"
    }

    fn test_arrays(&self, arrays: &LaggedSampleArrays, query_seed: u64) -> Result<CiOutcome> {
        let cfg = CmiTestConfig {
            rng_seed: seed::derive(self.cfg.rng_seed, &[query_seed]),
            ..self.cfg
        };
        cmi_local_permutation_test(arrays, &cfg)
    }
}
