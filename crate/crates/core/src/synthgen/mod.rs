//! Synthetic benchmark models with known causal structure.
//!
//! Each variable follows
//! `X^j_t = a_j·X^j_{t-1} + Σ c·f(X^i_{t-τ}) + η^j_t` with unit Gaussian
//! innovations, where the coupling functions `f` are linear or one of two
//! functions that are linear for large `|x|`. Models whose linearized VAR is
//! not stationary are redrawn.

mod population;
mod simulate;
mod stationarity;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::LaggedLink;
use crate::seed;

pub use population::PopulationCovariance;
pub use simulate::{simulate, DEFAULT_TRANSIENT};
pub use stationarity::{check_stationarity, spectral_radius};

pub const LOW_POOL: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.9];
pub const HIGH_POOL: [f64; 4] = [0.6, 0.8, 0.9, 0.95];
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingFn {
    F1,
    F2,
    F3,
}

impl CouplingFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            CouplingFn::F1 => x,
            CouplingFn::F2 => (1.0 - 4.0 * (-0.5 * x * x).exp()) * x,
            CouplingFn::F3 => (1.0 - 4.0 * x.powi(3) * (-0.5 * x * x).exp()) * x,
        }
    }

    pub fn is_linear(self) -> bool {
        self == CouplingFn::F1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    Linear,
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutocorrPool {
    Low,
    High,
    /// Low pool for even seeds, high pool for odd seeds.
    Mixed,
}

impl AutocorrPool {
    pub fn values(self, seed: u64) -> &'static [f64] {
        match self {
            AutocorrPool::Low => &LOW_POOL,
            AutocorrPool::High => &HIGH_POOL,
            AutocorrPool::Mixed if seed.is_multiple_of(2) => &LOW_POOL,
            AutocorrPool::Mixed => &HIGH_POOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingLink {
    pub i: usize,
    pub j: usize,
    pub tau: usize,
    pub coeff: f64,
    pub func: CouplingFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SyntheticModelSpec {
    pub N: usize,
    pub L: usize,
    pub links: Vec<CouplingLink>,
    pub autos: Vec<f64>,
    pub obs_noise_sd: f64,
    pub seed: u64,
}

impl SyntheticModelSpec {
    pub fn n_vars(&self) -> usize {
        self.N
    }

    pub fn max_lag(&self) -> usize {
        self.links
            .iter()
            .map(|l| l.tau)
            .max()
            .unwrap_or(0)
            .max(usize::from(self.autos.iter().any(|a| *a != 0.0)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.autos.len() != self.N {
            return Err(Error::Contract(format!(
                "{} autocoefficients for N = {}",
                self.autos.len(),
                self.N
            )));
        }
        if let Some(l) = self
            .links
            .iter()
            .find(|l| l.i == l.j || l.i >= self.N || l.j >= self.N || l.tau == 0)
        {
            return Err(Error::Contract(format!("invalid coupling link {l:?}")));
        }
        if !(self.obs_noise_sd >= 0.0) {
            return Err(Error::Contract("observation noise sd must be nonnegative".into()));
        }
        Ok(())
    }

    /// Linear specification built directly from given links and autocoefficients.
    pub fn linear(autos: Vec<f64>, links: Vec<(usize, usize, usize, f64)>) -> Result<Self> {
        let spec = Self {
            N: autos.len(),
            L: links.len(),
            links: links
                .into_iter()
                .map(|(i, j, tau, coeff)| CouplingLink {
                    i,
                    j,
                    tau,
                    coeff,
                    func: CouplingFn::F1,
                })
                .collect(),
            autos,
            obs_noise_sd: 0.0,
            seed: 0,
        };
        spec.check()?;
        Ok(spec)
    }
}

/// Parameters of one model draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ModelParams {
    pub N: usize,
    pub L: usize,
    pub c: f64,
    pub mode: CouplingMode,
    pub pool: AutocorrPool,
    #[serde(default)]
    pub obs_noise_sd: f64,
}

/// Exact coupling-function counts for `l` links: half linear (rounded up), the
/// rest split between the two nonlinear functions, `F2` taking the odd one.
fn function_tags(l: usize, mode: CouplingMode, rng: &mut impl Rng) -> Vec<CouplingFn> {
    match mode {
        CouplingMode::Linear => vec![CouplingFn::F1; l],
        CouplingMode::Nonlinear => {
            let n_lin = l.div_ceil(2);
            let rest = l - n_lin;
            let n_f2 = rest.div_ceil(2);
            let mut tags = vec![CouplingFn::F1; n_lin];
            tags.extend(std::iter::repeat_n(CouplingFn::F2, n_f2));
            tags.extend(std::iter::repeat_n(CouplingFn::F3, rest - n_f2));
            tags.shuffle(rng);
            tags
        }
    }
}

/// Draws a stationary model, redrawing up to [`MAX_ATTEMPTS`] times.
pub fn draw_model(params: &ModelParams, seed: u64) -> Result<SyntheticModelSpec> {
    let n = params.N;
    let slots: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).flat_map(move |j| (1..=2).map(move |tau| (i, j, tau))))
        .filter(|(i, j, _)| i != j)
        .collect();
    if n == 0 {
        return Err(Error::Config("N must be at least 1".into()));
    }
    if params.L > slots.len() {
        return Err(Error::Config(format!(
            "L = {} exceeds the {} distinct link slots for N = {n}",
            params.L,
            slots.len()
        )));
    }
    if !(params.obs_noise_sd >= 0.0) || !params.c.is_finite() {
        return Err(Error::Config(
            "coupling and noise parameters must be finite and nonnegative".into(),
        ));
    }
    let pool = params.pool.values(seed);
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = seed::rng(seed::derive(seed, &[attempt as u64]));
        let autos: Vec<f64> = (0..n).map(|_| pool[rng.random_range(0..pool.len())]).collect();
        let chosen = index::sample(&mut rng, slots.len(), params.L);
        let tags = function_tags(params.L, params.mode, &mut rng);
        let links: Vec<CouplingLink> = chosen
            .iter()
            .zip(tags)
            .map(|(s, func)| {
                let (i, j, tau) = slots[s];
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                CouplingLink {
                    i,
                    j,
                    tau,
                    coeff: sign * params.c,
                    func,
                }
            })
            .collect();
        let spec = SyntheticModelSpec {
            N: n,
            L: params.L,
            links,
            autos,
            obs_noise_sd: params.obs_noise_sd,
            seed,
        };
        if check_stationarity(&spec) {
            return Ok(spec);
        }
    }
    Err(Error::Unsatisfiable { attempts: MAX_ATTEMPTS })
}

/// True links of a model: every coupling plus `(j, 1, j)` for each `a_j ≠ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthGraph {
    pub n_vars: usize,
    /// Sorted, without duplicates.
    pub links: Vec<LaggedLink>,
}

impl GroundTruthGraph {
    pub fn contains(&self, l: &LaggedLink) -> bool {
        self.links.binary_search(l).is_ok()
    }

    pub fn cross_links(&self) -> impl Iterator<Item = &LaggedLink> {
        self.links.iter().filter(|l| l.is_cross())
    }

    pub fn max_lag(&self) -> usize {
        self.links.iter().map(|l| l.lag).max().unwrap_or(0)
    }

    /// Sorted parents of `target` as `(var, lag)` pairs.
    pub fn parents_of(&self, target: usize) -> Vec<crate::LaggedVariable> {
        let mut v: Vec<_> = self
            .links
            .iter()
            .filter(|l| l.target == target)
            .map(|l| crate::LaggedVariable::new(l.source, l.lag))
            .collect();
        v.sort();
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut g: Self = serde_json::from_str(s)?;
        g.links.sort();
        g.links.dedup();
        Ok(g)
    }
}

pub fn export_ground_truth(spec: &SyntheticModelSpec) -> GroundTruthGraph {
    let mut links: Vec<LaggedLink> = spec.links.iter().map(|l| LaggedLink::new(l.i, l.tau, l.j)).collect();
    links.extend(
        spec.autos
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, _)| LaggedLink::new(j, 1, j)),
    );
    links.sort();
    links.dedup();
    GroundTruthGraph { n_vars: spec.N, links }
}
