//! Unconditional pairwise association between lagged variables.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::assemble;
use crate::dataset::{LaggedSampleArrays, LaggedVariable, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::{LinkResult, TimeSeriesGraph};
use crate::indep_tests::dcor::dcor;
use crate::indep_tests::{ArrayTest, CiOutcome, Cmi, CmiTestConfig, CondIndTest, ParCorr};
use crate::pcmci::{DiscoveryConfig, Runner};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairwiseMeasure {
    /// Pearson correlation with the Student-t null.
    Corr,
    /// Distance correlation with a `b`-shuffle permutation null.
    Dcor { b: usize },
    /// Nearest-neighbor mutual information with a shuffle null.
    Mi(CmiTestConfig),
}

impl PairwiseMeasure {
    pub fn name(&self) -> &'static str {
        match self {
            PairwiseMeasure::Corr => "corr",
            PairwiseMeasure::Dcor { .. } => "dcor",
            PairwiseMeasure::Mi(_) => "mi",
        }
    }
}

/// Distance correlation of `x` and `y` with `p = (1 + #{surrogate ≥ observed}) / (b + 1)`
/// from shuffles of `x`. Conditions are not supported.
#[derive(Debug, Clone, Copy)]
pub struct DcorPermutation {
    pub b: usize,
}

impl ArrayTest for DcorPermutation {
    fn name(&self) -> &'static str {
        "dcor"
    }

    fn test_arrays(&self, arrays: &LaggedSampleArrays, seed: u64) -> Result<CiOutcome> {
        if arrays.dim_z() > 0 {
            return Err(Error::Contract("the permutation dCor test is unconditional".into()));
        }
        if self.b == 0 {
            return Err(Error::Config("B must be at least 1".into()));
        }
        let a = arrays.standardized()?;
        let observed = dcor(&a.x, &a.y)?;
        let mut rng = seed::rng(seed);
        let mut shuffled = a.x.clone();
        let mut exceed = 0usize;
        for _ in 0..self.b {
            shuffled.shuffle(&mut rng);
            if dcor(&shuffled, &a.y)? >= observed {
                exceed += 1;
            }
        }
        Ok(CiOutcome {
            statistic: observed,
            p_value: (1 + exceed) as f64 / (self.b + 1) as f64,
            dof_or_n: a.n(),
        })
    }
}

/// Tests every lagged pair `(X^i_{t-tau}, X^j_t)`, `tau = 1..=tau_max`, including `i = j`.
pub fn pairwise(ds: &TimeSeriesDataset, cfg: &DiscoveryConfig, measure: PairwiseMeasure) -> Result<TimeSeriesGraph> {
    cfg.validate(ds)?;
    let test: Box<dyn CondIndTest> = match measure {
        PairwiseMeasure::Corr => Box::new(ParCorr),
        PairwiseMeasure::Dcor { b } => Box::new(DcorPermutation { b }),
        PairwiseMeasure::Mi(c) => Box::new(Cmi::new(c)),
    };
    let n = ds.n_vars();
    let runner = Runner::new(ds, test.as_ref(), cfg.tau_max, cfg.seed, false);
    let slots: Vec<(usize, usize, usize)> = (0..n)
        .flat_map(|j| (1..=cfg.tau_max).flat_map(move |tau| (0..n).map(move |i| (i, tau, j))))
        .collect();
    let links = slots
        .par_iter()
        .map(|&(i, tau, j)| {
            let o = runner.test(LaggedVariable::new(i, tau), LaggedVariable::new(j, 0), &[])?;
            Ok(LinkResult {
                source: i,
                lag: tau,
                target: j,
                stat: o.statistic,
                p: o.p_value,
                q: None,
                decided: o.p_value <= cfg.alpha_mci,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(ds, cfg, measure.name(), "pairwise", links))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shifted_pair() -> TimeSeriesDataset {
        let x: Vec<f64> = (0..200)
            .map(|t| ((t * t) as f64 * 0.37).sin() + (t as f64 * 0.11).cos())
            .collect();
        let y: Vec<f64> = (0..200).map(|t| if t >= 2 { x[t - 2] } else { 0.0 }).collect();
        TimeSeriesDataset::from_columns(vec![x, y]).unwrap()
    }

    fn cfg() -> DiscoveryConfig {
        DiscoveryConfig {
            tau_max: 4,
            ..DiscoveryConfig::default()
        }
    }

    #[test]
    fn exact_shift_peaks_at_its_lag() {
        let ds = shifted_pair();
        for m in [PairwiseMeasure::Corr, PairwiseMeasure::Dcor { b: 20 }] {
            let g = pairwise(&ds, &cfg(), m).unwrap();
            let best = (1..=4)
                .max_by(|a, b| {
                    let s = |tau| g.get(0, tau, 1).unwrap().stat.abs();
                    s(*a).total_cmp(&s(*b))
                })
                .unwrap();
            assert_eq!(best, 2, "{}", m.name());
            assert!((g.get(0, 2, 1).unwrap().stat - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dcor_rejects_conditions_and_is_seeded() {
        let a =
            LaggedSampleArrays::new(vec![1.0, 2.0, 0.5, 3.0], vec![0.1, 0.4, 0.2, 0.9], vec![vec![0.0; 4]]).unwrap();
        assert!(DcorPermutation { b: 5 }.test_arrays(&a, 0).is_err());
        let x: Vec<f64> = (0..50).map(|t| (t as f64 * 1.3).sin()).collect();
        let y: Vec<f64> = (0..50).map(|t| (t as f64 * 0.7).cos()).collect();
        let a = LaggedSampleArrays::new(x, y, vec![]).unwrap();
        let t = DcorPermutation { b: 30 };
        assert_eq!(t.test_arrays(&a, 4).unwrap(), t.test_arrays(&a, 4).unwrap());
    }
}
