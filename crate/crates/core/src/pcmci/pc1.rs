//! PC-stable style condition selection with strength-sorted parents.

use std::cmp::Ordering;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::{DiscoveryConfig, Runner};
use crate::dataset::{LaggedVariable, TimeSeriesDataset};
use crate::error::Result;
use crate::indep_tests::CondIndTest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentSet {
    pub target: usize,
    /// Sorted by descending minimum statistic, ties by ascending `(lag, var)`.
    pub parents: Vec<LaggedVariable>,
    /// Minimum absolute statistic over all tests of each parent.
    pub min_stats: Vec<f64>,
}

impl ParentSet {
    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn contains(&self, v: &LaggedVariable) -> bool {
        self.parents.contains(v)
    }
}

/// Full outcome of one condition-selection run, including removed candidates.
#[derive(Debug, Clone)]
pub(crate) struct SelectionTrace {
    pub parents: ParentSet,
    /// Every initial candidate in `(lag, var)` order.
    pub records: Vec<CandidateRecord>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct CandidateRecord {
    pub var: LaggedVariable,
    /// Largest p-value over all tests run on the candidate.
    pub max_p: f64,
    /// Signed statistic of the test with the smallest absolute value.
    pub stat: f64,
}

fn strength_order(a: &(LaggedVariable, f64), b: &(LaggedVariable, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Condition selection for `target` at threshold `alpha`.
///
/// For `p = 0, 1, ...` every surviving candidate is tested against up to
/// `q_max` size-`p` subsets of the other candidates in lexicographic order of
/// the sorted list. Removals are deferred to the end of each sweep, then the
/// survivors are re-sorted by their minimum absolute statistic.
pub(crate) fn condition_selection(
    runner: &Runner<'_>,
    target: usize,
    alpha: f64,
    q_max: usize,
    p_max: usize,
) -> Result<SelectionTrace> {
    let n_vars = runner.ds.n_vars();
    let y = LaggedVariable::new(target, 0);
    let mut cands: Vec<(LaggedVariable, f64)> = (1..=runner.tau_max)
        .flat_map(|lag| (0..n_vars).map(move |var| (LaggedVariable::new(var, lag), f64::INFINITY)))
        .collect();
    let mut records: Vec<CandidateRecord> = cands
        .iter()
        .map(|(v, _)| CandidateRecord {
            var: *v,
            max_p: 0.0,
            stat: f64::INFINITY,
        })
        .collect();
    let slot = |v: &LaggedVariable| (v.lag - 1) * n_vars + v.var;
    for p in 0..=p_max {
        if cands.len() < p + 1 {
            break;
        }
        let mut remove = vec![false; cands.len()];
        for ci in 0..cands.len() {
            let x = cands[ci].0;
            let others: Vec<LaggedVariable> = cands
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != ci)
                .map(|(_, (v, _))| *v)
                .collect();
            for s in others.into_iter().combinations(p).take(q_max) {
                let o = runner.test(x, y, &s)?;
                let stat = o.statistic.abs();
                if stat < cands[ci].1 {
                    cands[ci].1 = stat;
                }
                let rec = &mut records[slot(&x)];
                rec.max_p = rec.max_p.max(o.p_value);
                if stat < rec.stat.abs() {
                    rec.stat = o.statistic;
                }
                if o.p_value > alpha {
                    remove[ci] = true;
                    break;
                }
            }
        }
        let mut k = 0;
        cands.retain(|_| {
            k += 1;
            !remove[k - 1]
        });
        cands.sort_by(strength_order);
    }
    Ok(SelectionTrace {
        parents: ParentSet {
            target,
            parents: cands.iter().map(|c| c.0).collect(),
            min_stats: cands.iter().map(|c| c.1).collect(),
        },
        records,
    })
}

pub(crate) fn pc1_with(runner: &Runner<'_>, target: usize, cfg: &DiscoveryConfig, alpha: f64) -> Result<ParentSet> {
    let p_max = cfg.p_max_for(runner.ds.n_vars());
    Ok(condition_selection(runner, target, alpha, cfg.q_max, p_max)?.parents)
}

/// Parents of `target` at the fixed threshold `alpha`, with `cfg.q_max` subsets per stage.
pub fn pc1_select(
    ds: &TimeSeriesDataset,
    target: usize,
    cfg: &DiscoveryConfig,
    alpha: f64,
    test: &dyn CondIndTest,
) -> Result<ParentSet> {
    cfg.validate(ds)?;
    let runner = Runner::new(ds, test, cfg.tau_max, cfg.seed, false);
    pc1_with(&runner, target, cfg, alpha)
}
