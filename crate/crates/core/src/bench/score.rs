//! Comparison of an estimated graph with the true one on cross-link slots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LaggedLink, TimeSeriesGraph};
use crate::synthgen::GroundTruthGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Tp,
    Fp,
    Tn,
    Fn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredLink {
    pub link: LaggedLink,
    pub truth: bool,
    pub detected: bool,
    pub stat: f64,
}

impl ScoredLink {
    pub fn outcome(&self) -> Outcome {
        match (self.truth, self.detected) {
            (true, true) => Outcome::Tp,
            (true, false) => Outcome::Fn,
            (false, true) => Outcome::Fp,
            (false, false) => Outcome::Tn,
        }
    }
}

/// One entry per lagged cross-link in `graph`, in the graph's link order.
/// The truth must fit the graph's variables and lag range.
pub fn score_against_truth(graph: &TimeSeriesGraph, truth: &GroundTruthGraph) -> Result<Vec<ScoredLink>> {
    if graph.n_vars() != truth.n_vars {
        return Err(Error::Contract(format!(
            "graph has {} variables, truth has {}",
            graph.n_vars(),
            truth.n_vars
        )));
    }
    let tau_max = graph.links.iter().map(|l| l.lag).max().unwrap_or(0);
    if truth.cross_links().any(|l| l.lag > tau_max) {
        return Err(Error::Contract(format!(
            "true links exceed the graph's maximum lag {tau_max}"
        )));
    }
    Ok(graph
        .links
        .iter()
        .filter(|l| l.source != l.target && l.lag >= 1)
        .map(|l| ScoredLink {
            link: l.link(),
            truth: truth.contains(&l.link()),
            detected: l.decided,
            stat: l.stat,
        })
        .collect())
}
