//! Lagged links and the estimated time series graph.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Candidate link `X^source_{t-lag} → X^target_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaggedLink {
    pub source: usize,
    pub lag: usize,
    pub target: usize,
}

impl LaggedLink {
    pub const fn new(source: usize, lag: usize, target: usize) -> Self {
        Self { source, lag, target }
    }

    pub const fn is_cross(&self) -> bool {
        self.source != self.target
    }
}

/// Test result for one link. Lag-0 entries are undirected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub source: usize,
    pub lag: usize,
    pub target: usize,
    pub stat: f64,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub decided: bool,
}

impl LinkResult {
    pub fn link(&self) -> LaggedLink {
        LaggedLink::new(self.source, self.lag, self.target)
    }

    /// The p-value that drives the decision: q when adjusted, p otherwise.
    pub fn adjusted_p(&self) -> f64 {
        self.q.unwrap_or(self.p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesGraph {
    pub config: serde_json::Value,
    pub names: Vec<String>,
    pub links: Vec<LinkResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
    pub seed: u64,
    pub method: String,
}

impl TimeSeriesGraph {
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn get(&self, source: usize, lag: usize, target: usize) -> Option<&LinkResult> {
        self.links
            .iter()
            .find(|l| l.source == source && l.lag == lag && l.target == target)
    }

    pub fn decided_links(&self) -> impl Iterator<Item = LaggedLink> + '_ {
        self.links.iter().filter(|l| l.decided).map(LinkResult::link)
    }

    /// Recomputes every decision as `adjusted p ≤ alpha`.
    pub fn decide(&mut self, alpha: f64) {
        for l in &mut self.links {
            l.decided = l.adjusted_p() <= alpha;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Links in canonical order: target, then lag, then source.
pub(crate) fn canonical_order(links: &mut [LinkResult]) {
    links.sort_by_key(|l| (l.target, l.lag, l.source));
}
