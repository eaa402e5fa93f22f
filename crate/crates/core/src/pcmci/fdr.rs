//! False discovery rate adjustment of link p-values.

use crate::graph::TimeSeriesGraph;

/// `q_k = min(p_k·m / r_k, 1)` with `m` the number of tests and `r_k` the
/// ascending rank of `p_k`; tied p-values share the smallest rank among them.
pub fn fdr_q_values(p: &[f64]) -> Vec<f64> {
    let m = p.len() as f64;
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    p.iter()
        .map(|&pk| {
            let rank = sorted.partition_point(|v| *v < pk) + 1;
            (pk * m / rank as f64).min(1.0)
        })
        .collect()
}

/// Fills q-values over all links of the graph and re-decides at `alpha`.
pub fn fdr_adjust(graph: &mut TimeSeriesGraph, alpha: f64) {
    let p: Vec<f64> = graph.links.iter().map(|l| l.p).collect();
    for (l, q) in graph.links.iter_mut().zip(fdr_q_values(&p)) {
        l.q = Some(q);
    }
    graph.decide(alpha);
}
