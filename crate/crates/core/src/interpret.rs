//! Expected exchange shares implied by a fitted model.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::CompositionalMultiplex;

#[derive(Debug, Clone, PartialEq)]
pub struct InterpretationSummary {
    /// Expected node-to-node shares, one `n x n` matrix per layer.
    pub w: Vec<Array2<f64>>,
    /// Expected cluster-to-cluster shares, one `K x K` matrix per layer.
    pub v: Vec<Array2<f64>>,
}

/// One row of the long-format table behind a chord diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChordRow {
    pub layer: String,
    pub sender_cluster: usize,
    pub receiver_cluster: usize,
    pub share: f64,
}

fn check(net: &CompositionalMultiplex, labels: &[usize], a: &[Array2<f64>]) -> Result<usize> {
    if labels.len() != net.n() {
        return Err(Error::DimensionMismatch(format!("{} labels for {} nodes", labels.len(), net.n())));
    }
    if a.len() != net.layers() {
        return Err(Error::DimensionMismatch(format!("{} A matrices for {} layers", a.len(), net.layers())));
    }
    let k = a.first().map_or(0, |m| m.nrows());
    if a.iter().any(|m| m.dim() != (k, k)) {
        return Err(Error::DimensionMismatch("A matrices must all be K x K".into()));
    }
    if let Some(&c) = labels.iter().find(|&&c| c >= k) {
        return Err(Error::InvalidParameter(format!("label {c} out of range for K={k}")));
    }
    if a.iter().flat_map(|m| m.iter()).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("concentrations must be positive".into()));
    }
    Ok(k)
}

/// `w_ij = e_ij α_{c_i c_j} / Σ_l e_il α_{c_i c_l}`; isolated senders get a zero row.
pub fn node_shares(net: &CompositionalMultiplex, labels: &[usize], a: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
    check(net, labels, a)?;
    let n = net.n();
    Ok((0..net.layers())
        .map(|s| {
            let mut w = Array2::zeros((n, n));
            for i in 0..n {
                let ci = labels[i];
                let nbrs = net.out_neighbors(s, i);
                let total: f64 = nbrs.iter().map(|&j| a[s][[ci, labels[j]]]).sum();
                for &j in nbrs {
                    w[[i, j]] = a[s][[ci, labels[j]]] / total;
                }
            }
            w
        })
        .collect())
}

/// `v_kh`: the α-weighted share of cluster k's outgoing edges landing in cluster h.
/// Clusters without outgoing edges in a layer get a zero row.
pub fn cluster_shares(net: &CompositionalMultiplex, labels: &[usize], a: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
    let k = check(net, labels, a)?;
    Ok((0..net.layers())
        .map(|s| {
            let mut counts = Array2::<f64>::zeros((k, k));
            for i in 0..net.n() {
                for &j in net.out_neighbors(s, i) {
                    counts[[labels[i], labels[j]]] += 1.0;
                }
            }
            let mut v = Array2::zeros((k, k));
            for row in 0..k {
                let total: f64 = (0..k).map(|h| counts[[row, h]] * a[s][[row, h]]).sum();
                if total == 0.0 {
                    log::warn!("layer {}: cluster {} has no outgoing edges", s + 1, row + 1);
                    continue;
                }
                for h in 0..k {
                    v[[row, h]] = counts[[row, h]] * a[s][[row, h]] / total;
                }
            }
            v
        })
        .collect())
}

pub fn interpret(net: &CompositionalMultiplex, labels: &[usize], a: &[Array2<f64>]) -> Result<InterpretationSummary> {
    Ok(InterpretationSummary { w: node_shares(net, labels, a)?, v: cluster_shares(net, labels, a)? })
}

/// Long-format `V` with 1-based cluster numbers.
pub fn chord_table(layer_names: &[String], v: &[Array2<f64>]) -> Vec<ChordRow> {
    let mut rows = Vec::new();
    for (name, m) in layer_names.iter().zip(v) {
        for ((k, h), &share) in m.indexed_iter() {
            rows.push(ChordRow { layer: name.clone(), sender_cluster: k + 1, receiver_cluster: h + 1, share });
        }
    }
    rows
}
