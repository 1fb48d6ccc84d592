//! Raw and compositional multiplex networks.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_share;

/// Tolerance on compositional row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Default replacement value for zero weights under [`ZeroMode::Replace`].
pub const DEFAULT_REPLACEMENT: f64 = 0.001;

/// A multiplex of nonnegative raw weights over a shared node set.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMultiplex {
    pub node_ids: Vec<String>,
    pub layer_names: Vec<String>,
    /// One `n x n` matrix per layer; `weights[s][[i, j]]` is the flow from `i` to `j`.
    pub weights: Vec<Array2<f64>>,
}

impl RawMultiplex {
    pub fn new(node_ids: Vec<String>, layer_names: Vec<String>, weights: Vec<Array2<f64>>) -> Result<Self> {
        let n = node_ids.len();
        if layer_names.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} layer names for {} weight matrices",
                layer_names.len(),
                weights.len()
            )));
        }
        for (s, w) in weights.iter().enumerate() {
            if w.dim() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "layer {} has shape {:?}, expected ({n}, {n})",
                    s + 1,
                    w.dim()
                )));
            }
        }
        Ok(Self { node_ids, layer_names, weights })
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn layers(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NonzeroDiagonal,
    NegativeWeight,
    NonFinite,
}

/// One broken [`RawMultiplex`] invariant. Positions are 1-based in the display form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.kind {
            ViolationKind::NonzeroDiagonal => "nonzero diagonal",
            ViolationKind::NegativeWeight => "negative weight",
            ViolationKind::NonFinite => "non-finite weight",
        };
        write!(f, "{rule} at ({},{}) layer {}", self.row + 1, self.col + 1, self.layer + 1)
    }
}

pub fn validate(raw: &RawMultiplex) -> Vec<Violation> {
    let mut out = Vec::new();
    for (layer, w) in raw.weights.iter().enumerate() {
        for ((row, col), &y) in w.indexed_iter() {
            let kind = if !y.is_finite() {
                Some(ViolationKind::NonFinite)
            } else if y < 0.0 {
                Some(ViolationKind::NegativeWeight)
            } else if row == col && y != 0.0 {
                Some(ViolationKind::NonzeroDiagonal)
            } else {
                None
            };
            if let Some(kind) = kind {
                out.push(Violation { layer, row, col, kind });
            }
        }
    }
    out
}

/// How zero off-diagonal raw weights are treated when forming compositions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum ZeroMode {
    /// A zero weight is an absent edge.
    #[default]
    Absent,
    /// Every off-diagonal zero is replaced by the given value and the network is fully connected.
    Replace(f64),
}

impl FromStr for ZeroMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("absent") {
            return Ok(ZeroMode::Absent);
        }
        if s.eq_ignore_ascii_case("replace") {
            return Ok(ZeroMode::Replace(DEFAULT_REPLACEMENT));
        }
        if let Some(v) = s.strip_prefix("replace=") {
            let eps: f64 = v
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad replacement value `{v}`")))?;
            return Ok(ZeroMode::Replace(eps));
        }
        Err(Error::InvalidParameter(format!(
            "unknown zero mode `{s}` (expected `absent` or `replace=EPS`)"
        )))
    }
}

impl fmt::Display for ZeroMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZeroMode::Absent => write!(f, "absent"),
            ZeroMode::Replace(eps) => write!(f, "replace={eps}"),
        }
    }
}

/// Edge indicators and compositional weights for every layer.
///
/// Construction validates the invariants: empty diagonals, `x > 0` exactly
/// on edges, and rows summing to one (or zero for isolated senders).
#[derive(Debug, Clone)]
pub struct CompositionalMultiplex {
    node_ids: Vec<String>,
    layer_names: Vec<String>,
    edges: Vec<Array2<bool>>,
    shares: Vec<Array2<f64>>,
    // ln x on edges (clamped), 0 elsewhere
    log_shares: Vec<Array2<f64>>,
    // out_neighbors[s][i] lists j with e_ij = 1, ascending
    out_neighbors: Vec<Vec<Vec<usize>>>,
}

impl CompositionalMultiplex {
    pub fn new(
        node_ids: Vec<String>,
        layer_names: Vec<String>,
        edges: Vec<Array2<bool>>,
        shares: Vec<Array2<f64>>,
    ) -> Result<Self> {
        let n = node_ids.len();
        if edges.len() != shares.len() || edges.len() != layer_names.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} layer names, {} edge matrices, {} share matrices",
                layer_names.len(),
                edges.len(),
                shares.len()
            )));
        }
        for s in 0..edges.len() {
            if edges[s].dim() != (n, n) || shares[s].dim() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "layer {} matrices must be {n} x {n}",
                    s + 1
                )));
            }
        }
        for s in 0..edges.len() {
            for i in 0..n {
                let mut sum = 0.0;
                let mut degree = 0usize;
                for j in 0..n {
                    let e = edges[s][[i, j]];
                    let x = shares[s][[i, j]];
                    if i == j && (e || x != 0.0) {
                        return Err(Error::InvalidNetwork(format!(
                            "self-loop at node {} layer {}",
                            node_ids[i],
                            s + 1
                        )));
                    }
                    if e != (x > 0.0) || !x.is_finite() || x < 0.0 {
                        return Err(Error::InvalidNetwork(format!(
                            "share {x} at ({},{}) layer {} disagrees with edge indicator {e}",
                            node_ids[i],
                            node_ids[j],
                            s + 1
                        )));
                    }
                    sum += x;
                    degree += e as usize;
                }
                let target = if degree > 0 { 1.0 } else { 0.0 };
                if (sum - target).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidNetwork(format!(
                        "row of node {} in layer {} sums to {sum}",
                        node_ids[i],
                        s + 1
                    )));
                }
            }
        }
        let log_shares = shares
            .iter()
            .zip(&edges)
            .map(|(x, e)| {
                Array2::from_shape_fn((n, n), |(i, j)| if e[[i, j]] { ln_share(x[[i, j]]) } else { 0.0 })
            })
            .collect();
        let out_neighbors = edges
            .iter()
            .map(|e| (0..n).map(|i| (0..n).filter(|&j| e[[i, j]]).collect()).collect())
            .collect();
        let net = Self { node_ids, layer_names, edges, shares, log_shares, out_neighbors };
        if !net.is_weakly_connected() {
            log::warn!("the union of all layers is not weakly connected");
        }
        Ok(net)
    }

    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn layers(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn layer_names(&self) -> &[String] {
        &self.layer_names
    }

    pub fn edges(&self, layer: usize) -> &Array2<bool> {
        &self.edges[layer]
    }

    pub fn shares(&self, layer: usize) -> &Array2<f64> {
        &self.shares[layer]
    }

    pub(crate) fn log_shares(&self, layer: usize) -> &Array2<f64> {
        &self.log_shares[layer]
    }

    pub fn out_neighbors(&self, layer: usize, node: usize) -> &[usize] {
        &self.out_neighbors[layer][node]
    }

    #[inline]
    pub fn has_edge(&self, layer: usize, i: usize, j: usize) -> bool {
        self.edges[layer][[i, j]]
    }

    pub fn out_degree(&self, layer: usize, node: usize) -> usize {
        self.out_neighbors[layer][node].len()
    }

    pub fn edge_count(&self, layer: usize) -> usize {
        self.out_neighbors[layer].iter().map(Vec::len).sum()
    }

    /// Whether the union of all layers, ignoring direction, is connected.
    pub fn is_weakly_connected(&self) -> bool {
        let n = self.n();
        if n <= 1 {
            return true;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for s in 0..self.layers() {
            for i in 0..n {
                for &j in &self.out_neighbors[s][i] {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
        }
        let root = find(&mut parent, 0);
        (1..n).all(|i| find(&mut parent, i) == root)
    }
}

/// Row-normalize every layer of `raw` into compositions.
pub fn to_compositional(raw: &RawMultiplex, zero_mode: ZeroMode) -> Result<CompositionalMultiplex> {
    if let ZeroMode::Replace(eps) = zero_mode {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "replacement value must be positive, got {eps}"
            )));
        }
    }
    if let Some(v) = validate(raw).first() {
        return Err(Error::InvalidNetwork(v.to_string()));
    }
    let n = raw.n();
    let mut edges = Vec::with_capacity(raw.layers());
    let mut shares = Vec::with_capacity(raw.layers());
    for w in &raw.weights {
        let mut e = Array2::from_elem((n, n), false);
        let mut x = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            let row: Vec<f64> = (0..n)
                .map(|j| match zero_mode {
                    _ if i == j => 0.0,
                    ZeroMode::Replace(eps) if w[[i, j]] == 0.0 => eps,
                    _ => w[[i, j]],
                })
                .collect();
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                continue;
            }
            for (j, &y) in row.iter().enumerate() {
                if y > 0.0 {
                    e[[i, j]] = true;
                    x[[i, j]] = y / total;
                }
            }
        }
        edges.push(e);
        shares.push(x);
    }
    CompositionalMultiplex::new(raw.node_ids.clone(), raw.layer_names.clone(), edges, shares)
}
