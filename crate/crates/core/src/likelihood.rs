//! Hybrid log-likelihoods and the gradient of the M-step objective in `A`.
//!
//! Every quantity here is a function of a sender's per-cluster sufficient
//! statistics: for node `i` and cluster `g`, the number of out-edges into
//! `g`, the number of absent (non-self) pairs into `g`, and the summed
//! log-shares sent into `g`. Given a candidate sender cluster `h`, node `i`'s
//! layer contribution is
//!
//! ```text
//! bern(i,h) = Σ_g m_ig ln p_hg + q_ig ln(1 - p_hg)
//! dir(i,h)  = lnΓ(Σ_g m_ig α_hg + 1{d_i = 0}) - Σ_g m_ig lnΓ(α_hg) + Σ_g (α_hg - 1) L_ig
//! ```

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{ModelParams, Partition};
use crate::network::CompositionalMultiplex;
use crate::special::{lgamma, log_sum_exp, psi};

/// Edge probabilities are clamped into `[P_CLAMP, 1 - P_CLAMP]` inside logarithms.
pub const P_CLAMP: f64 = 1e-12;

/// Which factors of the model enter the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelKind {
    /// Bernoulli edges and Dirichlet shares.
    #[default]
    Full,
    /// Bernoulli edges only; a multiplex binary SBM.
    BinaryOnly,
}

/// Per-layer sufficient statistics of every sender against a fixed labelling.
#[derive(Debug, Clone)]
pub(crate) struct SenderStats {
    /// `m[[i, g]]`: out-edges of `i` into cluster `g`.
    pub edges_into: Array2<f64>,
    /// `q[[i, g]]`: absent pairs from `i` into cluster `g`, self excluded.
    pub gaps_into: Array2<f64>,
    /// `L[[i, g]]`: Σ ln x_ij over out-edges of `i` into `g`.
    pub log_share_into: Array2<f64>,
    pub isolated: Vec<bool>,
}

impl SenderStats {
    pub fn new(net: &CompositionalMultiplex, layer: usize, labels: &[usize], k: usize) -> Self {
        let n = net.n();
        let mut sizes = vec![0.0; k];
        for &c in labels {
            sizes[c] += 1.0;
        }
        let mut edges_into = Array2::zeros((n, k));
        let mut log_share_into = Array2::zeros((n, k));
        let logx = net.log_shares(layer);
        for i in 0..n {
            for &j in net.out_neighbors(layer, i) {
                edges_into[[i, labels[j]]] += 1.0;
                log_share_into[[i, labels[j]]] += logx[[i, j]];
            }
        }
        let mut gaps_into = Array2::zeros((n, k));
        for i in 0..n {
            for g in 0..k {
                let own = if labels[i] == g { 1.0 } else { 0.0 };
                gaps_into[[i, g]] = sizes[g] - own - edges_into[[i, g]];
            }
        }
        let isolated = (0..n).map(|i| net.out_degree(layer, i) == 0).collect();
        Self { edges_into, gaps_into, log_share_into, isolated }
    }
}

/// Parameter transforms for one layer, shared by every node evaluation.
#[derive(Debug, Clone)]
pub(crate) struct LayerTables {
    pub log_p: Array2<f64>,
    pub log_q: Array2<f64>,
    pub alpha: Array2<f64>,
    pub lg_alpha: Array2<f64>,
}

impl LayerTables {
    pub fn new(params: &ModelParams, layer: usize) -> Self {
        let p = params.p[layer].mapv(|v| v.clamp(P_CLAMP, 1.0 - P_CLAMP));
        Self {
            log_p: p.mapv(f64::ln),
            log_q: p.mapv(|v| (1.0 - v).ln()),
            alpha: params.a[layer].clone(),
            lg_alpha: params.a[layer].mapv(lgamma),
        }
    }

    #[inline]
    pub fn bernoulli(&self, stats: &SenderStats, i: usize, h: usize) -> f64 {
        let k = self.alpha.ncols();
        let mut acc = 0.0;
        for g in 0..k {
            acc += stats.edges_into[[i, g]] * self.log_p[[h, g]] + stats.gaps_into[[i, g]] * self.log_q[[h, g]];
        }
        acc
    }

    #[inline]
    pub fn dirichlet(&self, stats: &SenderStats, i: usize, h: usize) -> f64 {
        if stats.isolated[i] {
            return 0.0;
        }
        let k = self.alpha.ncols();
        let mut total = 0.0;
        let mut rest = 0.0;
        for g in 0..k {
            let m = stats.edges_into[[i, g]];
            let a = self.alpha[[h, g]];
            total += m * a;
            rest += (a - 1.0) * stats.log_share_into[[i, g]] - m * self.lg_alpha[[h, g]];
        }
        lgamma(total) + rest
    }

    #[inline]
    pub fn block(&self, stats: &SenderStats, i: usize, h: usize, kind: ModelKind) -> f64 {
        match kind {
            ModelKind::Full => self.bernoulli(stats, i, h) + self.dirichlet(stats, i, h),
            ModelKind::BinaryOnly => self.bernoulli(stats, i, h),
        }
    }
}

pub(crate) fn check_dims(net: &CompositionalMultiplex, params: &ModelParams, part: &Partition) -> Result<()> {
    params.validate()?;
    if params.layers() != net.layers() {
        return Err(Error::DimensionMismatch(format!(
            "parameters have {} layers, network has {}",
            params.layers(),
            net.layers()
        )));
    }
    if part.n() != net.n() {
        return Err(Error::DimensionMismatch(format!(
            "partition has {} nodes, network has {}",
            part.n(),
            net.n()
        )));
    }
    if part.k() != params.k() {
        return Err(Error::DimensionMismatch(format!(
            "partition has K={}, parameters have K={}",
            part.k(),
            params.k()
        )));
    }
    Ok(())
}

/// `block[[i, h]]` summed over nothing: the per-layer `n x K` table of `ln p(e_i, x_i | c_i = h, c̃_-i)`.
pub(crate) fn layer_blocks(
    net: &CompositionalMultiplex,
    params: &ModelParams,
    labels: &[usize],
    layer: usize,
    kind: ModelKind,
) -> Array2<f64> {
    let k = params.k();
    let stats = SenderStats::new(net, layer, labels, k);
    let tables = LayerTables::new(params, layer);
    Array2::from_shape_fn((net.n(), k), |(i, h)| tables.block(&stats, i, h, kind))
}

pub fn hybrid_log_likelihood(net: &CompositionalMultiplex, params: &ModelParams, part: &Partition) -> Result<f64> {
    hybrid_log_likelihood_with(net, params, part, ModelKind::Full)
}

/// Σ_s Σ_i ln Σ_k θ_k p(e_i^(s), x_i^(s) | c_i = k, c̃_-i).
pub fn hybrid_log_likelihood_with(
    net: &CompositionalMultiplex,
    params: &ModelParams,
    part: &Partition,
    kind: ModelKind,
) -> Result<f64> {
    check_dims(net, params, part)?;
    let log_theta: Vec<f64> = params.theta.iter().map(|t| t.ln()).collect();
    let mut total = 0.0;
    let mut buf = vec![0.0; params.k()];
    for s in 0..net.layers() {
        let blocks = layer_blocks(net, params, part.labels(), s, kind);
        for i in 0..net.n() {
            for (h, b) in buf.iter_mut().enumerate() {
                *b = log_theta[h] + blocks[[i, h]];
            }
            total += log_sum_exp(&buf);
        }
    }
    Ok(total)
}

/// The complete-data hybrid log-likelihood at the partition's hard labels.
pub fn complete_log_likelihood(net: &CompositionalMultiplex, params: &ModelParams, part: &Partition) -> Result<f64> {
    complete_log_likelihood_with(net, params, part, ModelKind::Full)
}

pub fn complete_log_likelihood_with(
    net: &CompositionalMultiplex,
    params: &ModelParams,
    part: &Partition,
    kind: ModelKind,
) -> Result<f64> {
    check_dims(net, params, part)?;
    weighted_complete(net, params, part.labels(), &part.one_hot(), kind)
}

/// E[l_c] with responsibilities in place of the latent indicators.
pub fn expected_complete_ll(net: &CompositionalMultiplex, params: &ModelParams, part: &Partition) -> Result<f64> {
    expected_complete_ll_with(net, params, part, ModelKind::Full)
}

pub fn expected_complete_ll_with(
    net: &CompositionalMultiplex,
    params: &ModelParams,
    part: &Partition,
    kind: ModelKind,
) -> Result<f64> {
    check_dims(net, params, part)?;
    let zhat = part
        .responsibilities()
        .ok_or_else(|| Error::InvalidParameter("partition carries no responsibilities".into()))?;
    weighted_complete(net, params, part.labels(), zhat, kind)
}

fn weighted_complete(
    net: &CompositionalMultiplex,
    params: &ModelParams,
    labels: &[usize],
    weights: &Array2<f64>,
    kind: ModelKind,
) -> Result<f64> {
    let mut total = 0.0;
    for s in 0..net.layers() {
        let blocks = layer_blocks(net, params, labels, s, kind);
        for i in 0..net.n() {
            for k in 0..params.k() {
                let w = weights[[i, k]];
                // 0 · ln 0 = 0
                if w > 0.0 {
                    total += w * (params.theta[k].ln() + blocks[[i, k]]);
                }
            }
        }
    }
    Ok(total)
}

/// Gradient of E[l_c] with respect to `A^(layer)`.
pub fn grad_a_expected_complete_ll(
    net: &CompositionalMultiplex,
    params: &ModelParams,
    part: &Partition,
    layer: usize,
) -> Result<Array2<f64>> {
    check_dims(net, params, part)?;
    if layer >= net.layers() {
        return Err(Error::InvalidParameter(format!("layer {layer} out of range")));
    }
    let zhat = part
        .responsibilities()
        .ok_or_else(|| Error::InvalidParameter("partition carries no responsibilities".into()))?;
    let stats = SenderStats::new(net, layer, part.labels(), params.k());
    let k = params.k();
    let mut grad = Array2::zeros((k, k));
    for row in 0..k {
        let g = alpha_row_gradient(&stats, zhat, row, params.a[layer].row(row).as_slice().unwrap());
        for h in 0..k {
            grad[[row, h]] = g[h];
        }
    }
    Ok(grad)
}

/// The part of E[l_c] that depends on row `row` of one layer's `A`.
pub(crate) fn alpha_row_objective(stats: &SenderStats, zhat: &Array2<f64>, row: usize, alpha: &[f64]) -> f64 {
    let k = alpha.len();
    let lg: Vec<f64> = alpha.iter().map(|&a| lgamma(a)).collect();
    let mut total = 0.0;
    for i in 0..zhat.nrows() {
        let w = zhat[[i, row]];
        if w == 0.0 || stats.isolated[i] {
            continue;
        }
        let mut sum = 0.0;
        let mut rest = 0.0;
        for g in 0..k {
            let m = stats.edges_into[[i, g]];
            sum += m * alpha[g];
            rest += (alpha[g] - 1.0) * stats.log_share_into[[i, g]] - m * lg[g];
        }
        total += w * (lgamma(sum) + rest);
    }
    total
}

pub(crate) fn alpha_row_gradient(stats: &SenderStats, zhat: &Array2<f64>, row: usize, alpha: &[f64]) -> Vec<f64> {
    let k = alpha.len();
    let dg: Vec<f64> = alpha.iter().map(|&a| psi(a)).collect();
    let mut grad = vec![0.0; k];
    for i in 0..zhat.nrows() {
        let w = zhat[[i, row]];
        if w == 0.0 || stats.isolated[i] {
            continue;
        }
        let sum: f64 = (0..k).map(|g| stats.edges_into[[i, g]] * alpha[g]).sum();
        let ps = psi(sum);
        for h in 0..k {
            let m = stats.edges_into[[i, h]];
            grad[h] += w * (m * (ps - dg[h]) + stats.log_share_into[[i, h]]);
        }
    }
    grad
}
