use ndarray::Array2;

use crate::error::{Error, Result};
use crate::likelihood::{check_dims, alpha_row_gradient, alpha_row_objective, LayerTables, ModelKind, SenderStats};
use crate::model::{ModelParams, Partition};
use crate::network::CompositionalMultiplex;
use crate::optim::BoxLbfgs;
use crate::special::{lgamma, log_sum_exp};

/// What the C-step does when a move would leave a cluster without members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyClusterPolicy {
    /// A cluster's last member never moves.
    #[default]
    Forbid,
    /// Moves are unrestricted; afterwards each empty cluster receives the
    /// node whose current assignment has the lowest responsibility.
    Reseed,
}

pub fn e_step(net: &CompositionalMultiplex, params: &ModelParams, part: &Partition) -> Result<Array2<f64>> {
    e_step_with(net, params, part, ModelKind::Full)
}

/// Responsibilities `ẑ_ik ∝ θ_k Π_s p(e_i^(s), x_i^(s) | c_i = k, c̃_-i)`.
pub fn e_step_with(
    net: &CompositionalMultiplex,
    params: &ModelParams,
    part: &Partition,
    kind: ModelKind,
) -> Result<Array2<f64>> {
    check_dims(net, params, part)?;
    let (n, k) = (net.n(), params.k());
    let mut log_z = Array2::from_shape_fn((n, k), |(_, h)| params.theta[h].ln());
    for s in 0..net.layers() {
        let stats = SenderStats::new(net, s, part.labels(), k);
        let tables = LayerTables::new(params, s);
        for i in 0..n {
            for h in 0..k {
                log_z[[i, h]] += tables.block(&stats, i, h, kind);
            }
        }
    }
    let mut zhat = Array2::zeros((n, k));
    for i in 0..n {
        let row = log_z.row(i).to_vec();
        let norm = log_sum_exp(&row);
        if !norm.is_finite() {
            return Err(Error::DegenerateResponsibilities { node: i });
        }
        let mut sum = 0.0;
        for h in 0..k {
            let v = (row[h] - norm).exp();
            zhat[[i, h]] = v;
            sum += v;
        }
        for h in 0..k {
            zhat[[i, h]] /= sum;
        }
    }
    Ok(zhat)
}

struct LayerCache {
    tables: LayerTables,
    bern: Array2<f64>,
    alpha_sum: Array2<f64>,
    rest: Array2<f64>,
    dir: Array2<f64>,
    isolated: Vec<bool>,
}

impl LayerCache {
    fn new(net: &CompositionalMultiplex, params: &ModelParams, labels: &[usize], layer: usize) -> Self {
        let k = params.k();
        let n = net.n();
        let stats = SenderStats::new(net, layer, labels, k);
        let tables = LayerTables::new(params, layer);
        let mut bern = Array2::zeros((n, k));
        let mut alpha_sum = Array2::zeros((n, k));
        let mut rest = Array2::zeros((n, k));
        let mut dir = Array2::zeros((n, k));
        for l in 0..n {
            for h in 0..k {
                bern[[l, h]] = tables.bernoulli(&stats, l, h);
                let mut total = 0.0;
                let mut r = 0.0;
                for g in 0..k {
                    let m = stats.edges_into[[l, g]];
                    total += m * tables.alpha[[h, g]];
                    r += (tables.alpha[[h, g]] - 1.0) * stats.log_share_into[[l, g]] - m * tables.lg_alpha[[h, g]];
                }
                alpha_sum[[l, h]] = total;
                rest[[l, h]] = r;
                dir[[l, h]] = if stats.isolated[l] { 0.0 } else { lgamma(total) + r };
            }
        }
        Self { tables, bern, alpha_sum, rest, dir, isolated: stats.isolated }
    }
}

/// Incremental scorer for single-node relabellings under fixed parameters.
///
/// Moving node `i` from cluster `a` to `b` only changes, for every other
/// sender `l`, the receiver term of `i`: one Bernoulli factor and, when
/// `e_li = 1`, one Dirichlet coordinate.
struct RelabelScorer<'a> {
    net: &'a CompositionalMultiplex,
    log_theta: Vec<f64>,
    layers: Vec<LayerCache>,
    kind: ModelKind,
    buf: Vec<f64>,
}

impl<'a> RelabelScorer<'a> {
    fn new(net: &'a CompositionalMultiplex, params: &ModelParams, labels: &[usize], kind: ModelKind) -> Self {
        Self {
            net,
            log_theta: params.theta.iter().map(|t| t.ln()).collect(),
            layers: (0..net.layers()).map(|s| LayerCache::new(net, params, labels, s)).collect(),
            kind,
            buf: vec![0.0; params.k()],
        }
    }

    /// Hybrid log-likelihood, minus node `i`'s own (label-independent) terms,
    /// with node `i` relabelled from `from` to `to`.
    fn score(&mut self, i: usize, from: usize, to: usize) -> f64 {
        let k = self.log_theta.len();
        let full = self.kind == ModelKind::Full;
        let mut total = 0.0;
        for (s, cache) in self.layers.iter().enumerate() {
            let t = &cache.tables;
            let edges = self.net.edges(s);
            let logx = self.net.log_shares(s);
            for l in 0..self.net.n() {
                if l == i {
                    continue;
                }
                let e = edges[[l, i]];
                for h in 0..k {
                    let b = if e {
                        cache.bern[[l, h]] + t.log_p[[h, to]] - t.log_p[[h, from]]
                    } else {
                        cache.bern[[l, h]] + t.log_q[[h, to]] - t.log_q[[h, from]]
                    };
                    let d = if !full || cache.isolated[l] {
                        0.0
                    } else if e {
                        let da = t.alpha[[h, to]] - t.alpha[[h, from]];
                        lgamma(cache.alpha_sum[[l, h]] + da) + cache.rest[[l, h]] - t.lg_alpha[[h, to]]
                            + t.lg_alpha[[h, from]]
                            + da * logx[[l, i]]
                    } else {
                        cache.dir[[l, h]]
                    };
                    self.buf[h] = self.log_theta[h] + b + d;
                }
                total += log_sum_exp(&self.buf);
            }
        }
        total
    }

    fn apply(&mut self, i: usize, from: usize, to: usize) {
        let k = self.log_theta.len();
        for (s, cache) in self.layers.iter_mut().enumerate() {
            let edges = self.net.edges(s);
            let logx = self.net.log_shares(s);
            for l in 0..self.net.n() {
                if l == i {
                    continue;
                }
                let e = edges[[l, i]];
                for h in 0..k {
                    let t = &cache.tables;
                    if e {
                        cache.bern[[l, h]] += t.log_p[[h, to]] - t.log_p[[h, from]];
                        let da = t.alpha[[h, to]] - t.alpha[[h, from]];
                        cache.alpha_sum[[l, h]] += da;
                        cache.rest[[l, h]] += da * logx[[l, i]] - t.lg_alpha[[h, to]] + t.lg_alpha[[h, from]];
                        cache.dir[[l, h]] = lgamma(cache.alpha_sum[[l, h]]) + cache.rest[[l, h]];
                    } else {
                        cache.bern[[l, h]] += t.log_q[[h, to]] - t.log_q[[h, from]];
                    }
                }
            }
        }
    }
}

pub fn c_step(net: &CompositionalMultiplex, params: &ModelParams, part: &Partition) -> Result<Partition> {
    c_step_with(net, params, part, EmptyClusterPolicy::Forbid, ModelKind::Full)
}

/// Greedy sequential relabelling: each node in index order takes the label
/// maximizing the full hybrid log-likelihood given every other current label.
/// Ties keep the incumbent. Responsibilities on `part` are carried through.
pub fn c_step_with(
    net: &CompositionalMultiplex,
    params: &ModelParams,
    part: &Partition,
    policy: EmptyClusterPolicy,
    kind: ModelKind,
) -> Result<Partition> {
    check_dims(net, params, part)?;
    let k = params.k();
    let mut out = part.clone();
    if k == 1 {
        return Ok(out);
    }
    let mut sizes = out.cluster_sizes();
    let mut scorer = RelabelScorer::new(net, params, out.labels(), kind);
    for i in 0..net.n() {
        let current = out.labels()[i];
        if policy == EmptyClusterPolicy::Forbid && sizes[current] == 1 {
            continue;
        }
        let incumbent = scorer.score(i, current, current);
        let mut best = (current, incumbent);
        for cand in 0..k {
            if cand == current {
                continue;
            }
            let v = scorer.score(i, current, cand);
            if v > best.1 + 1e-12 * best.1.abs() {
                best = (cand, v);
            }
        }
        if best.0 != current {
            scorer.apply(i, current, best.0);
            sizes[current] -= 1;
            sizes[best.0] += 1;
            out.set_label(i, best.0);
        }
    }
    if policy == EmptyClusterPolicy::Reseed {
        reseed_empty(&mut out, &mut sizes);
    }
    Ok(out)
}

fn reseed_empty(part: &mut Partition, sizes: &mut [usize]) {
    let confidence = part.soft_or_hard();
    for empty in 0..sizes.len() {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = (0..part.n())
            .filter(|&i| sizes[part.labels()[i]] > 1)
            .min_by(|&a, &b| {
                let ca = confidence[[a, part.labels()[a]]];
                let cb = confidence[[b, part.labels()[b]]];
                ca.total_cmp(&cb).then(a.cmp(&b))
            });
        if let Some(i) = donor {
            sizes[part.labels()[i]] -= 1;
            sizes[empty] += 1;
            part.set_label(i, empty);
        }
    }
}

/// `θ_k = Σ_i ẑ_ik / n`.
pub fn m_step_theta(zhat: &Array2<f64>) -> Vec<f64> {
    let n = zhat.nrows() as f64;
    let mut theta: Vec<f64> = zhat.columns().into_iter().map(|c| c.sum() / n).collect();
    let total: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|t| *t /= total);
    theta
}

/// Per-layer `p_kh = Σ_ij ẑ_ik z̃_jh e_ij / Σ_ij ẑ_ik z̃_jh`, self-pairs excluded.
pub fn m_step_p(net: &CompositionalMultiplex, zhat: &Array2<f64>, labels: &[usize]) -> Vec<Array2<f64>> {
    let k = zhat.ncols();
    (0..net.layers())
        .map(|s| {
            let stats = SenderStats::new(net, s, labels, k);
            let mut p = Array2::zeros((k, k));
            for row in 0..k {
                for h in 0..k {
                    let mut num = 0.0;
                    let mut den = 0.0;
                    for i in 0..net.n() {
                        let w = zhat[[i, row]];
                        num += w * stats.edges_into[[i, h]];
                        den += w * (stats.edges_into[[i, h]] + stats.gaps_into[[i, h]]);
                    }
                    p[[row, h]] = if den > 0.0 {
                        (num / den).clamp(0.0, 1.0)
                    } else {
                        log::warn!("layer {}: empty block ({row}, {h}); setting p = 0", s + 1);
                        0.0
                    };
                }
            }
            p
        })
        .collect()
}

/// Box bounds on Dirichlet concentrations.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AlphaBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for AlphaBounds {
    fn default() -> Self {
        Self { min: 1e-6, max: 1e4 }
    }
}

/// Maximize E[l_c] over `A^(layer)` by box-constrained quasi-Newton, one row at a time.
///
/// Row `k` of `A` only enters the terms of senders weighted by `ẑ_ik`, so the
/// rows are independent problems.
pub fn estimate_a(
    net: &CompositionalMultiplex,
    zhat: &Array2<f64>,
    labels: &[usize],
    layer: usize,
    warm_start: &Array2<f64>,
    bounds: AlphaBounds,
) -> Result<Array2<f64>> {
    let k = zhat.ncols();
    if warm_start.dim() != (k, k) {
        return Err(Error::DimensionMismatch(format!("warm start must be {k} x {k}")));
    }
    if !(bounds.min > 0.0 && bounds.min < bounds.max) {
        return Err(Error::InvalidParameter(format!("bad alpha bounds {bounds:?}")));
    }
    let stats = SenderStats::new(net, layer, labels, k);
    let lower = vec![bounds.min; k];
    let upper = vec![bounds.max; k];
    let solver = BoxLbfgs::default();
    let mut out = Array2::zeros((k, k));
    for row in 0..k {
        let objective = |alpha: &[f64]| {
            let v = -alpha_row_objective(&stats, zhat, row, alpha);
            let g = alpha_row_gradient(&stats, zhat, row, alpha).into_iter().map(|x| -x).collect();
            (v, g)
        };
        let starts = [warm_start.row(row).to_vec(), vec![1.0; k]];
        let mut solved = None;
        let mut last_err = None;
        for x0 in &starts {
            match solver.minimize(objective, x0, &lower, &upper) {
                Ok(m) if m.value.is_finite() && m.x.iter().all(|v| v.is_finite()) => {
                    solved = Some(m);
                    break;
                }
                Ok(m) => last_err = Some(Error::OptimizerFailure(format!("non-finite optimum {:?}", m.x))),
                Err(e) => last_err = Some(e),
            }
        }
        let m = solved.ok_or_else(|| {
            last_err.unwrap_or_else(|| Error::OptimizerFailure(format!("row {row} of layer {layer}")))
        })?;
        for h in 0..k {
            out[[row, h]] = m.x[h];
        }
    }
    Ok(out)
}
