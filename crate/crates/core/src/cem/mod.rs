//! Classification EM for the multiplex Dirichlet SBM.
//!
//! Each iteration runs an E-step (responsibilities against the previous
//! classification), a greedy C-step, and an M-step updating θ, then P, then
//! each layer's A. A fit keeps the best of several random restarts.

mod steps;

use std::time::{Duration, Instant};

use itertools::Itertools;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use steps::{
    c_step, c_step_with, e_step, e_step_with, estimate_a, m_step_p, m_step_theta, AlphaBounds, EmptyClusterPolicy,
};

use crate::error::{Error, Result};
use crate::likelihood::{complete_log_likelihood_with, hybrid_log_likelihood_with, ModelKind};
use crate::model::{ModelParams, Partition};
use crate::network::CompositionalMultiplex;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub k: usize,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub alpha_bounds: AlphaBounds,
    pub empty_cluster_policy: EmptyClusterPolicy,
    /// Drop the Dirichlet factors and fit a multiplex Bernoulli SBM.
    pub binary_only: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            k: 2,
            restarts: 5,
            tol: 1e-4,
            max_iter: 200,
            seed: 0,
            alpha_bounds: AlphaBounds::default(),
            empty_cluster_policy: EmptyClusterPolicy::Forbid,
            binary_only: false,
        }
    }
}

impl FitConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn model_kind(&self) -> ModelKind {
        if self.binary_only {
            ModelKind::BinaryOnly
        } else {
            ModelKind::Full
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        let AlphaBounds { min, max } = self.alpha_bounds;
        if !(min > 0.0 && min < max) {
            return Err(Error::InvalidParameter(format!("alpha bounds [{min}, {max}] are invalid")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    /// Final labels; responsibilities from the last E-step.
    pub partition: Partition,
    /// Hybrid log-likelihood after initialization, then after every iteration.
    pub ll_trace: Vec<f64>,
    pub hybrid_ll: f64,
    /// Complete-data hybrid log-likelihood at the final hard labels.
    pub complete_ll: f64,
    pub converged: bool,
    pub iterations: usize,
    pub best_restart_index: usize,
    /// Final hybrid log-likelihood of every restart, in restart order.
    pub restart_lls: Vec<f64>,
    pub seed: u64,
    pub kind: ModelKind,
    pub elapsed: Duration,
}

struct RunOutcome {
    params: ModelParams,
    partition: Partition,
    ll_trace: Vec<f64>,
    converged: bool,
    iterations: usize,
}

/// Uniform labels, redrawn until every cluster has a member.
pub fn random_partition<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<Partition> {
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let part = Partition::new(labels, k)?;
        if part.cluster_sizes().iter().all(|&c| c > 0) {
            return Ok(part);
        }
    }
}

/// Permutation `perm` of the sender-side labels maximizing
/// `Σ_k Σ_{i: c_i = k} ẑ_{i, perm[k]}`. Exhaustive for small K, greedy beyond.
fn sender_alignment(zhat: &Array2<f64>, labels: &[usize]) -> Vec<usize> {
    let k = zhat.ncols();
    let mut agree = Array2::<f64>::zeros((k, k));
    for (i, &c) in labels.iter().enumerate() {
        for g in 0..k {
            agree[[c, g]] += zhat[[i, g]];
        }
    }
    let score = |perm: &[usize]| perm.iter().enumerate().map(|(c, &g)| agree[[c, g]]).sum::<f64>();
    let identity: Vec<usize> = (0..k).collect();
    if k <= crate::eval::MAX_ALIGN_K {
        let mut best = (identity.clone(), score(&identity));
        for perm in (0..k).permutations(k) {
            let v = score(&perm);
            if v > best.1 {
                best = (perm, v);
            }
        }
        return best.0;
    }
    let mut perm = vec![usize::MAX; k];
    let mut used = vec![false; k];
    for _ in 0..k {
        let mut pick = (0, 0, f64::NEG_INFINITY);
        for c in (0..k).filter(|&c| perm[c] == usize::MAX) {
            for g in (0..k).filter(|&g| !used[g]) {
                if agree[[c, g]] > pick.2 {
                    pick = (c, g, agree[[c, g]]);
                }
            }
        }
        perm[pick.0] = pick.1;
        used[pick.1] = true;
    }
    perm
}

/// The hybrid likelihood mixes over each sender's own cluster, so it is
/// unchanged when θ and the rows of every P and A are relabelled together.
/// The C-step only pins the receiver-side labels; this picks the sender-side
/// labelling that agrees with them, so `p_kh` refers to the same clusters on
/// both sides.
fn align_sender_labels(zhat: &mut Array2<f64>, params: &mut ModelParams, labels: &[usize]) {
    let perm = sender_alignment(zhat, labels);
    if perm.iter().enumerate().all(|(a, &b)| a == b) {
        return;
    }
    *zhat = Array2::from_shape_fn(zhat.dim(), |(i, c)| zhat[[i, perm[c]]]);
    params.theta = perm.iter().map(|&g| params.theta[g]).collect();
    for m in params.p.iter_mut().chain(params.a.iter_mut()) {
        *m = Array2::from_shape_fn(m.dim(), |(c, h)| m[[perm[c], h]]);
    }
}

/// M-step: θ, then P, then every layer's A warm-started from `warm_a`.
fn m_step(
    net: &CompositionalMultiplex,
    zhat: &Array2<f64>,
    labels: &[usize],
    warm_a: &[Array2<f64>],
    config: &FitConfig,
) -> Result<ModelParams> {
    let theta = m_step_theta(zhat);
    let p = m_step_p(net, zhat, labels);
    let a = match config.model_kind() {
        ModelKind::BinaryOnly => warm_a.to_vec(),
        ModelKind::Full => (0..net.layers())
            .map(|s| estimate_a(net, zhat, labels, s, &warm_a[s], config.alpha_bounds))
            .collect::<Result<_>>()?,
    };
    Ok(ModelParams { theta, p, a })
}

fn run_once(net: &CompositionalMultiplex, config: &FitConfig, seed: u64) -> Result<RunOutcome> {
    let kind = config.model_kind();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part = random_partition(net.n(), config.k, &mut rng)?;
    let ones = vec![Array2::ones((config.k, config.k)); net.layers()];
    let mut params = m_step(net, &part.one_hot(), part.labels(), &ones, config)?;
    let mut ll = hybrid_log_likelihood_with(net, &params, &part, kind)?;
    let mut ll_trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        iterations += 1;
        let mut zhat = e_step_with(net, &params, &part, kind)?;
        align_sender_labels(&mut zhat, &mut params, part.labels());
        let with_resp = part.with_responsibilities(zhat.clone())?;
        part = c_step_with(net, &params, &with_resp, config.empty_cluster_policy, kind)?;
        params = m_step(net, &zhat, part.labels(), &params.a, config)?;
        let next = hybrid_log_likelihood_with(net, &params, &part, kind)?;
        ll_trace.push(next);
        let delta = ((next - ll) / next).abs();
        ll = next;
        if delta < config.tol || next == 0.0 {
            converged = true;
            break;
        }
    }
    Ok(RunOutcome { params, partition: part, ll_trace, converged, iterations })
}

/// Fit with `config.restarts` random starts and keep the highest final hybrid log-likelihood.
///
/// Restart `r` is seeded from `derive_seed(config.seed, r)`, so the result
/// does not depend on whether restarts run serially or in parallel.
pub fn fit(net: &CompositionalMultiplex, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if net.n() == 0 || net.layers() == 0 {
        return Err(Error::EmptyNetwork);
    }
    if config.k > net.n() {
        return Err(Error::TooManyClusters { k: config.k, n: net.n() });
    }
    let started = Instant::now();
    let outcomes: Vec<Result<RunOutcome>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_once(net, config, derive_seed(config.seed, r as u64)))
        .collect();
    let restart_lls: Vec<f64> = outcomes
        .iter()
        .map(|o| o.as_ref().map_or(f64::NEG_INFINITY, |r| *r.ll_trace.last().unwrap()))
        .collect();
    let mut best: Option<(usize, RunOutcome)> = None;
    let mut first_err = None;
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(run) => {
                let ll = *run.ll_trace.last().unwrap();
                let better = match &best {
                    None => true,
                    Some((_, b)) => ll > *b.ll_trace.last().unwrap(),
                };
                if better {
                    best = Some((idx, run));
                }
            }
            Err(e) => {
                log::warn!("restart {idx} failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((best_restart_index, run)) = best else {
        return Err(first_err.expect("at least one restart ran"));
    };
    let kind = config.model_kind();
    let hard = Partition::new(run.partition.labels().to_vec(), config.k)?;
    let complete_ll = complete_log_likelihood_with(net, &run.params, &hard, kind)?;
    Ok(FitResult {
        hybrid_ll: *run.ll_trace.last().unwrap(),
        params: run.params,
        partition: run.partition,
        ll_trace: run.ll_trace,
        complete_ll,
        converged: run.converged,
        iterations: run.iterations,
        best_restart_index,
        restart_lls,
        seed: config.seed,
        kind,
        elapsed: started.elapsed(),
    })
}
