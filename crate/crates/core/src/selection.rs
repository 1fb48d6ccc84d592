//! ICL and BIC, and the sweep over K that uses them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cem::{fit, FitConfig, FitResult};
use crate::error::{Error, Result};
use crate::network::CompositionalMultiplex;
use crate::seed::derive_seed;

/// `K² S ln[S n(n-1)]`, the BIC penalty (also the first ICL penalty term).
pub fn bic_penalty(k: usize, layers: usize, n: usize) -> f64 {
    let (k, s, n) = (k as f64, layers as f64, n as f64);
    k * k * s * (s * n * (n - 1.0)).ln()
}

/// BIC penalty plus `½ (K-1) ln n`.
pub fn icl_penalty(k: usize, layers: usize, n: usize) -> f64 {
    bic_penalty(k, layers, n) + 0.5 * (k as f64 - 1.0) * (n as f64).ln()
}

/// Hybrid log-likelihood minus the BIC penalty. Larger is better.
pub fn bic(fit: &FitResult, net: &CompositionalMultiplex) -> f64 {
    fit.hybrid_ll - bic_penalty(fit.params.k(), net.layers(), net.n())
}

/// Complete-data hybrid log-likelihood at the hard labels minus the ICL penalty.
pub fn icl(fit: &FitResult, net: &CompositionalMultiplex) -> f64 {
    fit.complete_ll - icl_penalty(fit.params.k(), net.layers(), net.n())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Bic,
    Icl,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic" => Ok(Self::Bic),
            "icl" => Ok(Self::Icl),
            other => Err(Error::InvalidParameter(format!("unknown criterion '{other}' (expected bic or icl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub k: usize,
    pub seed: u64,
    pub hybrid_ll: Option<f64>,
    pub complete_hybrid_ll: Option<f64>,
    pub bic: Option<f64>,
    pub icl: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub best_restart_index: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    pub rows: Vec<SelectionRow>,
    pub chosen_k_bic: Option<usize>,
    pub chosen_k_icl: Option<usize>,
    /// The fitted model per row, in row order; `None` where the fit failed.
    #[serde(skip)]
    pub fits: Vec<Option<FitResult>>,
}

impl SelectionReport {
    pub fn chosen(&self, criterion: Criterion) -> Option<usize> {
        match criterion {
            Criterion::Bic => self.chosen_k_bic,
            Criterion::Icl => self.chosen_k_icl,
        }
    }

    pub fn fit_for(&self, k: usize) -> Option<&FitResult> {
        self.rows.iter().position(|r| r.k == k).and_then(|idx| self.fits[idx].as_ref())
    }
}

/// Seed used for the fit at `k` in a sweep seeded with `base`.
pub fn seed_for_k(base: u64, k: usize) -> u64 {
    derive_seed(base, k as u64)
}

fn argmax(rows: &[SelectionRow], value: impl Fn(&SelectionRow) -> Option<f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for row in rows {
        if let Some(v) = value(row) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((row.k, v));
            }
        }
    }
    best.map(|(k, _)| k)
}

/// Fit every K in `k_min..=k_max` and score each with BIC and ICL.
///
/// `config.k` is ignored; the fit at K uses `seed_for_k(config.seed, K)`.
/// Failed fits are recorded in their row and excluded from the choice.
pub fn select_k(net: &CompositionalMultiplex, k_min: usize, k_max: usize, config: &FitConfig) -> Result<SelectionReport> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidParameter(format!("invalid K range {k_min}..={k_max}")));
    }
    if k_max > net.n() {
        return Err(Error::TooManyClusters { k: k_max, n: net.n() });
    }
    let outcomes: Vec<(usize, u64, Result<FitResult>)> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let seed = seed_for_k(config.seed, k);
            let cfg = FitConfig { k, seed, ..config.clone() };
            (k, seed, fit(net, &cfg))
        })
        .collect();
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut fits = Vec::with_capacity(outcomes.len());
    for (k, seed, outcome) in outcomes {
        match outcome {
            Ok(f) => {
                rows.push(SelectionRow {
                    k,
                    seed,
                    hybrid_ll: Some(f.hybrid_ll),
                    complete_hybrid_ll: Some(f.complete_ll),
                    bic: Some(bic(&f, net)),
                    icl: Some(icl(&f, net)),
                    converged: Some(f.converged),
                    iterations: Some(f.iterations),
                    best_restart_index: Some(f.best_restart_index),
                    error: None,
                });
                fits.push(Some(f));
            }
            Err(e) => {
                log::warn!("fit with K={k} failed: {e}");
                rows.push(SelectionRow {
                    k,
                    seed,
                    hybrid_ll: None,
                    complete_hybrid_ll: None,
                    bic: None,
                    icl: None,
                    converged: None,
                    iterations: None,
                    best_restart_index: None,
                    error: Some(e.to_string()),
                });
                fits.push(None);
            }
        }
    }
    Ok(SelectionReport {
        chosen_k_bic: argmax(&rows, |r| r.bic),
        chosen_k_icl: argmax(&rows, |r| r.icl),
        rows,
        fits,
    })
}
