//! Special functions and the Dirichlet log-density.
//!
//! All likelihood code goes through [`lgamma`] and [`psi`]; the checked
//! variants [`log_gamma`] and [`digamma`] are the public entry points.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};

/// Shares below this are clamped before taking logs.
pub const MIN_SHARE: f64 = 1e-300;

static CLAMPED: AtomicUsize = AtomicUsize::new(0);

/// Number of shares clamped to [`MIN_SHARE`] since process start.
pub fn clamped_share_count() -> usize {
    CLAMPED.load(Ordering::Relaxed)
}

/// `ln x` with the [`MIN_SHARE`] floor, counting every clamp.
pub fn ln_share(x: f64) -> f64 {
    if x < MIN_SHARE {
        CLAMPED.fetch_add(1, Ordering::Relaxed);
        MIN_SHARE.ln()
    } else {
        x.ln()
    }
}

#[inline]
pub(crate) fn lgamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

#[inline]
pub(crate) fn psi(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveArgument(x));
    }
    Ok(lgamma(x))
}

pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::NonPositiveArgument(x));
    }
    Ok(psi(x))
}

/// Numerically stable `ln Σ exp(v)`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// A point in the open simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("simplex vector must have dim >= 1".into()));
        }
        if let Some(bad) = entries.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("simplex entry {bad} is not positive")));
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("simplex entries sum to {sum}, not 1")));
        }
        Ok(Self(entries))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `ln Dir(x | alpha)`, evaluated entirely in log space.
///
/// The one-dimensional case is the degenerate point mass and returns 0.
pub fn dirichlet_log_density(x: &SimplexVector, alpha: &[f64]) -> Result<f64> {
    if x.dim() != alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "x has dim {} but alpha has dim {}",
            x.dim(),
            alpha.len()
        )));
    }
    if let Some(&a) = alpha.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::NonPositiveArgument(a));
    }
    if x.dim() == 1 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut norm = 0.0;
    let mut kernel = 0.0;
    for (&xj, &aj) in x.as_slice().iter().zip(alpha) {
        total += aj;
        norm += lgamma(aj);
        kernel += (aj - 1.0) * ln_share(xj);
    }
    Ok(lgamma(total) - norm + kernel)
}
