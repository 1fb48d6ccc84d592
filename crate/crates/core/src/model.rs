//! Model parameters and partitions.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Mixing proportions plus per-layer connectivity and concentration matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub theta: Vec<f64>,
    /// Bernoulli edge probabilities, one `K x K` matrix per layer.
    pub p: Vec<Array2<f64>>,
    /// Dirichlet concentrations, one `K x K` matrix per layer.
    pub a: Vec<Array2<f64>>,
}

impl ModelParams {
    pub fn new(theta: Vec<f64>, p: Vec<Array2<f64>>, a: Vec<Array2<f64>>) -> Result<Self> {
        let params = Self { theta, p, a };
        params.validate()?;
        Ok(params)
    }

    /// Uniform θ, all-ones `A` and the given constant edge probability.
    pub fn uniform(k: usize, layers: usize, p: f64) -> Self {
        Self {
            theta: vec![1.0 / k as f64; k],
            p: vec![Array2::from_elem((k, k), p); layers],
            a: vec![Array2::ones((k, k)); layers],
        }
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    pub fn layers(&self) -> usize {
        self.p.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::InvalidParameter("theta is empty".into()));
        }
        if self.p.len() != self.a.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} P matrices but {} A matrices",
                self.p.len(),
                self.a.len()
            )));
        }
        let sum: f64 = self.theta.iter().sum();
        if (sum - 1.0).abs() > 1e-12 || self.theta.iter().any(|&t| !(t >= 0.0)) {
            return Err(Error::InvalidParameter(format!("theta {:?} is not on the simplex", self.theta)));
        }
        for (s, (p, a)) in self.p.iter().zip(&self.a).enumerate() {
            if p.dim() != (k, k) || a.dim() != (k, k) {
                return Err(Error::DimensionMismatch(format!("layer {} matrices must be {k} x {k}", s + 1)));
            }
            if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::InvalidParameter(format!("layer {} P outside [0, 1]", s + 1)));
            }
            if a.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("layer {} A not strictly positive", s + 1)));
            }
        }
        Ok(())
    }

    /// Relabel clusters: new cluster `perm[k]` takes the parameters of old cluster `k`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let k = self.k();
        let mut theta = vec![0.0; k];
        for (old, &new) in perm.iter().enumerate() {
            theta[new] = self.theta[old];
        }
        let remap = |m: &Array2<f64>| {
            let mut out = Array2::zeros((k, k));
            for ((a, b), &v) in m.indexed_iter() {
                out[[perm[a], perm[b]]] = v;
            }
            out
        };
        Self {
            theta,
            p: self.p.iter().map(remap).collect(),
            a: self.a.iter().map(remap).collect(),
        }
    }
}

/// Hard labels (0-based) and optional soft responsibilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
    zhat: Option<Array2<f64>>,
}

impl Partition {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidParameter(format!("label {bad} out of range for K={k}")));
        }
        Ok(Self { labels, k, zhat: None })
    }

    pub fn with_responsibilities(mut self, zhat: Array2<f64>) -> Result<Self> {
        if zhat.dim() != (self.labels.len(), self.k) {
            return Err(Error::DimensionMismatch(format!(
                "responsibilities {:?} for n={} K={}",
                zhat.dim(),
                self.labels.len(),
                self.k
            )));
        }
        for (i, row) in zhat.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > 1e-12 || row.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::InvalidParameter(format!("responsibility row {i} sums to {sum}")));
            }
        }
        self.zhat = Some(zhat);
        Ok(self)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn responsibilities(&self) -> Option<&Array2<f64>> {
        self.zhat.as_ref()
    }

    pub fn set_label(&mut self, node: usize, cluster: usize) {
        assert!(cluster < self.k);
        self.labels[node] = cluster;
    }

    pub fn one_hot(&self) -> Array2<f64> {
        let mut z = Array2::zeros((self.n(), self.k));
        for (i, &c) in self.labels.iter().enumerate() {
            z[[i, c]] = 1.0;
        }
        z
    }

    /// Responsibilities if present, otherwise the one-hot labels.
    pub fn soft_or_hard(&self) -> Array2<f64> {
        self.zhat.clone().unwrap_or_else(|| self.one_hot())
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }
}
