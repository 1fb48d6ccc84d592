//! Synthetic multiplex networks from the Gamma construction, plus named presets.
//!
//! Labels are drawn from θ, edges from per-block Bernoulli draws, and each
//! present edge gets an independent `Gamma(α, 1)` weight. Row-normalizing the
//! weights gives Dirichlet shares over each sender's present edges.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::network::{to_compositional, CompositionalMultiplex, RawMultiplex, ZeroMode};

pub const PRESETS_JSON: &str = include_str!("../data/scenarios.json");

/// Generating parameters for one family of synthetic networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub n: usize,
    pub params: ModelParams,
}

/// Serialized form of a scenario, as accepted in simulation config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDef {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub n: usize,
    /// Uniform when omitted.
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    pub p: Vec<Vec<Vec<f64>>>,
    pub a: Vec<Vec<Vec<f64>>>,
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let k = rows.len();
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch("parameter matrices must be square".into()));
    }
    Ok(Array2::from_shape_fn((k, k), |(i, j)| rows[i][j]))
}

fn to_nested(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl TryFrom<ScenarioDef> for Scenario {
    type Error = Error;

    fn try_from(def: ScenarioDef) -> Result<Self> {
        let p: Vec<Array2<f64>> = def.p.iter().map(|m| to_matrix(m)).collect::<Result<_>>()?;
        let a: Vec<Array2<f64>> = def.a.iter().map(|m| to_matrix(m)).collect::<Result<_>>()?;
        let k = p.first().map_or(0, |m| m.nrows());
        let theta = def.theta.unwrap_or_else(|| vec![1.0 / k as f64; k]);
        let params = ModelParams::new(theta, p, a)?;
        if def.n < 2 {
            return Err(Error::InvalidParameter(format!("scenario needs at least 2 nodes, got {}", def.n)));
        }
        Ok(Self { name: def.name, description: def.description, n: def.n, params })
    }
}

impl From<&Scenario> for ScenarioDef {
    fn from(sc: &Scenario) -> Self {
        Self {
            name: sc.name.clone(),
            description: sc.description.clone(),
            n: sc.n,
            theta: Some(sc.params.theta.clone()),
            p: sc.params.p.iter().map(to_nested).collect(),
            a: sc.params.a.iter().map(to_nested).collect(),
        }
    }
}

/// One draw from a scenario.
#[derive(Debug, Clone)]
pub struct Sample {
    pub raw: RawMultiplex,
    pub network: CompositionalMultiplex,
    /// 0-based true cluster of every node.
    pub labels: Vec<usize>,
    pub seed: u64,
}

/// Node ids `n001, n002, ...`, zero-padded so lexicographic order is index order.
pub fn node_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(3);
    (1..=n).map(|i| format!("n{i:0width$}")).collect()
}

pub fn layer_names(layers: usize) -> Vec<String> {
    let width = layers.to_string().len();
    (1..=layers).map(|s| format!("layer{s:0width$}")).collect()
}

fn draw_category<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

impl Scenario {
    pub fn k(&self) -> usize {
        self.params.k()
    }

    pub fn layers(&self) -> usize {
        self.params.layers()
    }

    /// Draw one network. Identical seeds give identical samples.
    pub fn generate(&self, seed: u64) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, k) = (self.n, self.k());
        let labels: Vec<usize> = (0..n).map(|_| draw_category(&mut rng, &self.params.theta)).collect();
        let mut weights = Vec::with_capacity(self.layers());
        for (p, a) in self.params.p.iter().zip(&self.params.a) {
            let gammas: Vec<Gamma<f64>> = a
                .iter()
                .map(|&alpha| Gamma::new(alpha, 1.0).expect("concentrations are validated positive"))
                .collect();
            let mut y = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let (ci, cj) = (labels[i], labels[j]);
                    if rng.random::<f64>() < p[[ci, cj]] {
                        let w: f64 = gammas[ci * k + cj].sample(&mut rng);
                        // a draw can underflow to zero for small shapes; keep the edge
                        y[[i, j]] = w.max(f64::MIN_POSITIVE);
                    }
                }
            }
            weights.push(y);
        }
        let raw = RawMultiplex::new(node_ids(n), layer_names(self.layers()), weights).expect("shapes agree");
        let network = to_compositional(&raw, ZeroMode::Absent).expect("generated weights are valid");
        Sample { raw, network, labels, seed }
    }
}

#[derive(Deserialize)]
struct PresetEntry {
    name: String,
    description: String,
    n: usize,
    #[serde(default)]
    theta: Option<Vec<f64>>,
    a_set: String,
    p_set: String,
}

#[derive(Deserialize)]
struct PresetFile {
    a_sets: BTreeMap<String, Vec<Vec<Vec<f64>>>>,
    p_sets: BTreeMap<String, Vec<Vec<Vec<f64>>>>,
    scenarios: Vec<PresetEntry>,
}

fn presets() -> &'static [Scenario] {
    static PRESETS: OnceLock<Vec<Scenario>> = OnceLock::new();
    PRESETS.get_or_init(|| {
        let file: PresetFile = serde_json::from_str(PRESETS_JSON).expect("embedded presets parse");
        file.scenarios
            .into_iter()
            .map(|e| {
                let p = file.p_sets[&e.p_set].clone();
                // two-layer scenarios use the first two concentration matrices
                let a = file.a_sets[&e.a_set][..p.len()].to_vec();
                let def = ScenarioDef { name: e.name, description: e.description, n: e.n, theta: e.theta, p, a };
                Scenario::try_from(def).expect("embedded presets are valid")
            })
            .collect()
    })
}

pub fn scenario_names() -> Vec<&'static str> {
    presets().iter().map(|s| s.name.as_str()).collect()
}

pub fn scenario(name: &str) -> Result<Scenario> {
    presets().iter().find(|s| s.name == name).cloned().ok_or_else(|| Error::UnknownScenario {
        name: name.to_string(),
        available: scenario_names().join(", "),
    })
}
