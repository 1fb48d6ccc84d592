//! Text formats: edge lists, network documents, fit results, labels and parameters.
//!
//! Every JSON document carries a `schema_version`. Floats are written in
//! shortest round-trip form, so reading a file back reproduces every value bit
//! for bit.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cem::FitResult;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Partition};
use crate::network::{CompositionalMultiplex, RawMultiplex};
use crate::selection::{bic, icl};

pub const SCHEMA_VERSION: u32 = 1;

pub type Nested = Vec<Vec<f64>>;

pub fn to_nested(m: &Array2<f64>) -> Nested {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn from_nested(rows: &[Vec<f64>], shape: (usize, usize), what: &str) -> Result<Array2<f64>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::DimensionMismatch(format!("{what} must be {} x {}", shape.0, shape.1)));
    }
    Ok(Array2::from_shape_fn(shape, |(i, j)| rows[i][j]))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn check_version(found: u32, what: &str) -> Result<()> {
    if found != SCHEMA_VERSION {
        return Err(Error::InvalidParameter(format!(
            "{what} has schema_version {found}; this build reads version {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    layer: String,
    source: String,
    target: String,
    weight: f64,
}

/// Parse a `layer,source,target,weight` edge list into raw weight matrices.
///
/// Node ids (sources and targets together) and layer names are sorted
/// lexicographically. Duplicate edges, self-loops and non-positive weights
/// are validation errors naming the offending line.
pub fn read_edge_list<R: Read>(reader: R) -> Result<RawMultiplex> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
    let expected = ["layer", "source", "target", "weight"];
    if headers.len() != 4 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Parse { line: 1, message: format!("header must be `{}`", expected.join(",")) });
    }
    let mut rows = Vec::new();
    let mut seen: HashMap<(String, String, String), usize> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse { line, message: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row: EdgeRow =
            record.deserialize(Some(&headers)).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if row.source == row.target {
            return Err(Error::Validation { line, message: format!("self-loop on node {}", row.source) });
        }
        if !(row.weight > 0.0) || !row.weight.is_finite() {
            return Err(Error::Validation { line, message: format!("weight {} is not positive", row.weight) });
        }
        let key = (row.layer.clone(), row.source.clone(), row.target.clone());
        if let Some(first) = seen.insert(key, line) {
            return Err(Error::Validation {
                line,
                message: format!(
                    "duplicate edge {} -> {} in layer {} (first on line {first})",
                    row.source, row.target, row.layer
                ),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let nodes: BTreeSet<&str> = rows.iter().flat_map(|r| [r.source.as_str(), r.target.as_str()]).collect();
    let layers: BTreeSet<&str> = rows.iter().map(|r| r.layer.as_str()).collect();
    let node_ids: Vec<String> = nodes.iter().map(|s| s.to_string()).collect();
    let layer_names: Vec<String> = layers.iter().map(|s| s.to_string()).collect();
    let node_idx: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let layer_idx: HashMap<&str, usize> = layers.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let n = node_ids.len();
    let mut weights = vec![Array2::zeros((n, n)); layer_names.len()];
    for r in &rows {
        weights[layer_idx[r.layer.as_str()]][[node_idx[r.source.as_str()], node_idx[r.target.as_str()]]] = r.weight;
    }
    RawMultiplex::new(node_ids, layer_names, weights)
}

pub fn read_edge_list_file(path: &Path) -> Result<RawMultiplex> {
    read_edge_list(BufReader::new(File::open(path)?))
}

/// Write every positive off-diagonal weight as one edge-list row.
pub fn write_edge_list<W: Write>(raw: &RawMultiplex, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["layer", "source", "target", "weight"])?;
    for (name, m) in raw.layer_names.iter().zip(&raw.weights) {
        for ((i, j), &v) in m.indexed_iter() {
            if i != j && v > 0.0 {
                w.write_record([name, &raw.node_ids[i], &raw.node_ids[j], &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerBlock {
    pub name: String,
    /// Edge indicators, 0 or 1.
    #[serde(rename = "E")]
    pub e: Vec<Vec<u8>>,
    /// Compositional weights.
    #[serde(rename = "X")]
    pub x: Nested,
}

/// Self-describing text form of a compositional multiplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub schema_version: u32,
    pub n: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub node_ids: Vec<String>,
    pub layer_names: Vec<String>,
    pub layers: Vec<LayerBlock>,
}

impl NetworkFile {
    pub fn from_network(net: &CompositionalMultiplex) -> Self {
        let layers = (0..net.layers())
            .map(|s| LayerBlock {
                name: net.layer_names()[s].clone(),
                e: net.edges(s).rows().into_iter().map(|r| r.iter().map(|&b| b as u8).collect()).collect(),
                x: to_nested(net.shares(s)),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            n: net.n(),
            s: net.layers(),
            node_ids: net.node_ids().to_vec(),
            layer_names: net.layer_names().to_vec(),
            layers,
        }
    }

    pub fn into_network(self) -> Result<CompositionalMultiplex> {
        check_version(self.schema_version, "network file")?;
        let n = self.n;
        if self.node_ids.len() != n || self.layers.len() != self.s || self.layer_names.len() != self.s {
            return Err(Error::DimensionMismatch("network file header disagrees with its contents".into()));
        }
        let mut edges = Vec::with_capacity(self.s);
        let mut shares = Vec::with_capacity(self.s);
        for (block, name) in self.layers.iter().zip(&self.layer_names) {
            if &block.name != name {
                return Err(Error::InvalidNetwork(format!("layer block `{}` listed as `{name}`", block.name)));
            }
            if block.e.len() != n || block.e.iter().any(|r| r.len() != n) {
                return Err(Error::DimensionMismatch(format!("layer {name}: E must be {n} x {n}")));
            }
            if block.e.iter().flatten().any(|&v| v > 1) {
                return Err(Error::InvalidNetwork(format!("layer {name}: E entries must be 0 or 1")));
            }
            edges.push(Array2::from_shape_fn((n, n), |(i, j)| block.e[i][j] == 1));
            shares.push(from_nested(&block.x, (n, n), &format!("layer {name} X"))?);
        }
        CompositionalMultiplex::new(self.node_ids, self.layer_names, edges, shares)
    }
}

pub fn read_network(path: &Path) -> Result<CompositionalMultiplex> {
    read_json::<NetworkFile>(path)?.into_network()
}

pub fn write_network(path: &Path, net: &CompositionalMultiplex) -> Result<()> {
    write_json(path, &NetworkFile::from_network(net))
}

/// Persisted fit. Cluster numbers in `labels` are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResultFile {
    pub schema_version: u32,
    pub n: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub node_ids: Vec<String>,
    pub layer_names: Vec<String>,
    pub seed: u64,
    pub binary_only: bool,
    pub theta: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<Nested>,
    #[serde(rename = "A")]
    pub a: Vec<Nested>,
    pub labels: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub responsibilities: Option<Nested>,
    pub ll_trace: Vec<f64>,
    pub hybrid_ll: f64,
    pub bic: f64,
    pub icl: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResultFile {
    pub fn from_fit(fit: &FitResult, net: &CompositionalMultiplex, with_responsibilities: bool) -> Self {
        let labels = net.node_ids().iter().cloned().zip(fit.partition.labels().iter().map(|&c| c + 1)).collect();
        Self {
            schema_version: SCHEMA_VERSION,
            n: net.n(),
            s: net.layers(),
            k: fit.params.k(),
            node_ids: net.node_ids().to_vec(),
            layer_names: net.layer_names().to_vec(),
            seed: fit.seed,
            binary_only: fit.kind == crate::likelihood::ModelKind::BinaryOnly,
            theta: fit.params.theta.clone(),
            p: fit.params.p.iter().map(to_nested).collect(),
            a: fit.params.a.iter().map(to_nested).collect(),
            labels,
            responsibilities: if with_responsibilities {
                fit.partition.responsibilities().map(to_nested)
            } else {
                None
            },
            ll_trace: fit.ll_trace.clone(),
            hybrid_ll: fit.hybrid_ll,
            bic: bic(fit, net),
            icl: icl(fit, net),
            converged: fit.converged,
            iterations: fit.iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_version(self.schema_version, "fit file")?;
        if self.node_ids.len() != self.n || self.layer_names.len() != self.s {
            return Err(Error::DimensionMismatch("fit file header disagrees with its contents".into()));
        }
        self.params()?;
        self.labels_vec()?;
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams> {
        let k = self.k;
        let p = self.p.iter().map(|m| from_nested(m, (k, k), "P")).collect::<Result<Vec<_>>>()?;
        let a = self.a.iter().map(|m| from_nested(m, (k, k), "A")).collect::<Result<Vec<_>>>()?;
        if p.len() != self.s {
            return Err(Error::DimensionMismatch(format!("{} P matrices for S={}", p.len(), self.s)));
        }
        ModelParams::new(self.theta.clone(), p, a)
    }

    /// 0-based labels in `node_ids` order.
    pub fn labels_vec(&self) -> Result<Vec<usize>> {
        self.node_ids
            .iter()
            .map(|id| match self.labels.get(id) {
                Some(&c) if (1..=self.k).contains(&c) => Ok(c - 1),
                Some(&c) => Err(Error::InvalidParameter(format!("node {id} has cluster {c} outside 1..={}", self.k))),
                None => Err(Error::InvalidParameter(format!("node {id} has no label"))),
            })
            .collect()
    }

    pub fn partition(&self) -> Result<Partition> {
        let part = Partition::new(self.labels_vec()?, self.k)?;
        match &self.responsibilities {
            Some(z) => part.with_responsibilities(from_nested(z, (self.n, self.k), "responsibilities")?),
            None => Ok(part),
        }
    }
}

/// `node,cluster` rows with 1-based clusters.
pub fn write_labels<W: Write>(node_ids: &[String], labels: &[usize], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["node", "cluster"])?;
    for (id, &c) in node_ids.iter().zip(labels) {
        w.write_record([id.as_str(), &(c + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read `node,cluster` rows; clusters are returned as given (1-based in files written here).
pub fn read_labels<R: Read>(reader: R) -> Result<BTreeMap<String, usize>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "node" || &headers[1] != "cluster" {
        return Err(Error::Parse { line: 1, message: "header must be `node,cluster`".into() });
    }
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let cluster: usize = record[1]
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("cluster `{}` is not an integer", &record[1]) })?;
        if out.insert(record[0].to_string(), cluster).is_some() {
            return Err(Error::Validation { line, message: format!("node {} listed twice", &record[0]) });
        }
    }
    Ok(out)
}

/// Generating or fitted parameters on their own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub schema_version: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub theta: Vec<f64>,
    #[serde(rename = "P")]
    pub p: Vec<Nested>,
    #[serde(rename = "A")]
    pub a: Vec<Nested>,
}

impl ParamsFile {
    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            k: params.k(),
            s: params.layers(),
            theta: params.theta.clone(),
            p: params.p.iter().map(to_nested).collect(),
            a: params.a.iter().map(to_nested).collect(),
        }
    }

    pub fn params(&self) -> Result<ModelParams> {
        check_version(self.schema_version, "parameter file")?;
        let k = self.k;
        let p = self.p.iter().map(|m| from_nested(m, (k, k), "P")).collect::<Result<Vec<_>>>()?;
        let a = self.a.iter().map(|m| from_nested(m, (k, k), "A")).collect::<Result<Vec<_>>>()?;
        ModelParams::new(self.theta.clone(), p, a)
    }
}

/// A square matrix as CSV with a header row and a leading label column.
pub fn write_matrix_csv<W: Write>(corner: &str, labels: &[String], m: &Array2<f64>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![corner.to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in labels.iter().zip(m.rows()) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
