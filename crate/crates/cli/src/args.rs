use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "multidirsbm", version, about = "Cluster composition-weighted multiplex networks")]
pub struct Cli {
    /// TOML file supplying defaults for any flag; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Increase log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a raw weighted edge list into a compositional network file.
    Transform(TransformArgs),
    /// Sample synthetic networks from a preset or a custom scenario.
    Simulate(SimulateArgs),
    /// Fit the model with a fixed number of clusters.
    Fit(FitArgs),
    /// Fit a range of cluster counts and pick one by BIC or ICL.
    Select(SelectArgs),
    /// Export expected node and cluster exchange shares of a fit.
    Interpret(InterpretArgs),
    /// Score a fit against known labels and parameters.
    Eval(EvalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Transform(_) => "transform",
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Select(_) => "select",
            Command::Interpret(_) => "interpret",
            Command::Eval(_) => "eval",
        }
    }
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct TransformArgs {
    /// Edge list with header `layer,source,target,weight`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `absent` keeps zero weights as missing edges; `replace=EPS` fills them with EPS.
    #[arg(long)]
    pub zero_mode: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Preset name, e.g. `t1-row1`.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
    /// A custom scenario (n, theta, p, a); only settable from a config file.
    #[arg(skip)]
    pub custom: Option<multidirsbm::synthetic::ScenarioDef>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct FitArgs {
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long, short)]
    pub k: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Leave responsibilities out of the output file.
    #[arg(long)]
    pub no_responsibilities: bool,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EngineArgs {
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop the Dirichlet weight model and fit edges only.
    #[arg(long)]
    pub binary_only: bool,
    /// `forbid` or `reseed`.
    #[arg(long)]
    pub empty_cluster_policy: Option<String>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SelectArgs {
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    /// `bic` (default) or `icl`.
    #[arg(long)]
    pub criterion: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub engine: EngineArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct InterpretArgs {
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EvalArgs {
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// `node,cluster` CSV of true labels.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Parameter file of the generating model, for Frobenius errors.
    #[arg(long)]
    pub true_params: Option<PathBuf>,
    /// Raw edge list; adds the k-means baseline ARI.
    #[arg(long)]
    pub baseline_edges: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}
