//! Multiplex Dirichlet stochastic block model.
//!
//! Clusters the nodes of a directed multiplex network whose edge weights are
//! compositions: every sender's outgoing weights in a layer sum to one. Edge
//! presence follows a Bernoulli SBM and the shares a Dirichlet SBM; the two
//! are fitted jointly by classification EM on a hybrid likelihood.
//!
//! ```no_run
//! use multidirsbm::{fit, scenario, FitConfig};
//!
//! let sc = scenario("t1-row1").unwrap();
//! let sample = sc.generate(7);
//! let result = fit(&sample.network, &FitConfig { k: 2, seed: 1, ..FitConfig::default() }).unwrap();
//! println!("{:?}", result.partition.labels());
//! ```

pub mod cem;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod network;
pub mod optim;
pub mod seed;
pub mod selection;
pub mod special;
pub mod synthetic;

pub use cem::{fit, AlphaBounds, EmptyClusterPolicy, FitConfig, FitResult};
pub use error::{Error, Result};
pub use eval::{aligned_frobenius, ari, kmeans_baseline, FrobeniusMetrics};
pub use interpret::{cluster_shares, node_shares, InterpretationSummary};
pub use likelihood::{complete_log_likelihood, hybrid_log_likelihood, ModelKind};
pub use model::{ModelParams, Partition};
pub use network::{to_compositional, CompositionalMultiplex, RawMultiplex, ZeroMode};
pub use seed::derive_seed;
pub use selection::{bic, icl, select_k, SelectionReport};
pub use synthetic::{scenario, scenario_names, Sample, Scenario};
