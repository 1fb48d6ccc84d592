use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::{info, warn};
use multidirsbm::interpret::{chord_table, interpret};
use multidirsbm::io::{
    read_edge_list_file, read_json, read_labels, read_network, write_edge_list, write_json, write_labels,
    write_matrix_csv, write_network, FitResultFile, ParamsFile, SCHEMA_VERSION,
};
use multidirsbm::selection::Criterion;
use multidirsbm::synthetic::ScenarioDef;
use multidirsbm::{
    aligned_frobenius, ari, derive_seed, fit, kmeans_baseline, scenario, select_k, to_compositional, AlphaBounds,
    EmptyClusterPolicy, FitConfig, Scenario, ZeroMode,
};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::error::{Mismatch, NotConverged, Usage};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn need<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| anyhow!(Usage(format!("missing required option --{flag}"))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_doc<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_json(path, value).with_context(|| format!("writing {}", path.display()))
}

pub fn transform(args: TransformArgs) -> Result<()> {
    let input = need(args.input, "input")?;
    let output = need(args.output, "output")?;
    let zero_mode: ZeroMode = args.zero_mode.as_deref().unwrap_or("absent").parse()?;
    let raw = read_edge_list_file(&input).with_context(|| format!("reading {}", input.display()))?;
    let net = to_compositional(&raw, zero_mode)?;
    info!("{} nodes, {} layers", net.n(), net.layers());
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_network(&output, &net).with_context(|| format!("writing {}", output.display()))
}

#[derive(Serialize)]
struct ManifestEntry {
    replicate: usize,
    dir: String,
    seed: u64,
}

#[derive(Serialize)]
struct Manifest {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    base_seed: u64,
    replicates: Vec<ManifestEntry>,
    scenario: ScenarioDef,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let outdir = need(args.outdir, "outdir")?;
    let sc: Scenario = match (args.scenario, args.custom) {
        (Some(name), _) => scenario(&name)?,
        (None, Some(def)) => def.try_into()?,
        (None, None) => bail!(Usage("give --scenario or a [simulate.custom] scenario in --config".into())),
    };
    let replicates = args.replicates.unwrap_or(1);
    let seed = args.seed.unwrap_or(0);
    let width = replicates.to_string().len().max(3);
    fs::create_dir_all(&outdir).with_context(|| format!("creating {}", outdir.display()))?;
    let params_file = ParamsFile::from_params(&sc.params);
    let mut entries = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let rep_seed = derive_seed(seed, r as u64);
        let sample = sc.generate(rep_seed);
        let dir_name = format!("rep{:0width$}", r + 1);
        let dir = outdir.join(&dir_name);
        fs::create_dir_all(&dir)?;
        let mut edges = create(&dir.join("edges.csv"))?;
        write_edge_list(&sample.raw, &mut edges)?;
        edges.flush()?;
        write_network(&dir.join("network.json"), &sample.network)?;
        let mut labels = create(&dir.join("labels.csv"))?;
        write_labels(sample.network.node_ids(), &sample.labels, &mut labels)?;
        labels.flush()?;
        write_json(&dir.join("params.json"), &params_file)?;
        entries.push(ManifestEntry { replicate: r + 1, dir: dir_name, seed: rep_seed });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "multidirsbm",
        version: VERSION,
        base_seed: seed,
        replicates: entries,
        scenario: ScenarioDef::from(&sc),
    };
    write_json(&outdir.join("manifest.json"), &manifest)?;
    info!("wrote {replicates} replicates of {} to {}", sc.name, outdir.display());
    Ok(())
}

fn fit_config(engine: &EngineArgs, k: usize) -> Result<FitConfig> {
    let defaults = FitConfig::default();
    let policy = match engine.empty_cluster_policy.as_deref() {
        None => defaults.empty_cluster_policy,
        Some(p) if p.eq_ignore_ascii_case("forbid") => EmptyClusterPolicy::Forbid,
        Some(p) if p.eq_ignore_ascii_case("reseed") => EmptyClusterPolicy::Reseed,
        Some(p) => bail!(Usage(format!("unknown empty-cluster policy `{p}` (expected forbid or reseed)"))),
    };
    let config = FitConfig {
        k,
        restarts: engine.restarts.unwrap_or(defaults.restarts),
        tol: engine.tol.unwrap_or(defaults.tol),
        max_iter: engine.max_iter.unwrap_or(defaults.max_iter),
        seed: engine.seed.unwrap_or(defaults.seed),
        alpha_bounds: AlphaBounds {
            min: engine.alpha_min.unwrap_or(defaults.alpha_bounds.min),
            max: engine.alpha_max.unwrap_or(defaults.alpha_bounds.max),
        },
        empty_cluster_policy: policy,
        binary_only: engine.binary_only,
    };
    config.validate().map_err(|e| anyhow!(Usage(e.to_string())))?;
    Ok(config)
}

pub fn fit_cmd(args: FitArgs) -> Result<()> {
    let network = need(args.network, "network")?;
    let output = need(args.output, "output")?;
    let k = need(args.k, "k")?;
    let config = fit_config(&args.engine, k)?;
    let net = read_network(&network).with_context(|| format!("reading {}", network.display()))?;
    let result = fit(&net, &config)?;
    info!(
        "K={k}: hybrid ll {:.6} after {} iterations (restart {}), {:.2?}",
        result.hybrid_ll, result.iterations, result.best_restart_index, result.elapsed
    );
    let file = FitResultFile::from_fit(&result, &net, !args.no_responsibilities);
    write_doc(&output, &file)?;
    if !result.converged {
        warn!("stopped at max-iter={} without reaching tol={}", config.max_iter, config.tol);
        return Err(anyhow!(NotConverged));
    }
    Ok(())
}

#[derive(Serialize)]
struct SelectOutput<'a> {
    schema_version: u32,
    criterion: Criterion,
    chosen_k: Option<usize>,
    #[serde(flatten)]
    report: &'a multidirsbm::SelectionReport,
}

pub fn select(args: SelectArgs) -> Result<()> {
    let network = need(args.network, "network")?;
    let output = need(args.output, "output")?;
    let criterion: Criterion = args.criterion.as_deref().unwrap_or("bic").parse()?;
    let (kmin, kmax) = (args.kmin.unwrap_or(1), args.kmax.unwrap_or(7));
    let config = fit_config(&args.engine, kmin.max(1))?;
    let net = read_network(&network).with_context(|| format!("reading {}", network.display()))?;
    let report = select_k(&net, kmin, kmax, &config)?;
    for row in &report.rows {
        match &row.error {
            Some(e) => warn!("K={}: {e}", row.k),
            None => info!("K={}: bic {:?} icl {:?}", row.k, row.bic, row.icl),
        }
    }
    let chosen_k = report.chosen(criterion);
    write_doc(&output, &SelectOutput { schema_version: SCHEMA_VERSION, criterion, chosen_k, report: &report })?;
    match chosen_k {
        Some(k) => {
            println!("{k}");
            Ok(())
        }
        None => bail!("every fit in K={kmin}..={kmax} failed"),
    }
}

fn load_fit(path: &Path) -> Result<FitResultFile> {
    let file: FitResultFile = read_json(path).with_context(|| format!("reading {}", path.display()))?;
    file.validate().with_context(|| format!("checking {}", path.display()))?;
    Ok(file)
}

pub fn interpret_cmd(args: InterpretArgs) -> Result<()> {
    let fit_path = need(args.fit, "fit")?;
    let network = need(args.network, "network")?;
    let outdir: PathBuf = need(args.outdir, "outdir")?;
    let fit_file = load_fit(&fit_path)?;
    let net = read_network(&network).with_context(|| format!("reading {}", network.display()))?;
    if fit_file.layer_names != net.layer_names() {
        bail!(Mismatch(format!(
            "fit has layers {:?} but the network has {:?}",
            fit_file.layer_names,
            net.layer_names()
        )));
    }
    if fit_file.node_ids != net.node_ids() {
        bail!(Mismatch("fit and network list different node ids".into()));
    }
    let params = fit_file.params()?;
    let labels = fit_file.labels_vec()?;
    let summary = interpret(&net, &labels, &params.a)?;
    fs::create_dir_all(&outdir).with_context(|| format!("creating {}", outdir.display()))?;
    let clusters: Vec<String> = (1..=params.k()).map(|k| k.to_string()).collect();
    for (s, name) in net.layer_names().iter().enumerate() {
        let mut w = create(&outdir.join(format!("W_{name}.csv")))?;
        write_matrix_csv("node", net.node_ids(), &summary.w[s], &mut w)?;
        w.flush()?;
        let mut v = create(&outdir.join(format!("V_{name}.csv")))?;
        write_matrix_csv("cluster", &clusters, &summary.v[s], &mut v)?;
        v.flush()?;
    }
    let mut chord = csv_writer(&outdir.join("chord.csv"))?;
    for row in chord_table(net.layer_names(), &summary.v) {
        chord.serialize(row)?;
    }
    chord.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let fit_path = need(args.fit, "fit")?;
    let truth_path = need(args.truth, "truth")?;
    let fit_file = load_fit(&fit_path)?;
    let truth = read_labels(File::open(&truth_path).with_context(|| format!("reading {}", truth_path.display()))?)
        .with_context(|| format!("reading {}", truth_path.display()))?;
    let est = fit_file.labels_vec()?;
    let true_labels: Vec<usize> = fit_file
        .node_ids
        .iter()
        .map(|id| truth.get(id).copied().ok_or_else(|| anyhow!(Mismatch(format!("node {id} missing from truth")))))
        .collect::<Result<_>>()?;
    if truth.len() != fit_file.n {
        bail!(Mismatch(format!("truth has {} nodes, fit has {}", truth.len(), fit_file.n)));
    }
    let mut metrics = json!({
        "schema_version": SCHEMA_VERSION,
        "n": fit_file.n,
        "K": fit_file.k,
        "ari": ari(&true_labels, &est)?,
    });
    if let Some(path) = args.true_params {
        let truth_params = read_json::<ParamsFile>(&path)
            .with_context(|| format!("reading {}", path.display()))?
            .params()?;
        if truth_params.layers() != fit_file.s || truth_params.k() != fit_file.k {
            bail!(Mismatch(format!(
                "true parameters have K={} S={}, fit has K={} S={}",
                truth_params.k(),
                truth_params.layers(),
                fit_file.k,
                fit_file.s
            )));
        }
        let frob = aligned_frobenius(&truth_params, &fit_file.params()?)?;
        metrics["frobenius_p"] = json!(frob.frobenius_p);
        metrics["frobenius_a"] = json!(frob.frobenius_a);
        metrics["permutation"] = json!(frob.permutation.iter().map(|&k| k + 1).collect::<Vec<_>>());
    }
    if let Some(path) = args.baseline_edges {
        let raw = read_edge_list_file(&path).with_context(|| format!("reading {}", path.display()))?;
        if raw.node_ids != fit_file.node_ids {
            bail!(Mismatch("baseline edge list and fit list different node ids".into()));
        }
        let km = kmeans_baseline(&raw, fit_file.k, fit_file.seed)?;
        metrics["kmeans_ari"] = json!(ari(&true_labels, &km)?);
    }
    let text = serde_json::to_string_pretty(&metrics)?;
    println!("{text}");
    if let Some(out) = args.output {
        let mut f = create(&out)?;
        writeln!(f, "{text}")?;
        f.flush()?;
    }
    Ok(())
}
