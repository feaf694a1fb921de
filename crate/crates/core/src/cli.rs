//! The `attrembed` command-line front end.
//!
//! Four subcommands: `train` (embeddings from an edge list and optional
//! attributes), `corrupt` (missing-data generators), `linkpred` (the
//! edge-removal evaluation pipeline), and `pairs` (context-pair dump).
//!
//! Every flag can also come from an `ATTREMBED_*` environment variable or
//! from a `key = value` config file (`--config`); explicit flags win over
//! the config file, which wins over defaults. Each run that writes files
//! also writes a manifest recording the fully resolved configuration — a
//! manifest is itself a valid config file, so a run can be replayed with
//! `--config <manifest>`.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::eval::{
    build_pair_datasets, classifier_auc, heuristic_auc, train_link_classifier, EdgeOperator,
    HeuristicKind, LinkClassifierConfig,
};
use crate::graph::{AttributedGraph, GraphError, LabelAssignment};
use crate::incomplete::{remove_edges_random, CorruptionKind, CorruptionSpec};
use crate::model::TrainConfig;
use crate::seeds;
use crate::train::Trainer;
use crate::walks::{count_context_pairs, generate_walks};

#[derive(Parser)]
#[command(
    name = "attrembed",
    version,
    about = "Node embeddings for attributed networks with missing data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn node embeddings and write them as text.
    Train(TrainArgs),
    /// Generate a corrupted copy of a network.
    Corrupt(CorruptArgs),
    /// Remove edges, retrain, and report link-prediction AUC.
    Linkpred(LinkpredArgs),
    /// Dump walk context-pair counts for inspection.
    Pairs(PairsArgs),
}

/// Hyperparameters shared by `train` and `linkpred`. All optional on the
/// command line; unset values fall back to the config file and then to the
/// defaults listed per flag.
#[derive(Args, Debug)]
struct HyperArgs {
    /// Nodes per random walk [default: 100]
    #[arg(long, env = "ATTREMBED_WALK_LEN")]
    walk_len: Option<usize>,
    /// Walks started from each node [default: 40]
    #[arg(long, env = "ATTREMBED_WALKS_PER_NODE")]
    walks_per_node: Option<usize>,
    /// Context window size [default: 10]
    #[arg(long, env = "ATTREMBED_WINDOW")]
    window: Option<usize>,
    /// Embedding dimension [default: 256]
    #[arg(long, env = "ATTREMBED_DIM")]
    dim: Option<usize>,
    /// Negative samples per step [default: 5]
    #[arg(long, env = "ATTREMBED_NEGATIVES")]
    negatives: Option<usize>,
    /// SGD iterations [default: 100000000]
    #[arg(long, env = "ATTREMBED_ITERS")]
    iters: Option<u64>,
    /// Starting learning rate [default: 0.025]
    #[arg(long, env = "ATTREMBED_LR")]
    lr: Option<f64>,
    /// Iterations between learning-rate updates [default: 10000]
    #[arg(long, env = "ATTREMBED_LR_UPDATE_PERIOD")]
    lr_update_period: Option<u64>,
    /// Probability of a structure step per iteration [default: 0.5]
    #[arg(long, env = "ATTREMBED_STRUCTURE_PROB")]
    structure_prob: Option<f64>,
    /// Worker threads; 1 keeps runs exactly reproducible [default: 1]
    #[arg(long, env = "ATTREMBED_THREADS")]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Edge-list file: `src dst [weight]` per line, `#` comments.
    #[arg(long, env = "ATTREMBED_EDGES")]
    edges: Option<PathBuf>,
    /// Attribute file: `node attr value` per line. Omit to train on
    /// structure only.
    #[arg(long, env = "ATTREMBED_ATTRS")]
    attrs: Option<PathBuf>,
    /// Output embedding file.
    #[arg(long, env = "ATTREMBED_OUTPUT")]
    output: Option<PathBuf>,
    /// Manifest path [default: <output>.manifest]
    #[arg(long, env = "ATTREMBED_MANIFEST")]
    manifest: Option<PathBuf>,
    /// `key = value` config file; flags take precedence.
    #[arg(long, env = "ATTREMBED_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed for every random phase [default: 1]
    #[arg(long, env = "ATTREMBED_SEED")]
    seed: Option<u64>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
struct CorruptArgs {
    #[arg(long, env = "ATTREMBED_EDGES")]
    edges: Option<PathBuf>,
    #[arg(long, env = "ATTREMBED_ATTRS")]
    attrs: Option<PathBuf>,
    /// Label file (`node label`); required for --kind col_important.
    #[arg(long, env = "ATTREMBED_LABELS")]
    labels: Option<PathBuf>,
    /// Corruption regime.
    #[arg(long, value_enum, env = "ATTREMBED_KIND")]
    kind: Option<CorruptionKind>,
    /// Fraction of rows/columns/edges to corrupt, in [0, 1].
    #[arg(long, env = "ATTREMBED_FRACTION")]
    fraction: Option<f64>,
    #[arg(long, env = "ATTREMBED_SEED")]
    seed: Option<u64>,
    /// Prefix for the emitted files: <prefix>.edges, <prefix>.attrs,
    /// <prefix>.removed, <prefix>.manifest.
    #[arg(long, env = "ATTREMBED_OUT_PREFIX")]
    out_prefix: Option<PathBuf>,
    #[arg(long, env = "ATTREMBED_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LinkpredArgs {
    #[arg(long, env = "ATTREMBED_EDGES")]
    edges: Option<PathBuf>,
    #[arg(long, env = "ATTREMBED_ATTRS")]
    attrs: Option<PathBuf>,
    /// Fraction of edges to remove for the test set, in (0, 1].
    #[arg(long, env = "ATTREMBED_REMOVE_FRACTION")]
    remove_fraction: Option<f64>,
    /// Edge operator (`average`, `hadamard`, `l1`, `l2`) or
    /// `heuristic:<common_neighbors|jaccard|adamic_adar|preferential_attachment>`.
    #[arg(long, env = "ATTREMBED_OPERATOR")]
    operator: Option<String>,
    #[arg(long, env = "ATTREMBED_SEED")]
    seed: Option<u64>,
    /// Keep only this fraction of train/test pairs (for very large graphs).
    #[arg(long, env = "ATTREMBED_SUBSAMPLE")]
    subsample: Option<f64>,
    /// Also write the result table as CSV.
    #[arg(long, env = "ATTREMBED_CSV")]
    csv: Option<PathBuf>,
    /// Manifest path [default: <csv>.manifest when --csv is given]
    #[arg(long, env = "ATTREMBED_MANIFEST")]
    manifest: Option<PathBuf>,
    #[arg(long, env = "ATTREMBED_CONFIG")]
    config: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
struct PairsArgs {
    #[arg(long, env = "ATTREMBED_EDGES")]
    edges: Option<PathBuf>,
    /// Nodes per random walk [default: 100]
    #[arg(long, env = "ATTREMBED_WALK_LEN")]
    walk_len: Option<usize>,
    /// Walks started from each node [default: 40]
    #[arg(long, env = "ATTREMBED_WALKS_PER_NODE")]
    walks_per_node: Option<usize>,
    /// Context window size [default: 10]
    #[arg(long, env = "ATTREMBED_WINDOW")]
    window: Option<usize>,
    #[arg(long, env = "ATTREMBED_SEED")]
    seed: Option<u64>,
    /// Output file [default: stdout]
    #[arg(long, env = "ATTREMBED_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long, env = "ATTREMBED_CONFIG")]
    config: Option<PathBuf>,
}

/// A command failure carrying its process exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(err: E) -> Self {
        let mut message = err.to_string();
        let mut source = err.source();
        while let Some(s) = source {
            message.push_str(&format!(": {s}"));
            source = s.source();
        }
        Failure::runtime(message)
    }
}

fn graph_failure(err: GraphError) -> Failure {
    match err {
        // A missing or unreadable input path is a usage problem.
        GraphError::Io { .. } => Failure {
            code: 2,
            message: err.to_string(),
        },
        other => other.into(),
    }
}

/// Parse args, run, and return the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Corrupt(args) => cmd_corrupt(args),
        Command::Linkpred(args) => cmd_linkpred(args),
        Command::Pairs(args) => cmd_pairs(args),
    };
    match result {
        Ok(()) => 0,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

/// `key = value` file. Lines starting with `#` (or trailing comments) are
/// ignored, as are keys this tool does not know — manifests carry
/// informational keys like timings.
struct ConfigMap(HashMap<String, String>);

impl ConfigMap {
    fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| {
                Failure::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            for raw in text.lines() {
                let line = match raw.find('#') {
                    Some(pos) => &raw[..pos],
                    None => raw,
                };
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Failure::usage(format!(
                        "config line is not `key = value`: {line}"
                    )));
                };
                map.insert(key.trim().to_owned(), value.trim().to_owned());
            }
        }
        Ok(Self(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                Failure::usage(format!("config key `{key}`: cannot parse `{raw}`: {e}"))
            }),
        }
    }
}

fn resolve<T: FromStr>(flag: Option<T>, cfg: &ConfigMap, key: &str, default: T) -> Result<T, Failure>
where
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get(key)?.unwrap_or(default)),
    }
}

fn resolve_opt<T: FromStr>(flag: Option<T>, cfg: &ConfigMap, key: &str) -> Result<Option<T>, Failure>
where
    T::Err: Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

fn resolve_required<T: FromStr>(
    flag: Option<T>,
    cfg: &ConfigMap,
    key: &str,
) -> Result<T, Failure>
where
    T::Err: Display,
{
    resolve_opt(flag, cfg, key)?
        .ok_or_else(|| Failure::usage(format!("missing required option --{}", key.replace('_', "-"))))
}

fn resolve_train_config(
    hyper: HyperArgs,
    seed: Option<u64>,
    cfg: &ConfigMap,
) -> Result<TrainConfig, Failure> {
    let defaults = TrainConfig::default();
    let lr0 = resolve(hyper.lr, cfg, "lr", defaults.lr0)?;
    let threads = resolve(hyper.threads, cfg, "threads", 1)?;
    let config = TrainConfig {
        walk_len: resolve(hyper.walk_len, cfg, "walk_len", defaults.walk_len)?,
        walks_per_node: resolve(
            hyper.walks_per_node,
            cfg,
            "walks_per_node",
            defaults.walks_per_node,
        )?,
        window: resolve(hyper.window, cfg, "window", defaults.window)?,
        dim: resolve(hyper.dim, cfg, "dim", defaults.dim)?,
        negatives: resolve(hyper.negatives, cfg, "negatives", defaults.negatives)?,
        max_iters: resolve(hyper.iters, cfg, "iters", defaults.max_iters)?,
        lr0,
        lr_update_period: resolve(
            hyper.lr_update_period,
            cfg,
            "lr_update_period",
            defaults.lr_update_period,
        )?,
        lr_floor: lr0 * 1e-4,
        structure_prob: resolve(
            hyper.structure_prob,
            cfg,
            "structure_prob",
            defaults.structure_prob,
        )?,
        seed: resolve(seed, cfg, "seed", defaults.seed)?,
        deterministic: threads == 1,
        threads,
    };
    config
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;
    Ok(config)
}

fn config_manifest_entries(config: &TrainConfig) -> Vec<(String, String)> {
    vec![
        ("walk_len".into(), config.walk_len.to_string()),
        ("walks_per_node".into(), config.walks_per_node.to_string()),
        ("window".into(), config.window.to_string()),
        ("dim".into(), config.dim.to_string()),
        ("negatives".into(), config.negatives.to_string()),
        ("iters".into(), config.max_iters.to_string()),
        ("lr".into(), config.lr0.to_string()),
        (
            "lr_update_period".into(),
            config.lr_update_period.to_string(),
        ),
        ("structure_prob".into(), config.structure_prob.to_string()),
        ("seed".into(), config.seed.to_string()),
        ("threads".into(), config.threads.to_string()),
    ]
}

fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<(), Failure> {
    let mut out = String::new();
    for (key, value) in entries {
        out.push_str(&format!("{key} = {value}\n"));
    }
    fs::write(path, out)
        .map_err(|e| Failure::runtime(format!("cannot write manifest {}: {e}", path.display())))
}

fn load_graph(edges: &Path, attrs: Option<&Path>) -> Result<AttributedGraph, Failure> {
    let graph = AttributedGraph::load_edges(edges).map_err(graph_failure)?;
    match attrs {
        Some(path) => graph.load_attrs(path).map_err(graph_failure),
        None => Ok(graph),
    }
}

fn manifest_path_for(explicit: Option<PathBuf>, output: &Path) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let mut os = output.as_os_str().to_owned();
        os.push(".manifest");
        PathBuf::from(os)
    })
}

fn cmd_train(args: TrainArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let edges: PathBuf = resolve_required(args.edges, &cfg, "edges")?;
    let attrs: Option<PathBuf> = resolve_opt(args.attrs, &cfg, "attrs")?;
    let output: PathBuf = resolve_required(args.output, &cfg, "output")?;
    let config = resolve_train_config(args.hyper, args.seed, &cfg)?;

    let graph = load_graph(&edges, attrs.as_deref())?;
    let trainer = Trainer::new(&graph, config.clone())?;

    let train_started = Instant::now();
    let (model, stats) = trainer.train()?;
    let train_time = train_started.elapsed();

    let mut buf = Vec::new();
    model
        .write_embeddings(&graph, &mut buf)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    fs::write(&output, &buf)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", output.display())))?;

    let mut entries = vec![
        ("command".into(), "train".to_string()),
        ("version".into(), env!("CARGO_PKG_VERSION").to_string()),
        ("edges".into(), edges.display().to_string()),
    ];
    if let Some(attrs) = &attrs {
        entries.push(("attrs".into(), attrs.display().to_string()));
    }
    entries.push(("output".into(), output.display().to_string()));
    entries.extend(config_manifest_entries(&config));
    let timings = trainer.timings();
    entries.extend([
        (
            "structure_steps".to_string(),
            stats.structure_steps.to_string(),
        ),
        ("attr_steps".to_string(), stats.attr_steps.to_string()),
        (
            "timing_walks_ms".to_string(),
            timings.walks.as_millis().to_string(),
        ),
        (
            "timing_counting_ms".to_string(),
            timings.counting.as_millis().to_string(),
        ),
        (
            "timing_tables_ms".to_string(),
            timings.tables.as_millis().to_string(),
        ),
        (
            "timing_train_ms".to_string(),
            train_time.as_millis().to_string(),
        ),
        (
            "timing_total_ms".to_string(),
            started.elapsed().as_millis().to_string(),
        ),
    ]);
    let manifest = manifest_path_for(args.manifest, &output);
    write_manifest(&manifest, &entries)?;

    println!(
        "wrote embeddings for {} nodes (dim {}) to {}",
        graph.node_count(),
        config.dim,
        output.display()
    );
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn cmd_corrupt(args: CorruptArgs) -> Result<(), Failure> {
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let edges: PathBuf = resolve_required(args.edges, &cfg, "edges")?;
    let attrs: Option<PathBuf> = resolve_opt(args.attrs, &cfg, "attrs")?;
    let labels_path: Option<PathBuf> = resolve_opt(args.labels, &cfg, "labels")?;
    let kind = args
        .kind
        .map(Ok)
        .or_else(|| {
            cfg.0.get("kind").map(|raw| {
                clap::ValueEnum::from_str(raw, true)
                    .map_err(|e| Failure::usage(format!("config key `kind`: {e}")))
            })
        })
        .transpose()?
        .ok_or_else(|| Failure::usage("missing required option --kind"))?;
    let fraction: f64 = resolve_required(args.fraction, &cfg, "fraction")?;
    let seed: u64 = resolve(args.seed, &cfg, "seed", 1)?;
    let out_prefix: PathBuf = resolve_required(args.out_prefix, &cfg, "out_prefix")?;
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Failure::usage(format!(
            "--fraction must be in [0, 1], got {fraction}"
        )));
    }

    let graph = load_graph(&edges, attrs.as_deref())?;
    let labels = labels_path
        .as_deref()
        .map(|p| LabelAssignment::load(&graph, p).map_err(graph_failure))
        .transpose()?;

    let spec = CorruptionSpec {
        kind,
        fraction,
        seed: seeds::derive(seed, "corrupt"),
    };
    let (corrupted, removed) = spec.apply(&graph, labels.as_ref())?;

    let prefix = out_prefix.display();
    let write = |suffix: &str, body: Vec<u8>| -> Result<PathBuf, Failure> {
        let path = PathBuf::from(format!("{prefix}.{suffix}"));
        fs::write(&path, body)
            .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    };

    let mut buf = Vec::new();
    corrupted.write_edges(&mut buf)?;
    let edges_out = write("edges", buf)?;

    let mut buf = Vec::new();
    corrupted.write_attrs(&mut buf)?;
    let attrs_out = write("attrs", buf)?;

    let mut buf = Vec::new();
    for &(a, b) in &removed {
        writeln!(buf, "{} {}", graph.node_name(a), graph.node_name(b))
            .map_err(|e| Failure::runtime(e.to_string()))?;
    }
    let removed_out = write("removed", buf)?;

    let mut entries = vec![
        ("command".into(), "corrupt".to_string()),
        ("version".into(), env!("CARGO_PKG_VERSION").to_string()),
        ("edges".into(), edges.display().to_string()),
    ];
    if let Some(attrs) = &attrs {
        entries.push(("attrs".into(), attrs.display().to_string()));
    }
    if let Some(labels) = &labels_path {
        entries.push(("labels".into(), labels.display().to_string()));
    }
    entries.extend([
        ("kind".to_string(), kind.as_str().to_string()),
        ("fraction".to_string(), fraction.to_string()),
        ("seed".to_string(), seed.to_string()),
        ("out_prefix".to_string(), out_prefix.display().to_string()),
        ("removed_edges".to_string(), removed.len().to_string()),
    ]);
    write_manifest(&PathBuf::from(format!("{prefix}.manifest")), &entries)?;

    println!(
        "corrupted ({}, fraction {fraction}) -> {}, {}, {}",
        kind.as_str(),
        edges_out.display(),
        attrs_out.display(),
        removed_out.display()
    );
    Ok(())
}

enum OperatorChoice {
    Embedding(EdgeOperator),
    Heuristic(HeuristicKind),
}

impl FromStr for OperatorChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(name) = s.strip_prefix("heuristic:") {
            Ok(OperatorChoice::Heuristic(name.parse()?))
        } else {
            Ok(OperatorChoice::Embedding(s.parse()?))
        }
    }
}

fn cmd_linkpred(args: LinkpredArgs) -> Result<(), Failure> {
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let edges: PathBuf = resolve_required(args.edges, &cfg, "edges")?;
    let attrs: Option<PathBuf> = resolve_opt(args.attrs, &cfg, "attrs")?;
    let remove_fraction: f64 = resolve_required(args.remove_fraction, &cfg, "remove_fraction")?;
    let operator_raw: String = resolve_required(args.operator, &cfg, "operator")?;
    let operator: OperatorChoice = operator_raw.parse().map_err(Failure::usage)?;
    let seed: u64 = resolve(args.seed, &cfg, "seed", 1)?;
    let subsample: Option<f64> = resolve_opt(args.subsample, &cfg, "subsample")?;
    if !(0.0..=1.0).contains(&remove_fraction) {
        return Err(Failure::usage(format!(
            "--remove-fraction must be in [0, 1], got {remove_fraction}"
        )));
    }
    if let Some(f) = subsample {
        if !(0.0..=1.0).contains(&f) {
            return Err(Failure::usage(format!(
                "--subsample must be in [0, 1], got {f}"
            )));
        }
    }
    let mut config = resolve_train_config(args.hyper, Some(seed), &cfg)?;
    config.seed = seeds::derive(seed, "linkpred-train");

    let full = load_graph(&edges, attrs.as_deref())?;
    let (remaining, removed) =
        remove_edges_random(&full, remove_fraction, seeds::derive(seed, "linkpred-remove"));
    let (mut train_set, mut test_set) = build_pair_datasets(
        &full,
        &remaining,
        &removed,
        seeds::derive(seed, "linkpred-datasets"),
    )?;
    if let Some(fraction) = subsample {
        train_set = train_set.subsample(fraction, seeds::derive(seed, "linkpred-sub-train"));
        test_set = test_set.subsample(fraction, seeds::derive(seed, "linkpred-sub-test"));
    }

    let (op_name, method, auc_value) = match operator {
        OperatorChoice::Heuristic(kind) => {
            let value = heuristic_auc(&remaining, kind, &test_set)?;
            ("heuristic", kind.name(), value)
        }
        OperatorChoice::Embedding(op) => {
            let trainer = Trainer::new(&remaining, config.clone())?;
            let (model, _) = trainer.train()?;
            let classifier = train_link_classifier(
                &train_set,
                &model,
                op,
                &LinkClassifierConfig::default(),
            )?;
            let value = classifier_auc(&classifier, &model, op, &test_set)?;
            (op.name(), "embedding", value)
        }
    };

    println!("operator method auc");
    println!("{op_name} {method} {auc_value:.4}");

    if let Some(csv) = &args.csv {
        let body = format!("operator,method,auc\n{op_name},{method},{auc_value:.4}\n");
        fs::write(csv, body)
            .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", csv.display())))?;
    }

    let manifest = match (&args.manifest, &args.csv) {
        (Some(path), _) => Some(path.clone()),
        (None, Some(csv)) => Some(manifest_path_for(None, csv)),
        (None, None) => None,
    };
    if let Some(path) = manifest {
        let mut entries = vec![
            ("command".into(), "linkpred".to_string()),
            ("version".into(), env!("CARGO_PKG_VERSION").to_string()),
            ("edges".into(), edges.display().to_string()),
        ];
        if let Some(attrs) = &attrs {
            entries.push(("attrs".into(), attrs.display().to_string()));
        }
        entries.extend([
            ("remove_fraction".to_string(), remove_fraction.to_string()),
            ("operator".to_string(), operator_raw.clone()),
        ]);
        if let Some(f) = subsample {
            entries.push(("subsample".to_string(), f.to_string()));
        }
        entries.extend(config_manifest_entries(&config));
        // The derived trainer seed is informational; replays re-derive it.
        entries.retain(|(k, _)| k != "seed");
        entries.push(("seed".to_string(), seed.to_string()));
        entries.push(("auc".to_string(), format!("{auc_value:.6}")));
        write_manifest(&path, &entries)?;
    }
    Ok(())
}

fn cmd_pairs(args: PairsArgs) -> Result<(), Failure> {
    let cfg = ConfigMap::load(args.config.as_deref())?;
    let edges: PathBuf = resolve_required(args.edges, &cfg, "edges")?;
    let walk_len: usize = resolve(args.walk_len, &cfg, "walk_len", 100)?;
    let walks_per_node: usize = resolve(args.walks_per_node, &cfg, "walks_per_node", 40)?;
    let window: usize = resolve(args.window, &cfg, "window", 10)?;
    let seed: u64 = resolve(args.seed, &cfg, "seed", 1)?;
    let output: Option<PathBuf> = resolve_opt(args.output, &cfg, "output")?;

    let graph = load_graph(&edges, None)?;
    let walks = generate_walks(
        &graph,
        walk_len,
        walks_per_node,
        seeds::derive(seed, "walks"),
    );
    let counts = count_context_pairs(&walks, window);

    let mut buf = String::new();
    for ((center, context), count) in counts.sorted_entries() {
        buf.push_str(&format!(
            "{} {} {}\n",
            graph.node_name(center),
            graph.node_name(context),
            count
        ));
    }

    match &output {
        Some(path) => {
            fs::write(path, &buf)
                .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
            let entries = vec![
                ("command".into(), "pairs".to_string()),
                ("version".into(), env!("CARGO_PKG_VERSION").to_string()),
                ("edges".into(), edges.display().to_string()),
                ("walk_len".into(), walk_len.to_string()),
                ("walks_per_node".into(), walks_per_node.to_string()),
                ("window".into(), window.to_string()),
                ("seed".into(), seed.to_string()),
                ("output".into(), path.display().to_string()),
                ("total_pairs".into(), counts.total().to_string()),
            ];
            write_manifest(&manifest_path_for(None, path), &entries)?;
        }
        None => print!("{buf}"),
    }
    Ok(())
}
