//! Command-line interface. [`dispatch`] does all the work and returns what
//! the binary should print and its exit code.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::data::{write_run, RunConfig, RunMode};
use crate::error::{AgeError, Result};
use crate::filter::KMode;
use crate::graph::Graph;
use crate::pipeline::{
    evaluate_clustering, format_table, resolve_graph, run_ablation, run_cluster, run_linkpred,
    run_reconstruction_variants, run_spectrum, train,
};

pub const DATA_DIR_ENV: &str = "AGE_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "age",
    version,
    about = "Adaptive graph encoder for attributed graph embedding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and write every snapshot plus a manifest to --out.
    Embed(Common),
    /// Train, select a snapshot by DBI and score clustering against labels.
    Cluster(Common),
    /// Hold out edges, train, select by validation AUC, report test AUC/AP.
    Linkpred(Common),
    /// Eigenvalue histogram of the renormalized Laplacian.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Score the five-rung ablation ladder.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Also score the LS+RA and LS+RX reconstruction baselines.
        #[arg(long)]
        with_variants: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file, or `defaults` for the dataset's preset.
    #[arg(long)]
    pub config: Option<String>,
    /// Dataset name under the data root, a dataset directory, or `sbm`.
    #[arg(long)]
    pub dataset: String,
    /// Data root; falls back to $AGE_DATA_DIR.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub t: Option<usize>,
    /// `auto` or a positive number.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Aligned text instead of JSON.
    #[arg(long)]
    pub pretty: bool,
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub metrics: Option<Value>,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutcome {
    fn usage(message: String) -> Self {
        CommandOutcome {
            exit_code: 2,
            stderr: message,
            ..Self::default()
        }
    }

    fn failure(e: &AgeError) -> Self {
        CommandOutcome {
            exit_code: 1,
            stderr: format!("error: {e}\n"),
            ..Self::default()
        }
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CommandOutcome {
                    stdout: text,
                    ..CommandOutcome::default()
                },
                _ => CommandOutcome::usage(text),
            };
        }
    };
    let common = match &cli.command {
        Command::Embed(c) | Command::Cluster(c) | Command::Linkpred(c) => c,
        Command::Spectrum { common, .. } | Command::Ablate { common, .. } => common,
    };
    let cfg = match build_config(common, &cli.command) {
        Ok(c) => c,
        Err(e) => return CommandOutcome::usage(format!("error: {e}\n\nRun `age --help` for usage.\n")),
    };
    match run(&cli.command, common, &cfg) {
        Ok(outcome) => outcome,
        Err(e) => CommandOutcome::failure(&e),
    }
}

fn build_config(common: &Common, command: &Command) -> Result<RunConfig> {
    let mut cfg = match common.config.as_deref() {
        None | Some("defaults") => RunConfig::preset(&dataset_key(&common.dataset)),
        Some(path) => RunConfig::load(Path::new(path))?,
    };
    if let Some(t) = common.t {
        cfg.t = t;
    }
    if let Some(k) = &common.k {
        cfg.k_mode = if k == "auto" {
            KMode::Auto
        } else {
            KMode::Fixed(
                k.parse()
                    .map_err(|_| AgeError::Config(format!("--k expects `auto` or a number, got `{k}`")))?,
            )
        };
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    match command {
        Command::Cluster(_) | Command::Ablate { .. } => cfg.mode = RunMode::Cluster,
        Command::Linkpred(_) => cfg.mode = RunMode::Linkpred,
        _ => {}
    }
    if matches!(command, Command::Embed(_)) && common.out.is_none() {
        return Err(AgeError::Config("embed needs --out".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Lower-cased final path component, used to pick a preset.
fn dataset_key(dataset: &str) -> String {
    Path::new(dataset)
        .file_name()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default()
}

fn load_graph(common: &Common, cfg: &RunConfig) -> Result<Graph> {
    let root = common
        .data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from));
    resolve_graph(&common.dataset, root.as_deref(), cfg.seed)
}

fn with_context(common: &Common, cfg: &RunConfig, body: Value) -> Value {
    let mut map = Map::new();
    map.insert("dataset".into(), json!(dataset_key(&common.dataset)));
    map.insert(
        "variant".into(),
        serde_json::to_value(cfg.variant).expect("enum serializes"),
    );
    map.insert("seed".into(), json!(cfg.seed));
    match body {
        Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("result".into(), other);
        }
    }
    Value::Object(map)
}

fn pretty_pairs(v: &Value) -> String {
    match v {
        Value::Object(map) => map
            .iter()
            .filter(|(_, v)| !v.is_object() && !v.is_array())
            .map(|(k, v)| format!("{k:<10} {v}\n"))
            .collect(),
        other => format!("{other}\n"),
    }
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| AgeError::io(parent, e))?;
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, serde_json::to_string_pretty(v)?).map_err(|e| AgeError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| AgeError::io(path, e))
}

fn run(command: &Command, common: &Common, cfg: &RunConfig) -> Result<CommandOutcome> {
    let g = load_graph(common, cfg)?;
    let mut artifacts = Vec::new();
    let (metrics, text) = match command {
        Command::Embed(_) => {
            let mut outcome = train(&g, cfg)?;
            let mut selected = None;
            let mut body = json!({ "snapshots": outcome.snapshots.len() });
            if g.class_count().is_some_and(|m| m >= 2) {
                let (best, m) = evaluate_clustering(&g, &mut outcome.snapshots, cfg.seed)?;
                selected = Some(best);
                body = json!({ "snapshots": outcome.snapshots.len(), "selected_epoch": m.epoch, "dbi": m.dbi });
            }
            let out = common.out.as_deref().expect("checked in build_config");
            artifacts = write_run(out, &dataset_key(&common.dataset), cfg, &outcome.snapshots, selected)?;
            let v = with_context(common, cfg, body);
            let text = pretty_pairs(&v);
            (v, text)
        }
        Command::Cluster(_) => {
            let run = run_cluster(&g, cfg)?;
            let v = with_context(common, cfg, serde_json::to_value(&run.metrics)?);
            let text = pretty_pairs(&v);
            (v, text)
        }
        Command::Linkpred(_) => {
            let m = run_linkpred(&g, cfg)?;
            let v = with_context(common, cfg, serde_json::to_value(&m)?);
            let text = pretty_pairs(&v);
            (v, text)
        }
        Command::Spectrum { bins, .. } => {
            let s = run_spectrum(&g, *bins)?;
            let v = with_context(common, cfg, serde_json::to_value(&s)?);
            let text = format!("lambda_max {:.6}\n", s.lambda_max)
                + &s.histogram
                    .iter()
                    .map(|(lo, hi, c)| format!("[{lo:.4}, {hi:.4}) {c}\n"))
                    .collect::<String>();
            (v, text)
        }
        Command::Ablate { with_variants, .. } => {
            let rows = run_ablation(&g, cfg)?;
            let mut text = format_table(&rows);
            let mut body = json!({ "rows": rows });
            if *with_variants {
                let extra = run_reconstruction_variants(&g, cfg)?;
                text.push('\n');
                text.push_str(&format_table(&extra));
                body["variants"] = serde_json::to_value(&extra)?;
            }
            (with_context(common, cfg, body), text)
        }
    };
    if let (Some(out), false) = (&common.out, matches!(command, Command::Embed(_))) {
        write_json(out, &metrics)?;
        artifacts.push(out.clone());
    }
    let stdout = if common.pretty {
        text
    } else {
        format!("{}\n", serde_json::to_string(&metrics)?)
    };
    Ok(CommandOutcome {
        exit_code: 0,
        artifacts,
        metrics: Some(metrics),
        stdout,
        stderr: String::new(),
    })
}
