//! Experiment driver around the hero library: synthetic datasets, hint
//! exploration, plan-graph storage, guarded inference, and workload
//! evaluation.
//!
//! Every command is deterministic given (config, dataset, storage): repeated
//! runs produce byte-identical primary outputs, and all randomness flows
//! from the single --seed value. Exit codes: 0 success, 1 validation or
//! config error, 2 runtime (I/O) error.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use hero::{
    exploration_cost, generate_synthetic, run_strategy, split_workload, sweep, workload_metrics,
    DecisionPath, ExplorationLog, ExplorationReport, GraphStorage, InferenceConfig,
    InferenceReport, PolicyChoice, ReplayDataset, SearchParams, SplitKind, SplitSpec, Strategy,
};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

/// 1 for validation and config problems, 2 for runtime (I/O) failures.
fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<hero::Error>() {
            return if e.is_usage() { 1 } else { 2 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

#[derive(Parser)]
#[command(
    name = "hero",
    version,
    about = "Hint exploration, plan-graph storage, and guarded inference over replay datasets"
)]
struct Cli {
    /// JSON file with RunConfig defaults; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker pool size; defaults to available parallelism. Results do not
    /// depend on it.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Seed for all randomness (synthetic generation, workload splits).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Directory for derived outputs (reports, metrics, CSV).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// File-supplied defaults for the flags; unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    dataset_path: Option<PathBuf>,
    storage_path: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    queries: Option<usize>,
    dops: Option<Vec<u32>>,
    collision_rate: Option<f64>,
    strategy: Option<String>,
    params: Option<Vec<String>>,
    iters: Option<u32>,
    split_kind: Option<String>,
    train_fraction: Option<f64>,
    tau: Option<f64>,
    top_k: Option<usize>,
    min_boost: Option<f64>,
    super_fast: Option<bool>,
    policy: Option<String>,
    exploration_ms: Option<f64>,
    betas: Option<Vec<f64>>,
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a dataset, run full validation, and print its shape.
    Validate(ValidateArgs),
    /// Write a seeded synthetic replay dataset.
    Generate(GenerateArgs),
    /// Explore queries, write graph storage and a per-query report.
    Explore(ExploreArgs),
    /// Recommend hintsets from storage, printing theta and decision path.
    Infer(InferArgs),
    /// Score a policy over a workload and write its metrics as JSON.
    Eval(EvalArgs),
    /// Run a strategy grid and write the configuration table as CSV.
    Sweep(SweepArgs),
    /// Inspect or toggle stored models by anchor vertex id.
    Storage(StorageCmd),
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, value_name = "PATH")]
    dataset_path: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Where to write the dataset.
    #[arg(long, value_name = "PATH")]
    dataset_path: Option<PathBuf>,
    /// Number of queries (default 20).
    #[arg(long, value_name = "N")]
    queries: Option<usize>,
    /// Dop values, first is the default (default 64,16,1).
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    dops: Option<Vec<u32>>,
    /// Probability that a query shares an earlier default-plan structure.
    #[arg(long, value_name = "F")]
    collision_rate: Option<f64>,
}

#[derive(Args)]
struct ExploreArgs {
    #[arg(long, value_name = "PATH")]
    dataset_path: Option<PathBuf>,
    /// Where to write the storage file.
    #[arg(long, value_name = "PATH")]
    storage_path: Option<PathBuf>,
    /// local, greedy, or exhaustive (default local).
    #[arg(long, value_name = "KIND")]
    strategy: Option<String>,
    /// Neighborhood dimensions for local: join, scan, dop, join-x-dop, inl
    /// (default all five).
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    params: Option<Vec<String>>,
    /// Iteration cap for local search (default unbounded).
    #[arg(long, value_name = "N")]
    iters: Option<u32>,
    /// Explore only the train side of this split: random, structure,
    /// fast-to-slow, slow-to-fast.
    #[arg(long, value_name = "KIND")]
    split_kind: Option<String>,
    #[arg(long, value_name = "F")]
    train_fraction: Option<f64>,
    /// Report JSON path (default: storage path with .report.json).
    #[arg(long, value_name = "PATH")]
    report_path: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long, value_name = "PATH")]
    dataset_path: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    storage_path: Option<PathBuf>,
    /// Query to infer for; repeatable. Default: the whole dataset, or the
    /// test side when a split is given.
    #[arg(long = "query", value_name = "NAME")]
    queries: Vec<String>,
    #[arg(long, value_name = "F")]
    tau: Option<f64>,
    #[arg(long, value_name = "N")]
    top_k: Option<usize>,
    #[arg(long, value_name = "F")]
    min_boost: Option<f64>,
    /// Route by template instead of plan matching.
    #[arg(long)]
    super_fast: bool,
    #[arg(long, value_name = "KIND")]
    split_kind: Option<String>,
    #[arg(long, value_name = "F")]
    train_fraction: Option<f64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    dataset_path: Option<PathBuf>,
    /// default, oracle, or model (model needs --storage-path).
    #[arg(long, value_name = "KIND")]
    policy: Option<String>,
    #[arg(long, value_name = "PATH")]
    storage_path: Option<PathBuf>,
    #[arg(long, value_name = "F")]
    tau: Option<f64>,
    #[arg(long, value_name = "N")]
    top_k: Option<usize>,
    #[arg(long, value_name = "F")]
    min_boost: Option<f64>,
    #[arg(long)]
    super_fast: bool,
    /// Evaluate only the test side of this split.
    #[arg(long, value_name = "KIND")]
    split_kind: Option<String>,
    #[arg(long, value_name = "F")]
    train_fraction: Option<f64>,
    /// Charged exploration time to report alongside the metrics.
    #[arg(long, value_name = "MS")]
    exploration_ms: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_name = "PATH")]
    dataset_path: Option<PathBuf>,
    /// Beta values for the F_beta columns (default 0.1,1,10).
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    betas: Option<Vec<f64>>,
    /// basic (7 strategies) or full (62 local configs + baselines).
    #[arg(long, value_name = "KIND")]
    grid: Option<String>,
    /// Where to write the CSV (default: <out-dir>/sweep.csv).
    #[arg(long, value_name = "PATH")]
    csv_path: Option<PathBuf>,
    /// Also write the full sweep result as JSON.
    #[arg(long, value_name = "PATH")]
    json_path: Option<PathBuf>,
}

#[derive(Args)]
struct StorageCmd {
    #[command(subcommand)]
    action: StorageAction,
}

#[derive(Subcommand)]
enum StorageAction {
    /// Print vertex, edge, and model statistics.
    Inspect(StorageArgs),
    /// Disable the model anchored at --id; inference stops using it.
    Disable(ToggleArgs),
    /// Re-enable the model anchored at --id.
    Enable(ToggleArgs),
}

#[derive(Args)]
struct StorageArgs {
    #[arg(long, value_name = "PATH")]
    storage_path: Option<PathBuf>,
    /// Dataset supplying the dop universe the storage was built against.
    #[arg(long, value_name = "PATH")]
    dataset_path: Option<PathBuf>,
}

#[derive(Args)]
struct ToggleArgs {
    #[arg(long, value_name = "PATH")]
    storage_path: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    dataset_path: Option<PathBuf>,
    /// Anchor vertex id.
    #[arg(long, value_name = "ID")]
    id: Option<u64>,
}

/// Values shared by every subcommand after config resolution.
struct Ctx {
    seed: u64,
    out_dir: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    if let Some(n) = cli.workers.or(cfg.workers) {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        // Only the first global-pool build wins; later calls are no-ops.
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        out_dir: cli.out_dir.clone().or_else(|| cfg.out_dir.clone()),
    };
    if let Some(dir) = &ctx.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    match &cli.cmd {
        Cmd::Validate(a) => cmd_validate(a, &cfg),
        Cmd::Generate(a) => cmd_generate(a, &cfg, &ctx),
        Cmd::Explore(a) => cmd_explore(a, &cfg, &ctx),
        Cmd::Infer(a) => cmd_infer(a, &cfg, &ctx),
        Cmd::Eval(a) => cmd_eval(a, &cfg, &ctx),
        Cmd::Sweep(a) => cmd_sweep(a, &cfg, &ctx),
        Cmd::Storage(a) => match &a.action {
            StorageAction::Inspect(s) => cmd_storage_inspect(s, &cfg),
            StorageAction::Disable(t) => cmd_storage_toggle(t, &cfg, false),
            StorageAction::Enable(t) => cmd_storage_toggle(t, &cfg, true),
        },
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("config file {}: {e}", path.display()))
}

fn pick<T: Clone>(flag: &Option<T>, cfg: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| cfg.clone())
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("--{flag} is required (flag or config file)"))
}

fn existing(path: PathBuf, what: &str) -> Result<PathBuf> {
    if !path.is_file() {
        bail!("{what} {} is not a readable file", path.display());
    }
    Ok(path)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_dataset(flag: &Option<PathBuf>, cfg: &RunConfig) -> Result<ReplayDataset> {
    let path = existing(
        need(pick(flag, &cfg.dataset_path), "dataset-path")?,
        "dataset",
    )?;
    Ok(ReplayDataset::load(&path)?)
}

fn load_storage(
    flag: &Option<PathBuf>,
    cfg: &RunConfig,
    ds: &ReplayDataset,
) -> Result<GraphStorage> {
    let path = existing(
        need(pick(flag, &cfg.storage_path), "storage-path")?,
        "storage",
    )?;
    Ok(GraphStorage::load(&path, ds.dop_values())?)
}

fn parse_params(names: &[String], iters: Option<u32>) -> Result<SearchParams> {
    if names.is_empty() {
        return Ok(SearchParams {
            max_iters: iters,
            ..SearchParams::full()
        });
    }
    let mut p = SearchParams {
        join: false,
        scan: false,
        dop: false,
        join_x_dop: false,
        inl: false,
        max_iters: iters,
    };
    for n in names {
        match n.as_str() {
            "join" => p.join = true,
            "scan" => p.scan = true,
            "dop" => p.dop = true,
            "join-x-dop" | "join_x_dop" => p.join_x_dop = true,
            "inl" => p.inl = true,
            other => bail!("unknown search dimension {other}"),
        }
    }
    Ok(p)
}

fn build_strategy(
    kind: Option<String>,
    params: Option<Vec<String>>,
    iters: Option<u32>,
) -> Result<Strategy> {
    let kind = kind.unwrap_or_else(|| "local".into());
    match kind.as_str() {
        "local" => Ok(Strategy::Local {
            params: parse_params(&params.unwrap_or_default(), iters)?,
        }),
        "greedy" | "exhaustive" => {
            if params.is_some() || iters.is_some() {
                bail!("--params and --iters only apply to --strategy local");
            }
            Ok(if kind == "greedy" {
                Strategy::Greedy
            } else {
                Strategy::Exhaustive
            })
        }
        other => bail!("unknown strategy {other} (expected local, greedy, or exhaustive)"),
    }
}

fn parse_split(kind: Option<String>, frac: Option<f64>, seed: u64) -> Result<Option<SplitSpec>> {
    let Some(k) = kind else { return Ok(None) };
    let kind = match k.as_str() {
        "random" => SplitKind::Random,
        "structure" => SplitKind::Structure,
        "fast-to-slow" | "fast_to_slow" => SplitKind::FastToSlow,
        "slow-to-fast" | "slow_to_fast" => SplitKind::SlowToFast,
        other => bail!("unknown split kind {other}"),
    };
    Ok(Some(SplitSpec {
        kind,
        train_fraction: frac.unwrap_or(0.8),
        seed,
    }))
}

fn inference_config(
    tau: Option<f64>,
    top_k: Option<usize>,
    min_boost: Option<f64>,
    super_fast: bool,
) -> InferenceConfig {
    let d = InferenceConfig::default();
    InferenceConfig {
        tau: tau.unwrap_or(d.tau),
        top_k: top_k.unwrap_or(d.top_k),
        min_boost: min_boost.unwrap_or(d.min_boost),
        super_fast,
    }
}

fn cmd_validate(a: &ValidateArgs, cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(&a.dataset_path, cfg)?;
    let n = ds.queries().len();
    let states = ds.dop_values().space_size();
    println!("{n} queries, {states} states/query");
    let per: Vec<usize> = ds.queries().iter().map(|q| q.unique_plans()).collect();
    let total = n * states;
    let unique: usize = per.iter().sum();
    println!(
        "{total} states total, {unique} unique plans ({:.1}% of states)",
        100.0 * unique as f64 / total as f64
    );
    println!(
        "unique plans per query: min {} / mean {:.1} / max {}",
        per.iter().min().unwrap(),
        unique as f64 / n as f64,
        per.iter().max().unwrap()
    );
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, cfg: &RunConfig, ctx: &Ctx) -> Result<()> {
    let out = need(pick(&a.dataset_path, &cfg.dataset_path), "dataset-path")?;
    let queries = pick(&a.queries, &cfg.queries).unwrap_or(20);
    let dops = pick(&a.dops, &cfg.dops).unwrap_or_else(|| vec![64, 16, 1]);
    let rate = pick(&a.collision_rate, &cfg.collision_rate).unwrap_or(0.3);
    let ds = generate_synthetic(ctx.seed, queries, &dops, rate)?;
    ds.save(&out)?;
    println!(
        "wrote {} queries x {} states to {}",
        ds.queries().len(),
        ds.dop_values().space_size(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ExploreReport {
    strategy: String,
    queries: Vec<ExplorationReport>,
    states_total: usize,
    executed_total: usize,
    exploration_ms_total: f64,
    planning_ms_total: f64,
}

fn cmd_explore(a: &ExploreArgs, cfg: &RunConfig, ctx: &Ctx) -> Result<()> {
    let ds = load_dataset(&a.dataset_path, cfg)?;
    let storage_path = need(pick(&a.storage_path, &cfg.storage_path), "storage-path")?;
    let strategy = build_strategy(
        pick(&a.strategy, &cfg.strategy),
        pick(&a.params, &cfg.params),
        pick(&a.iters, &cfg.iters),
    )?;
    let workload = ds.query_names();
    let train = match parse_split(
        pick(&a.split_kind, &cfg.split_kind),
        pick(&a.train_fraction, &cfg.train_fraction),
        ctx.seed,
    )? {
        Some(spec) => split_workload(&ds, &workload, &spec)?.0,
        None => workload,
    };
    let logs: Vec<ExplorationLog> = train
        .par_iter()
        .map(|q| run_strategy(&ds, q, &strategy))
        .collect::<hero::Result<_>>()?;
    let mut storage = GraphStorage::new(ds.dop_values().clone());
    for log in &logs {
        storage.ingest(log)?;
    }
    storage.save(&storage_path)?;
    let report = ExploreReport {
        strategy: strategy.to_string(),
        queries: logs.iter().map(|l| l.report()).collect(),
        states_total: logs.iter().map(|l| l.states.len()).sum(),
        executed_total: logs
            .iter()
            .map(|l| l.states.iter().filter(|s| s.executed).count())
            .sum(),
        exploration_ms_total: logs.iter().map(|l| l.exploration_ms).sum(),
        planning_ms_total: logs.iter().map(|l| l.planning_ms_total).sum(),
    };
    let report_path = a
        .report_path
        .clone()
        .or_else(|| {
            ctx.out_dir
                .as_ref()
                .map(|d| d.join("exploration_report.json"))
        })
        .unwrap_or_else(|| storage_path.with_extension("report.json"));
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_text(&report_path, &json)?;
    println!(
        "explored {} queries with {strategy}: {} states, {} executed, cost {} ms",
        train.len(),
        report.states_total,
        report.executed_total,
        exploration_cost(&logs)
    );
    println!(
        "storage: {} vertices, {} edges -> {}",
        storage.vertices().len(),
        storage.edges().len(),
        storage_path.display()
    );
    println!("report -> {}", report_path.display());
    Ok(())
}

fn infer_names(
    ds: &ReplayDataset,
    queries: &[String],
    split_kind: Option<String>,
    frac: Option<f64>,
    seed: u64,
) -> Result<Vec<String>> {
    if !queries.is_empty() {
        for q in queries {
            ds.query(q)?;
        }
        return Ok(queries.to_vec());
    }
    let workload = ds.query_names();
    match parse_split(split_kind, frac, seed)? {
        Some(spec) => Ok(split_workload(ds, &workload, &spec)?.1),
        None => Ok(workload),
    }
}

fn cmd_infer(a: &InferArgs, cfg: &RunConfig, ctx: &Ctx) -> Result<()> {
    let ds = load_dataset(&a.dataset_path, cfg)?;
    let storage = load_storage(&a.storage_path, cfg, &ds)?;
    let inf = inference_config(
        pick(&a.tau, &cfg.tau),
        pick(&a.top_k, &cfg.top_k),
        pick(&a.min_boost, &cfg.min_boost),
        a.super_fast || cfg.super_fast.unwrap_or(false),
    );
    let names = infer_names(
        &ds,
        &a.queries,
        pick(&a.split_kind, &cfg.split_kind),
        pick(&a.train_fraction, &cfg.train_fraction),
        ctx.seed,
    )?;
    let mut reports: Vec<InferenceReport> = Vec::with_capacity(names.len());
    for name in &names {
        let (h, rep) = if inf.super_fast {
            storage.infer_super_fast(&ds, name, &inf)?
        } else {
            storage.infer(&ds, name, &inf)?
        };
        match rep.decision_path {
            DecisionPath::Chosen => println!(
                "{name}: ops_mask={} dop={} theta_id={} (chosen, anchor={}, candidates={})",
                h.ops_mask,
                h.dop,
                rep.chosen_theta_id.0,
                rep.model_anchor.unwrap_or_default(),
                rep.candidates
            ),
            path => println!("{name}: fallback: default ({path})"),
        }
        reports.push(rep);
    }
    if let Some(dir) = &ctx.out_dir {
        let mut json = serde_json::to_string_pretty(&reports)?;
        json.push('\n');
        let path = dir.join("inference.json");
        write_text(&path, &json)?;
        println!("reports -> {}", path.display());
    }
    Ok(())
}

fn cmd_eval(a: &EvalArgs, cfg: &RunConfig, ctx: &Ctx) -> Result<()> {
    let ds = load_dataset(&a.dataset_path, cfg)?;
    let policy = pick(&a.policy, &cfg.policy).unwrap_or_else(|| "model".into());
    let workload = ds.query_names();
    let names = match parse_split(
        pick(&a.split_kind, &cfg.split_kind),
        pick(&a.train_fraction, &cfg.train_fraction),
        ctx.seed,
    )? {
        Some(spec) => split_workload(&ds, &workload, &spec)?.1,
        None => workload,
    };
    let choices: Vec<PolicyChoice> = match policy.as_str() {
        "default" => names
            .iter()
            .map(|q| PolicyChoice {
                query: q.clone(),
                theta: ds.default_hintset(),
                model_ms: 0.0,
            })
            .collect(),
        "oracle" => names
            .iter()
            .map(|q| {
                let (id, _) = ds.query(q)?.best_entry();
                Ok(PolicyChoice {
                    query: q.clone(),
                    theta: ds.dop_values().try_theta(id)?,
                    model_ms: 0.0,
                })
            })
            .collect::<hero::Result<_>>()?,
        "model" => {
            let storage = load_storage(&a.storage_path, cfg, &ds)?;
            let inf = inference_config(
                pick(&a.tau, &cfg.tau),
                pick(&a.top_k, &cfg.top_k),
                pick(&a.min_boost, &cfg.min_boost),
                a.super_fast || cfg.super_fast.unwrap_or(false),
            );
            names
                .iter()
                .map(|q| {
                    let (h, rep) = if inf.super_fast {
                        storage.infer_super_fast(&ds, q, &inf)?
                    } else {
                        storage.infer(&ds, q, &inf)?
                    };
                    Ok(PolicyChoice {
                        query: q.clone(),
                        theta: h,
                        model_ms: rep.planning_ms,
                    })
                })
                .collect::<hero::Result<_>>()?
        }
        other => bail!("unknown policy {other} (expected default, oracle, or model)"),
    };
    let exploration_ms = pick(&a.exploration_ms, &cfg.exploration_ms).unwrap_or(0.0);
    let metrics = workload_metrics(&ds, &names, &choices, exploration_ms)?;
    let mut json = serde_json::to_string_pretty(&metrics)?;
    json.push('\n');
    print!("{json}");
    if let Some(dir) = &ctx.out_dir {
        let path = dir.join("metrics.json");
        write_text(&path, &json)?;
        println!("metrics -> {}", path.display());
    }
    Ok(())
}

fn build_grid(kind: &str) -> Result<Vec<Strategy>> {
    let local = |join, scan, dop, join_x_dop, inl, max_iters| Strategy::Local {
        params: SearchParams {
            join,
            scan,
            dop,
            join_x_dop,
            inl,
            max_iters,
        },
    };
    match kind {
        "basic" => Ok(vec![
            local(true, true, true, true, true, None),
            local(false, false, true, false, false, Some(1)),
            local(true, false, true, false, false, None),
            local(true, true, true, false, false, Some(2)),
            local(false, true, false, true, true, None),
            Strategy::Greedy,
            Strategy::Exhaustive,
        ]),
        "full" => {
            let mut out = Vec::new();
            for bits in 1u32..32 {
                for iters in [Some(1), None] {
                    out.push(local(
                        bits & 1 != 0,
                        bits & 2 != 0,
                        bits & 4 != 0,
                        bits & 8 != 0,
                        bits & 16 != 0,
                        iters,
                    ));
                }
            }
            out.push(Strategy::Greedy);
            out.push(Strategy::Exhaustive);
            Ok(out)
        }
        other => bail!("unknown grid {other} (expected basic or full)"),
    }
}

fn cmd_sweep(a: &SweepArgs, cfg: &RunConfig, ctx: &Ctx) -> Result<()> {
    let ds = load_dataset(&a.dataset_path, cfg)?;
    let betas = pick(&a.betas, &cfg.betas).unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
    let grid = build_grid(&pick(&a.grid, &cfg.grid).unwrap_or_else(|| "basic".into()))?;
    let names = ds.query_names();
    let result = sweep(&ds, &names, &grid, &betas)?;
    let csv_path = need(
        a.csv_path
            .clone()
            .or_else(|| ctx.out_dir.as_ref().map(|d| d.join("sweep.csv"))),
        "csv-path",
    )?;
    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    write_text(&csv_path, std::str::from_utf8(&buf).expect("csv is utf-8"))?;
    for w in &result.winners {
        println!("winner beta={}: {}", w.beta, w.label);
    }
    println!("csv -> {}", csv_path.display());
    if let Some(json_path) = &a.json_path {
        let mut json = serde_json::to_string_pretty(&result)?;
        json.push('\n');
        write_text(json_path, &json)?;
        println!("json -> {}", json_path.display());
    }
    Ok(())
}

fn cmd_storage_inspect(a: &StorageArgs, cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(&a.dataset_path, cfg)?;
    let storage = load_storage(&a.storage_path, cfg, &ds)?;
    // Anchors include disabled vertices so their ids stay discoverable.
    let mut out_degree: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
    for e in storage.edges() {
        *out_degree.entry(e.from).or_default() += 1;
    }
    println!(
        "{} vertices, {} edges, {} models",
        storage.vertices().len(),
        storage.edges().len(),
        storage.models().len()
    );
    for v in storage.vertices() {
        let Some(degree) = out_degree.get(&v.id) else {
            continue;
        };
        println!(
            "anchor id={} template={} enabled={} out_degree={} best_latency_ms={}",
            v.id, v.template, v.enabled, degree, v.best_latency_ms
        );
    }
    Ok(())
}

fn cmd_storage_toggle(a: &ToggleArgs, cfg: &RunConfig, flag: bool) -> Result<()> {
    let ds = load_dataset(&a.dataset_path, cfg)?;
    let path = existing(
        need(pick(&a.storage_path, &cfg.storage_path), "storage-path")?,
        "storage",
    )?;
    let mut storage = GraphStorage::load(&path, ds.dop_values())?;
    let id = need(a.id, "id")?;
    storage.set_enabled(id, flag)?;
    storage.save(&path)?;
    println!("vertex {id} {}", if flag { "enabled" } else { "disabled" });
    Ok(())
}
