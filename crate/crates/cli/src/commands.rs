use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use gea_core::cellspace::ArchEncoding;
use gea_core::harness::emit::{emit_results, SummaryFile};
use gea_core::harness::experiment::{
    jacobian_scorer, run_experiment, BatchSource, BenchmarkSource, ExperimentConfig, Method, SweepAxis,
};
use gea_core::harness::stats::{kendall_tau, mean, std_dev, welch_ttest};
use gea_core::oracle::{gen_synthetic, save_tabular, SyntheticSpec};
use gea_core::par::Execution;
use gea_core::rng::Stream;
use gea_core::zeroproxy::ProxyScorer;
use serde_json::json;

use crate::{BenchCommand, Command, RunArgs, StatsCommand};

const DEFAULT_OUT: &str = "results";

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Search(args) => {
            let mut cfg = load_config(&args)?;
            cfg.sweep.clear();
            run(&cfg)
        }
        Command::Ablate { run: args, param, values } => {
            let mut cfg = load_config(&args)?;
            if let Some(param) = param {
                if values.is_empty() {
                    bail!("--param {param} needs --values");
                }
                cfg.sweep = vec![SweepAxis {
                    param,
                    values: values.iter().map(|v| parse_value(v)).collect(),
                }];
            }
            if cfg.sweep.is_empty() {
                bail!("ablate needs --param/--values or a sweep in the config file");
            }
            run(&cfg)
        }
        Command::Bench {
            command:
                BenchCommand::Gen {
                    out,
                    seed,
                    noise_std,
                    interaction_std,
                    proxy_tau,
                    dataset,
                },
        } => {
            let spec = SyntheticSpec {
                seed,
                noise_std,
                interaction_std,
                target_proxy_tau: proxy_tau,
                dataset,
            };
            let bench = gen_synthetic(&spec)?;
            save_tabular(&bench, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Score { arch, config, batch, seed } => score(&arch, config.as_deref(), batch, seed),
        Command::Stats { command } => stats(command),
    }
}

/// `{"error": {...}}` on one line.
pub fn error_line(e: &anyhow::Error) -> String {
    let kind = e
        .chain()
        .find_map(|c| c.downcast_ref::<gea_core::Error>())
        .map_or("cli", |c| c.kind());
    let mut parts: Vec<String> = Vec::new();
    for c in e.chain() {
        let m = c.to_string();
        if !parts.last().is_some_and(|p| p.contains(&m)) {
            parts.push(m);
        }
    }
    let message = parts.join(": ");
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn parse_value(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap_or_else(|_| serde_json::Value::String(s.to_string()))
}

fn read_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = read_config(args.config.as_deref())?;
    if let Some(m) = &args.method {
        cfg.method = match m.as_str() {
            "gea" => Method::Gea,
            "rea" => Method::Rea,
            "rs" => Method::Rs,
            other => bail!("unknown method {other}"),
        };
    }
    let s = &mut cfg.search;
    if let Some(v) = args.pop_size {
        s.pop_size = v;
    }
    if let Some(v) = args.tournament {
        s.tournament_size = v;
    }
    if let Some(v) = args.cycles {
        s.cycles = v;
    }
    if let Some(v) = args.gen_size {
        s.gen_size = Some(v);
    }
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if args.sequential {
        s.execution = Execution::Sequential;
    }
    if let Some(v) = args.runs {
        cfg.num_runs = v;
    }
    if let Some(p) = &args.benchmark {
        cfg.benchmark = BenchmarkSource::Tabular(p.clone());
    }
    if let Some(p) = &args.batch {
        cfg.batch = raw_batch(&cfg.batch, p.clone());
    }
    if let Some(p) = &args.out {
        cfg.output = Some(p.clone());
    }
    Ok(cfg)
}

fn raw_batch(current: &BatchSource, path: PathBuf) -> BatchSource {
    let count = match current {
        BatchSource::Raw { count, .. } => *count,
        BatchSource::Synthetic(_) => 32,
    };
    BatchSource::Raw { path, count }
}

fn warn_dropped(source: &BatchSource) -> Result<()> {
    if let BatchSource::Raw { .. } = source {
        let batch = source.load()?;
        if !batch.dropped_classes.is_empty() {
            eprintln!(
                "warning: dropped single-sample classes {:?} from the batch",
                batch.dropped_classes
            );
        }
    }
    Ok(())
}

fn run(cfg: &ExperimentConfig) -> Result<()> {
    warn_dropped(&cfg.batch)?;
    let result = run_experiment(cfg)?;
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let files = emit_results(&result, &out)?;
    println!(
        "{:<24} {:>5} {:>16} {:>16} {:>12} {:>10}",
        "label", "runs", "val_acc", "test_acc", "time_s", "regret"
    );
    for row in result.summary_rows() {
        println!(
            "{:<24} {:>5} {:>8.3} ± {:<5.3} {:>8.3} ± {:<5.3} {:>12.1} {:>10.4}",
            row.label,
            row.runs,
            row.mean_val_acc,
            row.std_val_acc,
            row.mean_test_acc,
            row.std_test_acc,
            row.mean_search_time_s,
            row.mean_regret
        );
    }
    println!("best in benchmark: {} ({:.3})", result.best_arch, result.best_val);
    println!("wrote {} and {}", files.curves.display(), files.summary.display());
    Ok(())
}

fn score(arch: &str, config: Option<&Path>, batch: Option<PathBuf>, seed: u64) -> Result<()> {
    let arch: ArchEncoding = arch.parse().map_err(gea_core::Error::from)?;
    let mut cfg = read_config(config)?;
    if let Some(p) = batch {
        cfg.batch = raw_batch(&cfg.batch, p);
    }
    warn_dropped(&cfg.batch)?;
    let scorer = jacobian_scorer(&cfg)?;
    let s = scorer.score(&arch, &mut Stream::new(seed))?;
    println!(
        "{}",
        json!({ "arch": arch.to_string(), "score": s.value, "per_class": s.per_class })
    );
    Ok(())
}

/// Per-run final validation accuracies from a summary file, or plain numbers.
fn read_sample(path: &Path, label: Option<&str>) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(summary) = serde_json::from_str::<SummaryFile>(&text) {
        let point = match label {
            Some(l) => summary
                .points
                .iter()
                .find(|p| p.label == l)
                .ok_or_else(|| anyhow!("{}: no point labeled {l:?}", path.display()))?,
            None => summary
                .points
                .first()
                .ok_or_else(|| anyhow!("{}: no points", path.display()))?,
        };
        return Ok(point.runs.iter().map(|r| r.final_val_acc).collect());
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("{}: not a number: {t:?}", path.display()))
        })
        .collect()
}

fn stats(command: StatsCommand) -> Result<()> {
    match command {
        StatsCommand::Welch { a, b, label } => {
            let xa = read_sample(&a, label.as_deref())?;
            let xb = read_sample(&b, label.as_deref())?;
            let w = welch_ttest(&xa, &xb)?;
            println!(
                "{}",
                json!({
                    "mean_a": mean(&xa), "std_a": std_dev(&xa), "n_a": xa.len(),
                    "mean_b": mean(&xb), "std_b": std_dev(&xb), "n_b": xb.len(),
                    "t": w.t, "df": w.df, "p": w.p, "significant": w.p < 0.05,
                })
            );
        }
        StatsCommand::Tau { x, y, label } => {
            let xs = read_sample(&x, label.as_deref())?;
            let ys = read_sample(&y, label.as_deref())?;
            let tau = kendall_tau(&xs, &ys)?;
            println!("{}", json!({ "tau": tau, "n": xs.len() }));
        }
    }
    Ok(())
}
