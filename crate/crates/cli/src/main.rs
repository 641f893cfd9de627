use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use warmcg_core::bench::{
    aggregate, read_metrics_csv, run_benchmark, write_metrics_csv, Method, OfflineCache,
    PipelineOptions,
};
use warmcg_core::congen::constraint_generation;
use warmcg_core::instances::{
    gen_synthetic, gen_toy, gen_uc, SyntheticFamilyConfig, UcFamilyConfig,
};
use warmcg_core::io::{read_dataset, read_sets, write_dataset, write_sets};
use warmcg_core::learner::{fit, FamilyLayout, LabelMatrix, LabelSource};
use warmcg_core::{solve_milp, ConstraintSet, Error, MilpInstance, SolveStatus};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format ", "1", ")");

#[derive(Parser)]
#[command(name = "warmcg", version = VERSION, about = "Warm-started constraint generation for parametric MILPs")]
struct Cli {
    /// JSON file with default values for any flag (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the four toy instances.
    GenToy(OutArgs),
    /// Generate a synthetic family with semi-continuous variables.
    GenSynthetic(FamilyArgs),
    /// Generate a DC unit-commitment family.
    GenUc(FamilyArgs),
    /// Solve one instance over all its constraints.
    Solve(SolveArgs),
    /// Compute binding and invariant sets of every instance.
    Identify(IdentifyArgs),
    /// Warm-start one instance from a knn trained on all the others.
    Predict(PredictArgs),
    /// Leave-one-out benchmark; writes a metrics CSV.
    Benchmark(BenchmarkArgs),
    /// Aggregate a metrics CSV into a JSON summary.
    Report(ReportArgs),
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct FamilyArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Number of instances.
    #[arg(long = "T", short = 'T')]
    #[serde(rename = "T")]
    t: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct SolveArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct IdentifyArgs {
    #[arg(long = "in", alias = "dataset")]
    #[serde(rename = "in", alias = "dataset")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct PredictArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Sets file from `identify`.
    #[arg(long)]
    sets: Option<PathBuf>,
    /// Instance to predict for; every other instance is training data.
    #[arg(long)]
    query: Option<String>,
    /// binding or invariant.
    #[arg(long)]
    source: Option<LabelSource>,
    #[arg(long)]
    k: Option<usize>,
    /// Also run constraint generation from the predicted set.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    solve: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct BenchmarkArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// One or more of cg, b-learner, s-learner, full.
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<Method>>,
    /// Neighbour counts for the learners.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Accepted for uniformity; the benchmark draws no random numbers.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Reuse sets from `identify` instead of recomputing them.
    #[arg(long)]
    sets: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the aggregate summary.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct ReportArgs {
    #[arg(long = "in")]
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad or missing arguments; exits with the usage status.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn need<T>(v: Option<T>, flag: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| Usage(format!("missing required argument --{flag}")).into())
}

/// Fills every flag the user did not pass from the config object.
fn merge<T: Serialize + DeserializeOwned>(flags: T, config: Option<&Value>) -> anyhow::Result<T> {
    let Some(config) = config else {
        return Ok(flags);
    };
    let mut merged = config.clone();
    if let Value::Object(given) = serde_json::to_value(flags)? {
        let target = merged
            .as_object_mut()
            .expect("config checked to be an object");
        for (k, v) in given {
            if !v.is_null() {
                target.insert(k, v);
            }
        }
    }
    serde_json::from_value(merged).map_err(|e| Usage(format!("invalid config: {e}")).into())
}

fn load_config(path: &Path) -> anyhow::Result<Value> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| Usage(format!("invalid config: {e}")))?;
    if !v.is_object() {
        return Err(Usage("config must be a JSON object".into()).into());
    }
    Ok(v)
}

fn emit(out: Option<&Path>, v: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn find<'a>(dataset: &'a [MilpInstance], name: &str) -> anyhow::Result<(usize, &'a MilpInstance)> {
    dataset
        .iter()
        .enumerate()
        .find(|(_, i)| i.name == name)
        .ok_or_else(|| Error::UnknownInstance(name.to_string()).into())
}

fn pipeline_options(jobs: Option<usize>) -> anyhow::Result<PipelineOptions> {
    let jobs = jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(Usage("--jobs must be at least 1".into()).into());
    }
    Ok(PipelineOptions {
        jobs,
        ..PipelineOptions::default()
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = cli.config.as_deref().map(load_config).transpose()?;
    let config = config.as_ref();
    match cli.command {
        Command::GenToy(a) => {
            let a = merge(a, config)?;
            write_dataset(need(a.out, "out")?, &gen_toy())?;
        }
        Command::GenSynthetic(a) => {
            let a = merge(a, config)?;
            let cfg = SyntheticFamilyConfig {
                n: need(a.n, "n")?,
                m: need(a.m, "m")?,
                t: need(a.t, "T")?,
                seed: need(a.seed, "seed")?,
            };
            write_dataset(need(a.out, "out")?, &gen_synthetic(&cfg)?)?;
        }
        Command::GenUc(a) => {
            let a = merge(a, config)?;
            let cfg = UcFamilyConfig {
                n: need(a.n, "n")?,
                m: need(a.m, "m")?,
                t: need(a.t, "T")?,
                seed: need(a.seed, "seed")?,
            };
            write_dataset(need(a.out, "out")?, &gen_uc(&cfg)?)?;
        }
        Command::Solve(a) => {
            let a = merge(a, config)?;
            let dataset = read_dataset(need(a.dataset, "dataset")?)?;
            let (_, inst) = find(&dataset, &need(a.name, "name")?)?;
            let out = solve_milp(inst, &inst.full_set())?;
            let v = match out.status {
                SolveStatus::Optimal => json!({
                    "name": inst.name,
                    "status": "optimal",
                    "objective": out.objective,
                    "solution": out.solution,
                }),
                SolveStatus::Infeasible => return Err(Error::Infeasible(inst.name.clone()).into()),
                SolveStatus::Unbounded => {
                    return Err(Error::GenuinelyUnbounded(inst.name.clone()).into())
                }
            };
            emit(a.out.as_deref(), &v)?;
        }
        Command::Identify(a) => {
            let a = merge(a, config)?;
            let dataset = read_dataset(need(a.input, "in")?)?;
            let out = need(a.out, "out")?;
            let cache = OfflineCache::build(&dataset, &pipeline_options(a.jobs)?)?;
            write_sets(out, &cache.to_sets())?;
        }
        Command::Predict(a) => {
            let a = merge(a, config)?;
            let dataset = read_dataset(need(a.dataset, "dataset")?)?;
            let sets = read_sets(need(a.sets, "sets")?)?;
            let source = need(a.source, "source")?;
            let k = need(a.k, "k")?;
            let (t, inst) = find(&dataset, &need(a.query, "query")?)?;
            let mut labels = LabelMatrix::new(inst.name.clone(), FamilyLayout::of(inst), source);
            for (_, other) in dataset.iter().enumerate().filter(|&(u, _)| u != t) {
                let rec = sets
                    .iter()
                    .find(|r| r.name == other.name)
                    .ok_or_else(|| Error::UnknownInstance(other.name.clone()))?;
                let ids = match source {
                    LabelSource::Binding => &rec.binding,
                    LabelSource::Invariant => &rec.invariant,
                };
                let set = ConstraintSet::new(other, ids.iter().copied())?;
                labels.push(&other.name, &other.theta, &set)?;
            }
            let predicted = fit(labels, k)?.predict_set(&inst.name, &inst.theta)?;
            let mut v = json!({"name": inst.name, "predicted": predicted.ids()});
            if a.solve {
                let tr = constraint_generation(inst, &predicted)?;
                v["iterations"] = json!(tr.iterations);
                v["final_set"] = json!(tr.final_set.ids());
                v["objective"] = json!(tr.objective());
                v["solution"] = json!(tr.outcome.solution);
            }
            emit(a.out.as_deref(), &v)?;
        }
        Command::Benchmark(a) => {
            let a = merge(a, config)?;
            let dataset = read_dataset(need(a.dataset, "dataset")?)?;
            let methods = need(a.method, "method")?;
            let ks = a.k.unwrap_or_default();
            if methods.iter().any(|m| m.uses_k()) && ks.is_empty() {
                return Err(Usage("learner methods need --k".into()).into());
            }
            let out = need(a.out, "out")?;
            let opts = pipeline_options(a.jobs)?;
            let cache = match &a.sets {
                Some(p) => OfflineCache::from_sets(&dataset, &read_sets(p)?, &opts)?,
                None => OfflineCache::build(&dataset, &opts)?,
            };
            let mut runs = Vec::new();
            for m in methods {
                runs.extend(run_benchmark(&dataset, &cache, m, &ks, &opts)?);
            }
            write_metrics_csv(&out, &runs)?;
            let summary = aggregate(&runs);
            for g in &summary.groups {
                eprintln!(
                    "{} k={}: C [{}, {}] I [{}, {}] P1 {:.1}% Delta {:.1}%",
                    g.method,
                    g.k.map_or("-".into(), |k| k.to_string()),
                    g.c_min,
                    g.c_max,
                    g.i_min,
                    g.i_max,
                    g.p1,
                    g.delta
                );
            }
            if let Some(p) = &a.summary {
                emit(Some(p), &serde_json::to_value(&summary)?)?;
            }
        }
        Command::Report(a) => {
            let a = merge(a, config)?;
            let runs = read_metrics_csv(need(a.input, "in")?)?;
            if runs.is_empty() {
                return Err(Error::Parse("metrics file has no runs".into()).into());
            }
            emit(a.out.as_deref(), &serde_json::to_value(aggregate(&runs))?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            eprintln!("try `warmcg --help`");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn version_names_the_format() {
        let expect = format!("(format {})", warmcg_core::io::FORMAT_VERSION);
        assert!(super::VERSION.ends_with(&expect));
    }
}
