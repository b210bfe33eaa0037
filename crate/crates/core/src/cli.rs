//! The `explore-alloc` command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::allocator::{adapt_low_fraction, allocate, GrowthStats};
use crate::config::{RunConfig, RunManifest};
use crate::domain::{BucketSchema, ItemRecord};
use crate::io::{self, PlanSummary};
use crate::metrics::{evaluate, pr_metrics, uniform_allocate, ScoredLabel};
use crate::model::{predict, train, DiscoverabilityModel, TrainingExample};
use crate::sim::{build_training_set, generate_corpus, run_matrix, serve_round, Comparison, Strategy};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "explore-alloc", version, about = "Exploration traffic allocation for cold-start items")]
pub struct Cli {
    /// TOML file with [sim], [allocation], [train] and [buckets] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for simulation and training.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus, its latent truth and bootstrap training data.
    Simulate(SimulateArgs),
    /// Fit a discoverability model on a training set.
    Train(TrainArgs),
    /// Allocate exploration traffic over a corpus with a trained model.
    Allocate(AllocateArgs),
    /// Compare strategies over simulated rounds and seeds.
    Experiment(ExperimentArgs),
    /// Score a model on labelled examples.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Items per round.
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training examples, one JSON object per line.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub min_bucket_support: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Total impression budget T.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub max_cost: Option<f64>,
    #[arg(long)]
    pub low_fraction: Option<f64>,
    /// Relative growth in new items since the last period.
    #[arg(long, requires = "traffic_growth")]
    pub item_growth: Option<f64>,
    /// Relative growth in platform traffic since the last period.
    #[arg(long, requires = "item_growth")]
    pub traffic_growth: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Seed list: `1..20` (inclusive), `1,4,9` or a single seed. Defaults to the root seed.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "uniform,model,oracle")]
    pub strategies: Vec<Strategy>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

/// Parses `1..20`, `1,4,9` or `7`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list {text:?}"));
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

struct Run {
    command: &'static str,
    config: RunConfig,
    out_dir: PathBuf,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
    started: Instant,
}

impl Run {
    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), io::sha256_file(path)?);
        Ok(())
    }

    fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    fn finish(self, argv: Vec<String>) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            argv,
            seed: self.config.sim.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            duration_ms: self.started.elapsed().as_millis() as u64,
        };
        io::write_json(&self.out_dir.join("manifest.json"), &manifest)
    }
}

/// Runs one parsed invocation; `argv` is recorded in the manifest.
pub fn execute(cli: Cli, argv: Vec<String>) -> Result<()> {
    let started = Instant::now();
    let file = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut config = file.with_seed(cli.seed);
    let command = match &cli.command {
        Command::Simulate(a) => {
            set(&mut config.sim.items_per_round, a.items);
            set(&mut config.sim.rounds, a.rounds);
            "simulate"
        }
        Command::Train(a) => {
            set(&mut config.train.learning_rate, a.learning_rate);
            set(&mut config.train.epochs, a.epochs);
            if a.batch_size.is_some() {
                config.train.batch_size = a.batch_size;
            }
            set(&mut config.train.min_bucket_support, a.min_bucket_support);
            "train"
        }
        Command::Allocate(a) => {
            set(&mut config.allocation.total_budget, a.budget);
            set(&mut config.allocation.max_cost, a.max_cost);
            set(&mut config.allocation.low_region_fraction, a.low_fraction);
            "allocate"
        }
        Command::Experiment(a) => {
            set(&mut config.sim.items_per_round, a.items);
            set(&mut config.sim.rounds, a.rounds);
            "experiment"
        }
        Command::Eval(_) => "eval",
    };
    config.validate()?;

    let mut run = Run { command, config, out_dir: cli.out_dir, inputs: BTreeMap::new(), outputs: Vec::new(), started };
    match &cli.command {
        Command::Simulate(_) => simulate(&mut run)?,
        Command::Train(a) => train_cmd(&mut run, a)?,
        Command::Allocate(a) => allocate_cmd(&mut run, a)?,
        Command::Experiment(a) => experiment(&mut run, a)?,
        Command::Eval(a) => eval(&mut run, a)?,
    }
    run.finish(argv)
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn schema(config: &RunConfig) -> Result<BucketSchema> {
    BucketSchema::new(config.buckets.edges.clone(), config.buckets.representative.clone())
}

fn simulate(run: &mut Run) -> Result<()> {
    let c = run.config.clone();
    let schema = schema(&c)?;
    let mut corpus = Vec::new();
    let mut latents = Vec::new();
    let mut bootstrap = Vec::new();
    for round in 0..c.sim.rounds {
        let (l, r) = generate_corpus(&c.sim, round)?;
        if round == 0 {
            let plan = uniform_allocate(&r, &c.allocation, &c.allocation.linear_cost());
            let observations = serve_round(&l, &plan, &c.sim, round)?;
            bootstrap = build_training_set(&observations, &r, &schema)?;
        }
        latents.extend(l);
        corpus.extend(r);
    }
    io::write_jsonl(&run.output("corpus.jsonl"), &corpus)?;
    io::write_jsonl(&run.output("latents.jsonl"), &latents)?;
    io::write_jsonl(&run.output("training.jsonl"), &bootstrap)?;
    println!("simulated {} items over {} rounds; {} bootstrap examples", corpus.len(), c.sim.rounds, bootstrap.len());
    Ok(())
}

fn train_cmd(run: &mut Run, args: &TrainArgs) -> Result<()> {
    run.input(&args.data)?;
    let examples: Vec<TrainingExample> = io::read_jsonl(&args.data)?;
    let model = train(&examples, &schema(&run.config)?, &run.config.train)?;
    let scored = score(&model, &examples)?;
    let accuracy = pr_metrics(&scored, 0.5)?.accuracy;
    io::write_json(&run.output("model.json"), &model)?;
    let final_loss = model.training_meta.as_ref().map_or(f64::NAN, |m| m.final_loss);
    println!("trained on {} examples: final loss {final_loss:.6}, training accuracy {accuracy:.4}", examples.len());
    Ok(())
}

fn allocate_cmd(run: &mut Run, args: &AllocateArgs) -> Result<()> {
    run.input(&args.corpus)?;
    run.input(&args.model)?;
    let corpus: Vec<ItemRecord> = io::read_jsonl(&args.corpus)?;
    let model: DiscoverabilityModel = io::read_json(&args.model)?;
    let c = &run.config.allocation;
    let growth = match (args.item_growth, args.traffic_growth) {
        (Some(i), Some(t)) => Some(GrowthStats::new(i, t)?),
        _ => None,
    };
    let plan = allocate(&corpus, &model, c, &schema(&run.config)?, growth)?;
    let adapted = growth
        .map(|g| adapt_low_fraction(c.low_region_fraction, g, (c.low_fraction_min, c.low_fraction_max)))
        .transpose()?;
    let summary = PlanSummary::new(&plan, c, adapted);
    io::write_plan_csv(&run.output("plan.csv"), &plan)?;
    io::write_json(&run.output("plan.json"), &summary)?;
    println!(
        "funded {} of {} items; allocated {} of {} ({:.1}%), cost {:.2} of {:.2}",
        summary.funded,
        summary.items,
        summary.total_allocated,
        summary.total_budget,
        100.0 * summary.budget_utilization,
        summary.total_cost,
        summary.max_cost
    );
    Ok(())
}

fn experiment(run: &mut Run, args: &ExperimentArgs) -> Result<()> {
    let c = &run.config;
    let seeds = match &args.seeds {
        Some(text) => parse_seeds(text)?,
        None => vec![c.sim.seed],
    };
    let mut strategies = args.strategies.clone();
    strategies.dedup();
    let reports = run_matrix(&c.sim, &c.allocation, &schema(c)?, &c.train, &seeds, &strategies)?;
    let comparison = Comparison::new(&seeds, &reports);
    for r in &reports {
        let stem = format!("{}_seed{}", r.strategy.as_str(), r.seed);
        io::write_json(&run.output(&format!("{stem}.json")), r)?;
        io::write_item_rows_csv(&run.output(&format!("{stem}_items.csv")), &r.rows)?;
    }
    io::write_json(&run.output("comparison.json"), &comparison)?;

    println!("{:<10} {:>14}", "strategy", "mean found");
    for s in &comparison.strategies {
        println!("{:<10} {:>14.2}", s.strategy.as_str(), s.mean_discovered);
    }
    if let Some(n) = comparison.ordered_seeds {
        println!("uniform <= model <= oracle in {n} of {} seeds", seeds.len());
    }
    if let Some(g) = comparison.model_over_uniform {
        println!("model over uniform: {:+.1}%", 100.0 * g);
    }
    Ok(())
}

fn eval(run: &mut Run, args: &EvalArgs) -> Result<()> {
    run.input(&args.data)?;
    run.input(&args.model)?;
    let examples: Vec<TrainingExample> = io::read_jsonl(&args.data)?;
    let model: DiscoverabilityModel = io::read_json(&args.model)?;
    let report = evaluate(&score(&model, &examples)?, args.threshold)?;
    io::write_json(&run.output("metrics.json"), &report)?;
    io::write_pr_curve_csv(&run.output("pr_curve.csv"), &report.pr_curve)?;
    println!("auc {:.4}, pr-auc {:.4}, accuracy {:.4}", report.auc, report.pr_auc, report.overall.accuracy);
    Ok(())
}

fn score(model: &DiscoverabilityModel, examples: &[TrainingExample]) -> Result<Vec<ScoredLabel>> {
    examples
        .iter()
        .map(|e| {
            Ok(ScoredLabel { score: predict(model, &e.features, e.bucket)?, label: e.label == 1, bucket: e.bucket })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("3, 1,2").unwrap(), vec![3, 1, 2]);
        for bad in ["", "4..1", "a", "1,,2", "1..x"] {
            assert!(parse_seeds(bad).unwrap_err().is_config(), "{bad}");
        }
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "explore-alloc",
            "experiment",
            "--seeds",
            "1..3",
            "--strategies",
            "uniform,model-based",
            "--seed",
            "4",
        ])
        .unwrap();
        assert_eq!(cli.seed, Some(4));
        match cli.command {
            Command::Experiment(a) => assert_eq!(a.strategies, vec![Strategy::Uniform, Strategy::Model]),
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from([
            "explore-alloc",
            "allocate",
            "--corpus",
            "c",
            "--model",
            "m",
            "--item-growth",
            "1"
        ])
        .is_err());
        assert!(Cli::try_parse_from(["explore-alloc", "allocate", "--truth", "t"]).is_err());
    }
}
