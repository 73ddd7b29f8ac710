use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pdalign::charspace::DistanceTable;
use pdalign::cli::{cmd_align, cmd_bench, cmd_discover, cmd_gen, load_corpus, CorpusSpec, Engine};
use pdalign::discovery::{DiscoveryOpts, Thresholds};
use pdalign::engine::RunMetrics;
use pdalign::synth::{GenConfig, PlantSpec};

#[derive(Parser)]
#[command(
    name = "pdalign",
    version,
    about = "Align identifier strings into paradigms and discover column-to-attribute rules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CorpusArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Column holding the identifier strings (default: first column).
    #[arg(long)]
    id_column: Option<String>,
    /// TOML distance table config; defaults to the built-in table over
    /// printable ASCII.
    #[arg(long)]
    distance_config: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Write the key=value metrics report to this file instead of stderr.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Seed string length.
    #[arg(long, default_value_t = 20)]
    length: usize,
    /// Number of strings to generate.
    #[arg(long, default_value_t = 5000)]
    count: usize,
    /// Number of clusters.
    #[arg(long, default_value_t = 50)]
    clusters: usize,
    /// Per-character mutation probability.
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Per-character deletion probability (default: sigma / 5).
    #[arg(long)]
    delete_prob: Option<f64>,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Plant a dependency at this 1-based column.
    #[arg(long, requires = "plant_attribute", requires = "plant_map")]
    plant_column: Option<usize>,
    /// Attribute name for the planted dependency.
    #[arg(long)]
    plant_attribute: Option<String>,
    /// Planted key map, e.g. "4=14in,5=15in".
    #[arg(long)]
    plant_map: Option<String>,
}

impl GenArgs {
    fn to_config(&self) -> Result<GenConfig, pdalign::Error> {
        let plant = match (&self.plant_column, &self.plant_attribute, &self.plant_map) {
            (Some(column), Some(attribute), Some(map)) => {
                let mut value_map = std::collections::BTreeMap::new();
                for entry in map.split(',') {
                    let (key, value) = entry.split_once('=').ok_or_else(|| {
                        pdalign::Error::Config(format!(
                            "plant map entry {entry:?} is not key=value"
                        ))
                    })?;
                    let mut chars = key.chars();
                    let key = match (chars.next(), chars.next()) {
                        (Some(c), None) => c,
                        _ => {
                            return Err(pdalign::Error::Config(format!(
                                "plant key {key:?} must be a single character"
                            )))
                        }
                    };
                    value_map.insert(key, value.to_string());
                }
                Some(PlantSpec {
                    column: *column,
                    attribute: attribute.clone(),
                    value_map,
                })
            }
            _ => None,
        };
        Ok(GenConfig {
            length: self.length,
            count: self.count,
            clusters: self.clusters,
            sigma: self.sigma,
            delete_prob: self.delete_prob.unwrap_or(self.sigma / 5.0),
            rng_seed: self.seed,
            plant,
            ..GenConfig::default()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Align a corpus and print the merge tree dump.
    Align {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "baseline")]
        engine: Engine,
        /// Record and print the commit trace.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        metrics: MetricsArgs,
    },
    /// Align a corpus and list the passing dependency rules.
    Discover {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value = "pruning+")]
        engine: Engine,
        #[arg(long, default_value_t = 10)]
        support_min: usize,
        #[arg(long, default_value_t = 0.9)]
        confidence_min: f64,
        #[arg(long, default_value_t = 5)]
        diversity_min: usize,
        #[arg(long, default_value_t = 5)]
        inner_support_min: usize,
        /// Cross-check the child-based pruning against exhaustive evaluation.
        #[arg(long)]
        validate_prune2: bool,
        #[command(flatten)]
        metrics: MetricsArgs,
    },
    /// Generate a synthetic corpus CSV on stdout.
    Gen {
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Generate corpora and tabulate engine counters.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        /// Corpus sizes to sweep (overrides --count).
        #[arg(long, value_delimiter = ',')]
        counts: Vec<usize>,
        /// Engines to compare.
        #[arg(long, value_delimiter = ',', default_value = "baseline,pruning+")]
        engines: Vec<Engine>,
        /// Also print the rows as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn distance_table(path: &Option<PathBuf>) -> Result<DistanceTable, pdalign::Error> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            DistanceTable::from_config_str(&text)
        }
        None => DistanceTable::default_table(DistanceTable::printable_ascii()),
    }
}

fn emit_metrics(metrics: &RunMetrics, args: &MetricsArgs) -> Result<(), pdalign::Error> {
    match &args.metrics_out {
        Some(path) => std::fs::write(path, metrics.render())?,
        None => eprint!("{}", metrics.render()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), pdalign::Error> {
    match cli.command {
        Command::Align {
            corpus,
            engine,
            trace,
            metrics,
        } => {
            let table = distance_table(&corpus.distance_config)?;
            let spec = CorpusSpec {
                id_column: corpus.id_column.clone(),
                ..CorpusSpec::new(&corpus.input)
            };
            let loaded = load_corpus(&spec, &table)?;
            for warning in &loaded.warnings {
                eprintln!("warning: {warning}");
            }
            let result = cmd_align(&loaded, engine, &table, trace)?;
            print!("{}", result.dump);
            if trace {
                for commit in &result.output.trace {
                    eprintln!(
                        "commit {} + {} size {} (refines {})",
                        commit.left, commit.right, commit.size, commit.refine_iterations
                    );
                }
            }
            emit_metrics(&result.output.metrics, &metrics)
        }
        Command::Discover {
            corpus,
            engine,
            support_min,
            confidence_min,
            diversity_min,
            inner_support_min,
            validate_prune2,
            metrics,
        } => {
            let table = distance_table(&corpus.distance_config)?;
            let spec = CorpusSpec {
                id_column: corpus.id_column.clone(),
                ..CorpusSpec::new(&corpus.input)
            };
            let loaded = load_corpus(&spec, &table)?;
            for warning in &loaded.warnings {
                eprintln!("warning: {warning}");
            }
            let thresholds = Thresholds {
                support_min,
                confidence_min,
                diversity_min,
                inner_support_min,
            };
            let opts = DiscoveryOpts {
                validate_prune2,
                ..DiscoveryOpts::default()
            };
            let result = cmd_discover(&loaded, engine, &table, &thresholds, &opts)?;
            if !result.rules_text.is_empty() {
                println!("{}", result.rules_text);
            }
            println!("{}", serde_json::to_string(&result.dependencies)?);
            for finding in &result.findings {
                eprintln!(
                    "finding: pruned cell (node {}, column {}, {}) passes confidence {:.4}",
                    finding.paradigm, finding.column, finding.attribute, finding.confidence
                );
            }
            emit_metrics(&result.metrics, &metrics)
        }
        Command::Gen { gen } => {
            let cfg = gen.to_config()?;
            print!("{}", cmd_gen(&cfg)?);
            Ok(())
        }
        Command::Bench {
            gen,
            counts,
            engines,
            json,
        } => {
            let base = gen.to_config()?;
            let counts = if counts.is_empty() {
                vec![base.count]
            } else {
                counts
            };
            let configs: Vec<GenConfig> = counts
                .into_iter()
                .map(|count| GenConfig {
                    count,
                    ..base.clone()
                })
                .collect();
            let table = distance_table(&None)?;
            let result = cmd_bench(&configs, &engines, &table)?;
            print!("{}", result.table);
            if json {
                println!("{}", serde_json::to_string(&result.rows)?);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
