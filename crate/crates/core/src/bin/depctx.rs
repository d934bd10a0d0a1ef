use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use depctx_core::eval::{
    convert_simlex, evaluate, parse_toefl, split_folds, toefl_evaluate, ClassFilter, Fold,
    WordPairDataset,
};
use depctx_core::pipeline::{self, report_tsv, summary_tsv, ExperimentConfig, PipelineError};
use depctx_core::search::{Configuration, SearchStrategy};
use depctx_core::sgns::load_embeddings;

/// Dependency-context embeddings and context configuration search.
#[derive(Parser)]
#[command(name = "depctx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract context bags from the configured corpus (cached).
    Extract {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Train embeddings for one configuration, e.g. `amod+conj`.
    Train {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        bags: String,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the context vectors.
        #[arg(long)]
        contexts: bool,
    },
    /// Spearman correlation of word vectors with a similarity dataset.
    Eval {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// A, V, N or ALL.
        #[arg(long, default_value = "ALL")]
        class: ClassFilter,
        /// Score only one fold (a or b) of the split.
        #[arg(long)]
        fold: Option<Fold>,
        #[arg(long, default_value_t = 1)]
        fold_seed: u64,
    },
    /// Run the configuration search and write report tables.
    Search {
        #[arg(short, long)]
        config: PathBuf,
        /// Override the configured strategy (alg1, greedy, exhaustive).
        #[arg(long)]
        strategy: Option<SearchStrategy>,
    },
    /// Print the table of all cached scores for an experiment.
    Report {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Multiple-choice synonym accuracy.
    Toefl {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        questions: PathBuf,
    },
    /// Convert a SimLex-999 distribution file to the dataset format.
    ImportSimlex { input: PathBuf, output: PathBuf },
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_usage() {
            Failure::Usage(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, Failure> {
    Ok(ExperimentConfig::load(path)?)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Extract { config } => {
            let config = load_config(&config)?;
            let (store, hit) = pipeline::prepare_bags(&config)?;
            println!("{}{}", store.dir().display(), if hit { " (cached)" } else { "" });
            for (bag, n) in &store.manifest().counts {
                println!("{}\t{}", bag, n);
            }
        }
        Command::Train {
            config,
            bags,
            out,
            contexts,
        } => {
            let config = load_config(&config)?;
            let configuration: Configuration = bags.parse().map_err(usage)?;
            let report = pipeline::train_configuration(config, &configuration, &out, contexts)?;
            println!(
                "trained {} on {} pairs in {:.2?}; final epoch loss {:.4}",
                configuration,
                report.input_pairs,
                report.wall_time,
                report.epoch_losses.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Eval {
            vectors,
            dataset,
            class,
            fold,
            fold_seed,
        } => {
            let embeddings = load_embeddings(&vectors)
                .with_context(|| format!("reading {}", vectors.display()))?;
            let data = WordPairDataset::load(&dataset)
                .with_context(|| format!("reading {}", dataset.display()))
                .map_err(usage)?;
            let subset = match fold {
                Some(f) => Some(split_folds(&data, class, fold_seed).map_err(usage)?.fold(f).to_vec()),
                None => None,
            };
            let r = evaluate(&embeddings, &data, class, subset.as_deref())
                .context("evaluation failed")?;
            println!(
                "rho\t{:.4}\nscored\t{}/{}\ncoverage\t{:.3}",
                r.rho,
                r.n_scored,
                r.n_total,
                r.coverage()
            );
        }
        Command::Search { config, strategy } => {
            let mut config = load_config(&config)?;
            if let Some(s) = strategy {
                config.strategy = s;
            }
            let out = pipeline::search(config)?;
            print!("{}", summary_tsv(&out.summary));
            eprintln!("outputs written to {}", out.output_dir.display());
        }
        Command::Report { config } => {
            let rows = pipeline::report(load_config(&config)?)?;
            print!("{}", report_tsv(&rows));
        }
        Command::Toefl { vectors, questions } => {
            let embeddings = load_embeddings(&vectors)
                .with_context(|| format!("reading {}", vectors.display()))?;
            let text = fs::read_to_string(&questions)
                .with_context(|| format!("reading {}", questions.display()))
                .map_err(usage)?;
            let qs = parse_toefl(&text)
                .with_context(|| format!("parsing {}", questions.display()))
                .map_err(usage)?;
            let scores = toefl_evaluate(&embeddings, &qs);
            let mut total = (0, 0);
            let mut rows = BTreeMap::new();
            for (class, s) in scores {
                let name = class.map_or("-".to_owned(), |c| c.to_string());
                rows.insert(name, s);
                total.0 += s.correct;
                total.1 += s.total;
            }
            println!("class\tcorrect\ttotal");
            for (name, s) in rows {
                println!("{}\t{}\t{}", name, s.correct, s.total);
            }
            println!("all\t{}\t{}", total.0, total.1);
        }
        Command::ImportSimlex { input, output } => {
            let text = fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))
                .map_err(usage)?;
            let data = convert_simlex(&text).map_err(usage)?;
            fs::write(&output, data.to_tsv())
                .with_context(|| format!("writing {}", output.display()))?;
            println!("wrote {} pairs to {}", data.entries.len(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}
