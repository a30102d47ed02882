use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use phasescope::analysis::{RegressionMode, DEFAULT_STABILITY_EPS};
use phasescope::dataset::SplitSizes;
use phasescope::pipeline::commands::{self, AnalyzeArgs, BuildDatasetArgs, ScoreHeuristicsArgs};
use phasescope::pipeline::UsageError;
use phasescope::{BackoffConfig, WeightingScheme};

#[derive(Parser)]
#[command(name = "phasescope", version, about = "Heuristic scores and checkpoint analysis for language-model predictions")]
struct Cli {
    /// Worker threads (PHASESCOPE_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weighting {
    Uniform,
    Sgpt,
    Both,
}

impl Weighting {
    fn schemes(self) -> Vec<WeightingScheme> {
        match self {
            Weighting::Uniform => vec![WeightingScheme::Uniform],
            Weighting::Sgpt => vec![WeightingScheme::Sgpt],
            Weighting::Both => vec![WeightingScheme::Uniform, WeightingScheme::Sgpt],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Zscored,
    BitsDistance,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize a corpus (one document per line) and write a suffix-array index.
    BuildIndex {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        lowercase: bool,
    },
    /// Print the number of occurrences of a token sequence.
    Count {
        index: PathBuf,
        #[arg(required = true, num_args = 1..)]
        words: Vec<String>,
        #[arg(long)]
        lowercase: bool,
    },
    /// Filter sentences, sample critical words and write a split dataset.
    BuildDataset {
        sentences: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Index of a training corpus to decontaminate against (repeatable).
        #[arg(long = "decontaminate")]
        indices: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        train: usize,
        #[arg(long, default_value_t = 50_000)]
        validation: usize,
        #[arg(long, default_value_t = 50_000)]
        test: usize,
        #[arg(long, default_value_t = 6)]
        min_words: usize,
        /// Skip the single-initial-capital requirement.
        #[arg(long)]
        no_capitalization: bool,
        /// Words (whitespace separated) that exclude a sentence.
        #[arg(long)]
        blocklist: Option<PathBuf>,
        /// Every word must appear in each of these vocabulary files.
        #[arg(long = "vocabulary")]
        vocabularies: Vec<PathBuf>,
        #[arg(long)]
        lowercase: bool,
    },
    /// Compute n-gram and similarity heuristics for every dataset item.
    ScoreHeuristics {
        dataset: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// LABEL=PATH of a corpus index (repeatable).
        #[arg(long = "ngram-source", value_parser = labelled)]
        ngram_sources: Vec<(String, PathBuf)>,
        /// LABEL=PATH of a word-embedding text file (repeatable).
        #[arg(long = "embeddings", value_parser = labelled)]
        embeddings: Vec<(String, PathBuf)>,
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        orders: Vec<usize>,
        #[arg(long, value_enum, default_value_t = Weighting::Both)]
        weighting: Weighting,
        /// Divide unigram counts by the number of word tokens instead of all tokens.
        #[arg(long)]
        word_level_unigram: bool,
    },
    /// Validate and merge per-checkpoint model log-probability files.
    IngestScores {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        /// Reject rows whose item_id is not in this dataset.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Correlations, regressions and phase boundaries across checkpoints.
    Analyze {
        #[arg(long, required = true)]
        scores: Vec<PathBuf>,
        #[arg(long)]
        heuristics: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Zscored)]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_STABILITY_EPS)]
        stability_eps: f64,
        #[arg(long, value_enum, default_value_t = Weighting::Both)]
        weighting: Weighting,
    },
}

fn labelled(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((label, path)) if !label.is_empty() && !path.is_empty() => Ok((label.to_owned(), PathBuf::from(path))),
        _ => Err(format!("expected LABEL=PATH, got {s:?}")),
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("PHASESCOPE_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| UsageError(format!("PHASESCOPE_THREADS must be a positive integer, got {v:?}")))?;
            Ok(Some(n))
        }
        Err(_) => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = thread_count(cli.threads)? {
        if n == 0 {
            return Err(UsageError("thread count must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring thread pool")?;
    }
    match cli.command {
        Command::BuildIndex { corpus, out, lowercase } => {
            let index = commands::build_index(&corpus, &out, lowercase)?;
            eprintln!(
                "indexed {} tokens, {} types -> {}",
                index.total_tokens(),
                index.vocabulary().len(),
                out.display()
            );
        }
        Command::Count { index, words, lowercase } => {
            println!("{}", commands::count(&index, &words, lowercase)?);
        }
        Command::BuildDataset {
            sentences,
            out,
            indices,
            seed,
            train,
            validation,
            test,
            min_words,
            no_capitalization,
            blocklist,
            vocabularies,
            lowercase,
        } => {
            let args = BuildDatasetArgs {
                sentences,
                indices,
                out,
                seed,
                sizes: SplitSizes { train, validation, test },
                min_words,
                require_capitalization: !no_capitalization,
                blocklist,
                vocabularies,
                lowercase,
            };
            let (dataset, report) = commands::build_dataset_cmd(&args)?;
            eprintln!("wrote {} items to {}", dataset.items.len(), args.out.display());
            for (reason, n) in &dataset.metadata.rejections {
                eprintln!("  rejected {reason}: {n}");
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
        Command::ScoreHeuristics {
            dataset,
            out,
            ngram_sources,
            embeddings,
            alpha,
            orders,
            weighting,
            word_level_unigram,
        } => {
            let max_n = orders.iter().copied().max().unwrap_or(1);
            let args = ScoreHeuristicsArgs {
                dataset,
                ngram_sources,
                embeddings,
                orders,
                schemes: weighting.schemes(),
                backoff: BackoffConfig {
                    alpha,
                    max_n,
                    replicate_paper_unigram: !word_level_unigram,
                },
                out,
            };
            if let Err(e) = args.backoff.validate() {
                return Err(UsageError(e.to_string()).into());
            }
            let (table, report) = commands::score_heuristics_cmd(&args)?;
            eprintln!("scored {} items -> {}", table.len(), args.out.display());
            if !report.ngram_errors.is_empty() {
                eprintln!("warning: {} n-gram scoring errors", report.ngram_errors.len());
            }
            for (label, n) in report.critical_missing.iter().filter(|(_, n)| *n > 0) {
                eprintln!("warning: {n} critical words have no vector in {label}");
            }
        }
        Command::IngestScores { inputs, out, dataset } => {
            let (store, report) = commands::ingest_scores_cmd(&inputs, dataset.as_deref(), &out)?;
            eprintln!("ingested {} of {} rows -> {}", store.len(), report.rows_read, out.display());
            if !report.non_finite.is_empty() {
                eprintln!("warning: {} rows with non-finite logprob dropped", report.non_finite.len());
            }
            if report.unknown_items > 0 {
                eprintln!("warning: {} rows with unknown item_id dropped", report.unknown_items);
            }
        }
        Command::Analyze {
            scores,
            heuristics,
            dataset,
            out,
            mode,
            stability_eps,
            weighting,
        } => {
            let args = AnalyzeArgs {
                scores,
                heuristics,
                dataset,
                out_dir: out,
                mode: match mode {
                    Mode::Zscored => RegressionMode::Standardized,
                    Mode::BitsDistance => RegressionMode::BitsDistance,
                },
                stability_eps,
                schemes: weighting.schemes(),
            };
            let summary = commands::analyze_cmd(&args)?;
            eprintln!(
                "analyzed {} score records over {} checkpoints, {} conditions, {} errors -> {}",
                summary.score_records,
                summary.checkpoints,
                summary.conditions.len(),
                summary.errors,
                args.out_dir.display()
            );
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
