use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use lexcorpus::chunk::{chunk_document, Chunk, ChunkRecord, DEFAULT_MAX_TOKENS};
use lexcorpus::corpus::{compute_stats, ingest_stream, reservoir_indices, CorpusStats, RawDocument};
use lexcorpus::eval::{build_report, f1_scores, read_curves_csv, read_predictions, Averaging, SortKey};
use lexcorpus::io::{create_output, open_input, read_jsonl, write_jsonl};
use lexcorpus::lang::{
    filter_spanish, profiles_from_seed_dir, read_profiles, NgramIdentifier, DEFAULT_TOP_K,
};
use lexcorpus::mask::{mask_chunk, MaskingConfig, MlmExample};
use lexcorpus::schedule::{emit_schedule, write_schedule_csv, TrainConfig};
use lexcorpus::{clean_text, run_pipeline, CleanPolicy, Error, PipelineManifest, Result};
use lexcorpus::{Tokenizer, WordPieceTokenizer};

/// Corpus preparation and benchmark scoring for legal-domain pretraining.
#[derive(Debug, Parser)]
#[command(name = "lexcorpus", version)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Abort on the first malformed input line instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,

    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Io {
    /// Input file, `-` for stdin.
    #[arg(short, long, default_value = "-")]
    input: PathBuf,

    /// Output file, `-` for stdout.
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate and normalize line-delimited documents.
    Ingest(Io),

    /// Corpus statistics as JSON.
    Stats {
        #[command(flatten)]
        io: Io,
        /// Also count tokens with the bundled or given vocabulary.
        #[arg(long)]
        tokens: bool,
        #[arg(long)]
        tokenizer: Option<PathBuf>,
    },

    /// Build language profiles from a directory of seed texts.
    BuildProfiles {
        #[arg(long)]
        seeds: PathBuf,
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOP_K)]
        top_k: usize,
    },

    /// Keep confidently Spanish documents.
    FilterLang {
        #[command(flatten)]
        io: Io,
        /// Where rejected documents go, with their verdicts.
        #[arg(long)]
        rejected: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
        /// Profile file from `build-profiles`; bundled profiles otherwise.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },

    /// Normalize document text.
    Clean {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        keep_spaces: bool,
        #[arg(long)]
        keep_newlines: bool,
        #[arg(long)]
        keep_control: bool,
        #[arg(long)]
        no_trim: bool,
    },

    /// Pack documents into token-budgeted chunks.
    Chunk {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
        max_tokens: usize,
        /// Vocabulary file, one token per line.
        #[arg(long)]
        tokenizer: Option<PathBuf>,
    },

    /// Whole-word masking over chunk records.
    Mask {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        tokenizer: Option<PathBuf>,
        #[arg(long, default_value_t = 0.15)]
        mask_rate: f64,
        #[arg(long, default_value_t = 0.8)]
        p_mask: f64,
        #[arg(long, default_value_t = 0.1)]
        p_random: f64,
        #[arg(long, default_value_t = 0.1)]
        p_keep: f64,
    },

    /// Hold out a uniform sample of documents.
    SplitValidation {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short = 'n', long)]
        count: usize,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        validation: PathBuf,
    },

    /// Learning-rate schedule as CSV.
    LrCurve {
        #[arg(long)]
        total_steps: u64,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr_peak: f64,
        #[arg(long, default_value_t = 0.08)]
        warmup_frac: f64,
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
    },

    /// Score predictions or summarize learning curves.
    Eval(EvalArgs),

    /// Run a manifest end to end.
    Run {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Line-delimited prediction records.
    #[arg(long, required_unless_present = "curves", conflicts_with = "curves")]
    predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AveragingArg::Micro)]
    averaging: AveragingArg,
    /// Label universe, one label per line.
    #[arg(long)]
    labels: Option<PathBuf>,

    /// CSV of model,epoch,f1 rows.
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long, value_enum)]
    sort_by: Option<SortArg>,
    #[arg(long, default_value = "")]
    dataset: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(short, long, default_value = "-")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AveragingArg {
    Micro,
    Macro,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SortArg {
    #[value(name = "max_f1")]
    MaxF1,
    #[value(name = "auc")]
    Auc,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

fn load_tokenizer(path: Option<&Path>) -> Result<Box<dyn Tokenizer>> {
    Ok(match path {
        Some(p) => Box::new(WordPieceTokenizer::from_file(p)?),
        None => Box::new(WordPieceTokenizer::bundled().clone()),
    })
}

fn read_documents(path: &Path, strict: bool) -> Result<Vec<RawDocument>> {
    let mut reader = ingest_stream(open_input(path)?, strict);
    let docs = reader.by_ref().collect::<Result<Vec<_>>>()?;
    if reader.skipped() > 0 {
        log::warn!(
            "skipped {} malformed line(s), first at line {}",
            reader.skipped(),
            reader.skipped_lines()[0]
        );
    }
    Ok(docs)
}

fn split_validation_streaming(
    input: &Path,
    n: usize,
    seed: u64,
    strict: bool,
    train: &Path,
    validation: &Path,
) -> Result<(usize, usize)> {
    let picked = {
        let mut reader = ingest_stream(open_input(input)?, strict);
        let docs = reader.by_ref().map(|d| d.map(|_| ()));
        let mut first_error = None;
        let ok = docs.map_while(|d| match d {
            Ok(()) => Some(()),
            Err(e) => {
                first_error = Some(e);
                None
            }
        });
        let picked = reservoir_indices(ok, n, seed);
        if let Some(e) = first_error {
            return Err(e);
        }
        picked?
    };
    let mut train_out = create_output(train)?;
    let mut val_out = create_output(validation)?;
    let mut next = picked.iter().peekable();
    let (mut n_train, mut n_val) = (0, 0);
    for (i, doc) in ingest_stream(open_input(input)?, strict).enumerate() {
        let doc = doc?;
        let out: &mut dyn Write = if next.peek() == Some(&&i) {
            next.next();
            n_val += 1;
            &mut val_out
        } else {
            n_train += 1;
            &mut train_out
        };
        serde_json::to_writer(&mut *out, &doc)?;
        out.write_all(b"\n")?;
    }
    train_out.flush()?;
    val_out.flush()?;
    Ok((n_train, n_val))
}

fn read_labels(path: &Path) -> Result<BTreeSet<String>> {
    let mut labels = BTreeSet::new();
    for line in open_input(path)?.lines() {
        let line = line?;
        let label = line.trim();
        if !label.is_empty() {
            labels.insert(label.to_string());
        }
    }
    Ok(labels)
}

fn eval(args: &EvalArgs) -> Result<()> {
    let mut out = create_output(&args.output)?;
    if let Some(path) = &args.predictions {
        let preds = read_predictions(open_input(path)?)?;
        let universe = args.labels.as_deref().map(read_labels).transpose()?;
        let (averaging, name) = match args.averaging {
            AveragingArg::Micro => (Averaging::Micro, "micro"),
            AveragingArg::Macro => (Averaging::Macro, "macro"),
        };
        let f1 = f1_scores(&preds, universe.as_ref(), averaging)?;
        writeln!(out, "{name}_f1\t{f1}")?;
    } else if let Some(path) = &args.curves {
        let curves = read_curves_csv(open_input(path)?)?;
        let mut report = build_report(&curves, &args.dataset)?;
        if let Some(key) = args.sort_by {
            report.sort_by(match key {
                SortArg::MaxF1 => SortKey::MaxF1,
                SortArg::Auc => SortKey::Auc,
            });
        }
        match args.format {
            Format::Table => write!(out, "{report}")?,
            Format::Csv => report.write_csv(&mut out)?,
        }
    }
    out.flush()?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let Cli {
        seed,
        strict,
        jobs,
        command,
    } = cli;
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    match command {
        Command::Ingest(io) => {
            let docs = read_documents(&io.input, strict)?;
            let n = write_jsonl(create_output(&io.output)?, &docs)?;
            log::info!("ingested {n} document(s)");
        }
        Command::Stats {
            io,
            tokens,
            tokenizer,
        } => {
            let docs = read_documents(&io.input, strict)?;
            let stats = if tokens || tokenizer.is_some() {
                let tok = load_tokenizer(tokenizer.as_deref())?;
                docs.par_iter()
                    .map(|d| {
                        let n = tok
                            .tokenize(&d.text)
                            .map_err(|e| Error::TokenizerFailure {
                                doc_id: d.id.clone(),
                                sentence: 0,
                                reason: e.0,
                            })?
                            .len();
                        let mut s = CorpusStats::default();
                        s.push_with_tokens(d, n as u64);
                        Ok::<_, Error>(s)
                    })
                    .try_reduce(CorpusStats::default, |a, b| Ok(a.merge(b)))?
            } else {
                compute_stats(&docs)
            };
            let mut out = create_output(&io.output)?;
            serde_json::to_writer_pretty(&mut out, &stats)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        Command::BuildProfiles {
            seeds,
            output,
            top_k,
        } => {
            let profiles = profiles_from_seed_dir(&seeds, top_k)?;
            if profiles.len() < 2 {
                return Err(Error::NoProfiles(profiles.len()));
            }
            write_jsonl(create_output(&output)?, &profiles)?;
            log::info!("wrote {} profile(s)", profiles.len());
        }
        Command::FilterLang {
            io,
            rejected,
            threshold,
            profiles,
        } => {
            let owned;
            let identifier = match &profiles {
                Some(p) => {
                    owned = NgramIdentifier::new(&read_profiles(open_input(p)?)?)?;
                    &owned
                }
                None => NgramIdentifier::bundled(),
            };
            let docs = read_documents(&io.input, strict)?;
            let outcome = filter_spanish(docs, identifier, threshold)?;
            write_jsonl(create_output(&io.output)?, &outcome.kept)?;
            if let Some(path) = rejected {
                write_jsonl(create_output(&path)?, &outcome.rejected)?;
            }
            log::info!(
                "kept {}, rejected {}",
                outcome.kept.len(),
                outcome.rejected.len()
            );
        }
        Command::Clean {
            io,
            keep_spaces,
            keep_newlines,
            keep_control,
            no_trim,
        } => {
            let policy = CleanPolicy {
                collapse_spaces: !keep_spaces,
                collapse_newlines: !keep_newlines,
                strip_control: !keep_control,
                trim_ends: !no_trim,
            };
            let mut docs = read_documents(&io.input, strict)?;
            docs.par_iter_mut()
                .for_each(|d| d.text = clean_text(&d.text, &policy));
            write_jsonl(create_output(&io.output)?, &docs)?;
        }
        Command::Chunk {
            io,
            max_tokens,
            tokenizer,
        } => {
            let tok = load_tokenizer(tokenizer.as_deref())?;
            let docs = read_documents(&io.input, strict)?;
            let chunks: Vec<Vec<Chunk>> = docs
                .par_iter()
                .map(|d| chunk_document(d, tok.as_ref(), max_tokens))
                .collect::<Result<_>>()?;
            let records: Vec<ChunkRecord> = chunks.iter().flatten().map(Chunk::record).collect();
            write_jsonl(create_output(&io.output)?, &records)?;
        }
        Command::Mask {
            io,
            tokenizer,
            mask_rate,
            p_mask,
            p_random,
            p_keep,
        } => {
            let config = MaskingConfig {
                mask_rate,
                p_mask,
                p_random,
                p_keep,
                seed,
            };
            config.validate()?;
            let tok = load_tokenizer(tokenizer.as_deref())?;
            let records: Vec<ChunkRecord> = read_jsonl(open_input(&io.input)?)?;
            let examples: Vec<MlmExample> = records
                .into_par_iter()
                .map(|r| mask_chunk(&Chunk::rehydrate(r, tok.as_ref())?, &config, tok.as_ref()))
                .collect::<Result<_>>()?;
            write_jsonl(create_output(&io.output)?, &examples)?;
        }
        Command::SplitValidation {
            input,
            count,
            train,
            validation,
        } => {
            let (n_train, n_val) =
                split_validation_streaming(&input, count, seed, strict, &train, &validation)?;
            log::info!("{n_train} training and {n_val} validation document(s)");
        }
        Command::LrCurve {
            total_steps,
            resolution,
            lr_peak,
            warmup_frac,
            output,
        } => {
            let config = TrainConfig {
                lr_peak,
                warmup_frac,
                total_steps,
                ..TrainConfig::default()
            };
            let rows = emit_schedule(&config, resolution)?;
            write_schedule_csv(&rows, create_output(&output)?)?;
        }
        Command::Eval(args) => eval(&args)?,
        Command::Run { manifest } => {
            let mut manifest = PipelineManifest::load(&manifest)?;
            manifest.seed = seed_override(manifest.seed, seed);
            manifest.strict |= strict;
            let summary = run_pipeline(&manifest, jobs)?;
            for stage in &summary.stages {
                log::info!(
                    "{}: {} in, {} passed, {} rejected, {} out",
                    stage.stage,
                    stage.items_in,
                    stage.passed,
                    stage.rejected,
                    stage.items_out
                );
            }
            println!("{}", manifest.output_dir.join(&summary.final_output).display());
        }
    }
    Ok(())
}

/// The manifest's seed wins unless `--seed` was given explicitly.
fn seed_override(manifest_seed: u64, cli_seed: u64) -> u64 {
    let explicit = std::env::args().any(|a| a == "--seed" || a.starts_with("--seed="));
    if explicit {
        cli_seed
    } else {
        manifest_seed
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn eval_needs_exactly_one_source() {
        assert!(Cli::try_parse_from(["lexcorpus", "eval"]).is_err());
        assert!(Cli::try_parse_from(["lexcorpus", "eval", "--predictions", "a", "--curves", "b"]).is_err());
        assert!(Cli::try_parse_from(["lexcorpus", "eval", "--curves", "b", "--sort-by", "max_f1"]).is_ok());
    }
}
