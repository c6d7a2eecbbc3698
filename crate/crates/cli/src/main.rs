use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use skelqa::backend::{extract_instances, train_backend, OracleBackend, ProcedureBackend, TrainConfig};
use skelqa::harness::{build_bank, eval_skeletons, evaluate, load_dataset, train_scorer, BackendKind, Pipeline, PipelineConfig};
use skelqa::scoring::WordHyper;
use skelqa::text::gold::{load_gold, to_gold_line};
use skelqa::text::{parse_skeleton, Question};
use skelqa::{Embeddings, TrainedBackend};

#[derive(Parser)]
#[command(name = "skelqa", version, about = "Skeleton-based question answering over a small triple store")]
struct Cli {
    /// Pipeline configuration (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Switches off a stage: skeleton_parsing, sentence_scorer or word_scorer.
    #[arg(long, global = true)]
    ablate: Vec<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parses one question into a skeleton, printed as a gold-file line.
    ParseSkeleton {
        text: String,
        #[arg(long, default_value = "q")]
        id: String,
    },
    /// Trains the linear procedure backend on a gold skeleton file.
    TrainBackend {
        /// Defaults to the configured gold skeletons.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long, default_value_t = TrainConfig::default().epochs)]
        epochs: usize,
    },
    /// Parses every gold question and reports LAS and per-procedure agreement.
    EvalSkeletons {
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Linear backend weights; the configured backend otherwise.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Print JSON instead of the table.
        #[arg(long)]
        json: bool,
    },
    /// Trains the word-level scorer on a question-answer dataset.
    TrainScorer { data: PathBuf },
    /// Builds the sentence-level pattern bank from a question-answer dataset.
    BuildBank { data: PathBuf },
    /// Answers one question and prints the ranked candidates.
    Answer {
        text: String,
        #[arg(long, default_value = "q")]
        id: String,
        /// How many ranked candidates to print.
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Answers a dataset and prints per-question records with aggregates.
    Evaluate { data: PathBuf },
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    for flag in &cli.ablate {
        cfg.ablation.disable(flag)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

fn gold_path(cfg: &PipelineConfig, given: &Option<PathBuf>) -> Result<PathBuf> {
    match given.clone().or_else(|| cfg.paths.gold_skeletons.clone()) {
        Some(p) => Ok(p),
        None => bail!("no gold skeleton file given or configured"),
    }
}

fn embeddings(cfg: &PipelineConfig) -> Result<Option<Embeddings>> {
    Ok(cfg.paths.embeddings.as_deref().map(Embeddings::load).transpose()?)
}

/// Pipeline for building scorer resources: the resources being built are
/// not loaded, and nothing is required of the scorers.
fn training_pipeline(mut cfg: PipelineConfig) -> Result<Pipeline> {
    cfg.paths.bank = None;
    cfg.paths.scorer = None;
    Ok(Pipeline::load(&cfg)?)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config(&cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::ParseSkeleton { text, id } => {
            let p = Pipeline::load(&cfg)?;
            let backend = p.backend.as_ref().context("no skeleton backend configured")?;
            let q = Question::new(id.as_str(), text)?;
            let skel = parse_skeleton(&q, backend.as_ref())?;
            emit(out, &to_gold_line(&q, &skel))
        }
        Command::TrainBackend { gold, epochs } => {
            let gold = load_gold(&gold_path(&cfg, gold)?)?;
            let instances = extract_instances(&gold)?;
            let emb = embeddings(&cfg)?;
            let backend = train_backend(&instances, &TrainConfig { epochs: *epochs, seed: cfg.seed }, emb.as_ref())?;
            emit(out, &backend.to_json())
        }
        Command::EvalSkeletons { gold, weights, json } => {
            let gold = load_gold(&gold_path(&cfg, gold)?)?;
            let weights = weights.clone().or_else(|| match cfg.backend {
                BackendKind::Linear => cfg.paths.backend_weights.clone(),
                BackendKind::Oracle => None,
            });
            let backend: Box<dyn ProcedureBackend> = match weights {
                Some(path) => Box::new(TrainedBackend::load(&path, embeddings(&cfg)?)?),
                None => Box::new(OracleBackend::from_gold(&gold)?),
            };
            let report = eval_skeletons(&gold, backend.as_ref())?;
            let text = if *json { serde_json::to_string_pretty(&report)? } else { report.to_string() };
            emit(out, &text)
        }
        Command::TrainScorer { data } => {
            let p = training_pipeline(cfg.clone())?;
            let records = load_dataset(data)?;
            let hyper = WordHyper { seed: cfg.seed, ..WordHyper::default() };
            let (model, report) = train_scorer(&p, &records, hyper)?;
            log::info!(
                "{} pairs, loss {:.4} -> {:.4}",
                report.pairs,
                report.initial_loss,
                report.epoch_losses.last().copied().unwrap_or(report.initial_loss)
            );
            emit(out, &model.to_json())
        }
        Command::BuildBank { data } => {
            let p = training_pipeline(cfg)?;
            let bank = build_bank(&p, &load_dataset(data)?);
            let mut buf = Vec::new();
            bank.write_jsonl(&mut buf)?;
            emit(out, String::from_utf8(buf)?.trim_end())
        }
        Command::Answer { text, id, top } => {
            let p = Pipeline::load(&cfg)?;
            p.check_ready()?;
            let ans = p.answer_question(id, text);
            let ranked: Vec<_> = ans
                .ranking
                .iter()
                .take(*top)
                .map(|r| {
                    json!({
                        "answers": r.answers,
                        "query": r.query.to_string(),
                        "sentence": r.sentence,
                        "word": r.word,
                        "total": r.total,
                    })
                })
                .collect();
            let doc = json!({
                "id": ans.id,
                "top": ans.top().map(|t| &t.answers),
                "ranking": ranked,
                "skeleton": ans.trace.skeleton,
                "error": ans.error.map(|e| e.to_string()),
            });
            emit(out, &serde_json::to_string_pretty(&doc)?)
        }
        Command::Evaluate { data } => {
            let p = Pipeline::load(&cfg)?;
            p.check_ready()?;
            let result = evaluate(&p, &load_dataset(data)?);
            emit(out, &result.to_json())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
