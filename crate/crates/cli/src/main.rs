use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use oceanq::augment::{self, AugmentConfig};
use oceanq::beam::{self, BeamConfig, TableScorer};
use oceanq::corpus::ingest_corpus;
use oceanq::engine::{build_index_data, Engine, EngineConfig};
use oceanq::eval::{evaluate_run, read_eval_set};
use oceanq::index;
use oceanq::ranker::RetrievalConfig;
use oceanq::span::{self, SpansRecord};
use serde::Serialize;

mod server;

#[derive(Parser)]
#[command(name = "oceanq", version, about = "Question answering by lookup in a pre-generated question-answer pool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index directory from a corpus JSONL file.
    BuildIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace an existing index directory.
        #[arg(long)]
        force: bool,
    },
    /// Answer questions; one JSON line per question.
    Query {
        #[command(flatten)]
        engine: EngineArgs,
        /// Question to answer. Without it (and without --batch), questions
        /// are read from stdin one per line.
        question: Option<String>,
        /// File with one question per line ("-" for stdin).
        #[arg(long, conflicts_with = "question")]
        batch: Option<PathBuf>,
    },
    /// Serve queries over HTTP.
    Serve {
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
    /// Top-K answer spans from start/end logits.
    Spans {
        #[arg(long)]
        logits: PathBuf,
        #[arg(long, default_value_t = span::DEFAULT_TOP_K)]
        k: usize,
        #[arg(long, default_value_t = span::DEFAULT_MAX_ANSWER_LEN)]
        max_len: usize,
    },
    /// Beam search over a prefix-to-scores table.
    Beam {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value = "")]
        context: String,
        #[arg(long, default_value_t = 5)]
        beam_size: usize,
        #[arg(long, default_value_t = 20)]
        max_steps: usize,
        #[arg(long, default_value = "</s>")]
        eos: String,
        #[arg(long, default_value_t = beam::DEFAULT_GAMMA)]
        gamma: f64,
        /// Standard beam search (no sibling-rank penalty).
        #[arg(long)]
        no_diverse: bool,
    },
    /// Data augmentation utilities.
    #[command(subcommand)]
    Augment(AugmentCommand),
    /// Evaluate EM / F1 and per-stage latency on a question set.
    Eval {
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        set: PathBuf,
        /// Skip questions whose gold answers are only yes/no.
        #[arg(long)]
        exclude_yes_no: bool,
        /// Print the full report as one JSON line instead of tables.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Subcommand)]
enum AugmentCommand {
    /// Select generated questions inside the similarity and F1 windows.
    Select {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long, default_value = "da-sim", value_parser = ["da-sim", "da-div"])]
        preset: String,
        #[arg(long)]
        s_min: Option<f64>,
        #[arg(long)]
        s_max: Option<f64>,
        #[arg(long)]
        f_min: Option<f64>,
        #[arg(long)]
        f_max: Option<f64>,
        #[arg(long)]
        max_per_record: Option<usize>,
    },
    /// Mixed-ratio multi-task batch schedule.
    Schedule {
        #[arg(long)]
        target_batches: usize,
        /// Batch counts of the auxiliary tasks, comma separated.
        #[arg(long, value_delimiter = ',')]
        aux_batches: Vec<usize>,
        #[arg(long, default_value_t = augment::DEFAULT_MIX_RATIO)]
        ratio: f64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(long, env = "OCEANQ_INDEX")]
    index: PathBuf,
    #[arg(long, default_value_t = 20)]
    top_n: usize,
    #[arg(long, default_value_t = 100)]
    top_m: usize,
    #[arg(long)]
    match_drop_stopwords: bool,
    #[arg(long)]
    dedup_questions: bool,
    /// Report timing_ms as zeros (reproducible output).
    #[arg(long)]
    no_timing: bool,
}

impl EngineArgs {
    fn config(&self) -> EngineConfig {
        EngineConfig {
            retrieval: RetrievalConfig { top_n_docs: self.top_n, top_m_paras: self.top_m },
            match_drop_stopwords: self.match_drop_stopwords,
            dedup_questions: self.dedup_questions,
            report_timing: !self.no_timing,
            ..EngineConfig::default()
        }
    }

    fn load(&self) -> Result<Engine> {
        let engine = Engine::load(&self.index, self.config())?;
        log::info!("loaded index {}", self.index.display());
        Ok(engine)
    }
}

/// A problem with user-supplied input outside the core library.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<oceanq::Error>() {
        Some(e) if e.is_input_error() => 2,
        _ => 3,
    }
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdin().lock()));
    }
    let f = fs::File::open(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(Box::new(io::BufReader::new(f)))
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn json_line<T: Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct BuildSummary<'a> {
    index: &'a Path,
    documents: u64,
    paragraphs: u64,
    pairs: u64,
    files: usize,
}

#[derive(Serialize)]
struct ScheduleOutput {
    seed: u64,
    ratio: f64,
    target_batches: usize,
    aux_batches: Vec<usize>,
    plan: Vec<augment::BatchRef>,
}

fn run(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::BuildIndex { corpus, out: dir, force } => {
            let (corpus, ocean) = ingest_corpus(&corpus)?;
            log::info!(
                "ingested {} documents, {} paragraphs, {} pairs",
                corpus.documents.len(),
                corpus.paragraphs.len(),
                ocean.num_pairs()
            );
            let data = build_index_data(corpus, ocean)?;
            let manifest = index::persist(&data, &dir, force)?;
            let s = &manifest.statistics;
            json_line(
                &mut out,
                &BuildSummary {
                    index: &dir,
                    documents: s.num_documents,
                    paragraphs: s.num_paragraphs,
                    pairs: s.num_pairs,
                    files: manifest.files.len() + 1,
                },
            )?;
        }
        Command::Query { engine, question, batch } => {
            let engine = engine.load()?;
            match (question, batch) {
                (Some(q), _) => writeln!(out, "{}", engine.answer(&q)?.to_json_line())?,
                (None, path) => {
                    let reader = open_input(path.as_deref().unwrap_or(Path::new("-")))?;
                    for line in reader.lines() {
                        let line = line.map_err(|e| input_error(e.to_string()))?;
                        writeln!(out, "{}", engine.answer(line.trim_end_matches('\r'))?.to_json_line())?;
                        if path.is_none() {
                            out.flush()?;
                        }
                    }
                }
            }
        }
        Command::Serve { engine, port, host } => {
            let loaded = engine.load()?;
            drop(out);
            server::serve(loaded, &host, port)?;
            return Ok(());
        }
        Command::Spans { logits, k, max_len } => {
            let records = span::parse_logits(open_input(&logits)?, &logits.display().to_string())?;
            for (para_id, l) in records {
                let spans = span::top_k_spans(&l, k, max_len)?;
                json_line(&mut out, &SpansRecord { para_id, spans })?;
            }
        }
        Command::Beam { table, context, beam_size, max_steps, eos, gamma, no_diverse } => {
            let scorer = TableScorer::from_json(&read_input(&table)?)?;
            let config = BeamConfig { beam_size, max_steps, eos };
            let hyps = if no_diverse {
                beam::beam_search(&scorer, &context, &config)?
            } else {
                beam::diverse_beam_search(&scorer, &context, &config, gamma)?
            };
            json_line(&mut out, &hyps)?;
        }
        Command::Augment(AugmentCommand::Select { pool, preset, s_min, s_max, f_min, f_max, max_per_record }) => {
            let base = AugmentConfig::preset(&preset).expect("clap restricts presets");
            let config = AugmentConfig {
                s_min: s_min.unwrap_or(base.s_min),
                s_max: s_max.unwrap_or(base.s_max),
                f_min: f_min.unwrap_or(base.f_min),
                f_max: f_max.unwrap_or(base.f_max),
                max_per_record: max_per_record.unwrap_or(base.max_per_record),
            };
            let pool = augment::parse_pool(open_input(&pool)?, &pool.display().to_string())?;
            for ex in augment::select_augmented(&pool, &config)? {
                json_line(&mut out, &ex)?;
            }
        }
        Command::Augment(AugmentCommand::Schedule { target_batches, aux_batches, ratio, seed }) => {
            let plan = augment::mixed_ratio_schedule(target_batches, &aux_batches, ratio, seed)?;
            json_line(&mut out, &ScheduleOutput { seed, ratio, target_batches, aux_batches, plan })?;
        }
        Command::Eval { engine, set, exclude_yes_no, json } => {
            let questions = read_eval_set(&set, exclude_yes_no)?;
            let engine = engine.load()?;
            let report = evaluate_run(&questions, &engine)?;
            if json {
                json_line(&mut out, &report)?;
            } else {
                write!(out, "{}", report.to_table())?;
            }
        }
    }
    out.flush().context("writing output")?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
