//! `lntm`: DocNADE and lifelong topic modeling from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or input parse error.
//! Log verbosity comes from `LNTM_LOG` (`error`, `warn`, `info`, `debug`,
//! `trace`; default `warn`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lntm::corpus::{build_collection, load_collection, read_jsonl, save_collection, Collection, CollectionStats, PreprocessOptions};
use lntm::eval::{coherence, hybrid_params, ir_precision_many, perplexity, Metric, Retrieval};
use lntm::lifelong::{accumulate_knowledge, KnowledgeBase};
use lntm::model::{extract_topics, load_checkpoint, save_checkpoint, train_task, ModelParams, RepresentationMode};
use lntm::stream::{ablate_tr, distill_for_task, render_ablation, run_stream, RunOptions, StreamConfig, TrainSettings, DEFAULT_TR_GRID};
use lntm::Error;

#[derive(Parser)]
#[command(name = "lntm", version, about = "DocNADE topic models and lifelong learning over document streams")]
struct Cli {
    /// Seed overriding the one in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a collection file from raw JSONL documents and print its statistics.
    Ingest(IngestArgs),
    /// Train a plain DocNADE on one collection.
    Train(TrainArgs),
    /// Train every task of a stream config in order and write reports.
    RunStream(StreamArgs),
    /// Score a checkpoint on a collection.
    Eval(EvalArgs),
    /// Show which earlier-task documents the selective co-training would replay.
    Distill(DistillArgs),
    /// Print the top words of every topic of a checkpoint.
    Topics(TopicsArgs),
    /// Sweep the topic-regularization strength on the final task of a stream.
    AblateTr(AblateArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Raw documents, one JSON object per line.
    input: PathBuf,
    /// Collection file to write.
    #[arg(long)]
    out: PathBuf,
    /// Collection name; defaults to the input file stem.
    #[arg(long)]
    name: Option<String>,
    /// Keep only the most frequent words.
    #[arg(long)]
    max_vocab: Option<usize>,
    /// Shortest token kept.
    #[arg(long, default_value_t = 2)]
    min_token_len: usize,
    /// Keep letter case.
    #[arg(long)]
    keep_case: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Collection file (or raw `.jsonl`).
    collection: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    out: PathBuf,
    /// TOML with `hidden`, `activation`, `seed` and a `[train]` table; a
    /// stream config works too.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stop after this many tasks are complete (resume later with the same command).
    #[arg(long)]
    stop_after: Option<usize>,
}

#[derive(Args)]
struct RetrievalArgs {
    /// Retrieval fraction; repeatable.
    #[arg(long = "fraction")]
    fractions: Vec<f64>,
    /// Retrieve a fixed number of documents; repeatable.
    #[arg(long = "top-k")]
    top_k: Vec<usize>,
    /// `all_words` or `exclusive`.
    #[arg(long, default_value = "all_words")]
    representation: RepresentationMode,
}

impl RetrievalArgs {
    fn retrievals(&self) -> Vec<Retrieval> {
        let mut out: Vec<Retrieval> = self.fractions.iter().map(|&f| Retrieval::Fraction(f)).collect();
        out.extend(self.top_k.iter().map(|&k| Retrieval::TopK(k)));
        if out.is_empty() {
            out.push(Retrieval::Fraction(0.02));
        }
        out
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Collection the checkpoint was trained on (or is scored on).
    #[arg(long)]
    collection: PathBuf,
    /// `ppl`, `ir`, `coh` or `all`; repeatable.
    #[arg(long = "metric", default_value = "all")]
    metrics: Vec<String>,
    #[command(flatten)]
    retrieval: RetrievalArgs,
    /// Words per topic for coherence.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Later model whose shared words overwrite the checkpoint's (forgetting
    /// evaluation); needs `--future-collection`.
    #[arg(long, requires = "future_collection")]
    future: Option<PathBuf>,
    /// Collection of the later model, for its vocabulary.
    #[arg(long, requires = "future")]
    future_collection: Option<PathBuf>,
}

#[derive(Args)]
struct DistillArgs {
    #[arg(long)]
    config: PathBuf,
    /// Task whose model fixes the threshold; defaults to the last one.
    #[arg(long)]
    task: Option<String>,
}

#[derive(Args)]
struct TopicsArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Collection whose vocabulary the checkpoint uses.
    #[arg(long)]
    collection: PathBuf,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated strengths; defaults to 0.001,0.01,0.1.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    /// Directory for `ablation.tsv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_any(path: &Path) -> lntm::Result<Collection> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let raw = read_jsonl(path)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(build_collection(&raw, &PreprocessOptions { name, ..Default::default() })?.collection)
    } else {
        load_collection(path)
    }
}

fn load_model(ckpt: &Path, coll: &Collection) -> lntm::Result<ModelParams<f64>> {
    let (params, _) = load_checkpoint::<f64>(ckpt)?;
    if params.vocab_size() != coll.vocab.len() {
        return Err(Error::Shape(format!(
            "{} has K={} but collection `{}` has {} words",
            ckpt.display(),
            params.vocab_size(),
            coll.name,
            coll.vocab.len()
        )));
    }
    Ok(params)
}

fn parse_metrics(names: &[String]) -> lntm::Result<Vec<Metric>> {
    let mut out = Vec::new();
    for n in names {
        if n == "all" {
            out.extend(Metric::ALL);
        } else {
            out.push(n.parse().map_err(Error::Config)?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn ingest(args: IngestArgs, seed: Option<u64>) -> lntm::Result<()> {
    let raw = read_jsonl(&args.input)?;
    let name = args
        .name
        .unwrap_or_else(|| args.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let opts = PreprocessOptions {
        name,
        lowercase: !args.keep_case,
        min_token_len: args.min_token_len,
        max_vocab: args.max_vocab,
        seed: seed.unwrap_or(0),
        ..Default::default()
    };
    let built = build_collection(&raw, &opts)?;
    save_collection(&built.collection, &args.out)?;
    if built.dropped > 0 {
        eprintln!("dropped {} documents with too few tokens", built.dropped);
    }
    println!("{}", CollectionStats::TSV_HEADER);
    println!("{}", built.collection.stats().tsv_row());
    Ok(())
}

fn train(args: TrainArgs, seed: Option<u64>) -> lntm::Result<()> {
    let mut settings = match &args.config {
        Some(p) => TrainSettings::load(p)?,
        None => TrainSettings::default(),
    };
    if let Some(s) = seed {
        settings.seed = s;
    }
    let coll = load_any(&args.collection)?;
    let init = ModelParams::<f64>::init(settings.hidden, coll.vocab.len(), settings.activation, settings.seed);
    let out = train_task(&coll, init, &settings.hyper())?;
    save_checkpoint(&out.params, &coll.name, &args.out)?;
    println!("epochs\t{}", out.history.len());
    println!("best_epoch\t{}", out.best_epoch);
    println!("best_val_ppl\t{}", out.best_val_ppl);
    println!("r_time\t{}", out.r_time());
    Ok(())
}

fn load_stream(path: &Path, seed: Option<u64>) -> lntm::Result<StreamConfig> {
    let mut cfg = StreamConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(args: StreamArgs, seed: Option<u64>) -> lntm::Result<()> {
    let cfg = load_stream(&args.config, seed)?;
    let out = match args.out.or_else(|| cfg.out.as_ref().map(|o| cfg.base_dir.join(o))) {
        Some(o) => o,
        None => return Err(Error::Config("no output directory: pass --out or set `out` in the config".into())),
    };
    let report = run_stream(&cfg, &out, RunOptions { stop_after: args.stop_after })?;
    println!("{}", lntm::stream::REPORT_HEADER);
    for r in report.rows.iter().filter(|r| r.scope == "own" || r.scope == "forgetting") {
        println!("{}", r.tsv());
    }
    eprintln!(
        "{} of {} tasks complete; reports in {}",
        report.completed.len(),
        cfg.tasks.len(),
        out.display()
    );
    Ok(())
}

fn eval(args: EvalArgs) -> lntm::Result<()> {
    let coll = load_any(&args.collection)?;
    let mut params = load_model(&args.checkpoint, &coll)?;
    if let (Some(f), Some(fc)) = (&args.future, &args.future_collection) {
        let fcoll = load_any(fc)?;
        let fparams = load_model(f, &fcoll)?;
        let kb = accumulate_knowledge(&params, &coll.vocab, &coll.name, KnowledgeBase::new())?;
        let (hybrid, shared) = hybrid_params(&kb.topic_pool()[0], &fparams, &fcoll.vocab)?;
        if shared == 0 {
            log::warn!("the two vocabularies share no word");
        }
        params = hybrid;
    }
    let retrievals = args.retrieval.retrievals();
    for r in &retrievals {
        r.validate()?;
    }
    for m in parse_metrics(&args.metrics)? {
        match m {
            Metric::Ppl => {
                let r = perplexity(&coll.test, &params, None)?;
                println!("ppl\t{}", r.ppl);
            }
            Metric::Ir => {
                for r in ir_precision_many(&coll.train, &coll.test, &params, None, &retrievals, args.retrieval.representation)? {
                    println!("{}\t{}", r.retrieval.label(), r.mean);
                }
            }
            Metric::Coh => {
                let topics = extract_topics(&params, &coll.vocab, args.top);
                println!("coh\t{}", coherence(&topics, &coll)?.mean);
            }
        }
    }
    Ok(())
}

fn distill(args: DistillArgs, seed: Option<u64>) -> lntm::Result<()> {
    let cfg = load_stream(&args.config, seed)?;
    let index = match &args.task {
        Some(t) => cfg
            .tasks
            .iter()
            .position(|x| &x.name == t)
            .ok_or_else(|| Error::Config(format!("no task named `{t}`")))?,
        None => cfg.tasks.len() - 1,
    };
    let aug = distill_for_task(&cfg, index)?;
    println!("threshold\t{}", aug.threshold);
    println!("source\texamined\temptied\tselected");
    for s in &aug.sources {
        println!("{}\t{}\t{}\t{}", s.task_id, s.examined, s.emptied, s.selected);
    }
    Ok(())
}

fn topics(args: TopicsArgs) -> lntm::Result<()> {
    let coll = load_any(&args.collection)?;
    let params = load_model(&args.checkpoint, &coll)?;
    for t in extract_topics(&params, &coll.vocab, args.top) {
        println!("topic {}: {}", t.index, t.tokens().collect::<Vec<_>>().join(" "));
    }
    Ok(())
}

fn ablate(args: AblateArgs, seed: Option<u64>) -> lntm::Result<()> {
    let cfg = load_stream(&args.config, seed)?;
    let grid = if args.grid.is_empty() { DEFAULT_TR_GRID.to_vec() } else { args.grid };
    let rows = ablate_tr(&cfg, &grid, args.out.as_deref())?;
    print!("{}", render_ablation(&rows));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LNTM_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a, cli.seed),
        Command::Train(a) => train(a, cli.seed),
        Command::RunStream(a) => run(a, cli.seed),
        Command::Eval(a) => eval(a),
        Command::Distill(a) => distill(a, cli.seed),
        Command::Topics(a) => topics(a),
        Command::AblateTr(a) => ablate(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
