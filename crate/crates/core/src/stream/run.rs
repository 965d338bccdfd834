use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::{render_summary, render_tsv, write_atomic, ReportRow};
use super::StreamConfig;
use crate::corpus::Collection;
use crate::error::{Error, Result};
use crate::eval::{
    coherence, data_augment_train, hybrid_params, ir_precision_many, perplexity, zero_shot_eval, EvalOptions, Metric,
    Retrieval,
};
use crate::lifelong::{
    accumulate_knowledge, lifelong_train, load_kb, save_kb, AugmentedSet, KnowledgeBase, LambdaTriad,
};
use crate::model::{extract_topics, save_checkpoint, ModelParams};

const STATE: &str = "state.json";
const LOCK: &str = "lock";

/// Layout of a stream output directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunPaths { root: root.into() }
    }

    pub fn kb(&self) -> PathBuf {
        self.root.join("kb")
    }

    pub fn checkpoint(&self, index: usize, task: &str) -> PathBuf {
        self.root.join("checkpoints").join(format!("{:03}-{task}.lntm", index + 1))
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.tsv")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.json")
    }

    pub fn state(&self) -> PathBuf {
        self.root.join(STATE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RunState {
    /// The config the run started with; resuming requires the same one.
    config: String,
    completed: Vec<String>,
    rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Stop once this many tasks are complete.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct StreamReport {
    pub rows: Vec<ReportRow>,
    pub completed: Vec<String>,
    /// Tasks trained by this invocation.
    pub trained_now: usize,
}

/// Exclusive hold on an output directory, released on drop.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Invalid(format!(
                "{} exists: another run is using this directory (remove the file if it is stale)",
                path.display()
            ))),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Metric rows for scoring `params` on `coll`.
#[allow(clippy::too_many_arguments)]
fn score(
    rows: &mut Vec<ReportRow>,
    step: usize,
    setting: &str,
    scope: &str,
    coll: &Collection,
    params: &ModelParams<f64>,
    metrics: &[Metric],
    retrievals: &[Retrieval],
    opts: &EvalOptions,
) -> Result<()> {
    let mut push = |metric: String, value: f64| {
        rows.push(ReportRow {
            step,
            task: coll.name.clone(),
            setting: setting.to_string(),
            scope: scope.to_string(),
            metric,
            value,
        })
    };
    for m in metrics {
        match m {
            Metric::Ppl => push("ppl".into(), perplexity(&coll.test, params, None)?.ppl),
            Metric::Ir => {
                for r in ir_precision_many(&coll.train, &coll.test, params, None, retrievals, opts.mode)? {
                    push(r.retrieval.label(), r.mean);
                }
            }
            Metric::Coh => {
                let topics = extract_topics(params, &coll.vocab, opts.coh_top_n);
                push("coh".into(), coherence(&topics, coll)?.mean);
            }
        }
    }
    Ok(())
}

/// Train every task of the stream in order, persisting the knowledge base,
/// a checkpoint per task and the metric reports after each one.
///
/// An output directory holding an earlier run of the same config resumes
/// after its last completed task.
pub fn run_stream(cfg: &StreamConfig, out: &Path, opts: RunOptions) -> Result<StreamReport> {
    cfg.validate()?;
    let paths = RunPaths::new(out);
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    fs::create_dir_all(out.join("checkpoints")).map_err(|e| Error::io(out, e))?;
    let _lock = DirLock::acquire(out)?;

    let colls = cfg.load_collections()?;
    let mut fingerprint = cfg.clone();
    fingerprint.out = None;
    let fingerprint = fingerprint.to_toml();
    let setting = cfg.approaches()?.label();
    let retrievals = cfg.retrievals()?;
    let opts_eval = cfg.eval_options(retrievals[0])?;

    let (mut state, mut kb) = if paths.state().exists() {
        let text = fs::read_to_string(paths.state()).map_err(|e| Error::io(paths.state(), e))?;
        let state: RunState = serde_json::from_str(&text)?;
        if state.config != fingerprint {
            return Err(Error::Config(format!(
                "{} holds a run of a different config; use another output directory",
                out.display()
            )));
        }
        let kb: KnowledgeBase<f64> = if state.completed.is_empty() {
            KnowledgeBase::new()
        } else {
            load_kb(paths.kb())?
        };
        if kb.task_ids().ne(state.completed.iter().map(String::as_str)) {
            return Err(Error::Format("knowledge base does not match the recorded progress".into()));
        }
        log::info!("resuming after {} completed tasks", state.completed.len());
        (state, kb)
    } else {
        let state = RunState {
            config: fingerprint,
            completed: Vec::new(),
            rows: Vec::new(),
        };
        (state, KnowledgeBase::new())
    };

    let mut trained_now = 0;
    for i in state.completed.len()..cfg.tasks.len() {
        if opts.stop_after.is_some_and(|n| state.completed.len() >= n) {
            break;
        }
        let name = &cfg.tasks[i].name;
        let step = i + 1;
        log::info!("task {step}/{}: {name}", cfg.tasks.len());
        let lc = cfg.lifelong_config(i)?;
        let past: Vec<&Collection> = colls[..i].iter().collect();
        let trained = lifelong_train(&colls[i], &kb, &past, &lc)?;
        let params = trained.effective_params();
        save_checkpoint(&params, name, paths.checkpoint(i, name))?;
        kb = accumulate_knowledge(&params, &colls[i].vocab, name, kb)?;

        let mut rows = Vec::new();
        score(&mut rows, step, &setting, "own", &colls[i], &params, &Metric::ALL, &retrievals, &opts_eval)?;
        for (j, past_coll) in colls[..i].iter().enumerate() {
            let (hybrid, _) = hybrid_params(&kb.topic_pool()[j], &params, &colls[i].vocab)?;
            score(&mut rows, step, &setting, "forgetting", past_coll, &hybrid, &[Metric::Ppl, Metric::Ir], &retrievals, &opts_eval)?;
        }
        if cfg.baselines && i > 0 {
            let prev = &kb.topic_pool()[i - 1];
            let mut push = |scope: &str, metric: String, value: f64| {
                rows.push(ReportRow {
                    step,
                    task: name.clone(),
                    setting: setting.clone(),
                    scope: scope.into(),
                    metric,
                    value,
                })
            };
            push("zero_shot", "ppl".into(), zero_shot_eval(&colls[i], prev.params(), prev.vocab(), Metric::Ppl, &opts_eval)?);
            for &r in &retrievals {
                let o = EvalOptions { retrieval: r, ..opts_eval };
                push("zero_shot", r.label(), zero_shot_eval(&colls[i], prev.params(), prev.vocab(), Metric::Ir, &o)?);
            }
            let all: Vec<&Collection> = colls[..=i].iter().collect();
            let (union, aug) = data_augment_train::<f64>(&all, lc.hidden, lc.activation, lc.init_seed, &lc.hyper)?;
            let mut tmp = Vec::new();
            score(&mut tmp, step, &setting, "data_augment", &union, &aug.params, &[Metric::Ppl, Metric::Ir], &retrievals, &opts_eval)?;
            for mut r in tmp {
                r.task = name.clone();
                rows.push(r);
            }
        }
        let mut train_row = |metric: &str, value: f64| {
            rows.push(ReportRow {
                step,
                task: name.clone(),
                setting: setting.clone(),
                scope: "train".into(),
                metric: metric.into(),
                value,
            })
        };
        train_row("epochs", trained.outcome.history.len() as f64);
        train_row("best_epoch", trained.outcome.best_epoch as f64);
        train_row("r_time", trained.outcome.r_time());
        if let Some(ppl) = trained.ppl_future {
            train_row("ppl_future", ppl);
            train_row("distilled", trained.augmented.len() as f64);
        }

        save_kb(&kb, paths.kb())?;
        state.completed.push(name.clone());
        state.rows.extend(rows);
        write_atomic(&paths.state(), &serde_json::to_string(&state)?)?;
        write_atomic(&paths.report(), &render_tsv(&state.rows))?;
        write_atomic(
            &paths.summary(),
            &render_summary(&cfg.name, &setting, &state.rows, &state.completed)?,
        )?;
        trained_now += 1;
    }
    Ok(StreamReport {
        rows: state.rows,
        completed: state.completed,
        trained_now,
    })
}

/// Train the task at `index` plainly, fix the threshold at its test
/// perplexity and distill the training documents of every earlier task.
pub fn distill_for_task(cfg: &StreamConfig, index: usize) -> Result<AugmentedSet> {
    if index == 0 || index >= cfg.tasks.len() {
        return Err(Error::Config(format!(
            "distillation needs a task with predecessors; task index {index} of {}",
            cfg.tasks.len()
        )));
    }
    let colls = cfg.load_collections()?;
    let mut lc = cfg.lifelong_config(index)?;
    lc.approaches = crate::lifelong::Approaches::NONE;
    let plain = lifelong_train::<f64>(&colls[index], &KnowledgeBase::new(), &[], &lc)?;
    let threshold = perplexity(&colls[index].test, &plain.params, None)?.ppl;
    let lambdas: Vec<LambdaTriad> = cfg.tasks[..index]
        .iter()
        .map(|t| cfg.lifelong_config(index).map(|c| c.lambdas_for(&t.name)))
        .collect::<Result<_>>()?;
    let sources: Vec<crate::lifelong::DistillSource<'_>> = cfg.tasks[..index]
        .iter()
        .zip(&colls)
        .zip(&lambdas)
        .map(|((t, c), l)| crate::lifelong::DistillSource {
            task_id: &t.name,
            collection: c,
            lambda: l.sal,
        })
        .collect();
    crate::lifelong::distill_documents(&plain.params, &colls[index].vocab, threshold, &sources)
}
