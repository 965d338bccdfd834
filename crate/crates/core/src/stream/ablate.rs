use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::write_atomic;
use super::StreamConfig;
use crate::corpus::Collection;
use crate::error::{Error, Result};
use crate::eval::{hybrid_params, ir_precision_many, perplexity, Retrieval};
use crate::lifelong::{accumulate_knowledge, lifelong_train, Approaches, KnowledgeBase, LambdaTriad};
use crate::model::{ModelParams, RepresentationMode};

/// Topic-regularization strengths swept when no grid is given.
pub const DEFAULT_TR_GRID: [f64; 3] = [0.001, 0.01, 0.1];

pub const ABLATION_HEADER: &str = "lambda_tr\ttask\tscope\tmetric\tvalue";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub lambda_tr: f64,
    pub task: String,
    /// `own` for the final task, `forgetting` for an earlier one.
    pub scope: String,
    pub metric: String,
    pub value: f64,
}

fn scores(
    coll: &Collection,
    params: &ModelParams<f64>,
    retrievals: &[Retrieval],
    mode: RepresentationMode,
) -> Result<Vec<(String, f64)>> {
    let mut out = vec![("ppl".to_string(), perplexity(&coll.test, params, None)?.ppl)];
    for r in ir_precision_many(&coll.train, &coll.test, params, None, retrievals, mode)? {
        out.push((r.retrieval.label(), r.mean));
    }
    Ok(out)
}

/// Transfer against forgetting as a function of the topic-regularization
/// strength. Earlier tasks are trained plainly once; the final task is then
/// trained with the regularizer alone at each strength in `grid`, and scored
/// on itself and, through its shared words, on every earlier task.
pub fn ablate_tr(cfg: &StreamConfig, grid: &[f64], out: Option<&Path>) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let n = cfg.tasks.len();
    if n < 2 {
        return Err(Error::Config("the ablation needs at least two tasks".into()));
    }
    if grid.is_empty() {
        return Err(Error::Config("empty lambda grid".into()));
    }
    for &l in grid {
        LambdaTriad::new(l, 0.0, 0.0).validate()?;
    }
    let colls = cfg.load_collections()?;
    let retrievals = cfg.retrievals()?;

    let mut kb = KnowledgeBase::<f64>::new();
    for (i, coll) in colls[..n - 1].iter().enumerate() {
        let mut lc = cfg.lifelong_config(i)?;
        lc.approaches = Approaches::NONE;
        let trained = lifelong_train(coll, &kb, &[], &lc)?;
        kb = accumulate_knowledge(&trained.params, &coll.vocab, &cfg.tasks[i].name, kb)?;
    }

    let future = &colls[n - 1];
    let mut rows = Vec::new();
    for &lambda in grid {
        let mut lc = cfg.lifelong_config(n - 1)?;
        lc.approaches = Approaches { tr: true, ..Approaches::NONE };
        lc.lambdas = LambdaTriad::new(lambda, 0.0, 0.0);
        lc.per_task.clear();
        let trained = lifelong_train(future, &kb, &[], &lc)?;
        for (metric, value) in scores(future, &trained.params, &retrievals, cfg.representation)? {
            rows.push(AblationRow {
                lambda_tr: lambda,
                task: future.name.clone(),
                scope: "own".into(),
                metric,
                value,
            });
        }
        for (j, past) in colls[..n - 1].iter().enumerate() {
            let (hybrid, _) = hybrid_params(&kb.topic_pool()[j], &trained.params, &future.vocab)?;
            for (metric, value) in scores(past, &hybrid, &retrievals, cfg.representation)? {
                rows.push(AblationRow {
                    lambda_tr: lambda,
                    task: past.name.clone(),
                    scope: "forgetting".into(),
                    metric,
                    value,
                });
            }
        }
    }

    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("ablation.tsv"), &render_ablation(&rows))?;
    }
    Ok(rows)
}

pub fn render_ablation(rows: &[AblationRow]) -> String {
    let mut out = String::from(ABLATION_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.lambda_tr, r.task, r.scope, r.metric, r.value));
    }
    out
}
