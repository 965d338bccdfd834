use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{build_collection, load_collection, read_jsonl, Collection, PreprocessOptions};
use crate::error::{Error, Result};
use crate::eval::{EvalOptions, Retrieval};
use crate::lifelong::{Approaches, LambdaTriad, LifelongConfig};
use crate::model::{RepresentationMode, TrainHyper};
use crate::scalar::Activation;

/// One task of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub name: String,
    /// Collection file, or raw `.jsonl` ingested with default options.
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    /// Overrides of the stream's training settings for this task.
    #[serde(default)]
    pub train: Option<toml::Table>,
    /// Strengths toward every past task, for this task only.
    #[serde(default)]
    pub lambda: Option<LambdaTriad>,
    /// Strengths toward one named past task.
    #[serde(default)]
    pub pair: BTreeMap<String, LambdaTriad>,
}

fn default_approaches() -> Vec<String> {
    vec!["all".to_string()]
}

fn default_fractions() -> Vec<f64> {
    vec![0.02]
}

fn default_true() -> bool {
    true
}

fn default_hidden() -> usize {
    50
}

fn default_activation() -> Activation {
    Activation::Tanh
}

fn default_top_n() -> usize {
    10
}

/// A stream run: ordered tasks, transfer strengths and training settings.
///
/// Every strength defaults to zero, which switches its approach off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    /// Subset of `embtf`, `tr`, `sal`, or `all`/`none`.
    #[serde(default = "default_approaches")]
    pub approaches: Vec<String>,
    #[serde(default = "default_true")]
    pub learn_a: bool,
    #[serde(default)]
    pub learn_p: bool,
    #[serde(default)]
    pub train: TrainHyper,
    #[serde(default)]
    pub lambda: LambdaTriad,
    /// Retrieval fractions reported for every evaluation.
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub top_k: Vec<usize>,
    #[serde(default)]
    pub representation: RepresentationMode,
    #[serde(default = "default_top_n")]
    pub coh_top_n: usize,
    /// Also report zero-shot and union-training baselines.
    #[serde(default)]
    pub baselines: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(rename = "task")]
    pub tasks: Vec<TaskSpec>,
    /// Directory of the config file; relative task paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl StreamConfig {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: StreamConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("stream config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config("stream has no tasks".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &self.tasks {
            if !seen.insert(t.name.as_str()) {
                return Err(Error::Config(format!("task name `{}` appears twice", t.name)));
            }
            if let Some(l) = &t.lambda {
                l.validate()?;
            }
            for (past, l) in &t.pair {
                l.validate()?;
                if !self.tasks.iter().take_while(|o| o.name != t.name).any(|o| &o.name == past) {
                    return Err(Error::Config(format!("task `{}` names `{past}`, which is not an earlier task", t.name)));
                }
            }
            self.hyper_for(t)?;
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden size must be at least 1".into()));
        }
        self.lambda.validate()?;
        self.approaches()?;
        self.eval_options(self.retrievals()?[0])?;
        Ok(())
    }

    pub fn approaches(&self) -> Result<Approaches> {
        self.approaches.join(",").parse().map_err(Error::Config)
    }

    pub fn task_path(&self, task: &TaskSpec) -> PathBuf {
        if task.path.is_absolute() {
            task.path.clone()
        } else {
            self.base_dir.join(&task.path)
        }
    }

    /// Read every task's collection, checking that its paths resolve.
    pub fn load_collections(&self) -> Result<Vec<Collection>> {
        self.tasks
            .iter()
            .map(|t| {
                let path = self.task_path(t);
                let mut coll = if path.extension().is_some_and(|e| e == "jsonl") {
                    let raw = read_jsonl(&path)?;
                    let opts = PreprocessOptions {
                        name: t.name.clone(),
                        seed: self.seed,
                        ..Default::default()
                    };
                    build_collection(&raw, &opts)?.collection
                } else {
                    load_collection(&path)?
                };
                coll.name = t.name.clone();
                Ok(coll)
            })
            .collect()
    }

    /// Stream settings with this task's overrides applied.
    pub fn hyper_for(&self, task: &TaskSpec) -> Result<TrainHyper> {
        let Some(over) = &task.train else {
            return Ok(self.train.clone());
        };
        let mut table = toml::Table::try_from(&self.train).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in over {
            if !table.contains_key(k) {
                return Err(Error::Config(format!("task `{}`: unknown training setting `{k}`", task.name)));
            }
            table.insert(k.clone(), v.clone());
        }
        let hyper: TrainHyper = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        hyper.validate()?;
        Ok(hyper)
    }

    /// Seed offset for the task at `index`.
    pub fn task_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    /// Training settings for the task at `index`.
    pub fn lifelong_config(&self, index: usize) -> Result<LifelongConfig> {
        let task = &self.tasks[index];
        let mut hyper = self.hyper_for(task)?;
        hyper.seed = self.task_seed(index);
        Ok(LifelongConfig {
            hidden: self.hidden,
            activation: self.activation,
            init_seed: self.task_seed(index),
            hyper,
            approaches: self.approaches()?,
            lambdas: task.lambda.unwrap_or(self.lambda),
            per_task: task.pair.clone(),
            learn_a: self.learn_a,
            learn_p: self.learn_p,
        })
    }

    pub fn retrievals(&self) -> Result<Vec<Retrieval>> {
        let out: Vec<Retrieval> = self
            .fractions
            .iter()
            .map(|&f| Retrieval::Fraction(f))
            .chain(self.top_k.iter().map(|&k| Retrieval::TopK(k)))
            .collect();
        if out.is_empty() {
            return Err(Error::Config("no retrieval fraction or top-k configured".into()));
        }
        for r in &out {
            r.validate()?;
        }
        Ok(out)
    }

    pub fn eval_options(&self, retrieval: Retrieval) -> Result<EvalOptions> {
        if self.coh_top_n < 2 {
            return Err(Error::Config("coh_top_n must be at least 2".into()));
        }
        Ok(EvalOptions {
            retrieval,
            mode: self.representation,
            coh_top_n: self.coh_top_n,
        })
    }
}

/// Model and training settings for a single task. Reads the same keys as a
/// stream config and ignores the rest, so a stream config file works too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub train: TrainHyper,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            seed: 0,
            hidden: default_hidden(),
            activation: default_activation(),
            train: TrainHyper::default(),
        }
    }
}

impl TrainSettings {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: TrainSettings =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        s.train.validate()?;
        Ok(s)
    }

    /// Initial parameters and schedule, seeded the way a stream seeds its
    /// first task.
    pub fn hyper(&self) -> TrainHyper {
        TrainHyper {
            seed: self.seed,
            ..self.train.clone()
        }
    }
}
