//! Stream runs: configuration, training every task in order with
//! persistence and resumption, metric reports and the
//! topic-regularization ablation.

mod ablate;
mod config;
mod report;
mod run;

pub use ablate::{ablate_tr, render_ablation, AblationRow, ABLATION_HEADER, DEFAULT_TR_GRID};
pub use config::{StreamConfig, TaskSpec, TrainSettings};
pub use report::{parse_tsv, render_summary, render_tsv, ReportRow, REPORT_HEADER};
pub use run::{distill_for_task, run_stream, RunOptions, RunPaths, StreamReport};
