//! Training, evaluation and the two experiment protocols.

pub mod bench;
pub mod compare;
pub mod metrics;
pub mod persist;
pub mod train;

pub use bench::{repeat_seed, run_arm, run_benchmark, Arm, BenchConfig, BenchData, RepeatOutcome, RunResult, StageResult};
pub use compare::{run_pt_vs_npt, CompareConfig, CompareData, CompareReport, ModelReport};
pub use metrics::{auc, evaluate, metrics_from_logits, predict, Metrics};
pub use train::{argmin_val_loss, train_loop, EarlyStopping, EpochLog, TrainConfig, TrainRun};
