//! Repeated comparison of pre-training arms from a shared initial model.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rayon::prelude::*;

use super::metrics::{evaluate, Metrics};
use super::train::{train_loop, EpochLog, TrainConfig};
use crate::alterations::AlterationKind;
use crate::dataset::TensorDataset;
use crate::error::{Error, Result};
use crate::mvit::{init_model, MvitConfig};
use crate::seed::derive_path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    WhiteNoise,
    Shuffle,
    Mix,
    Hybrid,
    None,
}

impl Arm {
    pub const ALL: [Arm; 5] = [Self::WhiteNoise, Self::Shuffle, Self::Mix, Self::Hybrid, Self::None];

    pub fn short_name(self) -> &'static str {
        match self {
            Self::WhiteNoise => "noise",
            Self::Shuffle => "shuffle",
            Self::Mix => "mix",
            Self::Hybrid => "hybrid",
            Self::None => "none",
        }
    }

    /// Row label in reports.
    pub fn title(self) -> &'static str {
        match self {
            Self::WhiteNoise => "White noise",
            Self::Shuffle => "Shuffling",
            Self::Mix => "Mixing",
            Self::Hybrid => "Hybrid",
            Self::None => "None",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&a| a == self).unwrap()
    }

    /// Pre-training stages for a total budget of `budget` epochs. Hybrid
    /// spends the first half on white noise and the rest on shuffling.
    pub fn schedule(self, budget: usize) -> Vec<(AlterationKind, usize)> {
        match self {
            Self::WhiteNoise => vec![(AlterationKind::WhiteNoise, budget)],
            Self::Shuffle => vec![(AlterationKind::Shuffle, budget)],
            Self::Mix => vec![(AlterationKind::Mix, budget)],
            Self::Hybrid => vec![
                (AlterationKind::WhiteNoise, budget / 2),
                (AlterationKind::Shuffle, budget - budget / 2),
            ],
            Self::None => Vec::new(),
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "control" => Ok(Self::None),
            "hybrid" => Ok(Self::Hybrid),
            other => other
                .parse::<AlterationKind>()
                .map(|k| match k {
                    AlterationKind::WhiteNoise => Self::WhiteNoise,
                    AlterationKind::Shuffle => Self::Shuffle,
                    AlterationKind::Mix => Self::Mix,
                })
                .map_err(|_| Error::config(format!("unknown arm `{other}`"))),
        }
    }
}

/// One pre-training stage as it ran.
#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub kind: AlterationKind,
    pub logs: Vec<EpochLog>,
    pub eoc: usize,
}

/// Fine-tuning outcome of one arm in one repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub arm: Arm,
    pub repeat: usize,
    pub repeat_seed: u64,
    /// Parameter hash of the shared initial model.
    pub init_hash: String,
    /// Encoder hash at the start of fine-tuning.
    pub finetune_start_hash: String,
    pub pretrain: Vec<StageResult>,
    pub logs: Vec<EpochLog>,
    pub eoc: usize,
    pub min_val_loss: f64,
    pub acc_at_eoc: f64,
    pub auc_at_eoc: Option<f64>,
    pub test: Option<Metrics>,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub model: MvitConfig,
    /// `epochs` is the pre-training budget per arm.
    pub tc_pre: TrainConfig,
    pub tc_fine: TrainConfig,
    pub master_seed: u64,
    pub arms: Vec<Arm>,
    pub repeats: Vec<usize>,
}

pub struct BenchData<'a> {
    pub pretrain: BTreeMap<AlterationKind, &'a TensorDataset>,
    /// Labeled task set; a validation split is carved per repeat.
    pub task: &'a TensorDataset,
    pub test: Option<&'a TensorDataset>,
}

pub struct RepeatOutcome {
    pub repeat: usize,
    /// Results in arm order, or the first failure among the repeat's arms.
    pub results: Result<Vec<RunResult>>,
}

pub fn repeat_seed(master: u64, repeat: usize) -> u64 {
    derive_path(master, &[repeat as u64])
}

/// One arm of one repeat: pre-train per schedule adopting EOC weights,
/// re-draw the head from the shared init, then fine-tune.
pub fn run_arm(bc: &BenchConfig, data: &BenchData<'_>, repeat: usize, arm: Arm) -> Result<RunResult> {
    let seed_r = repeat_seed(bc.master_seed, repeat);
    let mut state = init_model(&bc.model, seed_r)?;
    let init_hash = state.param_hash();

    let mut pretrain = Vec::new();
    for (stage, (kind, epochs)) in arm.schedule(bc.tc_pre.epochs).into_iter().enumerate() {
        if epochs == 0 {
            continue;
        }
        let ds = data
            .pretrain
            .get(&kind)
            .ok_or_else(|| Error::config(format!("no `{kind}` dataset for arm `{arm}`")))?;
        let kind_idx = AlterationKind::ALL.iter().position(|&k| k == kind).unwrap() as u64;
        let (train, val) = ds.stratified_split(bc.tc_pre.eval_split_fraction, derive_path(seed_r, &[1, kind_idx]))?;
        let tc = TrainConfig {
            epochs,
            seed: derive_path(seed_r, &[2, arm.index() as u64, stage as u64]),
            checkpoint: None,
            ..bc.tc_pre.clone()
        };
        state.reset_optimizer();
        let (run, best) = train_loop(&mut state, &bc.model, &train, &val, &tc)?;
        state = best;
        pretrain.push(StageResult {
            kind,
            logs: run.logs,
            eoc: run.eoc,
        });
    }
    if !pretrain.is_empty() {
        state.reinit_head(seed_r);
    }
    state.reset_optimizer();
    let finetune_start_hash = state.encoder_hash();

    let (train, val) = data
        .task
        .stratified_split(bc.tc_fine.eval_split_fraction, derive_path(seed_r, &[3]))?;
    let tc = TrainConfig {
        seed: derive_path(seed_r, &[4]),
        checkpoint: None,
        ..bc.tc_fine.clone()
    };
    let (run, best) = train_loop(&mut state, &bc.model, &train, &val, &tc)?;
    let test = data.test.map(|t| evaluate(&best, &bc.model, t)).transpose()?;
    Ok(RunResult {
        arm,
        repeat,
        repeat_seed: seed_r,
        init_hash,
        finetune_start_hash,
        pretrain,
        logs: run.logs,
        eoc: run.eoc,
        min_val_loss: run.min_val_loss,
        acc_at_eoc: run.acc_at_eoc,
        auc_at_eoc: run.auc_at_eoc,
        test,
    })
}

/// Run every (repeat, arm) job on the current rayon pool. `on_repeat` fires
/// once per repeat as soon as all its arms are done. A failing arm fails
/// only its own repeat.
pub fn run_benchmark(
    bc: &BenchConfig,
    data: &BenchData<'_>,
    on_repeat: &(dyn Fn(&RepeatOutcome) + Sync),
) -> Vec<RepeatOutcome> {
    let jobs: Vec<(usize, Arm)> = bc
        .repeats
        .iter()
        .flat_map(|&r| bc.arms.iter().map(move |&a| (r, a)))
        .collect();
    let pending: Mutex<HashMap<usize, Vec<(Arm, Result<RunResult>)>>> = Mutex::new(HashMap::new());
    let done: Mutex<Vec<RepeatOutcome>> = Mutex::new(Vec::new());
    jobs.par_iter().for_each(|&(repeat, arm)| {
        let res = run_arm(bc, data, repeat, arm);
        if let Err(e) = &res {
            log::error!("repeat {repeat}, arm {arm}: {e}");
        }
        let finished = {
            let mut p = pending.lock().unwrap();
            let slot = p.entry(repeat).or_default();
            slot.push((arm, res));
            if slot.len() == bc.arms.len() {
                p.remove(&repeat)
            } else {
                None
            }
        };
        if let Some(mut arms) = finished {
            arms.sort_by_key(|(a, _)| a.index());
            let results = arms.into_iter().map(|(_, r)| r).collect::<Result<Vec<_>>>();
            let outcome = RepeatOutcome { repeat, results };
            on_repeat(&outcome);
            done.lock().unwrap().push(outcome);
        }
    });
    let mut out = done.into_inner().unwrap();
    out.sort_by_key(|o| o.repeat);
    out
}
