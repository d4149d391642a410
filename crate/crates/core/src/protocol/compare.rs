//! Pre-trained versus non-pre-trained model on one task.

use super::metrics::{evaluate, Metrics};
use super::train::{train_loop, TrainConfig};
use crate::dataset::TensorDataset;
use crate::error::Result;
use crate::mvit::{init_model, MvitConfig};
use crate::seed::derive_path;

#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub model: MvitConfig,
    /// Pre-training epochs for the PT model; 0 skips pre-training.
    pub pretrain_epochs: usize,
    pub tc_pre: TrainConfig,
    /// Shared by both models; normally with patience 5.
    pub tc_fine: TrainConfig,
    pub pt_init_seed: u64,
    pub npt_init_seed: u64,
}

pub struct CompareData<'a> {
    pub pretrain: &'a TensorDataset,
    pub train: &'a TensorDataset,
    pub val: &'a TensorDataset,
    pub test: &'a TensorDataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub val_at_eoc: Metrics,
    pub eoc: usize,
    pub test: Metrics,
    pub finetune_epochs_run: usize,
    pub finetune_epoch_seconds: f64,
    /// `(eoc, mean seconds per epoch)` of pre-training, if any ran.
    pub pretrain: Option<(usize, f64)>,
}

impl ModelReport {
    pub fn pretrain_seconds_to_eoc(&self) -> f64 {
        self.pretrain.map_or(0.0, |(e, s)| e as f64 * s)
    }

    pub fn finetune_seconds_to_eoc(&self) -> f64 {
        self.eoc as f64 * self.finetune_epoch_seconds
    }

    pub fn total_seconds_to_eoc(&self) -> f64 {
        self.pretrain_seconds_to_eoc() + self.finetune_seconds_to_eoc()
    }

    /// The seven comparison metrics, in report order.
    pub fn metrics(&self) -> [(&'static str, Option<f64>); 7] {
        [
            ("Validation loss at EOC", Some(self.val_at_eoc.loss)),
            ("Validation accuracy at EOC", Some(self.val_at_eoc.accuracy)),
            ("Validation AUC at EOC", self.val_at_eoc.auc),
            ("EOC", Some(self.eoc as f64)),
            ("Test loss", Some(self.test.loss)),
            ("Test accuracy", Some(self.test.accuracy)),
            ("Test AUC", self.test.auc),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub pt: ModelReport,
    pub npt: ModelReport,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.4}"))
}

fn eoc_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x}"))
}

impl CompareReport {
    pub fn eoc_ratio(&self) -> f64 {
        self.pt.eoc as f64 / self.npt.eoc as f64
    }

    /// `(label, pt, npt)` rows: seven metrics, the EOC ratio, then timing.
    pub fn rows(&self) -> Vec<(String, String, String)> {
        let mut rows: Vec<(String, String, String)> = self
            .pt
            .metrics()
            .iter()
            .zip(self.npt.metrics())
            .map(|(&(name, a), (_, b))| {
                let f = if name == "EOC" { eoc_cell } else { cell };
                (name.to_string(), f(a), f(b))
            })
            .collect();
        rows.push(("EOC ratio (PT/NPT)".into(), format!("{:.4}", self.eoc_ratio()), String::new()));
        let secs = |x: f64| format!("{x:.3}");
        let pre = |m: &ModelReport| m.pretrain.map_or("NA".to_string(), |(_, s)| secs(s));
        let pre_eoc = |m: &ModelReport| m.pretrain.map_or("NA".to_string(), |(e, _)| e.to_string());
        rows.push(("Pre-training time per epoch (s)".into(), pre(&self.pt), pre(&self.npt)));
        rows.push(("Pre-training EOC".into(), pre_eoc(&self.pt), pre_eoc(&self.npt)));
        rows.push((
            "Pre-training time to EOC (s)".into(),
            secs(self.pt.pretrain_seconds_to_eoc()),
            secs(self.npt.pretrain_seconds_to_eoc()),
        ));
        rows.push((
            "Fine-tuning time per epoch (s)".into(),
            secs(self.pt.finetune_epoch_seconds),
            secs(self.npt.finetune_epoch_seconds),
        ));
        rows.push((
            "Fine-tuning time to EOC (s)".into(),
            secs(self.pt.finetune_seconds_to_eoc()),
            secs(self.npt.finetune_seconds_to_eoc()),
        ));
        rows.push((
            "Total time to EOC (s)".into(),
            secs(self.pt.total_seconds_to_eoc()),
            secs(self.npt.total_seconds_to_eoc()),
        ));
        rows
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Metric | PT | NPT |\n|---|---|---|\n");
        for (name, a, b) in self.rows() {
            out.push_str(&format!("| {name} | {a} | {b} |\n"));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,pt,npt\n");
        for (name, a, b) in self.rows() {
            out.push_str(&format!("{name},{a},{b}\n"));
        }
        out
    }
}

fn run_model(cc: &CompareConfig, data: &CompareData<'_>, init_seed: u64, pretrain: bool) -> Result<ModelReport> {
    let mut state = init_model(&cc.model, init_seed)?;
    let mut pre = None;
    if pretrain && cc.pretrain_epochs > 0 {
        let (train, val) = data
            .pretrain
            .stratified_split(cc.tc_pre.eval_split_fraction, derive_path(init_seed, &[1]))?;
        let tc = TrainConfig {
            epochs: cc.pretrain_epochs,
            ..cc.tc_pre.clone()
        };
        let (run, best) = train_loop(&mut state, &cc.model, &train, &val, &tc)?;
        pre = Some((run.eoc, run.mean_epoch_seconds()));
        state = best;
        state.reinit_head(init_seed);
    }
    state.reset_optimizer();
    let (run, best) = train_loop(&mut state, &cc.model, data.train, data.val, &cc.tc_fine)?;
    let test = evaluate(&best, &cc.model, data.test)?;
    Ok(ModelReport {
        val_at_eoc: Metrics {
            loss: run.min_val_loss,
            accuracy: run.acc_at_eoc,
            auc: run.auc_at_eoc,
        },
        eoc: run.eoc,
        test,
        finetune_epochs_run: run.stopped_epoch(),
        finetune_epoch_seconds: run.mean_epoch_seconds(),
        pretrain: pre,
    })
}

/// Fine-tune a model initialised from pre-training EOC weights and one
/// initialised at random, with identical fine-tuning settings.
pub fn run_pt_vs_npt(cc: &CompareConfig, data: &CompareData<'_>) -> Result<CompareReport> {
    let (pt, npt) = rayon::join(
        || run_model(cc, data, cc.pt_init_seed, true),
        || run_model(cc, data, cc.npt_init_seed, false),
    );
    Ok(CompareReport { pt: pt?, npt: npt? })
}
