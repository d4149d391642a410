use std::fs;

use eegforge_core::io::write_atomic;
use eegforge_core::protocol::{run_pt_vs_npt, CompareConfig, CompareData};
use eegforge_core::seed::derive_path;
use log::info;

use crate::args::CompareArgs;
use crate::bench::{load_dataset, model_for, record_train_args, train_configs};
use crate::error::{io_err, Result};
use crate::forge::{dataset_file, TASK_FILE};
use crate::manifest;

pub const MANIFEST: &str = "compare_manifest.txt";

pub fn run(a: &CompareArgs) -> Result<()> {
    let out = a.out.clone().unwrap_or_else(|| a.runs_dir.join("compare"));
    let mut m = manifest::new_manifest("compare");
    m.set("data", a.data.display());
    m.set("seed", a.seed);
    m.set("pretrain", a.pretrain);
    m.set("config.patience", a.patience);
    m.set("config.test_fraction", a.test_fraction);
    record_train_args(&mut m, &a.train);

    let pre_name = dataset_file(a.pretrain);
    let pretrain = load_dataset(&a.data, &pre_name)?;
    manifest::record_hash(&mut m, &a.data.join(&pre_name))?;
    let task = load_dataset(&a.data, TASK_FILE)?;
    manifest::record_hash(&mut m, &a.data.join(TASK_FILE))?;
    fs::create_dir_all(&out).map_err(io_err(&out))?;
    manifest::save(&m, &out.join(MANIFEST))?;

    let (rest, test) = task.stratified_split(a.test_fraction, derive_path(a.seed, &[3]))?;
    let (train, val) = rest.stratified_split(a.train.val_fraction, derive_path(a.seed, &[4]))?;
    let (mut tc_pre, mut tc_fine) = train_configs(&a.train);
    tc_pre.seed = derive_path(a.seed, &[1]);
    tc_pre.epochs = tc_pre.epochs.max(1);
    tc_fine.seed = derive_path(a.seed, &[2]);
    tc_fine.early_stop_patience = Some(a.patience);
    // Both models start from the same draw, so with no pre-training they
    // coincide exactly.
    let init = derive_path(a.seed, &[0]);
    let cc = CompareConfig {
        model: model_for(&a.train, task.dims())?,
        pretrain_epochs: a.train.pretrain_epochs,
        tc_pre,
        tc_fine,
        pt_init_seed: init,
        npt_init_seed: init,
    };
    let data = CompareData {
        pretrain: &pretrain,
        train: &train,
        val: &val,
        test: &test,
    };
    let rep = run_pt_vs_npt(&cc, &data)?;
    let md = rep.to_markdown();
    write_atomic(&out.join("compare.md"), md.as_bytes())?;
    write_atomic(&out.join("compare.csv"), rep.to_csv().as_bytes())?;
    info!("wrote {}", out.display());
    print!("{md}");
    Ok(())
}
