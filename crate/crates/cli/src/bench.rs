use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use eegforge_core::alterations::AlterationKind;
use eegforge_core::config::KvConfig;
use eegforge_core::dataset::TensorDataset;
use eegforge_core::io::write_atomic;
use eegforge_core::mvit::{MvitConfig, OptimConfig};
use eegforge_core::protocol::persist::{read_suite, write_run};
use eegforge_core::protocol::{run_benchmark, BenchConfig, BenchData, RunResult, TrainConfig};
use eegforge_core::seed::{derive_path, hash_str};
use eegforge_core::stats::{summarize_suite, SuiteOptions};
use log::{error, info, warn};

use crate::args::{BenchArgs, ReportArgs, TrainArgs};
use crate::error::{io_err, CliError, Result};
use crate::forge::{dataset_file, TASK_FILE};
use crate::manifest;

pub const MANIFEST: &str = "bench_manifest.txt";
const VOLATILE: [&str; 2] = ["repeats", "completed_repeats"];

pub fn load_dataset(dir: &Path, name: &str) -> Result<TensorDataset> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(CliError::MissingDataset(path.display().to_string()));
    }
    Ok(TensorDataset::load(&path)?)
}

/// Preset architecture with input dimensions taken from the data.
pub fn model_for(t: &TrainArgs, dims: [usize; 3]) -> Result<MvitConfig> {
    let m = MvitConfig {
        n_channels: dims[0],
        n_scales: dims[1],
        time_columns: dims[2],
        ..t.model.config()
    };
    m.validate()?;
    Ok(m)
}

pub fn train_configs(t: &TrainArgs) -> (TrainConfig, TrainConfig) {
    let opt = OptimConfig {
        lr: t.lr,
        weight_decay: t.weight_decay,
        ..OptimConfig::default()
    };
    let base = TrainConfig {
        batch_size: t.batch_size,
        opt,
        eval_split_fraction: t.val_fraction,
        ..TrainConfig::default()
    };
    let pre = TrainConfig {
        epochs: t.pretrain_epochs,
        ..base.clone()
    };
    let fine = TrainConfig {
        epochs: t.finetune_epochs,
        ..base
    };
    (pre, fine)
}

pub fn record_train_args(m: &mut KvConfig, t: &TrainArgs) {
    m.set("config.model", format!("{:?}", t.model).to_lowercase());
    m.set("config.pretrain_epochs", t.pretrain_epochs);
    m.set("config.finetune_epochs", t.finetune_epochs);
    m.set("config.batch_size", t.batch_size);
    m.set("config.lr", t.lr);
    m.set("config.weight_decay", t.weight_decay);
    m.set("config.val_fraction", t.val_fraction);
}

/// Write the report files into `dir` and return the Markdown.
pub fn write_report(dir: &Path, results: &[RunResult], opts: &SuiteOptions) -> Result<String> {
    let rep = summarize_suite(results, opts);
    for w in &rep.warnings {
        warn!("{w}");
    }
    write_atomic(&dir.join("report.md"), rep.markdown.as_bytes())?;
    write_atomic(&dir.join("summary.csv"), rep.summary_csv.as_bytes())?;
    write_atomic(&dir.join("tests.csv"), rep.tests_csv.as_bytes())?;
    write_atomic(&dir.join("regression.csv"), rep.regression_csv.as_bytes())?;
    Ok(rep.markdown)
}

fn completed(m: &KvConfig) -> Vec<usize> {
    manifest::parse_list(m.get_str("completed_repeats").unwrap_or(""))
}

pub fn run(a: &BenchArgs) -> Result<()> {
    if a.arms.is_empty() || a.repeats == 0 {
        return Err(CliError::Manifest("need at least one arm and one repeat".into()));
    }
    let kinds: Vec<AlterationKind> = AlterationKind::ALL
        .into_iter()
        .filter(|k| {
            a.arms
                .iter()
                .any(|arm| arm.schedule(a.train.pretrain_epochs).iter().any(|&(s, e)| s == *k && e > 0))
        })
        .collect();
    let mut m = manifest::new_manifest("bench");
    m.set("data", a.data.display());
    m.set("seed", a.seed);
    m.set("arms", a.arms.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    m.set("config.test_fraction", a.test_fraction);
    m.set("config.pool_hybrid", !a.no_pool_hybrid);
    record_train_args(&mut m, &a.train);

    let mut sets = BTreeMap::new();
    for &k in &kinds {
        let name = dataset_file(k);
        sets.insert(k, load_dataset(&a.data, &name)?);
        manifest::record_hash(&mut m, &a.data.join(name))?;
    }
    let task_full = load_dataset(&a.data, TASK_FILE)?;
    manifest::record_hash(&mut m, &a.data.join(TASK_FILE))?;
    let (task, test) = if a.test_fraction > 0.0 {
        let (t, x) = task_full.stratified_split(a.test_fraction, derive_path(a.seed, &[hash_str("test-split")]))?;
        (t, Some(x))
    } else {
        (task_full, None)
    };

    let root = a.suite_dir();
    fs::create_dir_all(&root).map_err(io_err(&root))?;
    let mpath = root.join(MANIFEST);
    let mut done = Vec::new();
    if let Some(old) = manifest::load(&mpath)? {
        if manifest::without(&old, &VOLATILE) != manifest::without(&m, &VOLATILE) {
            return Err(CliError::Manifest(format!(
                "{} holds runs of a different configuration; choose another runs directory",
                root.display()
            )));
        }
        done = completed(&old);
        done.retain(|&r| r < a.repeats);
    }
    m.set("repeats", a.repeats);
    m.set("completed_repeats", manifest::format_list(&done));
    manifest::save(&m, &mpath)?;

    let todo: Vec<usize> = (0..a.repeats).filter(|r| !done.contains(r)).collect();
    if todo.len() < a.repeats {
        info!("resuming: {} of {} repeats already complete", a.repeats - todo.len(), a.repeats);
    }
    let (tc_pre, tc_fine) = train_configs(&a.train);
    let bc = BenchConfig {
        model: model_for(&a.train, task.dims())?,
        tc_pre,
        tc_fine,
        master_seed: a.seed,
        arms: a.arms.clone(),
        repeats: todo.clone(),
    };
    let data = BenchData {
        pretrain: sets.iter().map(|(&k, v)| (k, v)).collect(),
        task: &task,
        test: test.as_ref(),
    };
    let state = Mutex::new((m, done));
    let outcomes = run_benchmark(&bc, &data, &|o| {
        let Ok(results) = &o.results else { return };
        for r in results {
            if let Err(e) = write_run(&root, r) {
                error!("repeat {}: {e}", o.repeat);
                return;
            }
        }
        let mut guard = state.lock().unwrap();
        let (m, done) = &mut *guard;
        done.push(o.repeat);
        done.sort_unstable();
        m.set("completed_repeats", manifest::format_list(done));
        if let Err(e) = manifest::save(m, &mpath) {
            error!("{e}");
        }
        info!("repeat {} complete", o.repeat);
    });
    let failed = outcomes.iter().filter(|o| o.results.is_err()).count();

    let (_, done) = state.into_inner().unwrap();
    let results: Vec<RunResult> = read_suite(&root)?
        .into_iter()
        .filter(|r| done.contains(&r.repeat))
        .collect();
    let opts = SuiteOptions {
        pool_hybrid: !a.no_pool_hybrid,
    };
    print!("{}", write_report(&root, &results, &opts)?);
    if failed > 0 {
        return Err(CliError::RepeatsFailed {
            failed,
            total: todo.len(),
        });
    }
    Ok(())
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let root = a.suite_dir();
    if !root.is_dir() {
        return Err(CliError::Manifest(format!("no benchmark suite at {}", root.display())));
    }
    let mut results = read_suite(&root)?;
    if let Some(m) = manifest::load(&root.join(MANIFEST))? {
        let done = completed(&m);
        results.retain(|r| done.contains(&r.repeat));
    }
    if results.is_empty() {
        return Err(CliError::Manifest(format!("no completed runs under {}", root.display())));
    }
    let opts = SuiteOptions {
        pool_hybrid: !a.no_pool_hybrid,
    };
    print!("{}", write_report(&root, &results, &opts)?);
    Ok(())
}
