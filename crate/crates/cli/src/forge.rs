use std::fs;
use std::path::Path;

use eegforge_core::config::KvConfig;
use eegforge_core::cwt::CwtConfig;
use eegforge_core::pipeline::{cwt_from_kv, cwt_to_kv, forge_all, task_dataset, windows_from_csv_dir, SyntheticTask};
use eegforge_core::seed::derive_path;
use eegforge_core::signal::{exclude_labels, EegRecord, LabeledWindowSet, SeizureLabelConfig, WindowSpec};
use log::info;

use crate::args::ForgeArgs;
use crate::error::{io_err, Result};
use crate::manifest;

pub const MANIFEST: &str = "forge_manifest.txt";
pub const TASK_FILE: &str = "task.eegf";

pub fn dataset_file(kind: impl std::fmt::Display) -> String {
    format!("{kind}.eegf")
}

fn read_kv(path: Option<&Path>) -> Result<KvConfig> {
    match path {
        None => Ok(KvConfig::default()),
        Some(p) => Ok(KvConfig::parse(&fs::read_to_string(p).map_err(io_err(p))?)?),
    }
}

struct Source {
    /// Labeled windows, some of which may be masked.
    labeled: LabeledWindowSet,
    /// Windows that never had labels.
    unlabeled: Vec<EegRecord>,
    cwt: CwtConfig,
    snapshot: KvConfig,
}

fn synthetic(cfg: Option<&Path>, seed: u64) -> Result<Source> {
    let task = SyntheticTask::from_kv(&read_kv(cfg)?)?;
    let labeled = task.generate(derive_path(seed, &[0]))?;
    Ok(Source {
        labeled,
        unlabeled: Vec::new(),
        snapshot: task.to_kv(),
        cwt: task.cwt,
    })
}

fn csv_dir(dir: &Path, cfg: Option<&Path>) -> Result<Source> {
    let kv = read_kv(cfg)?;
    let d = SeizureLabelConfig::default();
    let window_s: f64 = kv.get_or("window_s", 4.0)?;
    let spec = WindowSpec::new(window_s, kv.get_or("stride_s", window_s)?);
    let label_cfg = SeizureLabelConfig {
        preictal_far_s: kv.get_or("preictal_far_s", d.preictal_far_s)?,
        preictal_near_s: kv.get_or("preictal_near_s", d.preictal_near_s)?,
        interictal_guard_s: kv.get_or("interictal_guard_s", d.interictal_guard_s)?,
    };
    let cwt = cwt_from_kv(&kv, CwtConfig::default())?;
    let (labeled, unlabeled) = windows_from_csv_dir(dir, &spec, &label_cfg)?;
    let mut snapshot = KvConfig::default();
    snapshot.set("window_s", spec.window_len_s);
    snapshot.set("stride_s", spec.stride_s);
    snapshot.set("preictal_far_s", label_cfg.preictal_far_s);
    snapshot.set("preictal_near_s", label_cfg.preictal_near_s);
    snapshot.set("interictal_guard_s", label_cfg.interictal_guard_s);
    cwt_to_kv(&cwt, &mut snapshot);
    Ok(Source {
        labeled,
        unlabeled,
        cwt,
        snapshot,
    })
}

pub fn run(a: &ForgeArgs) -> Result<()> {
    let src = match a.input.strip_prefix("synthetic") {
        Some("") => synthetic(a.config.as_deref(), a.seed)?,
        Some(rest) if rest.starts_with(':') => synthetic(Some(Path::new(&rest[1..])), a.seed)?,
        _ => csv_dir(Path::new(&a.input), a.config.as_deref())?,
    };

    let mut pool = src.unlabeled;
    let task = if src.labeled.n_labeled() > 0 {
        let (excluded, kept) = exclude_labels(&src.labeled, a.exclude_fraction, derive_path(a.seed, &[1]))?;
        pool.extend(excluded);
        Some(kept)
    } else {
        None
    };
    info!(
        "pool of {} windows, {} labeled task windows",
        pool.len(),
        task.as_ref().map_or(0, |t| t.n_labeled())
    );

    let forged = forge_all(&pool, &a.alterations, a.max_channels, derive_path(a.seed, &[2]), &src.cwt)?;
    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;

    let mut m = manifest::new_manifest("forge");
    m.set("input", &a.input);
    m.set("seed", a.seed);
    m.set(
        "alterations",
        a.alterations.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
    );
    m.set("max_channels", a.max_channels);
    m.set("exclude_fraction", a.exclude_fraction);
    m.set("pool_windows", pool.len());
    for k in src.snapshot.keys() {
        m.set(&format!("config.{k}"), src.snapshot.get_str(k).unwrap_or_default());
    }
    for (kind, ds) in &forged {
        let path = a.out.join(dataset_file(kind));
        ds.save(&path)?;
        manifest::record_hash(&mut m, &path)?;
        info!("wrote {} ({} samples)", path.display(), ds.len());
    }
    if let Some(t) = task {
        let ds = task_dataset(&t, &src.cwt)?;
        let path = a.out.join(TASK_FILE);
        ds.save(&path)?;
        manifest::record_hash(&mut m, &path)?;
        info!("wrote {} ({} samples)", path.display(), ds.len());
    }
    manifest::save(&m, &a.out.join(MANIFEST))?;
    Ok(())
}
