//! On-disk run results: `<root>/<repeat>/<arm>/{epochs.csv, summary.txt}`.
//!
//! Floats are written in shortest round-trip form, so reading a run back
//! yields exactly the values that were written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::bench::{Arm, RunResult, StageResult};
use super::metrics::Metrics;
use super::train::{argmin_val_loss, EpochLog};
use crate::alterations::AlterationKind;
use crate::error::{Error, Result};
use crate::io::write_atomic;

const FINETUNE: &str = "finetune";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn parse_opt(s: &str) -> std::result::Result<Option<f64>, ()> {
    if s == "NA" {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| ())
    }
}

pub fn run_dir(root: &Path, repeat: usize, arm: Arm) -> PathBuf {
    root.join(repeat.to_string()).join(arm.short_name())
}

pub fn epochs_csv(r: &RunResult) -> String {
    let mut out = String::from("phase,epoch,train_loss,val_loss,val_acc,val_auc\n");
    let mut put = |phase: &str, l: &EpochLog| {
        let _ = writeln!(
            out,
            "{phase},{},{},{},{},{}",
            l.epoch,
            l.train_loss,
            l.val_loss,
            l.val_acc,
            opt(l.val_auc)
        );
    };
    for (i, s) in r.pretrain.iter().enumerate() {
        let phase = format!("pretrain{}:{}", i + 1, s.kind);
        for l in &s.logs {
            put(&phase, l);
        }
    }
    for l in &r.logs {
        put(FINETUNE, l);
    }
    out
}

pub fn summary_txt(r: &RunResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "arm: {}", r.arm);
    let _ = writeln!(out, "repeat: {}", r.repeat);
    let _ = writeln!(out, "repeat_seed: {}", r.repeat_seed);
    let _ = writeln!(out, "init_hash: {}", r.init_hash);
    let _ = writeln!(out, "finetune_start_hash: {}", r.finetune_start_hash);
    let stages: Vec<String> = r.pretrain.iter().map(|s| format!("{}:{}", s.kind, s.eoc)).collect();
    let _ = writeln!(out, "pretrain_eoc: {}", if stages.is_empty() { "NA".into() } else { stages.join(",") });
    let _ = writeln!(out, "eoc: {}", r.eoc);
    let _ = writeln!(out, "min_val_loss: {}", r.min_val_loss);
    let _ = writeln!(out, "acc_at_eoc: {}", r.acc_at_eoc);
    let _ = writeln!(out, "auc_at_eoc: {}", opt(r.auc_at_eoc));
    let _ = writeln!(out, "epochs_run: {}", r.logs.len());
    if let Some(t) = &r.test {
        let _ = writeln!(out, "test_loss: {}", t.loss);
        let _ = writeln!(out, "test_acc: {}", t.accuracy);
        let _ = writeln!(out, "test_auc: {}", opt(t.auc));
    }
    out
}

pub fn write_run(root: &Path, r: &RunResult) -> Result<PathBuf> {
    let dir = run_dir(root, r.repeat, r.arm);
    fs::create_dir_all(&dir)?;
    write_atomic(&dir.join("epochs.csv"), epochs_csv(r).as_bytes())?;
    write_atomic(&dir.join("summary.txt"), summary_txt(r).as_bytes())?;
    Ok(dir)
}

fn parse_logs(text: &str, path: &str) -> Result<Vec<(String, EpochLog)>> {
    let mut lines = text.lines();
    if lines.next() != Some("phase,epoch,train_loss,val_loss,val_acc,val_auc") {
        return Err(Error::format(path, "unexpected header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            let bad = || Error::format(path, format!("bad row {}", i + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok((
                f[0].to_string(),
                EpochLog {
                    epoch: f[1].parse().map_err(|_| bad())?,
                    train_loss: num(f[2])?,
                    val_loss: num(f[3])?,
                    val_acc: num(f[4])?,
                    val_auc: parse_opt(f[5]).map_err(|_| bad())?,
                },
            ))
        })
        .collect()
}

fn parse_summary(text: &str) -> Vec<(&str, &str)> {
    text.lines()
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim(), v.trim()))
        .collect()
}

/// Read one run back and check that its stored EOC matches its log.
pub fn read_run(dir: &Path) -> Result<RunResult> {
    let csv_path = dir.join("epochs.csv");
    let sum_path = dir.join("summary.txt");
    let p = sum_path.display().to_string();
    let summary = fs::read_to_string(&sum_path)?;
    let kv = parse_summary(&summary);
    let get = |k: &str| {
        kv.iter()
            .find(|(key, _)| *key == k)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::format(&p, format!("missing `{k}`")))
    };
    let bad = |k: &str| Error::format(&p, format!("bad value for `{k}`"));
    let num = |k: &str| get(k)?.parse::<f64>().map_err(|_| bad(k));
    let int = |k: &str| get(k)?.parse::<u64>().map_err(|_| bad(k));

    let rows = parse_logs(&fs::read_to_string(&csv_path)?, &csv_path.display().to_string())?;
    let mut pretrain: Vec<StageResult> = Vec::new();
    let mut logs = Vec::new();
    for (phase, l) in rows {
        if phase == FINETUNE {
            logs.push(l);
            continue;
        }
        let kind: AlterationKind = phase
            .split_once(':')
            .map(|(_, k)| k)
            .ok_or_else(|| bad("phase"))?
            .parse()?;
        let n = pretrain.len();
        match pretrain.last_mut() {
            Some(s) if format!("pretrain{n}:{}", s.kind) == phase => s.logs.push(l),
            _ => pretrain.push(StageResult {
                kind,
                logs: vec![l],
                eoc: 0,
            }),
        }
    }
    let eocs = get("pretrain_eoc")?;
    if eocs != "NA" {
        let parts: Vec<&str> = eocs.split(',').collect();
        if parts.len() != pretrain.len() {
            return Err(bad("pretrain_eoc"));
        }
        for (s, part) in pretrain.iter_mut().zip(parts) {
            s.eoc = part
                .split_once(':')
                .and_then(|(_, e)| e.parse().ok())
                .ok_or_else(|| bad("pretrain_eoc"))?;
        }
    }

    let test = if kv.iter().any(|(k, _)| *k == "test_loss") {
        Some(Metrics {
            loss: num("test_loss")?,
            accuracy: num("test_acc")?,
            auc: parse_opt(get("test_auc")?).map_err(|_| bad("test_auc"))?,
        })
    } else {
        None
    };
    let r = RunResult {
        arm: get("arm")?.parse()?,
        repeat: int("repeat")? as usize,
        repeat_seed: int("repeat_seed")?,
        init_hash: get("init_hash")?.to_string(),
        finetune_start_hash: get("finetune_start_hash")?.to_string(),
        pretrain,
        eoc: int("eoc")? as usize,
        min_val_loss: num("min_val_loss")?,
        acc_at_eoc: num("acc_at_eoc")?,
        auc_at_eoc: parse_opt(get("auc_at_eoc")?).map_err(|_| bad("auc_at_eoc"))?,
        logs,
        test,
    };
    let best = argmin_val_loss(&r.logs).ok_or_else(|| Error::format(&p, "empty epoch log"))?;
    if r.logs[best].epoch != r.eoc || r.logs[best].val_loss != r.min_val_loss {
        return Err(Error::format(&p, "stored EOC disagrees with the epoch log"));
    }
    Ok(r)
}

/// All runs under `root`, ordered by repeat then arm.
pub fn read_suite(root: &Path) -> Result<Vec<RunResult>> {
    let mut repeats: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        if let Some(r) = entry.file_name().to_str().and_then(|s| s.parse::<usize>().ok()) {
            if entry.file_type()?.is_dir() {
                repeats.push((r, entry.path()));
            }
        }
    }
    repeats.sort();
    let mut out = Vec::new();
    for (_, dir) in repeats {
        for arm in Arm::ALL {
            let d = dir.join(arm.short_name());
            if d.join("summary.txt").exists() {
                out.push(read_run(&d)?);
            }
        }
    }
    Ok(out)
}
