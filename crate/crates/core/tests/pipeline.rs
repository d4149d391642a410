use std::collections::BTreeMap;

use eegforge_core::alterations::AlterationKind;
use eegforge_core::dataset::TensorDataset;
use eegforge_core::mvit::{checkpoint_load, checkpoint_save, init_model, MvitConfig, OptimConfig};
use eegforge_core::pipeline::{forge_all, task_dataset, SyntheticTask};
use eegforge_core::protocol::persist::{read_suite, write_run};
use eegforge_core::protocol::{run_benchmark, Arm, BenchConfig, BenchData, TrainConfig};
use eegforge_core::signal::exclude_labels;

struct Forged {
    sets: Vec<(AlterationKind, TensorDataset)>,
    task: TensorDataset,
}

fn forge(seed: u64) -> Forged {
    let t = SyntheticTask {
        n_records: 48,
        n_channels: 6,
        ..SyntheticTask::default()
    };
    let set = t.generate(seed).unwrap();
    let (pool, kept) = exclude_labels(&set, 0.5, seed + 1).unwrap();
    let sets = forge_all(&pool, &AlterationKind::ALL, 2, seed + 2, &t.cwt).unwrap();
    let task = task_dataset(&kept, &t.cwt).unwrap();
    Forged { sets, task }
}

fn model(dims: [usize; 3]) -> MvitConfig {
    MvitConfig {
        n_channels: dims[0],
        n_scales: dims[1],
        time_columns: dims[2],
        n_layers: 1,
        n_heads: 2,
        embed_dim: 8,
        encoder_mlp_dims: vec![16, 8],
        head_hidden_dims: vec![16],
        ..MvitConfig::eoec()
    }
}

#[test]
fn forging_is_deterministic_and_survives_a_round_trip() {
    let (a, b) = (forge(3), forge(3));
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(a.sets.len(), 3);
    for ((ka, da), (kb, db)) in a.sets.iter().zip(&b.sets) {
        assert_eq!(ka, kb);
        assert_eq!(da.encode(), db.encode());
        let path = dir.path().join(format!("{ka}.eegf"));
        da.save(&path).unwrap();
        assert_eq!(TensorDataset::load(&path).unwrap().encode(), da.encode());
        // Every pool window yields one sample per class.
        assert_eq!(da.class_counts()[0], da.class_counts()[1]);
    }
    assert_eq!(a.task.encode(), b.task.encode());
    assert_ne!(forge(4).task.encode(), a.task.encode());
}

#[test]
fn benchmark_is_reproducible_and_persists() {
    let f = forge(5);
    let opt = OptimConfig {
        lr: 1e-3,
        ..OptimConfig::default()
    };
    let tc = TrainConfig {
        epochs: 2,
        batch_size: 8,
        opt,
        ..TrainConfig::default()
    };
    let bc = BenchConfig {
        model: model(f.task.dims()),
        tc_pre: tc.clone(),
        tc_fine: TrainConfig { epochs: 3, ..tc },
        master_seed: 9,
        arms: vec![Arm::Hybrid, Arm::None],
        repeats: vec![0, 1],
    };
    let data = BenchData {
        pretrain: f.sets.iter().map(|(k, d)| (*k, d)).collect::<BTreeMap<_, _>>(),
        task: &f.task,
        test: None,
    };
    let first = run_benchmark(&bc, &data, &|_| {});
    let second = run_benchmark(&bc, &data, &|_| {});
    assert_eq!(first.len(), 2);
    let dir = tempfile::tempdir().unwrap();
    for (x, y) in first.iter().zip(&second) {
        let (rx, ry) = (x.results.as_ref().unwrap(), y.results.as_ref().unwrap());
        assert_eq!(rx, ry);
        // Both arms of a repeat start from the same initial model.
        assert_eq!(rx[0].init_hash, rx[1].init_hash);
        let kinds: Vec<_> = rx[0].pretrain.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, [AlterationKind::WhiteNoise, AlterationKind::Shuffle]);
        assert!(rx[1].pretrain.is_empty());
        for r in rx {
            write_run(dir.path(), r).unwrap();
        }
    }
    let back = read_suite(dir.path()).unwrap();
    assert_eq!(back.len(), 4);
    for b in &back {
        let orig = first[b.repeat].results.as_ref().unwrap().iter().find(|r| r.arm == b.arm).unwrap();
        assert_eq!(b.eoc, orig.eoc);
        assert_eq!(b.logs.len(), orig.logs.len());
        assert!((b.min_val_loss - orig.min_val_loss).abs() <= 1e-12 * orig.min_val_loss.abs());
    }
}

#[test]
fn checkpoint_round_trip_keeps_every_parameter() {
    let cfg = model([6, 25, 8]);
    let state = init_model(&cfg, 17).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    checkpoint_save(&state, &path).unwrap();
    let back = checkpoint_load(&path, &cfg, None).unwrap();
    assert_eq!(back.param_hash(), state.param_hash());

    let fresh = checkpoint_load(&path, &cfg, Some(1)).unwrap();
    assert_eq!(fresh.encoder_hash(), state.encoder_hash());
    assert_ne!(fresh.param_hash(), state.param_hash());

    let other = MvitConfig { embed_dim: 4, ..cfg };
    assert!(checkpoint_load(&path, &other, None).is_err());
}
