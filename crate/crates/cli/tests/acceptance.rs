//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use eegforge_core::alterations::{mix_pair, shuffle_channels, white_noise_replace, AlterationKind};
use eegforge_core::cwt::{cwt, CwtConfig};
use eegforge_core::io::file_sha256;
use eegforge_core::mvit::{adamw_step, init_model, loss_and_grad, InputBatch, Mode, MvitConfig, OptimConfig};
use eegforge_core::pipeline::{forge_all, task_dataset, SyntheticTask};
use eegforge_core::protocol::{
    auc, run_benchmark, run_pt_vs_npt, Arm, BenchConfig, BenchData, CompareConfig, CompareData, RunResult,
    TrainConfig,
};
use eegforge_core::seed::rng;
use eegforge_core::signal::{exclude_labels, EegRecord};
use eegforge_core::stats::{linear_regression, stars, summarize_suite, welch_t_test, SuiteOptions};
use eegforge_core::synthgen::{estimate_spectral_slope, generate_eeg, SynthConfig};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed.as_secs() < limit_s, || {
        format!("took {:.1}s, budget {limit_s}s", elapsed.as_secs_f64())
    })
}

fn synth(n_channels: usize, duration_s: f64, seed: u64) -> EegRecord {
    generate_eeg(&SynthConfig {
        n_channels,
        duration_s,
        sample_rate_hz: 256.0,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn sorted_rows(r: &EegRecord) -> Vec<Vec<u64>> {
    let mut rows: Vec<Vec<u64>> = r
        .data()
        .rows()
        .into_iter()
        .map(|x| x.iter().map(|v| v.to_bits()).collect())
        .collect();
    rows.sort();
    rows
}

// ---------------------------------------------------------------- 1

fn alterations() -> Check {
    let t0 = Instant::now();
    let mut g = rng(101);

    let r = synth(32, 2.0, 1);
    for _ in 0..200 {
        let (out, meta) = shuffle_channels(&r, &mut g).map_err(|e| e.to_string())?;
        ensure(sorted_rows(&out) == sorted_rows(&r), || "shuffle changed the row multiset".into())?;
        ensure(meta.affected.iter().enumerate().any(|(i, &p)| i != p), || {
            "identity permutation drawn".into()
        })?;
    }
    for c in 2..=6 {
        let r = synth(c, 1.0, c as u64);
        for _ in 0..500 {
            let (out, _) = shuffle_channels(&r, &mut g).map_err(|e| e.to_string())?;
            ensure(out.data() != r.data(), || format!("unchanged record with {c} channels"))?;
        }
    }

    // Chi-square over the five non-identity permutations of three channels;
    // with 4 degrees of freedom the survival function is e^{-x/2}(1 + x/2).
    let r3 = synth(3, 1.0, 9);
    let draws = 10_000;
    let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
    for _ in 0..draws {
        let (_, meta) = shuffle_channels(&r3, &mut g).map_err(|e| e.to_string())?;
        *counts.entry(meta.affected).or_default() += 1;
    }
    ensure(counts.len() == 5 && !counts.contains_key(&vec![0, 1, 2]), || {
        format!("expected the 5 non-identity permutations, saw {:?}", counts.keys())
    })?;
    let expected = draws as f64 / 5.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p_chi = (-chi2 / 2.0).exp() * (1.0 + chi2 / 2.0);
    ensure(p_chi > 0.01, || format!("chi-square {chi2:.2}, p {p_chi:.4}"))?;

    let mut worst_alt: f64 = 0.0;
    let mut worst_ctl: f64 = 0.0;
    for seed in 0..4 {
        let src = synth(8, 60.0, 20 + seed);
        let (out, meta) = white_noise_replace(&src, 3, &mut g).map_err(|e| e.to_string())?;
        let slopes = estimate_spectral_slope(&out).map_err(|e| e.to_string())?;
        for (i, s) in slopes.iter().enumerate() {
            if meta.affected.contains(&i) {
                worst_alt = worst_alt.max(s.abs());
            } else {
                worst_ctl = worst_ctl.max((s + 1.0).abs());
            }
        }
    }
    ensure(worst_alt <= 0.2 && worst_ctl <= 0.4, || {
        format!("slope error altered {worst_alt:.3}, control {worst_ctl:.3}")
    })?;

    let (a, b) = (synth(20, 1.0, 31), synth(20, 1.0, 32));
    for _ in 0..100 {
        let (ma, mb, meta, _) = mix_pair(&a, &b, 5, false, &mut g).map_err(|e| e.to_string())?;
        for ch in 0..20 {
            let swapped = meta.affected.contains(&ch);
            let (src_a, src_b) = if swapped { (&b, &a) } else { (&a, &b) };
            ensure(
                ma.data().row(ch) == src_a.data().row(ch) && mb.data().row(ch) == src_b.data().row(ch),
                || format!("row {ch} not conserved by mixing"),
            )?;
        }
    }
    within(t0.elapsed(), 120)?;
    Ok(format!(
        "chi2 p={p_chi:.3}, slope err altered {worst_alt:.3} / control {worst_ctl:.3}"
    ))
}

// ---------------------------------------------------------------- 2

/// Direct Riemann sum of the continuous transform over the whole signal.
fn cwt_oracle(x: &[f64], fs: f64, cfg: &CwtConfig) -> Vec<Vec<(f64, f64)>> {
    let dt = 1.0 / fs;
    let ratio = cfg.max_freq_hz / cfg.min_freq_hz;
    (0..cfg.n_scales)
        .map(|k| {
            let f = cfg.min_freq_hz * ratio.powf(k as f64 / (cfg.n_scales - 1) as f64);
            let s = cfg.omega0 / (2.0 * PI * f);
            (0..x.len())
                .map(|b| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (m, &v) in x.iter().enumerate() {
                        let t = (m as f64 - b as f64) * dt / s;
                        let env = PI.powf(-0.25) * (-0.5 * t * t).exp();
                        // conj(e^{iω0 t}) = e^{-iω0 t}
                        re += v * env * (cfg.omega0 * t).cos();
                        im -= v * env * (cfg.omega0 * t).sin();
                    }
                    let c = dt / s.sqrt();
                    (re * c, im * c)
                })
                .collect()
        })
        .collect()
}

fn cwt_correctness() -> Check {
    let t0 = Instant::now();
    let fs = 128.0;
    // 6 Hz is the lowest band edge a 256-sample signal admits at 128 Hz.
    let cfg = CwtConfig {
        min_freq_hz: 6.0,
        max_freq_hz: 40.0,
        ..CwtConfig::default()
    };
    let mut g = rng(202);
    let mut worst: f64 = 0.0;
    let signals: Vec<Vec<f64>> = vec![
        (0..256).map(|_| g.random::<f64>() * 2.0 - 1.0).collect(),
        (0..256).map(|i| (2.0 * PI * 10.0 * i as f64 / fs).sin()).collect(),
        (0..256)
            .map(|i| {
                let t = i as f64 / fs;
                (2.0 * PI * (4.0 + 8.0 * t) * t).cos()
            })
            .collect(),
        synth(2, 1.0, 5).data().row(0).to_vec(),
    ];
    for x in &signals {
        let got = cwt(x, fs, &cfg).map_err(|e| e.to_string())?;
        let want = cwt_oracle(x, fs, &cfg);
        let scale = want.iter().flatten().map(|(r, i)| r.hypot(*i)).fold(0.0, f64::max);
        for (k, row) in want.iter().enumerate() {
            for (b, &(re, im)) in row.iter().enumerate() {
                let c = got[[k, b]];
                worst = worst.max((c.re - re).hypot(c.im - im) / scale);
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max relative deviation {worst:.2e}"))?;

    // Peak-scale localisation of pure tones at five centre frequencies.
    let centres = cfg.center_frequencies();
    let n = 1024;
    for k in [2, 7, 12, 17, 22] {
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * centres[k] * i as f64 / fs).sin()).collect();
        let w = cwt(&x, fs, &cfg).map_err(|e| e.to_string())?;
        let power: Vec<f64> = (0..cfg.n_scales)
            .map(|s| (n / 4..3 * n / 4).map(|t| w[[s, t]].norm()).sum())
            .collect();
        let peak = (0..power.len()).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
        ensure(peak == k, || format!("{:.2} Hz peaks at scale {peak}, expected {k}", centres[k]))?;
    }
    within(t0.elapsed(), 60)?;
    Ok(format!("max relative deviation {worst:.1e}, 5/5 tones localised"))
}

// ---------------------------------------------------------------- 3

fn toy_model() -> MvitConfig {
    MvitConfig {
        n_channels: 4,
        n_scales: 5,
        time_columns: 4,
        n_layers: 1,
        n_heads: 2,
        embed_dim: 8,
        encoder_mlp_dims: vec![16, 8],
        head_hidden_dims: vec![16, 8],
        n_classes: 2,
        dropout_head: 0.5,
        dropout_encoder: 0.1,
    }
}

fn gradient_check() -> Check {
    let t0 = Instant::now();
    let cfg = toy_model();
    let mut state = init_model(&cfg, 303).map_err(|e| e.to_string())?;
    let mut g = rng(304);
    // Non-zero biases so every path carries signal.
    for p in &mut state.params {
        for v in &mut p.data {
            *v += 0.05 * (g.random::<f64>() - 0.5);
        }
    }
    let data: Vec<f64> = (0..3 * cfg.input_len()).map(|_| g.random::<f64>() * 2.0 - 1.0).collect();
    let batch = InputBatch::new(data, &cfg).map_err(|e| e.to_string())?;
    let labels = [0u8, 1, 1];
    let (_, grads) = loss_and_grad(&state, &cfg, &batch, &labels, Mode::Eval).map_err(|e| e.to_string())?;
    let h = 1e-4;
    let mut worst: (f64, String) = (0.0, String::new());
    for gi in 0..state.params.len() {
        let mut group: f64 = 0.0;
        for i in 0..state.params[gi].data.len() {
            let w = state.params[gi].data[i];
            state.params[gi].data[i] = w + h;
            let up = loss_and_grad(&state, &cfg, &batch, &labels, Mode::Eval).unwrap().0;
            state.params[gi].data[i] = w - h;
            let down = loss_and_grad(&state, &cfg, &batch, &labels, Mode::Eval).unwrap().0;
            state.params[gi].data[i] = w;
            let fd = (up - down) / (2.0 * h);
            let an = grads[gi][i];
            group = group.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-7));
        }
        if group > worst.0 {
            worst = (group, state.params[gi].name.clone());
        }
    }
    ensure(worst.0 <= 1e-3, || format!("group `{}` relative error {:.2e}", worst.1, worst.0))?;
    within(t0.elapsed(), 120)?;
    Ok(format!(
        "{} groups, worst relative error {:.1e} (`{}`)",
        state.params.len(),
        worst.0,
        worst.1
    ))
}

// ---------------------------------------------------------------- 4

fn adamw() -> Check {
    let cfg = toy_model();
    let opt = OptimConfig::default();
    let mut state = init_model(&cfg, 1).map_err(|e| e.to_string())?;
    for p in &mut state.params {
        p.data.iter_mut().for_each(|v| *v = 1.0);
    }
    let ones: Vec<Vec<f64>> = state.params.iter().map(|p| vec![1.0; p.data.len()]).collect();
    let zeros: Vec<Vec<f64>> = state.params.iter().map(|p| vec![0.0; p.data.len()]).collect();

    // First step, g = 1: m̂ = v̂ = 1 after bias correction.
    let want_step = 1.0 - 1e-4 * (1.0 / (1.0 + 1e-8)) - 1e-4 * 1e-4;
    let mut s1 = state.clone();
    adamw_step(&mut s1, &ones, &opt).map_err(|e| e.to_string())?;
    let err1 = s1.params.iter().flat_map(|p| &p.data).map(|v| (v - want_step).abs()).fold(0.0, f64::max);

    // Zero gradient: only the decoupled decay acts.
    let want_decay = 1.0 - 1e-4 * 1e-4;
    let mut s0 = state;
    adamw_step(&mut s0, &zeros, &opt).map_err(|e| e.to_string())?;
    let err0 = s0.params.iter().flat_map(|p| &p.data).map(|v| (v - want_decay).abs()).fold(0.0, f64::max);

    ensure(err1 <= 1e-12 && err0 <= 1e-12, || {
        format!("step error {err1:.2e}, decay error {err0:.2e}")
    })?;
    ensure(s1.step_count == 1, || "step counter not incremented".into())?;
    Ok(format!("w' = {:.12}, decay error {err0:.1e}", s1.params[0].data[0]))
}

// ---------------------------------------------------------------- 5

fn statistics() -> Check {
    let t = welch_t_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).map_err(|e| e.to_string())?;
    ensure(
        (t.t + 3.674).abs() <= 1e-3 && (t.df - 4.0).abs() <= 1e-9 && (t.p_two_tailed - 0.0214).abs() <= 1e-3,
        || format!("welch t={} df={} p={}", t.t, t.df, t.p_two_tailed),
    )?;

    let mut g = rng(505);
    let scores: Vec<f64> = (0..200).map(|_| (g.random::<f64>() * 50.0).round() / 50.0).collect();
    let labels: Vec<u8> = (0..200).map(|_| u8::from(g.random::<bool>())).collect();
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    let a = auc(&scores, &labels).map_err(|e| e.to_string())?;
    ensure((a - wins / pairs).abs() <= 1e-12, || format!("auc {a} vs oracle {}", wins / pairs))?;

    // Normal equations [n Σx; Σx Σx²]·[b0 b1]ᵀ = [Σy Σxy]ᵀ by Cramer's rule.
    let x: Vec<f64> = (0..50).map(|_| g.random::<f64>() * 10.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 0.3 * v - 1.0 + g.random::<f64>()).collect();
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let b0 = (sy * sxx - sx * sxy) / det;
    let b1 = (n * sxy - sx * sy) / det;
    let ybar = sy / n;
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - b0 - b1 * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - ybar).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let reg = linear_regression(&x, &y).map_err(|e| e.to_string())?;
    ensure(
        (reg.slope - b1).abs() <= 1e-10 && (reg.intercept - b0).abs() <= 1e-10 && (reg.r2 - r2).abs() <= 1e-10,
        || format!("ols {reg:?} vs ({b1}, {b0}, {r2})"),
    )?;
    Ok(format!("t={:.4} df={} p={:.4}, auc={a:.4}", t.t, t.df, t.p_two_tailed))
}

// ---------------------------------------------------------------- 6, 7

struct Desk {
    task: SyntheticTask,
    shuffle: eegforge_core::dataset::TensorDataset,
    labeled: eegforge_core::dataset::TensorDataset,
}

/// 32-channel two-class task with a posterior alpha effect; 80 % of the
/// labels are dropped into the unlabeled pre-training pool.
fn desk_data() -> Desk {
    let task = SyntheticTask {
        n_records: 800,
        alpha_amplitude: 0.2,
        ..SyntheticTask::default()
    };
    let set = task.generate(1).unwrap();
    let (pool, labeled) = exclude_labels(&set, 0.8, 2).unwrap();
    let mut forged = forge_all(&pool, &[AlterationKind::Shuffle], 5, 3, &task.cwt).unwrap();
    let labeled = task_dataset(&labeled, &task.cwt).unwrap();
    Desk {
        shuffle: forged.remove(0).1,
        labeled,
        task,
    }
}

fn desk_opt() -> OptimConfig {
    OptimConfig {
        lr: 1e-3,
        ..OptimConfig::default()
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2), ties dropped.
fn sign_test(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    let mut c = 1.0f64;
    let mut total = 0.0;
    for k in 0..=n {
        if k >= wins {
            total += c;
        }
        c = c * (n - k) as f64 / (k + 1) as f64;
    }
    total / 2f64.powi(n as i32)
}

fn shuffle_vs_none(desk: &Desk) -> Check {
    let t0 = Instant::now();
    let mut pre = BTreeMap::new();
    pre.insert(AlterationKind::Shuffle, &desk.shuffle);
    let bc = BenchConfig {
        model: MvitConfig::eoec(),
        tc_pre: TrainConfig {
            epochs: 40,
            opt: desk_opt(),
            ..TrainConfig::default()
        },
        tc_fine: TrainConfig {
            epochs: 40,
            opt: desk_opt(),
            ..TrainConfig::default()
        },
        master_seed: 5,
        arms: vec![Arm::Shuffle, Arm::None],
        repeats: (0..12).collect(),
    };
    let data = BenchData {
        pretrain: pre,
        task: &desk.labeled,
        test: None,
    };
    let mut pairs = Vec::new();
    for o in run_benchmark(&bc, &data, &|_| {}) {
        let rs = o.results.map_err(|e| format!("repeat {}: {e}", o.repeat))?;
        pairs.push((rs[0].eoc as f64, rs[1].eoc as f64));
    }
    let wins = pairs.iter().filter(|(s, n)| s < n).count();
    let losses = pairs.iter().filter(|(s, n)| s > n).count();
    let p = sign_test(wins, losses);
    let mut s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut n: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (ms, mn) = (median(&mut s), median(&mut n));
    let detail = format!(
        "{} repeats, median EOC shuffle {ms} vs none {mn}, {wins} wins / {losses} losses, sign-test p={p:.4}, {:.0}s",
        pairs.len(),
        t0.elapsed().as_secs_f64()
    );
    ensure(ms < mn && p < 0.05, || detail.clone())?;
    within(t0.elapsed(), 3600)?;
    Ok(detail)
}

fn pt_vs_npt(desk: &Desk) -> Check {
    let t0 = Instant::now();
    let (rest, test) = desk.labeled.stratified_split(0.2, 7).map_err(|e| e.to_string())?;
    let (train, val) = rest.stratified_split(0.2, 8).map_err(|e| e.to_string())?;
    let data = CompareData {
        pretrain: &desk.shuffle,
        train: &train,
        val: &val,
        test: &test,
    };
    let mut eocs = Vec::new();
    for i in 0..10u64 {
        let cc = CompareConfig {
            model: MvitConfig::eoec(),
            pretrain_epochs: 40,
            tc_pre: TrainConfig {
                epochs: 40,
                opt: desk_opt(),
                seed: 100 + i,
                ..TrainConfig::default()
            },
            tc_fine: TrainConfig {
                epochs: 40,
                opt: desk_opt(),
                early_stop_patience: Some(5),
                seed: 200 + i,
                ..TrainConfig::default()
            },
            pt_init_seed: 300 + i,
            npt_init_seed: 300 + i,
        };
        let r = run_pt_vs_npt(&cc, &data).map_err(|e| e.to_string())?;
        eocs.push((r.pt.eoc, r.npt.eoc));
    }
    let ok = eocs.iter().filter(|(p, n)| p <= n).count();
    let detail = format!(
        "EOC(PT) <= EOC(NPT) in {ok}/10 runs {eocs:?}, {:.0}s",
        t0.elapsed().as_secs_f64()
    );
    ensure(ok >= 7, || detail.clone())?;
    within(t0.elapsed(), 3600)?;
    Ok(detail)
}

// ---------------------------------------------------------------- 8, 9

const TINY: &str = "n_records = 60\nn_channels = 8\nalpha_amplitude = 0.5\n";

fn eegforge(dir: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_eegforge"))
        .current_dir(dir)
        .env_remove("EEGF_RUNS_DIR")
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("eegforge {args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Forge, bench with two repeats and compare, all with relative paths.
fn pipeline(dir: &Path) -> Result<(), String> {
    fs::write(dir.join("tiny.cfg"), TINY).map_err(|e| e.to_string())?;
    let common = ["--pretrain-epochs", "4", "--finetune-epochs", "4", "--lr", "1e-3"];
    eegforge(
        dir,
        &["forge", "--input", "synthetic:tiny.cfg", "--max-channels", "3", "--seed", "7", "--out", "data"],
    )?;
    let mut bench = vec!["bench", "--data", "data", "--repeats", "2", "--seed", "11", "--runs-dir", "runs"];
    bench.extend(common);
    eegforge(dir, &bench)?;
    let mut compare = vec!["compare", "--data", "data", "--seed", "3", "--out", "compare"];
    compare.extend(common);
    eegforge(dir, &compare)?;
    Ok(())
}

/// `relative path -> sha256` for every file under `root`, timing-bearing
/// compare outputs excluded.
fn tree_hashes(root: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                if !rel.starts_with("compare/compare.") {
                    out.insert(rel, file_sha256(&p).map_err(|e| e.to_string())?);
                }
            }
        }
    }
    Ok(out)
}

fn determinism(a: &Path, b: &Path) -> Check {
    pipeline(a)?;
    pipeline(b)?;
    let (ha, hb) = (tree_hashes(a)?, tree_hashes(b)?);
    let runs = ha.keys().filter(|k| k.ends_with("summary.txt") && k.starts_with("runs/")).count();
    ensure(runs == 10, || format!("expected 10 run summaries, found {runs}"))?;
    let diff: Vec<&String> = ha.keys().filter(|k| hb.get(*k) != ha.get(*k)).collect();
    ensure(ha.len() == hb.len() && diff.is_empty(), || format!("differing files: {diff:?}"))?;
    Ok(format!("{} files identical across reruns", ha.len()))
}

fn fake_run(arm: Arm, repeat: usize, eoc: usize, loss: f64) -> RunResult {
    RunResult {
        arm,
        repeat,
        repeat_seed: repeat as u64,
        init_hash: String::new(),
        finetune_start_hash: String::new(),
        pretrain: Vec::new(),
        logs: Vec::new(),
        eoc,
        min_val_loss: loss,
        acc_at_eoc: 0.8,
        auc_at_eoc: Some(0.9),
        test: None,
    }
}

fn report_fidelity(a: &Path) -> Check {
    let md = fs::read_to_string(a.join("runs/default/report.md")).map_err(|e| e.to_string())?;
    for row in ["| White noise |", "| Shuffling |", "| Mixing |", "| Hybrid |", "| Pooled |", "| None |"] {
        ensure(md.contains(row), || format!("bench report lacks row `{row}`"))?;
    }
    for col in ["EOC", "Min val loss", "Val acc at EOC", "Val AUC at EOC"] {
        ensure(md.contains(col), || format!("bench report lacks column `{col}`"))?;
    }
    ensure(md.contains("**** p < 0.0001"), || "star legend missing".into())?;
    let tiers = [(0.2, ""), (0.04, "*"), (0.009, "**"), (0.0009, "***"), (0.00009, "****")];
    for (p, want) in tiers {
        ensure(stars(p) == want, || format!("stars({p}) = {:?}", stars(p)))?;
    }

    // Well separated arms must carry stars in the summary cells.
    let mut fake = Vec::new();
    for r in 0..6 {
        fake.push(fake_run(Arm::Shuffle, r, 10 + r % 2, 0.30 + 0.01 * r as f64));
        fake.push(fake_run(Arm::None, r, 30 + r % 3, 0.50 + 0.01 * r as f64));
    }
    let rep = summarize_suite(&fake, &SuiteOptions::default());
    let shuffling = rep.markdown.lines().find(|l| l.starts_with("| Shuffling |")).unwrap_or("");
    ensure(shuffling.contains("****"), || format!("no stars in `{shuffling}`"))?;

    let cmp = fs::read_to_string(a.join("compare/compare.md")).map_err(|e| e.to_string())?;
    let metrics = [
        "Validation loss at EOC",
        "Validation accuracy at EOC",
        "Validation AUC at EOC",
        "| EOC |",
        "Test loss",
        "Test accuracy",
        "Test AUC",
        "EOC ratio (PT/NPT)",
        "Total time to EOC",
    ];
    for m in metrics {
        ensure(cmp.contains(m), || format!("compare report lacks `{m}`"))?;
    }
    Ok("six-row bench layout with four star tiers; seven-metric compare layout".into())
}

// ----------------------------------------------------------------

fn run(n: usize, name: &str, f: impl FnOnce() -> Check) -> bool {
    let t0 = Instant::now();
    let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = t0.elapsed().as_secs_f64();
    match &res {
        Ok(d) => println!("criterion {n} PASS  {name} ({secs:.1}s): {d}"),
        Err(d) => println!("criterion {n} FAIL  {name} ({secs:.1}s): {d}"),
    }
    res.is_ok()
}

/// Optional criterion numbers on the command line select a subset.
fn main() {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: usize| only.is_empty() || only.contains(&n);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ok = Vec::new();
    let quick: [(usize, &str, fn() -> Check); 5] = [
        (1, "alteration invariants", alterations),
        (2, "wavelet transform", cwt_correctness),
        (3, "gradient check", gradient_check),
        (4, "AdamW by hand", adamw),
        (5, "statistics oracles", statistics),
    ];
    for (n, name, f) in quick {
        if want(n) {
            ok.push(run(n, name, f));
        }
    }
    if want(6) || want(7) {
        let desk = desk_data();
        eprintln!(
            "desk task: {} labeled, {} pre-training samples, alpha {}",
            desk.labeled.len(),
            desk.shuffle.len(),
            desk.task.alpha_amplitude
        );
        if want(6) {
            ok.push(run(6, "shuffle pre-training converges earlier", || shuffle_vs_none(&desk)));
        }
        if want(7) {
            ok.push(run(7, "PT converges no later than NPT", || pt_vs_npt(&desk)));
        }
    }
    if want(8) || want(9) {
        ok.push(run(8, "determinism", || determinism(a.path(), b.path())));
    }
    if want(9) {
        ok.push(run(9, "report fidelity", || report_fidelity(a.path())));
    }
    let passed = ok.iter().filter(|&&x| x).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed != ok.len() {
        std::process::exit(1);
    }
}
