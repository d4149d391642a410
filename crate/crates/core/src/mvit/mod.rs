//! Multi-channel vision transformer.
//!
//! One independent transformer encoder per EEG channel reads that channel's
//! scalogram as a sequence of `time_columns` patches, each patch being one
//! time column of `n_scales` magnitudes. Each encoder is
//!
//! ```text
//! tokens = patches · W_patch + b_patch + pos
//! repeat n_layers:
//!     x += drop(attn(LN1(x)) · W_o + b_o)
//!     x += drop(MLP(LN2(x)))            # GELU hidden layers, back to embed_dim
//! feature = mean over tokens of LN_f(x)
//! ```
//!
//! The per-channel features are concatenated and fed to a ReLU decision head
//! with dropout between hidden layers, producing two logits.
//!
//! The encoder MLP is `embed → mlp_dims[..len-1] → embed`: the last entry of
//! the configured list names the output width, which must stay equal to the
//! embedding size for the residual connection, so it is ignored when the two
//! differ.

pub mod autograd;
pub mod checkpoint;
pub mod optim;

use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seed;
use autograd::{Graph, Var};

pub use checkpoint::{checkpoint_load, checkpoint_save};
pub use optim::{adamw_step, OptimConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct MvitConfig {
    pub n_channels: usize,
    pub n_scales: usize,
    pub time_columns: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub embed_dim: usize,
    pub encoder_mlp_dims: Vec<usize>,
    pub head_hidden_dims: Vec<usize>,
    pub n_classes: usize,
    pub dropout_head: f64,
    pub dropout_encoder: f64,
}

impl MvitConfig {
    /// Small model for 32-channel, 25 × 8 scalograms.
    pub fn eoec() -> Self {
        Self {
            n_channels: 32,
            n_scales: 25,
            time_columns: 8,
            n_layers: 1,
            n_heads: 2,
            embed_dim: 8,
            encoder_mlp_dims: vec![16, 8],
            head_hidden_dims: vec![128, 64],
            n_classes: 2,
            dropout_head: 0.5,
            dropout_encoder: 0.1,
        }
    }

    /// Larger model for 20-channel, 25 × 40 scalograms.
    pub fn tusz() -> Self {
        Self {
            n_channels: 20,
            n_scales: 25,
            time_columns: 40,
            n_layers: 8,
            n_heads: 4,
            embed_dim: 40,
            encoder_mlp_dims: vec![80, 40],
            head_hidden_dims: vec![512, 256],
            n_classes: 2,
            dropout_head: 0.5,
            dropout_encoder: 0.1,
        }
    }

    pub fn input_len(&self) -> usize {
        self.n_channels * self.n_scales * self.time_columns
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.n_channels,
            self.n_scales,
            self.time_columns,
            self.n_layers,
            self.n_heads,
            self.embed_dim,
        ];
        if dims.contains(&0) {
            return Err(Error::config("model dimensions must be positive"));
        }
        if self.embed_dim % self.n_heads != 0 {
            return Err(Error::config(format!(
                "embed_dim {} is not divisible by n_heads {}",
                self.embed_dim, self.n_heads
            )));
        }
        if self.encoder_mlp_dims.is_empty()
            || self.encoder_mlp_dims.contains(&0)
            || self.head_hidden_dims.contains(&0)
        {
            return Err(Error::config("MLP dimensions must be positive"));
        }
        if self.n_classes != 2 {
            return Err(Error::config("only binary classification is supported"));
        }
        for p in [self.dropout_head, self.dropout_encoder] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::config(format!("dropout rate {p} outside [0, 1)")));
            }
        }
        Ok(())
    }

    /// Hidden widths of the encoder MLP.
    pub fn encoder_hidden(&self) -> &[usize] {
        &self.encoder_mlp_dims[..self.encoder_mlp_dims.len() - 1]
    }

    fn encoder_mlp_widths(&self) -> Vec<usize> {
        let mut w = vec![self.embed_dim];
        w.extend_from_slice(self.encoder_hidden());
        if self.encoder_hidden().is_empty() {
            // A single entry is read as the hidden width.
            w.push(self.encoder_mlp_dims[0]);
        }
        w.push(self.embed_dim);
        w
    }

    fn head_widths(&self) -> Vec<usize> {
        let mut w = vec![self.n_channels * self.embed_dim];
        w.extend_from_slice(&self.head_hidden_dims);
        w.push(self.n_classes);
        w
    }

    /// `(name, shape)` of every trainable tensor, in storage order.
    pub fn param_specs(&self) -> Vec<(String, Vec<usize>)> {
        let (d, s, t) = (self.embed_dim, self.n_scales, self.time_columns);
        let mut out = Vec::new();
        for c in 0..self.n_channels {
            let p = format!("enc{c}");
            out.push((format!("{p}.patch.w"), vec![s, d]));
            out.push((format!("{p}.patch.b"), vec![d]));
            out.push((format!("{p}.pos"), vec![t, d]));
            for l in 0..self.n_layers {
                let q = format!("{p}.l{l}");
                out.push((format!("{q}.ln1.g"), vec![d]));
                out.push((format!("{q}.ln1.b"), vec![d]));
                out.push((format!("{q}.attn.qkv.w"), vec![d, 3 * d]));
                out.push((format!("{q}.attn.qkv.b"), vec![3 * d]));
                out.push((format!("{q}.attn.out.w"), vec![d, d]));
                out.push((format!("{q}.attn.out.b"), vec![d]));
                out.push((format!("{q}.ln2.g"), vec![d]));
                out.push((format!("{q}.ln2.b"), vec![d]));
                for (i, w) in self.encoder_mlp_widths().windows(2).enumerate() {
                    out.push((format!("{q}.mlp.fc{i}.w"), vec![w[0], w[1]]));
                    out.push((format!("{q}.mlp.fc{i}.b"), vec![w[1]]));
                }
            }
            out.push((format!("{p}.lnf.g"), vec![d]));
            out.push((format!("{p}.lnf.b"), vec![d]));
        }
        for (i, w) in self.head_widths().windows(2).enumerate() {
            out.push((format!("head.fc{i}.w"), vec![w[0], w[1]]));
            out.push((format!("head.fc{i}.b"), vec![w[1]]));
        }
        out
    }
}

pub fn is_head_param(name: &str) -> bool {
    name.starts_with("head.")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    /// `(rows, cols)` view used by the graph; vectors become `1 × n`.
    fn dims2(&self) -> (usize, usize) {
        match self.shape.as_slice() {
            [n] => (1, *n),
            [r, c] => (*r, *c),
            _ => unreachable!("model tensors are rank 1 or 2"),
        }
    }
}

/// Parameters plus AdamW moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub params: Vec<Tensor>,
    pub adam_m: Vec<Vec<f64>>,
    pub adam_v: Vec<Vec<f64>>,
    pub step_count: u64,
    index: HashMap<String, usize>,
}

impl ModelState {
    pub(crate) fn from_parts(
        params: Vec<Tensor>,
        adam_m: Vec<Vec<f64>>,
        adam_v: Vec<Vec<f64>>,
        step_count: u64,
    ) -> Self {
        let index = params
            .iter()
            .enumerate()
            .map(|(i, t)| (t.name.clone(), i))
            .collect();
        Self {
            params,
            adam_m,
            adam_v,
            step_count,
            index,
        }
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.index.get(name).map(|&i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index.get(name).map(|&i| &mut self.params[i])
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|t| t.data.len()).sum()
    }

    /// SHA-256 over names and parameter bits selected by `filter`.
    pub fn hash_where(&self, filter: impl Fn(&str) -> bool) -> String {
        let mut h = Sha256::new();
        for t in self.params.iter().filter(|t| filter(&t.name)) {
            h.update(t.name.as_bytes());
            for v in &t.data {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn param_hash(&self) -> String {
        self.hash_where(|_| true)
    }

    pub fn encoder_hash(&self) -> String {
        self.hash_where(|n| !is_head_param(n))
    }

    /// Zero the optimizer moments and step counter, keeping parameters.
    pub fn reset_optimizer(&mut self) {
        for m in self.adam_m.iter_mut().chain(self.adam_v.iter_mut()) {
            m.fill(0.0);
        }
        self.step_count = 0;
    }

    /// Redraw the decision-head tensors exactly as `init_model(cfg, seed)`
    /// would and clear their moments.
    pub fn reinit_head(&mut self, seed_value: u64) {
        for (i, t) in self.params.iter_mut().enumerate() {
            if is_head_param(&t.name) {
                t.data = init_tensor(&t.name, &t.shape, seed_value);
                self.adam_m[i].fill(0.0);
                self.adam_v[i].fill(0.0);
            }
        }
    }

    /// Name of the first tensor containing a non-finite value.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.params
            .iter()
            .find(|t| t.data.iter().any(|v| !v.is_finite()))
            .map(|t| t.name.as_str())
    }
}

fn init_tensor(name: &str, shape: &[usize], seed_value: u64) -> Vec<f64> {
    let len: usize = shape.iter().product();
    let leaf = name.rsplit('.').next().unwrap_or("");
    if name.ends_with(".g") {
        return vec![1.0; len];
    }
    if shape.len() == 1 {
        return vec![0.0; len];
    }
    // Weight matrices and positional embeddings: U(-1/sqrt(fan_in), ..).
    let fan_in = if leaf == "pos" { shape[1] } else { shape[0] };
    let bound = 1.0 / (fan_in as f64).sqrt();
    let mut rng = seed::rng_for(seed_value, seed::hash_str(name));
    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
}

/// Fresh model: fan-in scaled uniform weights, zero biases, unit layer-norm
/// gains, zero moments. Every tensor has its own random stream keyed by its
/// name, so re-drawing one tensor never disturbs the others.
pub fn init_model(cfg: &MvitConfig, seed_value: u64) -> Result<ModelState> {
    cfg.validate()?;
    let params: Vec<Tensor> = cfg
        .param_specs()
        .into_iter()
        .map(|(name, shape)| Tensor {
            data: init_tensor(&name, &shape, seed_value),
            name,
            shape,
        })
        .collect();
    let zeros: Vec<Vec<f64>> = params.iter().map(|t| vec![0.0; t.data.len()]).collect();
    Ok(ModelState::from_parts(params, zeros.clone(), zeros, 0))
}

/// A batch of scalogram tensors, `[batch × n_channels × n_scales × time_columns]`
/// flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBatch {
    pub data: Vec<f64>,
    pub len: usize,
}

impl InputBatch {
    pub fn new(data: Vec<f64>, cfg: &MvitConfig) -> Result<Self> {
        let per = cfg.input_len();
        if data.is_empty() || data.len() % per != 0 {
            return Err(Error::ShapeMismatch(format!(
                "batch of {} values is not a positive multiple of {} ({}×{}×{})",
                data.len(),
                per,
                cfg.n_channels,
                cfg.n_scales,
                cfg.time_columns
            )));
        }
        Ok(Self {
            len: data.len() / per,
            data,
        })
    }
}

/// Dropout configuration for one forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Eval,
    Train { dropout_seed: u64 },
}

struct Built {
    logits: Var,
    features: Vec<Var>,
    param_vars: Vec<Var>,
}

fn build(g: &mut Graph, state: &ModelState, cfg: &MvitConfig, batch: &InputBatch, mode: Mode) -> Result<Built> {
    if batch.data.len() != batch.len * cfg.input_len() {
        return Err(Error::ShapeMismatch("batch length disagrees with model input".into()));
    }
    let expected = cfg.param_specs();
    if expected.len() != state.params.len()
        || expected
            .iter()
            .zip(&state.params)
            .any(|((n, s), t)| *n != t.name || *s != t.shape)
    {
        return Err(Error::ShapeMismatch("model state does not match configuration".into()));
    }

    let param_vars: Vec<Var> = state
        .params
        .iter()
        .map(|t| {
            let (r, c) = t.dims2();
            g.param(t.data.clone(), r, c)
        })
        .collect();
    let p = |name: &str| param_vars[state.index[name]];

    let mut rng = match mode {
        Mode::Train { dropout_seed } => Some(seed::rng(dropout_seed)),
        Mode::Eval => None,
    };
    let mut drop = |g: &mut Graph, x: Var, rate: f64| match rng.as_mut() {
        Some(r) => g.dropout(x, rate, r),
        None => x,
    };

    let (b, c_n, s_n, t_n) = (batch.len, cfg.n_channels, cfg.n_scales, cfg.time_columns);
    let mut features = Vec::with_capacity(c_n);
    for c in 0..c_n {
        // Patch rows: one per (sample, time column), n_scales wide.
        let mut patches = vec![0.0; b * t_n * s_n];
        for bi in 0..b {
            let base = (bi * c_n + c) * s_n * t_n;
            for s in 0..s_n {
                for t in 0..t_n {
                    patches[(bi * t_n + t) * s_n + s] = batch.data[base + s * t_n + t];
                }
            }
        }
        let pre = format!("enc{c}");
        let x = g.input(patches, b * t_n, s_n);
        let x = g.linear(x, p(&format!("{pre}.patch.w")), p(&format!("{pre}.patch.b")));
        let mut x = g.add_periodic(x, p(&format!("{pre}.pos")));
        for l in 0..cfg.n_layers {
            let q = format!("{pre}.l{l}");
            let h = g.layer_norm(x, p(&format!("{q}.ln1.g")), p(&format!("{q}.ln1.b")));
            let qkv = g.linear(h, p(&format!("{q}.attn.qkv.w")), p(&format!("{q}.attn.qkv.b")));
            let a = g.attention(qkv, t_n, cfg.n_heads);
            let o = g.linear(a, p(&format!("{q}.attn.out.w")), p(&format!("{q}.attn.out.b")));
            let o = drop(g, o, cfg.dropout_encoder);
            x = g.add(x, o);

            let mut h = g.layer_norm(x, p(&format!("{q}.ln2.g")), p(&format!("{q}.ln2.b")));
            let n_fc = cfg.encoder_mlp_widths().len() - 1;
            for i in 0..n_fc {
                h = g.linear(h, p(&format!("{q}.mlp.fc{i}.w")), p(&format!("{q}.mlp.fc{i}.b")));
                if i + 1 < n_fc {
                    h = g.gelu(h);
                }
            }
            let h = drop(g, h, cfg.dropout_encoder);
            x = g.add(x, h);
        }
        let x = g.layer_norm(x, p(&format!("{pre}.lnf.g")), p(&format!("{pre}.lnf.b")));
        features.push(g.mean_pool(x, t_n));
    }

    let mut z = g.concat(&features);
    let n_fc = cfg.head_widths().len() - 1;
    for i in 0..n_fc {
        z = g.linear(z, p(&format!("head.fc{i}.w")), p(&format!("head.fc{i}.b")));
        if i + 1 < n_fc {
            z = g.relu(z);
            z = drop(g, z, cfg.dropout_head);
        }
    }
    Ok(Built {
        logits: z,
        features,
        param_vars,
    })
}

/// Logits `[batch × 2]`.
pub fn forward(state: &ModelState, cfg: &MvitConfig, batch: &InputBatch, mode: Mode) -> Result<Array2<f64>> {
    let mut g = Graph::new();
    let built = build(&mut g, state, cfg, batch, mode)?;
    let (r, c) = g.shape(built.logits);
    Ok(Array2::from_shape_vec((r, c), g.value(built.logits).to_vec()).expect("logit shape"))
}

/// Pooled per-channel encoder outputs before concatenation, one
/// `[batch × embed_dim]` array per channel.
pub fn channel_features(state: &ModelState, cfg: &MvitConfig, batch: &InputBatch) -> Result<Vec<Array2<f64>>> {
    let mut g = Graph::new();
    let built = build(&mut g, state, cfg, batch, Mode::Eval)?;
    Ok(built
        .features
        .iter()
        .map(|&f| {
            let (r, c) = g.shape(f);
            Array2::from_shape_vec((r, c), g.value(f).to_vec()).expect("feature shape")
        })
        .collect())
}

pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let z = row.sum();
        row.mapv_inplace(|v| v / z);
    }
    out
}

/// Mean softmax cross-entropy and its gradient for every parameter, in
/// storage order.
pub fn loss_and_grad(
    state: &ModelState,
    cfg: &MvitConfig,
    batch: &InputBatch,
    labels: &[u8],
    mode: Mode,
) -> Result<(f64, Vec<Vec<f64>>)> {
    if labels.len() != batch.len {
        return Err(Error::ShapeMismatch(format!(
            "{} labels for a batch of {}",
            labels.len(),
            batch.len
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::config(format!("label {bad} is not 0 or 1")));
    }
    let mut g = Graph::new();
    let built = build(&mut g, state, cfg, batch, mode)?;
    let targets: Vec<usize> = labels.iter().map(|&l| usize::from(l)).collect();
    let loss_var = g.cross_entropy(built.logits, &targets);
    let loss = g.value(loss_var)[0];
    if !loss.is_finite() {
        let tensor = state
            .first_non_finite()
            .map(str::to_string)
            .unwrap_or_else(|| "logits".to_string());
        return Err(Error::NonFinite { tensor });
    }
    let mut grads = g.backward(loss_var);
    let out = built
        .param_vars
        .iter()
        .zip(&state.params)
        .map(|(&v, t)| grads.take(v).unwrap_or_else(|| vec![0.0; t.data.len()]))
        .collect();
    Ok((loss, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy() -> MvitConfig {
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

    fn random_batch(cfg: &MvitConfig, n: usize, seed_value: u64) -> InputBatch {
        let mut rng = seed::rng(seed_value);
        let data = (0..n * cfg.input_len()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        InputBatch::new(data, cfg).unwrap()
    }

    #[test]
    fn init_is_deterministic() {
        let a = init_model(&toy(), 3).unwrap();
        let b = init_model(&toy(), 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.param_hash(), init_model(&toy(), 4).unwrap().param_hash());
        assert!(a.adam_m.iter().flatten().all(|&v| v == 0.0));
        assert!(a.param("head.fc0.b").unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parameter_count_by_hand() {
        // Per encoder: patch 5·8+8, pos 4·8, LN1 16, qkv 8·24+24, out 64+8,
        // LN2 16, fc0 8·16+16, fc1 16·8+8, final LN 16.
        let encoder = (40 + 8) + 32 + 16 + (192 + 24) + (64 + 8) + 16 + (128 + 16) + (128 + 8) + 16;
        // Head: 32 → 16 → 8 → 2.
        let head = (32 * 16 + 16) + (16 * 8 + 8) + (8 * 2 + 2);
        let state = init_model(&toy(), 0).unwrap();
        assert_eq!(state.parameter_count(), 4 * encoder + head);
    }

    #[test]
    fn indivisible_heads_rejected() {
        let cfg = MvitConfig {
            embed_dim: 7,
            ..toy()
        };
        assert!(matches!(init_model(&cfg, 0), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn logits_shape_for_eoec_input() {
        let cfg = MvitConfig::eoec();
        let state = init_model(&cfg, 1).unwrap();
        let out = forward(&state, &cfg, &random_batch(&cfg, 1, 2), Mode::Eval).unwrap();
        assert_eq!(out.dim(), (1, 2));
    }

    #[test]
    fn eval_is_pure_and_train_is_seeded() {
        let cfg = toy();
        let state = init_model(&cfg, 1).unwrap();
        let batch = random_batch(&cfg, 3, 2);
        let a = forward(&state, &cfg, &batch, Mode::Eval).unwrap();
        let b = forward(&state, &cfg, &batch, Mode::Eval).unwrap();
        assert_eq!(a, b);
        let t1 = forward(&state, &cfg, &batch, Mode::Train { dropout_seed: 9 }).unwrap();
        let t2 = forward(&state, &cfg, &batch, Mode::Train { dropout_seed: 9 }).unwrap();
        let t3 = forward(&state, &cfg, &batch, Mode::Train { dropout_seed: 10 }).unwrap();
        assert_eq!(t1, t2);
        assert_ne!(t1, t3);
    }

    #[test]
    fn zero_head_gives_zero_logits() {
        let cfg = toy();
        let mut state = init_model(&cfg, 1).unwrap();
        for t in state.params.iter_mut().filter(|t| is_head_param(&t.name)) {
            t.data.fill(0.0);
        }
        let batch = InputBatch::new(vec![0.0; 2 * cfg.input_len()], &cfg).unwrap();
        let out = forward(&state, &cfg, &batch, Mode::Eval).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
        let (loss, _) = loss_and_grad(&state, &cfg, &batch, &[0, 1], Mode::Eval).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn duplicated_sample_keeps_mean_loss() {
        let cfg = toy();
        let state = init_model(&cfg, 5).unwrap();
        let one = random_batch(&cfg, 1, 6);
        let mut twice = one.data.clone();
        twice.extend_from_slice(&one.data);
        let two = InputBatch::new(twice, &cfg).unwrap();
        let (l1, _) = loss_and_grad(&state, &cfg, &one, &[1], Mode::Eval).unwrap();
        let (l2, _) = loss_and_grad(&state, &cfg, &two, &[1, 1], Mode::Eval).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
    }

    #[test]
    fn softmax_sums_to_one() {
        let cfg = toy();
        let state = init_model(&cfg, 5).unwrap();
        let logits = forward(&state, &cfg, &random_batch(&cfg, 6, 1), Mode::Eval).unwrap();
        for row in softmax_rows(&logits).rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn channels_are_independent_before_concat() {
        let cfg = toy();
        let state = init_model(&cfg, 5).unwrap();
        let batch = random_batch(&cfg, 2, 3);
        let base = channel_features(&state, &cfg, &batch).unwrap();
        for c in 0..cfg.n_channels {
            let mut data = batch.data.clone();
            let plane = cfg.n_scales * cfg.time_columns;
            for bi in 0..batch.len {
                let start = (bi * cfg.n_channels + c) * plane;
                data[start..start + plane].fill(0.0);
            }
            let probe = channel_features(&state, &cfg, &InputBatch::new(data, &cfg).unwrap()).unwrap();
            for k in 0..cfg.n_channels {
                if k == c {
                    assert_ne!(probe[k], base[k]);
                } else {
                    assert_eq!(probe[k], base[k]);
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        let cfg = toy();
        let state = init_model(&cfg, 5).unwrap();
        assert!(InputBatch::new(vec![0.0; cfg.input_len() + 1], &cfg).is_err());
        let other = MvitConfig {
            n_channels: 3,
            ..toy()
        };
        let batch = random_batch(&other, 1, 1);
        assert!(forward(&state, &other, &batch, Mode::Eval).is_err());
        let batch = random_batch(&cfg, 2, 1);
        assert!(loss_and_grad(&state, &cfg, &batch, &[0], Mode::Eval).is_err());
        assert!(loss_and_grad(&state, &cfg, &batch, &[0, 2], Mode::Eval).is_err());
    }

    #[test]
    fn non_finite_loss_names_tensor() {
        let cfg = toy();
        let mut state = init_model(&cfg, 5).unwrap();
        state.param_mut("enc2.patch.w").unwrap().data[3] = f64::NAN;
        let err = loss_and_grad(&state, &cfg, &random_batch(&cfg, 2, 1), &[0, 1], Mode::Eval).unwrap_err();
        match err {
            Error::NonFinite { tensor } => assert_eq!(tensor, "enc2.patch.w"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn head_reinit_matches_fresh_init() {
        let cfg = toy();
        let fresh = init_model(&cfg, 8).unwrap();
        let mut other = init_model(&cfg, 9).unwrap();
        other.reinit_head(8);
        for (a, b) in fresh.params.iter().zip(&other.params) {
            if is_head_param(&a.name) || a.shape.len() == 1 {
                assert_eq!(a.data, b.data, "{}", a.name);
            } else {
                assert_ne!(a.data, b.data, "{}", a.name);
            }
        }
    }
}
