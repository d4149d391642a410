//! Loss, accuracy and rank-based AUC.

use ndarray::Array2;

use crate::dataset::TensorDataset;
use crate::error::{Error, Result};
use crate::mvit::{forward, InputBatch, Mode, ModelState, MvitConfig};

const EVAL_BATCH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: f64,
    /// `None` when the split holds a single class.
    pub auc: Option<f64>,
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from average ranks.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate("AUC needs both classes".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite { tensor: "scores".into() });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their average.
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += avg;
            }
        }
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Metrics from two-class logits. Class 1 is predicted only when its logit
/// is strictly larger; the AUC score is `logit1 − logit0`.
pub fn metrics_from_logits(logits: &Array2<f64>, labels: &[u8]) -> Result<Metrics> {
    if logits.nrows() != labels.len() || logits.ncols() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "logits {:?} for {} labels",
            logits.dim(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Degenerate("cannot evaluate an empty split".into()));
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    let mut scores = Vec::with_capacity(labels.len());
    for (row, &y) in logits.rows().into_iter().zip(labels) {
        let (l0, l1) = (row[0], row[1]);
        let m = l0.max(l1);
        let lse = m + ((l0 - m).exp() + (l1 - m).exp()).ln();
        loss += lse - if y == 1 { l1 } else { l0 };
        if u8::from(l1 > l0) == y {
            correct += 1;
        }
        scores.push(l1 - l0);
    }
    let n = labels.len() as f64;
    let loss = loss / n;
    if !loss.is_finite() {
        return Err(Error::NonFinite { tensor: "logits".into() });
    }
    let auc = match auc(&scores, labels) {
        Ok(a) => Some(a),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(Metrics {
        loss,
        accuracy: correct as f64 / n,
        auc,
    })
}

pub fn predict(state: &ModelState, cfg: &MvitConfig, ds: &TensorDataset) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((ds.len(), 2));
    let idx: Vec<usize> = (0..ds.len()).collect();
    for (b, chunk) in idx.chunks(EVAL_BATCH).enumerate() {
        let (x, _) = ds.gather(chunk);
        let logits = forward(state, cfg, &InputBatch::new(x, cfg)?, Mode::Eval)?;
        let start = b * EVAL_BATCH;
        out.slice_mut(ndarray::s![start..start + chunk.len(), ..]).assign(&logits);
    }
    Ok(out)
}

/// Mean cross-entropy, accuracy and AUC of the model on `ds`.
pub fn evaluate(state: &ModelState, cfg: &MvitConfig, ds: &TensorDataset) -> Result<Metrics> {
    if ds.is_empty() {
        return Err(Error::Degenerate("cannot evaluate an empty split".into()));
    }
    metrics_from_logits(&predict(state, cfg, ds)?, ds.labels())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn pairwise(scores: &[f64], labels: &[u8]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] == 1 && labels[j] == 0 {
                    pairs += 1.0;
                    if si > sj {
                        wins += 1.0;
                    } else if si == sj {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_small_cases() {
        assert_eq!(auc(&[0.1, 0.9], &[0, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.9, 0.1], &[0, 1]).unwrap(), 0.0);
        assert_eq!(auc(&[0.3; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert!(auc(&[0.1, 0.2], &[1, 1]).is_err());
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut r = crate::seed::rng(17);
        for trial in 0..5 {
            // Coarse scores force many ties.
            let scores: Vec<f64> = (0..200)
                .map(|_| if trial % 2 == 0 { r.random::<f64>() } else { f64::from(r.random_range(0..7u8)) })
                .collect();
            let labels: Vec<u8> = (0..200).map(|_| r.random_range(0..2u8)).collect();
            let got = auc(&scores, &labels).unwrap();
            assert!((got - pairwise(&scores, &labels)).abs() < 1e-12);
        }
    }

    #[test]
    fn logits_metrics() {
        let sep = Array2::from_shape_vec((4, 2), vec![2.0, -1.0, 0.0, 3.0, 1.0, 0.0, -2.0, 2.0]).unwrap();
        let m = metrics_from_logits(&sep, &[0, 1, 0, 1]).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.auc, Some(1.0));

        // Equal logits: every prediction is class 0, loss ln 2.
        let flat = Array2::zeros((5, 2));
        let m = metrics_from_logits(&flat, &[0, 0, 0, 1, 1]).unwrap();
        assert!((m.accuracy - 0.6).abs() < 1e-15);
        assert_eq!(m.auc, Some(0.5));
        assert!((m.loss - 2f64.ln()).abs() < 1e-15);

        let m = metrics_from_logits(&flat, &[1, 1, 1, 1, 1]).unwrap();
        assert_eq!(m.auc, None);
        assert_eq!(m.accuracy, 0.0);
    }

    #[test]
    fn evaluate_auc_matches_oracle_on_model_output() {
        use crate::mvit::init_model;
        let cfg = MvitConfig {
            n_channels: 2,
            n_scales: 3,
            time_columns: 2,
            n_layers: 1,
            n_heads: 1,
            embed_dim: 4,
            encoder_mlp_dims: vec![4, 4],
            head_hidden_dims: vec![6],
            n_classes: 2,
            dropout_head: 0.5,
            dropout_encoder: 0.1,
        };
        let state = init_model(&cfg, 3).unwrap();
        let mut ds = TensorDataset::new([2, 3, 2]).unwrap();
        let mut r = crate::seed::rng(5);
        for i in 0..50 {
            let t: Vec<f64> = (0..12).map(|_| r.random_range(-2.0..2.0)).collect();
            ds.push(&t, (i % 3 == 0) as u8, b"").unwrap();
        }
        let m = evaluate(&state, &cfg, &ds).unwrap();
        let logits = predict(&state, &cfg, &ds).unwrap();
        let scores: Vec<f64> = logits.rows().into_iter().map(|r| r[1] - r[0]).collect();
        assert!((m.auc.unwrap() - pairwise(&scores, ds.labels())).abs() < 1e-12);
        assert!(m.loss >= 0.0 && (0.0..=1.0).contains(&m.accuracy));
    }
}
