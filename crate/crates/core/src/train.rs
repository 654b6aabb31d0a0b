//! Mini-batch training of the reduced LeNet on block samples: seeded
//! shuffling, Adam or plain SGD, MSE or BCE against the face-fraction
//! label, per-epoch wall-clock timing.

use crate::blocks::{BlockSample, Mode};
use crate::nn::{Grads, NetConfig, PoolGeometry, Real, ReducedLeNet};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Squared error against the face fraction (the architecture is a
    /// regression head).
    #[default]
    Mse,
    Bce,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "bce" => Ok(LossKind::Bce),
            other => Err(Error::Parameter(format!(
                "unknown loss '{other}' (expected mse|bce)"
            ))),
        }
    }
}

/// Loss value and its derivative with respect to the prediction.
pub fn loss_and_grad<F: Real>(kind: LossKind, pred: F, label: F) -> (F, F) {
    match kind {
        LossKind::Mse => {
            let d = pred - label;
            (d * d, d + d)
        }
        LossKind::Bce => {
            // sigmoid keeps pred inside (0, 1) mathematically; the clamp
            // guards f32 rounding to exactly 0 or 1
            let eps = F::from_f64(1e-7);
            let p = pred.max(eps).min(F::one() - eps);
            let v = -(label * p.ln() + (F::one() - label) * (F::one() - p).ln());
            let d = (p - label) / (p * (F::one() - p));
            (v, d)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::default()),
            other => Err(Error::Parameter(format!(
                "unknown optimizer '{other}' (expected sgd|adam)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub loss: LossKind,
    pub seed: u64,
    pub pool: PoolGeometry,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Gray,
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::default(),
            loss: LossKind::Mse,
            seed: 0,
            pool: PoolGeometry::Table23,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Parameter("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(Error::Parameter("learning_rate must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_loss: f64,
    /// Wall time of the optimization loop (shuffling, forward/backward,
    /// updates); validation scoring and any I/O are excluded.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    /// Writes `epoch,train_loss,val_loss,seconds` rows.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::from("epoch,train_loss,val_loss,seconds\n");
        for (i, e) in self.epochs.iter().enumerate() {
            text.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                e.train_loss,
                e.val_loss,
                e.seconds
            ));
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Timing-free variant (deterministic bytes for a fixed seed).
    pub fn save_csv_without_timing(&self, path: &Path) -> Result<()> {
        let mut text = String::from("epoch,train_loss,val_loss\n");
        for (i, e) in self.epochs.iter().enumerate() {
            text.push_str(&format!("{},{},{}\n", i + 1, e.train_loss, e.val_loss));
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

struct Adam {
    m: Grads<f32>,
    v: Grads<f32>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(cfg: &NetConfig, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            m: Grads::zeros(cfg),
            v: Grads::zeros(cfg),
            t: 0,
            beta1,
            beta2,
            eps,
        }
    }

    fn step(&mut self, model: &mut ReducedLeNet<f32>, grads: &Grads<f32>, lr: f64) {
        self.t += 1;
        let b1 = self.beta1 as f32;
        let b2 = self.beta2 as f32;
        let c1 = (1.0 - self.beta1.powi(self.t as i32)) as f32;
        let c2 = (1.0 - self.beta2.powi(self.t as i32)) as f32;
        let eps = self.eps as f32;
        let lr = lr as f32;
        for (((p, g), m), v) in model
            .param_slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

fn sgd_step(model: &mut ReducedLeNet<f32>, grads: &Grads<f32>, lr: f64) {
    let lr = lr as f32;
    for (p, g) in model.param_slices_mut().into_iter().zip(grads.slices()) {
        for i in 0..p.len() {
            p[i] -= lr * g[i];
        }
    }
}

fn mean_loss(model: &ReducedLeNet<f32>, kind: LossKind, samples: &[BlockSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let total: f64 = samples
        .par_iter()
        .map(|s| loss_and_grad(kind, model.forward(&s.data), s.label).0 as f64)
        .sum();
    total / samples.len() as f64
}

/// Splits off whole sessions (the trailing ~10% of distinct session ids in
/// order of appearance) for validation, never individual blocks.
pub fn split_validation(samples: Vec<BlockSample>) -> (Vec<BlockSample>, Vec<BlockSample>) {
    let mut sessions: Vec<String> = Vec::new();
    for s in &samples {
        if !sessions.iter().any(|x| x == &s.session_id) {
            sessions.push(s.session_id.clone());
        }
    }
    if sessions.len() < 2 {
        return (samples, Vec::new());
    }
    let n_val = (sessions.len() / 10).max(1);
    let val_sessions: std::collections::BTreeSet<String> =
        sessions[sessions.len() - n_val..].iter().cloned().collect();
    let mut train = Vec::new();
    let mut val = Vec::new();
    for s in samples {
        if val_sessions.contains(&s.session_id) {
            val.push(s);
        } else {
            train.push(s);
        }
    }
    (train, val)
}

/// Trains for exactly `cfg.epochs` passes with per-epoch seeded shuffling.
/// Per-sample gradients inside a batch may be computed in parallel; they are
/// reduced in fixed sample order, so the result does not depend on the
/// thread count.
pub fn train(
    cfg: &TrainConfig,
    train_set: &[BlockSample],
    val_set: &[BlockSample],
) -> Result<(ReducedLeNet<f32>, TrainHistory)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Parameter("empty training set".into()));
    }
    let c_in = cfg.mode.channels();
    for s in train_set.iter().chain(val_set) {
        if s.channels != c_in {
            return Err(Error::Parameter(format!(
                "sample has {} channels, mode {} implies {}",
                s.channels, cfg.mode, c_in
            )));
        }
    }
    let net_cfg = NetConfig {
        c_in,
        pool: cfg.pool,
    };
    let mut model = ReducedLeNet::<f32>::init(net_cfg, cfg.seed);
    let mut shuffle_rng = crate::rng::stream(cfg.seed, "train-shuffle");
    let mut adam = match cfg.optimizer {
        OptimizerKind::Adam { beta1, beta2, eps } => Some(Adam::new(&net_cfg, beta1, beta2, eps)),
        OptimizerKind::Sgd => None,
    };
    let mut history = TrainHistory::default();
    let mut indices: Vec<usize> = (0..train_set.len()).collect();
    for _epoch in 0..cfg.epochs {
        let started = Instant::now();
        indices.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0f64;
        for batch in indices.chunks(cfg.batch_size) {
            // gradient per sample, merged in fixed batch order
            let per_sample: Vec<(f32, Grads<f32>)> = batch
                .par_iter()
                .map(|&i| {
                    let s = &train_set[i];
                    let cache = model.forward_train(&s.data);
                    let (loss, dpred) = loss_and_grad(cfg.loss, cache.pred, s.label);
                    let grads = model.backward_params(&s.data, &cache, dpred);
                    (loss, grads)
                })
                .collect();
            let mut acc = Grads::<f32>::zeros(&net_cfg);
            for (loss, g) in &per_sample {
                epoch_loss += *loss as f64;
                acc.add_assign(g);
            }
            acc.scale(1.0 / batch.len() as f32);
            match adam.as_mut() {
                Some(a) => a.step(&mut model, &acc, cfg.learning_rate),
                None => sgd_step(&mut model, &acc, cfg.learning_rate),
            }
        }
        let seconds = started.elapsed().as_secs_f64();
        let train_loss = epoch_loss / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "training loss became non-finite ({train_loss})"
            )));
        }
        let val_loss = mean_loss(&model, cfg.loss, val_set);
        if !val_loss.is_finite() {
            return Err(Error::Numeric("validation loss became non-finite".into()));
        }
        history.epochs.push(EpochStats {
            train_loss,
            val_loss,
            seconds,
        });
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn synthetic_samples(n: usize, channels: usize, seed: u64) -> Vec<BlockSample> {
        let mut rng = crate::rng::stream(seed, "train-test-data");
        (0..n)
            .map(|i| {
                let label = if i % 5 == 0 { 1.0 } else { 0.0 };
                // class-dependent mean so there is something to learn
                let base = 0.4 + 0.2 * label;
                BlockSample {
                    data: (0..channels * 2500)
                        .map(|_| (base + 0.1 * (rng.random::<f32>() - 0.5)).clamp(0.0, 1.0))
                        .collect(),
                    channels,
                    label,
                    session_id: format!("s{:02}", i % 7),
                    frame_id: format!("f{i:03}"),
                    grid_row: 0,
                    grid_col: 0,
                }
            })
            .collect()
    }

    #[test]
    fn loss_values_and_gradients() {
        assert_eq!(loss_and_grad(LossKind::Mse, 0.7f64, 0.7).0, 0.0);
        for y in [0.0f64, 0.3, 1.0] {
            let (v, _) = loss_and_grad(LossKind::Bce, 0.5f64, y);
            assert!((v - std::f64::consts::LN_2).abs() < 1e-12, "bce(0.5,{y})={v}");
        }
        // central finite differences in f64
        for kind in [LossKind::Mse, LossKind::Bce] {
            for (p, y) in [(0.3f64, 0.8), (0.9, 0.1), (0.5, 0.45)] {
                let eps = 1e-6;
                let num =
                    (loss_and_grad(kind, p + eps, y).0 - loss_and_grad(kind, p - eps, y).0)
                        / (2.0 * eps);
                let ana = loss_and_grad(kind, p, y).1;
                let rel = (num - ana).abs() / (num.abs() + ana.abs()).max(1e-12);
                assert!(rel < 1e-6, "{kind:?} ({p},{y}): rel {rel}");
            }
        }
    }

    #[test]
    fn zero_learning_rate_freezes_weights() {
        let samples = synthetic_samples(48, 1, 1);
        let cfg = TrainConfig {
            epochs: 2,
            learning_rate: 0.0,
            seed: 5,
            ..TrainConfig::default()
        };
        let (model, _) = train(&cfg, &samples, &[]).unwrap();
        let init = ReducedLeNet::<f32>::init(
            NetConfig {
                c_in: 1,
                pool: PoolGeometry::Table23,
            },
            5,
        );
        for (a, b) in model.param_slices().into_iter().zip(init.param_slices()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn adam_step_with_zero_gradients_is_identity() {
        let net_cfg = NetConfig::default();
        let mut model = ReducedLeNet::<f32>::init(net_cfg, 11);
        let before: Vec<u32> = model.conv_w.iter().map(|v| v.to_bits()).collect();
        let mut adam = Adam::new(&net_cfg, 0.9, 0.999, 1e-8);
        let zero = Grads::<f32>::zeros(&net_cfg);
        for _ in 0..3 {
            adam.step(&mut model, &zero, 1e-3);
        }
        let after: Vec<u32> = model.conv_w.iter().map(|v| v.to_bits()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn same_seed_gives_bit_identical_trajectories() {
        let samples = synthetic_samples(64, 1, 2);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 16,
            seed: 9,
            ..TrainConfig::default()
        };
        let (m1, h1) = train(&cfg, &samples[..48], &samples[48..]).unwrap();
        let (m2, h2) = train(&cfg, &samples[..48], &samples[48..]).unwrap();
        for (a, b) in h1.epochs.iter().zip(&h2.epochs) {
            assert_eq!(a.train_loss.to_bits(), b.train_loss.to_bits());
            assert_eq!(a.val_loss.to_bits(), b.val_loss.to_bits());
        }
        for (a, b) in m1.param_slices().into_iter().zip(m2.param_slices()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn loss_decreases_on_learnable_data() {
        let samples = synthetic_samples(120, 1, 3);
        let cfg = TrainConfig {
            epochs: 8,
            batch_size: 16,
            seed: 4,
            ..TrainConfig::default()
        };
        let (_, h) = train(&cfg, &samples, &[]).unwrap();
        let first = h.epochs.first().unwrap().train_loss;
        let last = h.epochs.last().unwrap().train_loss;
        assert!(last < first, "loss did not decrease: {first} -> {last}");
        assert!(h.epochs.iter().all(|e| e.train_loss.is_finite()));
    }

    #[test]
    fn channel_mismatch_and_empty_set_are_rejected() {
        let cfg = TrainConfig::default();
        assert!(train(&cfg, &[], &[]).is_err());
        let samples = synthetic_samples(4, 2, 6); // 2 channels vs gray mode
        assert!(train(&cfg, &samples, &[]).is_err());
    }

    #[test]
    fn validation_split_takes_whole_trailing_sessions() {
        let samples = synthetic_samples(70, 1, 7); // sessions s00..s06
        let (train_s, val_s) = split_validation(samples);
        assert!(!val_s.is_empty());
        let val_sessions: std::collections::BTreeSet<&str> =
            val_s.iter().map(|s| s.session_id.as_str()).collect();
        assert_eq!(val_sessions.len(), 1); // ceil-free 10% of 7 sessions -> 1
        for s in &train_s {
            assert!(!val_sessions.contains(s.session_id.as_str()));
        }
        // a single-session set keeps everything in train
        let single: Vec<BlockSample> = synthetic_samples(7, 1, 8)
            .into_iter()
            .map(|mut s| {
                s.session_id = "only".into();
                s
            })
            .collect();
        let (t, v) = split_validation(single);
        assert_eq!(t.len(), 7);
        assert!(v.is_empty());
    }

    #[test]
    fn history_csv_round_trip_shape() {
        let dir = tempfile::tempdir().unwrap();
        let h = TrainHistory {
            epochs: vec![EpochStats {
                train_loss: 0.25,
                val_loss: 0.5,
                seconds: 1.5,
            }],
        };
        let p4 = dir.path().join("h4.csv");
        h.save_csv(&p4).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p4).unwrap(),
            "epoch,train_loss,val_loss,seconds\n1,0.25,0.5,1.5\n"
        );
        let p3 = dir.path().join("h3.csv");
        h.save_csv_without_timing(&p3).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p3).unwrap(),
            "epoch,train_loss,val_loss\n1,0.25,0.5\n"
        );
    }
}
