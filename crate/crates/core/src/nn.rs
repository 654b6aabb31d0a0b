//! From-scratch reduced LeNet for 50x50 block regression: one SELU conv
//! layer, one 5x5/stride-2 max pool, two SELU dense layers and a sigmoid
//! output. Forward and backward passes are hand-written; all layers are
//! generic over f32 (production) and f64 (gradient shadow checks).

use crate::tensor::Tensor;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SELU_LAMBDA: f64 = 1.0507009873554805;
pub const SELU_ALPHA: f64 = 1.6732632423543772;

/// Input block side.
pub const INPUT: usize = 50;
/// Convolution kernels and their size.
pub const CONV_OUT: usize = 6;
pub const KSIZE: usize = 5;
/// Dense layer widths.
pub const FC1: usize = 40;
pub const FC2: usize = 24;

/// Scalar type the network runs on.
pub trait Real:
    num_traits::Float + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

pub fn selu<F: Real>(x: F) -> F {
    let lambda = F::from_f64(SELU_LAMBDA);
    let alpha = F::from_f64(SELU_ALPHA);
    if x > F::zero() {
        lambda * x
    } else {
        lambda * alpha * (x.exp() - F::one())
    }
}

pub fn selu_grad<F: Real>(x: F) -> F {
    let lambda = F::from_f64(SELU_LAMBDA);
    let alpha = F::from_f64(SELU_ALPHA);
    if x > F::zero() {
        lambda
    } else {
        lambda * alpha * x.exp()
    }
}

pub fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Valid cross-correlation: x [c_in, h, w] with kernels [k_out, c_in, k, k]
/// plus bias, giving [k_out, h-k+1, w-k+1] pre-activations.
pub fn conv2d_forward<F: Real>(
    x: &[F],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[F],
    bias: &[F],
    k_out: usize,
    k: usize,
) -> Vec<F> {
    assert_eq!(x.len(), c_in * h * w, "conv input shape");
    assert_eq!(weight.len(), k_out * c_in * k * k, "conv weight shape");
    assert!(h >= k && w >= k, "conv input smaller than kernel");
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut out = vec![F::zero(); k_out * oh * ow];
    for ko in 0..k_out {
        let plane = &mut out[ko * oh * ow..(ko + 1) * oh * ow];
        for v in plane.iter_mut() {
            *v = bias[ko];
        }
        for ci in 0..c_in {
            for ky in 0..k {
                for kx in 0..k {
                    let wv = weight[((ko * c_in + ci) * k + ky) * k + kx];
                    for y in 0..oh {
                        let xrow = &x[(ci * h + y + ky) * w + kx..][..ow];
                        let orow = &mut plane[y * ow..(y + 1) * ow];
                        for i in 0..ow {
                            orow[i] = orow[i] + wv * xrow[i];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Gradients of the valid cross-correlation: given d(loss)/d(preact),
/// returns (grad_x, grad_weight, grad_bias).
pub fn conv2d_backward<F: Real>(
    x: &[F],
    c_in: usize,
    h: usize,
    w: usize,
    weight: &[F],
    k_out: usize,
    k: usize,
    grad_z: &[F],
) -> (Vec<F>, Vec<F>, Vec<F>) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    assert_eq!(grad_z.len(), k_out * oh * ow, "conv grad shape");
    let mut gx = vec![F::zero(); c_in * h * w];
    let mut gw = vec![F::zero(); k_out * c_in * k * k];
    let mut gb = vec![F::zero(); k_out];
    for ko in 0..k_out {
        let gz = &grad_z[ko * oh * ow..(ko + 1) * oh * ow];
        gb[ko] = gz.iter().fold(F::zero(), |a, &b| a + b);
        for ci in 0..c_in {
            for ky in 0..k {
                for kx in 0..k {
                    let wv = weight[((ko * c_in + ci) * k + ky) * k + kx];
                    let mut acc = F::zero();
                    for y in 0..oh {
                        let xrow = &x[(ci * h + y + ky) * w + kx..][..ow];
                        let grow = &gz[y * ow..(y + 1) * ow];
                        let gxrow = &mut gx[(ci * h + y + ky) * w + kx..][..ow];
                        for i in 0..ow {
                            acc = acc + grow[i] * xrow[i];
                            gxrow[i] = gxrow[i] + wv * grow[i];
                        }
                    }
                    gw[((ko * c_in + ci) * k + ky) * k + kx] = acc;
                }
            }
        }
    }
    (gx, gw, gb)
}

/// Weight/bias gradients only (no input gradient); saves a third of the
/// backward cost when the conv is the first layer.
pub fn conv2d_backward_params<F: Real>(
    x: &[F],
    c_in: usize,
    h: usize,
    w: usize,
    k_out: usize,
    k: usize,
    grad_z: &[F],
) -> (Vec<F>, Vec<F>) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    assert_eq!(grad_z.len(), k_out * oh * ow, "conv grad shape");
    let mut gw = vec![F::zero(); k_out * c_in * k * k];
    let mut gb = vec![F::zero(); k_out];
    for ko in 0..k_out {
        let gz = &grad_z[ko * oh * ow..(ko + 1) * oh * ow];
        gb[ko] = gz.iter().fold(F::zero(), |a, &b| a + b);
        for ci in 0..c_in {
            for ky in 0..k {
                for kx in 0..k {
                    let mut acc = F::zero();
                    for y in 0..oh {
                        let xrow = &x[(ci * h + y + ky) * w + kx..][..ow];
                        let grow = &gz[y * ow..(y + 1) * ow];
                        for i in 0..ow {
                            acc = acc + grow[i] * xrow[i];
                        }
                    }
                    gw[((ko * c_in + ci) * k + ky) * k + kx] = acc;
                }
            }
        }
    }
    (gw, gb)
}

/// Pooling geometry. The architecture table pins a 23x23 output from 46x46
/// with a 5x5 window and stride 2, which needs asymmetric padding (1 before,
/// 2 after, -inf fill); plain valid pooling would give 21x21. Both
/// interpretations are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolGeometry {
    /// ceil(in/stride) output with symmetric -inf padding (table-faithful).
    #[default]
    Table23,
    /// No padding; floor((in-window)/stride)+1 output.
    Valid21,
}

pub const POOL_WINDOW: usize = 5;
pub const POOL_STRIDE: usize = 2;

impl PoolGeometry {
    pub fn out_dim(&self, in_dim: usize) -> usize {
        match self {
            PoolGeometry::Table23 => in_dim.div_ceil(POOL_STRIDE),
            PoolGeometry::Valid21 => (in_dim - POOL_WINDOW) / POOL_STRIDE + 1,
        }
    }

    fn pad_begin(&self, in_dim: usize) -> isize {
        match self {
            PoolGeometry::Table23 => {
                let total =
                    ((self.out_dim(in_dim) - 1) * POOL_STRIDE + POOL_WINDOW) as isize
                        - in_dim as isize;
                total.max(0) / 2
            }
            PoolGeometry::Valid21 => 0,
        }
    }
}

/// Max pool over [c, h, w]; returns the pooled values and the flat input
/// index of each window's argmax (lowest index wins ties).
pub fn maxpool_forward<F: Real>(
    x: &[F],
    c: usize,
    h: usize,
    w: usize,
    geom: PoolGeometry,
) -> (Vec<F>, Vec<u32>) {
    assert_eq!(x.len(), c * h * w, "pool input shape");
    let (ph, pw) = (geom.out_dim(h), geom.out_dim(w));
    let (py0, px0) = (geom.pad_begin(h), geom.pad_begin(w));
    let mut out = Vec::with_capacity(c * ph * pw);
    let mut idx = Vec::with_capacity(c * ph * pw);
    for ci in 0..c {
        for oy in 0..ph {
            let y_start = oy as isize * POOL_STRIDE as isize - py0;
            for ox in 0..pw {
                let x_start = ox as isize * POOL_STRIDE as isize - px0;
                let mut best = F::neg_infinity();
                let mut best_i = u32::MAX;
                for dy in 0..POOL_WINDOW as isize {
                    let y = y_start + dy;
                    if y < 0 || y >= h as isize {
                        continue;
                    }
                    for dx in 0..POOL_WINDOW as isize {
                        let xx = x_start + dx;
                        if xx < 0 || xx >= w as isize {
                            continue;
                        }
                        let i = (ci * h + y as usize) * w + xx as usize;
                        if x[i] > best {
                            best = x[i];
                            best_i = i as u32;
                        }
                    }
                }
                debug_assert!(best_i != u32::MAX, "empty pooling window");
                out.push(best);
                idx.push(best_i);
            }
        }
    }
    (out, idx)
}

/// Routes each pooled gradient back to its argmax position.
pub fn maxpool_backward<F: Real>(
    grad_out: &[F],
    idx: &[u32],
    input_len: usize,
) -> Vec<F> {
    assert_eq!(grad_out.len(), idx.len(), "pool grad shape");
    let mut gx = vec![F::zero(); input_len];
    for (&g, &i) in grad_out.iter().zip(idx) {
        gx[i as usize] = gx[i as usize] + g;
    }
    gx
}

/// z = W x + b with W stored row-major [n_out, n_in].
pub fn dense_forward<F: Real>(weight: &[F], bias: &[F], x: &[F]) -> Vec<F> {
    let n_out = bias.len();
    let n_in = x.len();
    assert_eq!(weight.len(), n_out * n_in, "dense weight shape");
    (0..n_out)
        .map(|o| {
            let row = &weight[o * n_in..(o + 1) * n_in];
            let mut acc = bias[o];
            for i in 0..n_in {
                acc = acc + row[i] * x[i];
            }
            acc
        })
        .collect()
}

/// Gradients of the dense layer: (grad_x, grad_weight, grad_bias).
pub fn dense_backward<F: Real>(
    weight: &[F],
    x: &[F],
    grad_z: &[F],
) -> (Vec<F>, Vec<F>, Vec<F>) {
    let n_out = grad_z.len();
    let n_in = x.len();
    let mut gx = vec![F::zero(); n_in];
    let mut gw = vec![F::zero(); n_out * n_in];
    for o in 0..n_out {
        let g = grad_z[o];
        let row = &weight[o * n_in..(o + 1) * n_in];
        let grow = &mut gw[o * n_in..(o + 1) * n_in];
        for i in 0..n_in {
            grow[i] = g * x[i];
            gx[i] = gx[i] + row[i] * g;
        }
    }
    (gx, gw, grad_z.to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetConfig {
    pub c_in: usize,
    pub pool: PoolGeometry,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            c_in: 1,
            pool: PoolGeometry::Table23,
        }
    }
}

impl NetConfig {
    pub fn conv_out_dim(&self) -> usize {
        INPUT - KSIZE + 1
    }

    pub fn pool_out_dim(&self) -> usize {
        self.pool.out_dim(self.conv_out_dim())
    }

    pub fn flat_len(&self) -> usize {
        CONV_OUT * self.pool_out_dim() * self.pool_out_dim()
    }
}

/// Exact count of trainable scalars for a configuration.
pub fn count_params(cfg: &NetConfig) -> usize {
    let conv = CONV_OUT * (cfg.c_in * KSIZE * KSIZE + 1);
    let fc1 = cfg.flat_len() * FC1 + FC1;
    let fc2 = FC1 * FC2 + FC2;
    let out = FC2 + 1;
    conv + fc1 + fc2 + out
}

#[derive(Debug, Clone)]
pub struct ReducedLeNet<F: Real> {
    pub cfg: NetConfig,
    pub conv_w: Vec<F>,
    pub conv_b: Vec<F>,
    pub fc1_w: Vec<F>,
    pub fc1_b: Vec<F>,
    pub fc2_w: Vec<F>,
    pub fc2_b: Vec<F>,
    pub out_w: Vec<F>,
    pub out_b: Vec<F>,
}

/// Parameter gradients, same layout as the model tensors.
#[derive(Debug, Clone)]
pub struct Grads<F: Real> {
    pub conv_w: Vec<F>,
    pub conv_b: Vec<F>,
    pub fc1_w: Vec<F>,
    pub fc1_b: Vec<F>,
    pub fc2_w: Vec<F>,
    pub fc2_b: Vec<F>,
    pub out_w: Vec<F>,
    pub out_b: Vec<F>,
}

/// Intermediate activations kept for the backward pass.
pub struct Cache<F: Real> {
    conv_z: Vec<F>,
    conv_a: Vec<F>,
    pool_out: Vec<F>,
    pool_idx: Vec<u32>,
    fc1_z: Vec<F>,
    fc1_a: Vec<F>,
    fc2_z: Vec<F>,
    fc2_a: Vec<F>,
    out_z: F,
    pub pred: F,
}

pub const PARAM_NAMES: [&str; 8] = [
    "conv_w", "conv_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b", "out_w", "out_b",
];

impl<F: Real> ReducedLeNet<F> {
    /// Zero-initialized model (predicts exactly 0.5 everywhere).
    pub fn zeros(cfg: NetConfig) -> Self {
        let flat = cfg.flat_len();
        ReducedLeNet {
            cfg,
            conv_w: vec![F::zero(); CONV_OUT * cfg.c_in * KSIZE * KSIZE],
            conv_b: vec![F::zero(); CONV_OUT],
            fc1_w: vec![F::zero(); FC1 * flat],
            fc1_b: vec![F::zero(); FC1],
            fc2_w: vec![F::zero(); FC2 * FC1],
            fc2_b: vec![F::zero(); FC2],
            out_w: vec![F::zero(); FC2],
            out_b: vec![F::zero(); 1],
        }
    }

    /// Seeded init: weights ~ Normal(0, 1/fan_in) per layer (the SELU
    /// self-normalizing scaling), biases zero. The same seed yields the
    /// same weights for f32 and f64 instantiations.
    pub fn init(cfg: NetConfig, seed: u64) -> Self {
        let mut model = Self::zeros(cfg);
        let mut rng = crate::rng::stream(seed, "net-init");
        let mut fill = |v: &mut Vec<F>, fan_in: usize| {
            let normal = Normal::new(0.0f64, 1.0 / (fan_in as f64).sqrt()).unwrap();
            for x in v.iter_mut() {
                *x = F::from_f64(normal.sample(&mut rng));
            }
        };
        let flat = cfg.flat_len();
        fill(&mut model.conv_w, cfg.c_in * KSIZE * KSIZE);
        fill(&mut model.fc1_w, flat);
        fill(&mut model.fc2_w, FC1);
        fill(&mut model.out_w, FC2);
        model
    }

    pub fn check_input(&self, x: &[F]) -> Result<()> {
        let want = self.cfg.c_in * INPUT * INPUT;
        if x.len() != want {
            return Err(Error::Parameter(format!(
                "input length {} does not match {}x{}x{}",
                x.len(),
                self.cfg.c_in,
                INPUT,
                INPUT
            )));
        }
        Ok(())
    }

    /// Prediction in (0, 1).
    pub fn forward(&self, x: &[F]) -> F {
        self.forward_train(x).pred
    }

    pub fn forward_train(&self, x: &[F]) -> Cache<F> {
        debug_assert_eq!(x.len(), self.cfg.c_in * INPUT * INPUT);
        let conv_dim = self.cfg.conv_out_dim();
        let conv_z = conv2d_forward(
            x,
            self.cfg.c_in,
            INPUT,
            INPUT,
            &self.conv_w,
            &self.conv_b,
            CONV_OUT,
            KSIZE,
        );
        let conv_a: Vec<F> = conv_z.iter().map(|&v| selu(v)).collect();
        let (pool_out, pool_idx) =
            maxpool_forward(&conv_a, CONV_OUT, conv_dim, conv_dim, self.cfg.pool);
        let fc1_z = dense_forward(&self.fc1_w, &self.fc1_b, &pool_out);
        let fc1_a: Vec<F> = fc1_z.iter().map(|&v| selu(v)).collect();
        let fc2_z = dense_forward(&self.fc2_w, &self.fc2_b, &fc1_a);
        let fc2_a: Vec<F> = fc2_z.iter().map(|&v| selu(v)).collect();
        let out_z = dense_forward(&self.out_w, &self.out_b, &fc2_a)[0];
        Cache {
            conv_z,
            conv_a,
            pool_out,
            pool_idx,
            fc1_z,
            fc1_a,
            fc2_z,
            fc2_a,
            out_z,
            pred: sigmoid(out_z),
        }
    }

    /// Backpropagates d(loss)/d(pred), returning parameter gradients and
    /// the gradient with respect to the input block.
    pub fn backward(&self, x: &[F], cache: &Cache<F>, dpred: F) -> (Grads<F>, Vec<F>) {
        let (grads, gx) = self.backward_impl(x, cache, dpred, true);
        (grads, gx.unwrap())
    }

    /// Parameter gradients only (training path; the input gradient of the
    /// first layer is never consumed there).
    pub fn backward_params(&self, x: &[F], cache: &Cache<F>, dpred: F) -> Grads<F> {
        self.backward_impl(x, cache, dpred, false).0
    }

    fn backward_impl(
        &self,
        x: &[F],
        cache: &Cache<F>,
        dpred: F,
        need_input_grad: bool,
    ) -> (Grads<F>, Option<Vec<F>>) {
        // sigmoid
        let dz_out = dpred * cache.pred * (F::one() - cache.pred);
        let _ = cache.out_z;
        // out layer
        let (da_fc2, g_out_w, g_out_b) =
            dense_backward(&self.out_w, &cache.fc2_a, &[dz_out]);
        // fc2
        let dz_fc2: Vec<F> = da_fc2
            .iter()
            .zip(&cache.fc2_z)
            .map(|(&g, &z)| g * selu_grad(z))
            .collect();
        let (da_fc1, g_fc2_w, g_fc2_b) = dense_backward(&self.fc2_w, &cache.fc1_a, &dz_fc2);
        // fc1
        let dz_fc1: Vec<F> = da_fc1
            .iter()
            .zip(&cache.fc1_z)
            .map(|(&g, &z)| g * selu_grad(z))
            .collect();
        let (d_pool, g_fc1_w, g_fc1_b) =
            dense_backward(&self.fc1_w, &cache.pool_out, &dz_fc1);
        // pool
        let d_conv_a = maxpool_backward(&d_pool, &cache.pool_idx, cache.conv_a.len());
        // selu on conv pre-activations
        let dz_conv: Vec<F> = d_conv_a
            .iter()
            .zip(&cache.conv_z)
            .map(|(&g, &z)| g * selu_grad(z))
            .collect();
        let (gx, g_conv_w, g_conv_b) = if need_input_grad {
            let (gx, gw, gb) = conv2d_backward(
                x,
                self.cfg.c_in,
                INPUT,
                INPUT,
                &self.conv_w,
                CONV_OUT,
                KSIZE,
                &dz_conv,
            );
            (Some(gx), gw, gb)
        } else {
            let (gw, gb) = conv2d_backward_params(
                x,
                self.cfg.c_in,
                INPUT,
                INPUT,
                CONV_OUT,
                KSIZE,
                &dz_conv,
            );
            (None, gw, gb)
        };
        (
            Grads {
                conv_w: g_conv_w,
                conv_b: g_conv_b,
                fc1_w: g_fc1_w,
                fc1_b: g_fc1_b,
                fc2_w: g_fc2_w,
                fc2_b: g_fc2_b,
                out_w: g_out_w,
                out_b: g_out_b,
            },
            gx,
        )
    }

    pub fn param_slices(&self) -> [&[F]; 8] {
        [
            &self.conv_w,
            &self.conv_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn param_slices_mut(&mut self) -> [&mut [F]; 8] {
        [
            &mut self.conv_w,
            &mut self.conv_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn count_params(&self) -> usize {
        count_params(&self.cfg)
    }
}

impl<F: Real> Grads<F> {
    pub fn zeros(cfg: &NetConfig) -> Self {
        let flat = cfg.flat_len();
        Grads {
            conv_w: vec![F::zero(); CONV_OUT * cfg.c_in * KSIZE * KSIZE],
            conv_b: vec![F::zero(); CONV_OUT],
            fc1_w: vec![F::zero(); FC1 * flat],
            fc1_b: vec![F::zero(); FC1],
            fc2_w: vec![F::zero(); FC2 * FC1],
            fc2_b: vec![F::zero(); FC2],
            out_w: vec![F::zero(); FC2],
            out_b: vec![F::zero(); 1],
        }
    }

    pub fn slices(&self) -> [&[F]; 8] {
        [
            &self.conv_w,
            &self.conv_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [F]; 8] {
        [
            &mut self.conv_w,
            &mut self.conv_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn add_assign(&mut self, other: &Grads<F>) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = *d + s;
            }
        }
    }

    pub fn scale(&mut self, s: F) {
        for dst in self.slices_mut() {
            for d in dst.iter_mut() {
                *d = *d * s;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoint format: model.json + one tensor file per parameter.

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    c_in: usize,
    pool: PoolGeometry,
    selu_lambda: f64,
    selu_alpha: f64,
    input: usize,
    conv_out: usize,
    ksize: usize,
    fc1: usize,
    fc2: usize,
    params: usize,
}

impl ReducedLeNet<f32> {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir.join("params")).map_err(|e| Error::io(dir, e))?;
        let meta = CheckpointMeta {
            c_in: self.cfg.c_in,
            pool: self.cfg.pool,
            selu_lambda: SELU_LAMBDA,
            selu_alpha: SELU_ALPHA,
            input: INPUT,
            conv_out: CONV_OUT,
            ksize: KSIZE,
            fc1: FC1,
            fc2: FC2,
            params: self.count_params(),
        };
        let path = dir.join("model.json");
        let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::json(&path, e))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        let flat = self.cfg.flat_len();
        let po = self.cfg.pool_out_dim();
        let dims: [Vec<usize>; 8] = [
            vec![CONV_OUT, self.cfg.c_in, KSIZE, KSIZE],
            vec![CONV_OUT],
            vec![FC1, flat],
            vec![FC1],
            vec![FC2, FC1],
            vec![FC2],
            vec![1, FC2],
            vec![1],
        ];
        let _ = po;
        for ((name, slice), dims) in PARAM_NAMES.iter().zip(self.param_slices()).zip(dims) {
            Tensor::new(dims, slice.to_vec())?.save(&dir.join(format!("params/{name}.aft")))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("model.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let meta: CheckpointMeta =
            serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
        let cfg = NetConfig {
            c_in: meta.c_in,
            pool: meta.pool,
        };
        let mut model = ReducedLeNet::<f32>::zeros(cfg);
        for (name, slot) in PARAM_NAMES.iter().zip(model.param_slices_mut()) {
            let t = Tensor::load(&dir.join(format!("params/{name}.aft")))?;
            if t.data.len() != slot.len() {
                return Err(Error::Validation(format!(
                    "{name}: expected {} values, got {}",
                    slot.len(),
                    t.data.len()
                )));
            }
            slot.copy_from_slice(&t.data);
        }
        Ok(model)
    }
}

/// Uniform random input block in [0, 1], handy for tests.
pub fn random_block<F: Real>(c_in: usize, rng: &mut impl Rng) -> Vec<F> {
    (0..c_in * INPUT * INPUT)
        .map(|_| F::from_f64(rng.random::<f64>()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selu_and_sigmoid_fixed_points() {
        assert_eq!(selu(0.0f64), 0.0);
        assert!((selu(1.0f64) - SELU_LAMBDA).abs() < 1e-12);
        assert!((sigmoid(0.0f64) - 0.5).abs() < 1e-12);
        // negative branch approaches -lambda*alpha
        assert!((selu(-30.0f64) + SELU_LAMBDA * SELU_ALPHA).abs() < 1e-9);
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = ReducedLeNet::<f32>::zeros(NetConfig::default());
        let x = vec![0.3f32; INPUT * INPUT];
        assert_eq!(model.forward(&x), 0.5);
    }

    #[test]
    fn delta_kernel_is_identity_on_preactivation() {
        // one kernel with a 1 at its center, zero bias: the pre-activation
        // equals the central 46x46 crop
        let mut rng = crate::rng::stream(31, "nn-delta");
        let x: Vec<f32> = random_block(1, &mut rng);
        let mut weight = vec![0.0f32; 1 * 1 * KSIZE * KSIZE];
        weight[(KSIZE / 2) * KSIZE + KSIZE / 2] = 1.0;
        let z = conv2d_forward(&x, 1, INPUT, INPUT, &weight, &[0.0], 1, KSIZE);
        let o = INPUT - KSIZE + 1;
        for y in 0..o {
            for c in 0..o {
                assert_eq!(z[y * o + c], x[(y + 2) * INPUT + c + 2]);
            }
        }
    }

    #[test]
    fn zero_input_zero_bias_gives_zero_conv_output() {
        let x = vec![0.0f32; 2 * INPUT * INPUT];
        let model = ReducedLeNet::<f32>::init(
            NetConfig {
                c_in: 2,
                pool: PoolGeometry::Table23,
            },
            9,
        );
        let z = conv2d_forward(
            &x,
            2,
            INPUT,
            INPUT,
            &model.conv_w,
            &model.conv_b,
            CONV_OUT,
            KSIZE,
        );
        assert!(z.iter().all(|&v| v == 0.0));
        assert!(z.iter().map(|&v| selu(v)).all(|v| v == 0.0));
    }

    #[test]
    fn pool_geometry_dims_and_padding() {
        assert_eq!(PoolGeometry::Table23.out_dim(46), 23);
        assert_eq!(PoolGeometry::Valid21.out_dim(46), 21);
        assert_eq!(PoolGeometry::Table23.pad_begin(46), 1);
        // constant input pools to the same constant
        let x = vec![0.7f32; 46 * 46];
        let (out, _) = maxpool_forward(&x, 1, 46, 46, PoolGeometry::Table23);
        assert_eq!(out.len(), 23 * 23);
        assert!(out.iter().all(|&v| v == 0.7));
        let (out, _) = maxpool_forward(&x, 1, 46, 46, PoolGeometry::Valid21);
        assert_eq!(out.len(), 21 * 21);
        assert!(out.iter().all(|&v| v == 0.7));
    }

    #[test]
    fn pool_spike_reaches_exactly_covering_windows() {
        let mut x = vec![0.0f32; 46 * 46];
        x[20 * 46 + 20] = 5.0;
        let (out, idx) = maxpool_forward(&x, 1, 46, 46, PoolGeometry::Table23);
        let mut hits = 0;
        for (o, &v) in out.iter().enumerate() {
            if v == 5.0 {
                hits += 1;
                assert_eq!(idx[o], (20 * 46 + 20) as u32);
            }
        }
        // window 5, stride 2, pad 1: position 20 is covered by output rows
        // oy with 2*oy-1 <= 20 < 2*oy+4, i.e. oy in {9, 10}; 2x2 windows
        assert_eq!(hits, 4);
    }

    #[test]
    fn forward_is_deterministic_and_bounded() {
        let model = ReducedLeNet::<f32>::init(NetConfig::default(), 77);
        let mut rng = crate::rng::stream(32, "nn-fwd");
        for _ in 0..10 {
            let x: Vec<f32> = random_block(1, &mut rng);
            let a = model.forward(&x);
            let b = model.forward(&x);
            assert_eq!(a.to_bits(), b.to_bits());
            assert!(a > 0.0 && a < 1.0);
        }
    }

    #[test]
    fn param_counts_match_hand_arithmetic() {
        // conv alone for c_in = 1: 6 * (25 + 1)
        assert_eq!(CONV_OUT * (25 + 1), 156);
        let table1 = NetConfig {
            c_in: 1,
            pool: PoolGeometry::Table23,
        };
        // 156 + (23*23*6)*40 + 40 + 40*24 + 24 + 24 + 1
        assert_eq!(count_params(&table1), 128_165);
        let table2 = NetConfig {
            c_in: 2,
            pool: PoolGeometry::Table23,
        };
        // c_in = 2 adds 6 * 25 conv weights
        assert_eq!(count_params(&table2), 128_165 + 150);
        let valid1 = NetConfig {
            c_in: 1,
            pool: PoolGeometry::Valid21,
        };
        // 156 + (21*21*6)*40 + 40 + 984 + 25
        assert_eq!(count_params(&valid1), 107_045);
    }

    #[test]
    fn checkpoint_round_trip_reproduces_predictions() {
        let dir = tempfile::tempdir().unwrap();
        let model = ReducedLeNet::<f32>::init(
            NetConfig {
                c_in: 2,
                pool: PoolGeometry::Table23,
            },
            123,
        );
        model.save(dir.path()).unwrap();
        let back = ReducedLeNet::<f32>::load(dir.path()).unwrap();
        let mut rng = crate::rng::stream(33, "nn-ckpt");
        for _ in 0..5 {
            let x: Vec<f32> = random_block(2, &mut rng);
            assert_eq!(model.forward(&x).to_bits(), back.forward(&x).to_bits());
        }
    }

    #[test]
    fn bad_input_shape_is_rejected() {
        let model = ReducedLeNet::<f32>::zeros(NetConfig::default());
        assert!(model.check_input(&vec![0.0; 100]).is_err());
        assert!(model.check_input(&vec![0.0; INPUT * INPUT]).is_ok());
    }

    #[test]
    fn init_is_seed_deterministic_and_matches_f64_stream() {
        let a = ReducedLeNet::<f32>::init(NetConfig::default(), 42);
        let b = ReducedLeNet::<f32>::init(NetConfig::default(), 42);
        assert_eq!(a.conv_w[0].to_bits(), b.conv_w[0].to_bits());
        let c = ReducedLeNet::<f64>::init(NetConfig::default(), 42);
        assert!((a.conv_w[0] as f64 - c.conv_w[0]).abs() < 1e-7);
        let d = ReducedLeNet::<f32>::init(NetConfig::default(), 43);
        assert_ne!(a.conv_w[0].to_bits(), d.conv_w[0].to_bits());
    }
}
