//! Toy contextual encoder with a mean-pool + linear classification head.
//!
//! ```text
//! ids [L]
//!   -> embedding                      [L x D]
//!   -> (optional) pre-norm block:
//!        x1 = x  + MHA(LN(x))         padded keys excluded
//!        h  = x1 + FFN(LN(x1))        FFN = GELU(. W1 + b1) W2 + b2
//!   -> masked mean over real tokens   [D]
//!   -> . W_head + b_head              [K]
//! ```
//!
//! Layer norm carries no affine parameters. Each example is processed on its
//! real tokens only, which is exactly attention with padded keys masked to
//! negative infinity and pooling that ignores padded positions.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::textenc::{EncodedBatch, PAD_ID};

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("row {row}: token id {id} out of range for vocabulary of {vocab_size}")]
    IdOutOfRange { row: usize, id: usize, vocab_size: usize },
    #[error("row {row}: length {length} outside 1..={max_len}")]
    BadLength { row: usize, length: usize, max_len: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite logits")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    /// Token embeddings are pooled directly.
    #[default]
    Bag,
    /// One pre-norm self-attention + feed-forward block before pooling.
    Attention,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub num_classes: usize,
    pub encoder: EncoderKind,
    pub num_heads: usize,
    pub ffn_dim: usize,
    pub init_seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.vocab_size < 2 {
            return bad("vocab_size must be at least 2 (<pad>, <unk>)");
        }
        if self.embed_dim == 0 {
            return bad("embed_dim must be at least 1");
        }
        if self.num_classes < 2 {
            return bad("num_classes must be at least 2");
        }
        if self.encoder == EncoderKind::Attention {
            if self.num_heads == 0 || !self.embed_dim.is_multiple_of(self.num_heads) {
                return bad("embed_dim must be divisible by num_heads");
            }
            if self.ffn_dim == 0 {
                return bad("ffn_dim must be at least 1");
            }
        }
        Ok(())
    }
}

/// Weights of the optional self-attention block.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionBlock {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl AttentionBlock {
    fn zeros(d: usize, f: usize) -> Self {
        Self {
            wq: Array2::zeros((d, d)),
            wk: Array2::zeros((d, d)),
            wv: Array2::zeros((d, d)),
            wo: Array2::zeros((d, d)),
            w1: Array2::zeros((d, f)),
            b1: Array1::zeros(f),
            w2: Array2::zeros((f, d)),
            b2: Array1::zeros(d),
        }
    }
}

/// All trainable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub embedding: Array2<f64>,
    pub attention: Option<AttentionBlock>,
    pub head_w: Array2<f64>,
    pub head_b: Array1<f64>,
}

/// Gradients, shaped exactly like [`ModelParams`].
pub type GradientSet = ModelParams;

/// How the optimizer should treat a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorRole {
    Weight,
    Bias,
    /// Embedding table whose first `pad_len` entries (the PAD row) are frozen
    /// at zero.
    Embedding { pad_len: usize },
}

/// Named flat view over one tensor.
pub struct TensorRef<'a> {
    pub name: &'static str,
    pub role: TensorRole,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: &'static str,
    pub role: TensorRole,
    pub data: &'a mut [f64],
}

/// A fixed, ordered set of flat tensors.
pub trait Parameters {
    fn tensors(&self) -> Vec<TensorRef<'_>>;
    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>>;
}

impl Parameters for ModelParams {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        fn r<'a, D: ndarray::Dimension>(
            name: &'static str,
            role: TensorRole,
            a: &'a ndarray::Array<f64, D>,
        ) -> TensorRef<'a> {
            TensorRef {
                name,
                role,
                shape: a.shape().to_vec(),
                data: a.as_slice().expect("parameters are contiguous"),
            }
        }
        let d = self.embedding.ncols();
        let mut out = vec![r("embedding", TensorRole::Embedding { pad_len: d }, &self.embedding)];
        if let Some(a) = &self.attention {
            out.push(r("attn.wq", TensorRole::Weight, &a.wq));
            out.push(r("attn.wk", TensorRole::Weight, &a.wk));
            out.push(r("attn.wv", TensorRole::Weight, &a.wv));
            out.push(r("attn.wo", TensorRole::Weight, &a.wo));
            out.push(r("attn.w1", TensorRole::Weight, &a.w1));
            out.push(r("attn.b1", TensorRole::Bias, &a.b1));
            out.push(r("attn.w2", TensorRole::Weight, &a.w2));
            out.push(r("attn.b2", TensorRole::Bias, &a.b2));
        }
        out.push(r("head.w", TensorRole::Weight, &self.head_w));
        out.push(r("head.b", TensorRole::Bias, &self.head_b));
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        fn m<'a, D: ndarray::Dimension>(
            name: &'static str,
            role: TensorRole,
            a: &'a mut ndarray::Array<f64, D>,
        ) -> TensorMut<'a> {
            TensorMut {
                name,
                role,
                data: a.as_slice_mut().expect("parameters are contiguous"),
            }
        }
        let d = self.embedding.ncols();
        let mut out = vec![m("embedding", TensorRole::Embedding { pad_len: d }, &mut self.embedding)];
        if let Some(a) = self.attention.as_mut() {
            out.push(m("attn.wq", TensorRole::Weight, &mut a.wq));
            out.push(m("attn.wk", TensorRole::Weight, &mut a.wk));
            out.push(m("attn.wv", TensorRole::Weight, &mut a.wv));
            out.push(m("attn.wo", TensorRole::Weight, &mut a.wo));
            out.push(m("attn.w1", TensorRole::Weight, &mut a.w1));
            out.push(m("attn.b1", TensorRole::Bias, &mut a.b1));
            out.push(m("attn.w2", TensorRole::Weight, &mut a.w2));
            out.push(m("attn.b2", TensorRole::Bias, &mut a.b2));
        }
        out.push(m("head.w", TensorRole::Weight, &mut self.head_w));
        out.push(m("head.b", TensorRole::Bias, &mut self.head_b));
        out
    }
}

impl ModelParams {
    /// Zero tensors with the shapes `config` implies.
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.embed_dim;
        Self {
            embedding: Array2::zeros((config.vocab_size, d)),
            attention: (config.encoder == EncoderKind::Attention)
                .then(|| AttentionBlock::zeros(d, config.ffn_dim)),
            head_w: Array2::zeros((d, config.num_classes)),
            head_b: Array1::zeros(config.num_classes),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.head_b.len()
    }

    /// True when every tensor has the same shape as in `other`.
    pub fn same_shape(&self, other: &ModelParams) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| x.name == y.name && x.shape == y.shape)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

/// Glorot-uniform weights, zero biases and a zero PAD row. Draw order is
/// embedding, attention (q, k, v, o, w1, w2), head.
pub fn init_params(config: &ModelConfig) -> Result<ModelParams, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
    let (v, d, k, f) = (config.vocab_size, config.embed_dim, config.num_classes, config.ffn_dim);

    let mut embedding = uniform_matrix(&mut rng, v, d, v, d);
    embedding.row_mut(PAD_ID).fill(0.0);
    let attention = (config.encoder == EncoderKind::Attention).then(|| AttentionBlock {
        wq: uniform_matrix(&mut rng, d, d, d, d),
        wk: uniform_matrix(&mut rng, d, d, d, d),
        wv: uniform_matrix(&mut rng, d, d, d, d),
        wo: uniform_matrix(&mut rng, d, d, d, d),
        w1: uniform_matrix(&mut rng, d, f, d, f),
        b1: Array1::zeros(f),
        w2: uniform_matrix(&mut rng, f, d, f, d),
        b2: Array1::zeros(d),
    });
    let head_w = uniform_matrix(&mut rng, d, k, d, k);
    Ok(ModelParams {
        embedding,
        attention,
        head_w,
        head_b: Array1::zeros(k),
    })
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu(z: f64) -> f64 {
    0.5 * z * (1.0 + (GELU_C * (z + GELU_A * z * z * z)).tanh())
}

fn gelu_grad(z: f64) -> f64 {
    let t = (GELU_C * (z + GELU_A * z * z * z)).tanh();
    0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * z * z)
}

/// Row-wise normalization to zero mean / unit variance. Returns the normalized
/// rows and each row's reciprocal standard deviation.
fn layer_norm(x: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    let d = x.ncols() as f64;
    let mut out = x.to_owned();
    let mut rstd = Array1::zeros(x.nrows());
    for (mut row, r) in out.rows_mut().into_iter().zip(rstd.iter_mut()) {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        *r = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        row.mapv_inplace(|v| v * *r);
    }
    (out, rstd)
}

/// `dx = rstd * (dy - mean(dy) - y * mean(dy * y))` per row.
fn layer_norm_backward(dy: ArrayView2<f64>, y: ArrayView2<f64>, rstd: &Array1<f64>) -> Array2<f64> {
    let d = dy.ncols() as f64;
    let mut dx = Array2::zeros(dy.raw_dim());
    for i in 0..dy.nrows() {
        let (gr, yr) = (dy.row(i), y.row(i));
        let mean_g = gr.sum() / d;
        let mean_gy = gr.dot(&yr) / d;
        for j in 0..dy.ncols() {
            dx[[i, j]] = rstd[i] * (gr[j] - mean_g - yr[j] * mean_gy);
        }
    }
    dx
}

/// Row softmax with max subtraction.
fn softmax_rows(scores: &mut Array2<f64>) {
    for mut row in scores.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

/// Activations of the attention block for one example.
#[derive(Debug, Clone)]
struct BlockCache {
    ln1: Array2<f64>,
    rstd1: Array1<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// One `[L x L]` attention matrix per head.
    probs: Vec<Array2<f64>>,
    ctx: Array2<f64>,
    ln2: Array2<f64>,
    rstd2: Array1<f64>,
    pre_act: Array2<f64>,
    act: Array2<f64>,
}

/// Everything backward needs for one example.
#[derive(Debug, Clone)]
struct ExampleCache {
    tokens: Vec<usize>,
    block: Option<BlockCache>,
    pooled: Array1<f64>,
}

/// Intermediate activations of a batch forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    examples: Vec<ExampleCache>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.examples.len()
    }

    /// Masked-mean pooled representation of every row, `[B x D]`.
    pub fn pooled(&self) -> Array2<f64> {
        let d = self.examples.first().map_or(0, |e| e.pooled.len());
        let mut out = Array2::zeros((self.examples.len(), d));
        for (i, e) in self.examples.iter().enumerate() {
            out.row_mut(i).assign(&e.pooled);
        }
        out
    }
}

fn block_forward(block: &AttentionBlock, x: ArrayView2<f64>, num_heads: usize) -> (Array2<f64>, BlockCache) {
    let (len, d) = x.dim();
    let dh = d / num_heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let (ln1, rstd1) = layer_norm(x);
    let q = ln1.dot(&block.wq);
    let k = ln1.dot(&block.wk);
    let v = ln1.dot(&block.wv);

    let mut ctx = Array2::zeros((len, d));
    let mut probs = Vec::with_capacity(num_heads);
    for h in 0..num_heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let mut p = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        softmax_rows(&mut p);
        ctx.slice_mut(cols).assign(&p.dot(&v.slice(cols)));
        probs.push(p);
    }
    let x1 = &x + &ctx.dot(&block.wo);

    let (ln2, rstd2) = layer_norm(x1.view());
    let pre_act = ln2.dot(&block.w1) + &block.b1;
    let act = pre_act.mapv(gelu);
    let out = x1 + act.dot(&block.w2) + &block.b2;

    (
        out,
        BlockCache {
            ln1,
            rstd1,
            q,
            k,
            v,
            probs,
            ctx,
            ln2,
            rstd2,
            pre_act,
            act,
        },
    )
}

fn example_forward(params: &ModelParams, tokens: Vec<usize>, num_heads: usize) -> (Array1<f64>, ExampleCache) {
    let d = params.embed_dim();
    let mut x = Array2::zeros((tokens.len(), d));
    for (t, &id) in tokens.iter().enumerate() {
        x.row_mut(t).assign(&params.embedding.row(id));
    }
    let (h, block) = match &params.attention {
        Some(b) => {
            let (h, cache) = block_forward(b, x.view(), num_heads);
            (h, Some(cache))
        }
        None => (x, None),
    };
    let pooled = h.sum_axis(Axis(0)) / tokens.len() as f64;
    let logits = pooled.dot(&params.head_w) + &params.head_b;
    (
        logits,
        ExampleCache {
            tokens,
            block,
            pooled,
        },
    )
}

fn check_batch(params: &ModelParams, batch: &EncodedBatch) -> Result<(), ModelError> {
    let v = params.vocab_size();
    let l = batch.max_len();
    if batch.lengths.len() != batch.batch_size() {
        return Err(ModelError::Shape(format!(
            "{} lengths for {} rows",
            batch.lengths.len(),
            batch.batch_size()
        )));
    }
    for (row, &length) in batch.lengths.iter().enumerate() {
        if length == 0 || length > l {
            return Err(ModelError::BadLength { row, length, max_len: l });
        }
        if let Some(&id) = batch.ids.row(row).iter().find(|&&id| id >= v) {
            return Err(ModelError::IdOutOfRange { row, id, vocab_size: v });
        }
    }
    Ok(())
}

/// Number of attention heads implied by `config`, or 1 for the bag encoder.
fn heads(config: &ModelConfig) -> usize {
    config.num_heads.max(1)
}

pub fn forward(
    config: &ModelConfig,
    params: &ModelParams,
    batch: &EncodedBatch,
) -> Result<(Array2<f64>, ForwardCache), ModelError> {
    forward_with(config, params, batch, Execution::default())
}

/// Batch forward pass; rows are independent and are computed under `exec`.
pub fn forward_with(
    config: &ModelConfig,
    params: &ModelParams,
    batch: &EncodedBatch,
    exec: Execution,
) -> Result<(Array2<f64>, ForwardCache), ModelError> {
    check_batch(params, batch)?;
    let num_heads = heads(config);
    let rows = exec.map_indexed(batch.batch_size(), |i| {
        example_forward(params, batch.row_tokens(i), num_heads)
    });
    let mut logits = Array2::zeros((rows.len(), params.num_classes()));
    let mut examples = Vec::with_capacity(rows.len());
    for (i, (l, cache)) in rows.into_iter().enumerate() {
        logits.row_mut(i).assign(&l);
        examples.push(cache);
    }
    Ok((logits, ForwardCache { examples }))
}

/// Per-example gradient. Embedding rows are kept sparse until reduction.
struct ExampleGrad {
    embedding_rows: Array2<f64>,
    block: Option<AttentionBlock>,
    head_w: Array2<f64>,
}

fn block_backward(
    block: &AttentionBlock,
    cache: &BlockCache,
    dout: Array2<f64>,
    num_heads: usize,
) -> (Array2<f64>, AttentionBlock) {
    let (len, d) = dout.dim();
    let dh = d / num_heads;
    let scale = 1.0 / (dh as f64).sqrt();

    // FFN branch: out = x1 + act . w2 + b2
    let dw2 = cache.act.t().dot(&dout);
    let db2 = dout.sum_axis(Axis(0));
    let mut dpre = dout.dot(&block.w2.t());
    ndarray::Zip::from(&mut dpre)
        .and(&cache.pre_act)
        .for_each(|g, &z| *g *= gelu_grad(z));
    let dw1 = cache.ln2.t().dot(&dpre);
    let db1 = dpre.sum_axis(Axis(0));
    let dln2 = dpre.dot(&block.w1.t());
    let dx1 = dout + layer_norm_backward(dln2.view(), cache.ln2.view(), &cache.rstd2);

    // attention branch: x1 = x + ctx . wo
    let dwo = cache.ctx.t().dot(&dx1);
    let dctx = dx1.dot(&block.wo.t());
    let mut dq = Array2::zeros((len, d));
    let mut dk = Array2::zeros((len, d));
    let mut dv = Array2::zeros((len, d));
    for h in 0..num_heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let p = &cache.probs[h];
        let dctx_h = dctx.slice(cols);
        let dp = dctx_h.dot(&cache.v.slice(cols).t());
        dv.slice_mut(cols).assign(&p.t().dot(&dctx_h));
        // softmax backward: ds = p * (dp - rowsum(dp * p))
        let mut ds = dp;
        for i in 0..len {
            let dot: f64 = ds.row(i).dot(&p.row(i));
            for j in 0..len {
                ds[[i, j]] = p[[i, j]] * (ds[[i, j]] - dot) * scale;
            }
        }
        dq.slice_mut(cols).assign(&ds.dot(&cache.k.slice(cols)));
        dk.slice_mut(cols).assign(&ds.t().dot(&cache.q.slice(cols)));
    }
    let dwq = cache.ln1.t().dot(&dq);
    let dwk = cache.ln1.t().dot(&dk);
    let dwv = cache.ln1.t().dot(&dv);
    let dln1 = dq.dot(&block.wq.t()) + dk.dot(&block.wk.t()) + dv.dot(&block.wv.t());
    let dx = dx1 + layer_norm_backward(dln1.view(), cache.ln1.view(), &cache.rstd1);

    (
        dx,
        AttentionBlock {
            wq: dwq,
            wk: dwk,
            wv: dwv,
            wo: dwo,
            w1: dw1,
            b1: db1,
            w2: dw2,
            b2: db2,
        },
    )
}

fn example_backward(params: &ModelParams, cache: &ExampleCache, dlogits: Array1<f64>, num_heads: usize) -> ExampleGrad {
    let len = cache.tokens.len();
    let d = params.embed_dim();
    let head_w = {
        let p = cache.pooled.view().insert_axis(Axis(1));
        let g = dlogits.view().insert_axis(Axis(0));
        p.dot(&g)
    };
    let dpooled = params.head_w.dot(&dlogits) / len as f64;
    let dh = Array2::from_shape_fn((len, d), |(_, j)| dpooled[j]);
    let (embedding_rows, block) = match (&params.attention, &cache.block) {
        (Some(b), Some(bc)) => {
            let (dx, g) = block_backward(b, bc, dh, num_heads);
            (dx, Some(g))
        }
        _ => (dh, None),
    };
    ExampleGrad {
        embedding_rows,
        block,
        head_w,
    }
}

fn add_block(acc: &mut AttentionBlock, g: &AttentionBlock) {
    acc.wq += &g.wq;
    acc.wk += &g.wk;
    acc.wv += &g.wv;
    acc.wo += &g.wo;
    acc.w1 += &g.w1;
    acc.b1 += &g.b1;
    acc.w2 += &g.w2;
    acc.b2 += &g.b2;
}

pub fn backward(
    config: &ModelConfig,
    params: &ModelParams,
    cache: &ForwardCache,
    dlogits: ArrayView2<f64>,
) -> Result<GradientSet, ModelError> {
    backward_with(config, params, cache, dlogits, Execution::default())
}

/// Gradient of `sum(logits * dlogits)` with respect to every parameter.
///
/// Per-example gradients are computed under `exec` and summed serially in row
/// order, so the result does not depend on the execution mode.
pub fn backward_with(
    config: &ModelConfig,
    params: &ModelParams,
    cache: &ForwardCache,
    dlogits: ArrayView2<f64>,
    exec: Execution,
) -> Result<GradientSet, ModelError> {
    if dlogits.dim() != (cache.batch_size(), params.num_classes()) {
        return Err(ModelError::Shape(format!(
            "dlogits {:?} for batch {} with {} classes",
            dlogits.dim(),
            cache.batch_size(),
            params.num_classes()
        )));
    }
    let num_heads = heads(config);
    let per_example = exec.map_indexed(cache.batch_size(), |i| {
        example_backward(params, &cache.examples[i], dlogits.row(i).to_owned(), num_heads)
    });

    let mut grads = ModelParams {
        embedding: Array2::zeros(params.embedding.raw_dim()),
        attention: params
            .attention
            .as_ref()
            .map(|a| AttentionBlock::zeros(a.w1.nrows(), a.w1.ncols())),
        head_w: Array2::zeros(params.head_w.raw_dim()),
        head_b: Array1::zeros(params.num_classes()),
    };
    for (i, g) in per_example.iter().enumerate() {
        for (t, &id) in cache.examples[i].tokens.iter().enumerate() {
            let mut row = grads.embedding.row_mut(id);
            row += &g.embedding_rows.row(t);
        }
        if let (Some(acc), Some(b)) = (grads.attention.as_mut(), g.block.as_ref()) {
            add_block(acc, b);
        }
        grads.head_w += &g.head_w;
        grads.head_b += &dlogits.row(i);
    }
    grads.embedding.row_mut(PAD_ID).fill(0.0);
    Ok(grads)
}

/// Row-wise argmax; ties resolve to the smallest index.
pub fn predict(logits: ArrayView2<f64>) -> Result<Vec<usize>, ModelError> {
    logits
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (k, &z) in row.iter().enumerate() {
                if z.is_nan() {
                    return Err(ModelError::NonFinite);
                }
                if z > row[best] {
                    best = k;
                }
            }
            Ok(best)
        })
        .collect()
}
