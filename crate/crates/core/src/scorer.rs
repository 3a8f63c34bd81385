//! Learned graph-pair similarity regressor.
//!
//! Approximates the exact distance so query time avoids the assignment
//! solve: node labels feature-hash into a small vector, three rounds of
//! neighborhood mean aggregation build node embeddings, a context-aware
//! attention pool collapses them into one graph vector, a neural tensor
//! layer produces K interaction scores between the two graph vectors, and a
//! small MLP maps those to a similarity in (0, 1). Training minimizes mean
//! squared error against weak labels with plain seeded SGD; all gradients
//! are analytic and verified against central finite differences in tests.

// Backprop walks several same-length arrays in lockstep; explicit indices
// keep the math readable.
#![allow(clippy::needless_range_loop)]

use crate::harg::Harg;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("training needs at least one pair")]
    NoPairs,
    #[error("label {0} outside (0, 1]")]
    BadLabel(f64),
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
}

/// Dense row-major matrix with explicit shape; the whole model serializes
/// through these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn init(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Self {
        let scale = (6.0 / (rows + cols) as f64).sqrt();
        Mat {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.gen_range(-scale..scale))
                .collect(),
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Aᵀ x`
    fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    /// `uᵀ A v`
    fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        (0..self.rows)
            .map(|i| u[i] * self.row(i).iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    /// `self += scale · u vᵀ`
    fn add_outer(&mut self, u: &[f64], v: &[f64], scale: f64) {
        for i in 0..self.rows {
            let ui = u[i] * scale;
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (a, b) in row.iter_mut().zip(v) {
                *a += ui * b;
            }
        }
    }
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn relu_gate(pre: f64, grad: f64) -> f64 {
    if pre > 0.0 {
        grad
    } else {
        0.0
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn add_assign(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

fn scaled(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|v| v * s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Width of the hashed label features.
    pub label_hash_dim: usize,
    /// Width of the aggregation layers and graph vector.
    pub hidden: usize,
    /// Number of tensor-interaction slices.
    pub ntn_slices: usize,
    /// Hidden width of the output MLP.
    pub mlp_hidden: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            label_hash_dim: 32,
            hidden: 16,
            ntn_slices: 8,
            mlp_hidden: 8,
            seed: 42,
        }
    }
}

/// All parameters of the regressor. Serialization is bit-exact JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerModel {
    pub config: ModelConfig,
    gcn_w: Vec<Mat>,
    gcn_b: Vec<Vec<f64>>,
    context_w: Mat,
    ntn_w: Vec<Mat>,
    ntn_v: Mat,
    ntn_b: Vec<f64>,
    mlp_w1: Mat,
    mlp_b1: Vec<f64>,
    mlp_w2: Vec<f64>,
    mlp_b2: f64,
}

impl ScorerModel {
    pub fn new(config: ModelConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let h = config.hidden;
        let k = config.ntn_slices;
        let gcn_dims = [(h, config.label_hash_dim), (h, h), (h, h)];
        ScorerModel {
            gcn_w: gcn_dims
                .iter()
                .map(|&(r, c)| Mat::init(&mut rng, r, c))
                .collect(),
            gcn_b: gcn_dims.iter().map(|&(r, _)| vec![0.0; r]).collect(),
            context_w: Mat::init(&mut rng, h, h),
            ntn_w: (0..k).map(|_| Mat::init(&mut rng, h, h)).collect(),
            ntn_v: Mat::init(&mut rng, k, 2 * h),
            ntn_b: vec![0.0; k],
            mlp_w1: Mat::init(&mut rng, config.mlp_hidden, k),
            mlp_b1: vec![0.0; config.mlp_hidden],
            mlp_w2: (0..config.mlp_hidden)
                .map(|_| rng.gen_range(-0.5..0.5))
                .collect(),
            mlp_b2: 0.0,
            config,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ScorerError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScorerError> {
        fs::write(path, self.to_json()).map_err(|source| ScorerError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScorerError> {
        let text = fs::read_to_string(path).map_err(|source| ScorerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// All parameters as one flat vector (order matches [`Gradients`]).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in &self.gcn_w {
            out.extend_from_slice(&w.data);
        }
        for b in &self.gcn_b {
            out.extend_from_slice(b);
        }
        out.extend_from_slice(&self.context_w.data);
        for w in &self.ntn_w {
            out.extend_from_slice(&w.data);
        }
        out.extend_from_slice(&self.ntn_v.data);
        out.extend_from_slice(&self.ntn_b);
        out.extend_from_slice(&self.mlp_w1.data);
        out.extend_from_slice(&self.mlp_b1);
        out.extend_from_slice(&self.mlp_w2);
        out.push(self.mlp_b2);
        out
    }

    /// Overwrite parameters from a flat vector produced by [`flatten`].
    pub fn assign(&mut self, flat: &[f64]) {
        let mut at = 0;
        let mut take = |dst: &mut [f64]| {
            dst.copy_from_slice(&flat[at..at + dst.len()]);
            at += dst.len();
        };
        for w in &mut self.gcn_w {
            take(&mut w.data);
        }
        for b in &mut self.gcn_b {
            take(b);
        }
        take(&mut self.context_w.data);
        for w in &mut self.ntn_w {
            take(&mut w.data);
        }
        take(&mut self.ntn_v.data);
        take(&mut self.ntn_b);
        take(&mut self.mlp_w1.data);
        take(&mut self.mlp_b1);
        take(&mut self.mlp_w2);
        let mut b2 = [self.mlp_b2];
        take(&mut b2);
        self.mlp_b2 = b2[0];
        assert_eq!(at, flat.len(), "flat parameter vector has wrong length");
    }
}

/// Parameter gradients, same shapes and flatten order as the model.
pub struct Gradients {
    gcn_w: Vec<Mat>,
    gcn_b: Vec<Vec<f64>>,
    context_w: Mat,
    ntn_w: Vec<Mat>,
    ntn_v: Mat,
    ntn_b: Vec<f64>,
    mlp_w1: Mat,
    mlp_b1: Vec<f64>,
    mlp_w2: Vec<f64>,
    mlp_b2: f64,
}

impl Gradients {
    pub fn zeros(model: &ScorerModel) -> Self {
        Gradients {
            gcn_w: model.gcn_w.iter().map(|w| Mat::zeros(w.rows, w.cols)).collect(),
            gcn_b: model.gcn_b.iter().map(|b| vec![0.0; b.len()]).collect(),
            context_w: Mat::zeros(model.context_w.rows, model.context_w.cols),
            ntn_w: model.ntn_w.iter().map(|w| Mat::zeros(w.rows, w.cols)).collect(),
            ntn_v: Mat::zeros(model.ntn_v.rows, model.ntn_v.cols),
            ntn_b: vec![0.0; model.ntn_b.len()],
            mlp_w1: Mat::zeros(model.mlp_w1.rows, model.mlp_w1.cols),
            mlp_b1: vec![0.0; model.mlp_b1.len()],
            mlp_w2: vec![0.0; model.mlp_w2.len()],
            mlp_b2: 0.0,
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in &self.gcn_w {
            out.extend_from_slice(&w.data);
        }
        for b in &self.gcn_b {
            out.extend_from_slice(b);
        }
        out.extend_from_slice(&self.context_w.data);
        for w in &self.ntn_w {
            out.extend_from_slice(&w.data);
        }
        out.extend_from_slice(&self.ntn_v.data);
        out.extend_from_slice(&self.ntn_b);
        out.extend_from_slice(&self.mlp_w1.data);
        out.extend_from_slice(&self.mlp_b1);
        out.extend_from_slice(&self.mlp_w2);
        out.push(self.mlp_b2);
        out
    }
}

// ---------------------------------------------------------------------------
// featurization
// ---------------------------------------------------------------------------

fn fnv1a(seed: u8, bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64 ^ u64::from(seed).wrapping_mul(0x9e37_79b9);
    for &b in std::iter::once(&seed).chain(bytes) {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Neighbor lists (undirected, self-inclusive) and hashed label features.
/// Edge labels fold into the node feature by hashing
/// `incoming-edge-label:node-label`.
pub struct GraphData {
    feats: Vec<Vec<f64>>,
    neigh: Vec<Vec<usize>>,
}

impl GraphData {
    pub fn from_harg(g: &Harg, d0: usize) -> Self {
        let n = g.nodes.len();
        let mut neigh: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        let mut incoming: Vec<Option<&str>> = vec![None; n];
        for edge in &g.edges {
            neigh[edge.from].push(edge.to);
            neigh[edge.to].push(edge.from);
            if incoming[edge.to].is_none() {
                incoming[edge.to] = Some(&edge.label);
            }
        }
        for list in &mut neigh {
            list.sort_unstable();
            list.dedup();
        }
        let feats = g
            .nodes
            .iter()
            .map(|node| {
                let key = format!("{}:{}", incoming[node.id].unwrap_or(""), node.label);
                let mut x = vec![0.0; d0];
                let weight = 1.0 / (2.0_f64).sqrt();
                for probe in 0..2_u8 {
                    let h = fnv1a(probe, key.as_bytes());
                    let idx = (h % d0 as u64) as usize;
                    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
                    x[idx] += sign * weight;
                }
                x
            })
            .collect();
        GraphData { feats, neigh }
    }

    pub fn len(&self) -> usize {
        self.feats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feats.is_empty()
    }
}

// ---------------------------------------------------------------------------
// forward passes (with traces for backprop)
// ---------------------------------------------------------------------------

struct EncodeTrace {
    /// `hs[0]` is the hashed input; `hs[l+1]` the output of layer `l`.
    hs: Vec<Vec<Vec<f64>>>,
    /// Neighborhood means feeding each layer.
    means: Vec<Vec<Vec<f64>>>,
    /// Pre-activations of each layer.
    zs: Vec<Vec<Vec<f64>>>,
}

fn encode_trace(data: &GraphData, model: &ScorerModel) -> EncodeTrace {
    let mut hs = vec![data.feats.clone()];
    let mut means = Vec::new();
    let mut zs = Vec::new();
    for (w, b) in model.gcn_w.iter().zip(&model.gcn_b) {
        let prev = hs.last().expect("at least the input layer");
        let layer_means: Vec<Vec<f64>> = data
            .neigh
            .iter()
            .map(|ns| {
                let mut m = vec![0.0; prev[0].len()];
                for &u in ns {
                    add_assign(&mut m, &prev[u]);
                }
                scaled(&m, 1.0 / ns.len() as f64)
            })
            .collect();
        let layer_zs: Vec<Vec<f64>> = layer_means
            .iter()
            .map(|m| {
                let mut z = w.matvec(m);
                add_assign(&mut z, b);
                z
            })
            .collect();
        let layer_hs: Vec<Vec<f64>> = layer_zs
            .iter()
            .map(|z| z.iter().copied().map(relu).collect())
            .collect();
        means.push(layer_means);
        zs.push(layer_zs);
        hs.push(layer_hs);
    }
    EncodeTrace { hs, means, zs }
}

/// Per-node embeddings after the aggregation layers.
pub fn encode_nodes(g: &Harg, model: &ScorerModel) -> Vec<Vec<f64>> {
    let data = GraphData::from_harg(g, model.config.label_hash_dim);
    encode_trace(&data, model).hs.pop().expect("final layer")
}

struct PoolTrace {
    hbar: Vec<f64>,
    ctx: Vec<f64>,
    attn: Vec<f64>,
    pooled: Vec<f64>,
}

fn pool_trace(nodes: &[Vec<f64>], model: &ScorerModel) -> PoolTrace {
    let h = model.config.hidden;
    let n = nodes.len();
    let mut hbar = vec![0.0; h];
    for v in nodes {
        add_assign(&mut hbar, v);
    }
    let hbar = scaled(&hbar, 1.0 / n as f64);
    let ctx: Vec<f64> = model.context_w.matvec(&hbar).iter().map(|x| x.tanh()).collect();
    let attn: Vec<f64> = nodes
        .iter()
        .map(|v| sigmoid(v.iter().zip(&ctx).map(|(a, b)| a * b).sum()))
        .collect();
    let mut pooled = vec![0.0; h];
    for (v, &a) in nodes.iter().zip(&attn) {
        add_assign(&mut pooled, &scaled(v, a));
    }
    PoolTrace {
        hbar,
        ctx,
        attn,
        pooled,
    }
}

/// Context-aware attention pooling of node vectors into one graph vector.
pub fn pool_graph(nodes: &[Vec<f64>], model: &ScorerModel) -> Vec<f64> {
    pool_trace(nodes, model).pooled
}

struct NtnTrace {
    pre: Vec<f64>,
    out: Vec<f64>,
}

fn ntn_trace(hq: &[f64], hc: &[f64], model: &ScorerModel) -> NtnTrace {
    let mut joint = hq.to_vec();
    joint.extend_from_slice(hc);
    let pre: Vec<f64> = (0..model.config.ntn_slices)
        .map(|k| {
            model.ntn_w[k].bilinear(hq, hc)
                + model.ntn_v.row(k).iter().zip(&joint).map(|(a, b)| a * b).sum::<f64>()
                + model.ntn_b[k]
        })
        .collect();
    let out = pre.iter().copied().map(relu).collect();
    NtnTrace { pre, out }
}

/// K tensor-interaction scores between two graph vectors.
pub fn ntn_interaction(hq: &[f64], hc: &[f64], model: &ScorerModel) -> Vec<f64> {
    ntn_trace(hq, hc, model).out
}

struct MlpTrace {
    z1: Vec<f64>,
    r: Vec<f64>,
    score: f64,
}

fn mlp_trace(interactions: &[f64], model: &ScorerModel) -> MlpTrace {
    let mut z1 = model.mlp_w1.matvec(interactions);
    add_assign(&mut z1, &model.mlp_b1);
    let r: Vec<f64> = z1.iter().copied().map(relu).collect();
    let z2: f64 = model.mlp_w2.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() + model.mlp_b2;
    MlpTrace {
        z1,
        r,
        score: sigmoid(z2),
    }
}

struct PairTrace {
    q_enc: EncodeTrace,
    c_enc: EncodeTrace,
    q_pool: PoolTrace,
    c_pool: PoolTrace,
    ntn: NtnTrace,
    mlp: MlpTrace,
}

fn forward_pair(q: &GraphData, c: &GraphData, model: &ScorerModel) -> PairTrace {
    let q_enc = encode_trace(q, model);
    let c_enc = encode_trace(c, model);
    let q_pool = pool_trace(q_enc.hs.last().expect("layers"), model);
    let c_pool = pool_trace(c_enc.hs.last().expect("layers"), model);
    let ntn = ntn_trace(&q_pool.pooled, &c_pool.pooled, model);
    let mlp = mlp_trace(&ntn.out, model);
    PairTrace {
        q_enc,
        c_enc,
        q_pool,
        c_pool,
        ntn,
        mlp,
    }
}

/// Predicted similarity in (0, 1) for a pair of graphs.
pub fn predict_similarity(gq: &Harg, gc: &Harg, model: &ScorerModel) -> f64 {
    let d0 = model.config.label_hash_dim;
    let q = GraphData::from_harg(gq, d0);
    let c = GraphData::from_harg(gc, d0);
    forward_pair(&q, &c, model).mlp.score
}

/// Predict from prepared graph data (lets callers cache featurization).
pub fn predict_prepared(q: &GraphData, c: &GraphData, model: &ScorerModel) -> f64 {
    forward_pair(q, c, model).mlp.score
}

// ---------------------------------------------------------------------------
// backward pass
// ---------------------------------------------------------------------------

fn pool_backward(
    d_pooled: &[f64],
    nodes: &[Vec<f64>],
    trace: &PoolTrace,
    model: &ScorerModel,
    grads: &mut Gradients,
) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let h = model.config.hidden;
    let mut d_nodes: Vec<Vec<f64>> = vec![vec![0.0; h]; n];
    let mut d_ctx = vec![0.0; h];
    for (v, node) in nodes.iter().enumerate() {
        let a = trace.attn[v];
        let d_a: f64 = d_pooled.iter().zip(node).map(|(g, x)| g * x).sum();
        let d_score = d_a * a * (1.0 - a);
        for i in 0..h {
            d_nodes[v][i] += a * d_pooled[i] + d_score * trace.ctx[i];
            d_ctx[i] += d_score * node[i];
        }
    }
    // ctx = tanh(W_c · hbar)
    let d_u: Vec<f64> = d_ctx
        .iter()
        .zip(&trace.ctx)
        .map(|(g, c)| g * (1.0 - c * c))
        .collect();
    grads.context_w.add_outer(&d_u, &trace.hbar, 1.0);
    let d_hbar = model.context_w.matvec_t(&d_u);
    let share = scaled(&d_hbar, 1.0 / n as f64);
    for d in &mut d_nodes {
        add_assign(d, &share);
    }
    d_nodes
}

fn encode_backward(
    mut d_out: Vec<Vec<f64>>,
    data: &GraphData,
    trace: &EncodeTrace,
    model: &ScorerModel,
    grads: &mut Gradients,
) {
    for layer in (0..model.gcn_w.len()).rev() {
        let w = &model.gcn_w[layer];
        let prev_dim = trace.hs[layer][0].len();
        let mut d_prev: Vec<Vec<f64>> = vec![vec![0.0; prev_dim]; data.len()];
        for v in 0..data.len() {
            let d_z: Vec<f64> = d_out[v]
                .iter()
                .zip(&trace.zs[layer][v])
                .map(|(g, &z)| relu_gate(z, *g))
                .collect();
            grads.gcn_w[layer].add_outer(&d_z, &trace.means[layer][v], 1.0);
            add_assign(&mut grads.gcn_b[layer], &d_z);
            let d_mean = w.matvec_t(&d_z);
            let share = scaled(&d_mean, 1.0 / data.neigh[v].len() as f64);
            for &u in &data.neigh[v] {
                add_assign(&mut d_prev[u], &share);
            }
        }
        d_out = d_prev;
    }
}

/// Accumulate the gradient of `(score − label)²` for one pair; returns the
/// squared error.
fn backward_pair(
    q: &GraphData,
    c: &GraphData,
    label: f64,
    trace: &PairTrace,
    model: &ScorerModel,
    grads: &mut Gradients,
) -> f64 {
    let s = trace.mlp.score;
    let loss = (s - label) * (s - label);
    let d_z2 = 2.0 * (s - label) * s * (1.0 - s);

    for (i, r) in trace.mlp.r.iter().enumerate() {
        grads.mlp_w2[i] += d_z2 * r;
    }
    grads.mlp_b2 += d_z2;
    let d_z1: Vec<f64> = model
        .mlp_w2
        .iter()
        .zip(&trace.mlp.z1)
        .map(|(w, &z)| relu_gate(z, d_z2 * w))
        .collect();
    grads.mlp_w1.add_outer(&d_z1, &trace.ntn.out, 1.0);
    add_assign(&mut grads.mlp_b1, &d_z1);
    let d_inter = model.mlp_w1.matvec_t(&d_z1);

    let h = model.config.hidden;
    let hq = &trace.q_pool.pooled;
    let hc = &trace.c_pool.pooled;
    let mut joint = hq.clone();
    joint.extend_from_slice(hc);
    let mut d_hq = vec![0.0; h];
    let mut d_hc = vec![0.0; h];
    for k in 0..model.config.ntn_slices {
        let d_pre = relu_gate(trace.ntn.pre[k], d_inter[k]);
        if d_pre == 0.0 {
            continue;
        }
        grads.ntn_b[k] += d_pre;
        grads.ntn_w[k].add_outer(hq, hc, d_pre);
        let v_row_start = k * model.ntn_v.cols;
        for (i, j) in joint.iter().enumerate() {
            grads.ntn_v.data[v_row_start + i] += d_pre * j;
        }
        let wk = &model.ntn_w[k];
        let w_hc = wk.matvec(hc);
        let wt_hq = wk.matvec_t(hq);
        let v_row = model.ntn_v.row(k);
        for i in 0..h {
            d_hq[i] += d_pre * (w_hc[i] + v_row[i]);
            d_hc[i] += d_pre * (wt_hq[i] + v_row[h + i]);
        }
    }

    let q_nodes = trace.q_enc.hs.last().expect("layers");
    let c_nodes = trace.c_enc.hs.last().expect("layers");
    let d_q_nodes = pool_backward(&d_hq, q_nodes, &trace.q_pool, model, grads);
    let d_c_nodes = pool_backward(&d_hc, c_nodes, &trace.c_pool, model, grads);
    encode_backward(d_q_nodes, q, &trace.q_enc, model, grads);
    encode_backward(d_c_nodes, c, &trace.c_enc, model, grads);
    loss
}

/// Gradient of the single-pair squared error with respect to every
/// parameter (used directly by the finite-difference checks).
pub fn pair_gradients(
    q: &GraphData,
    c: &GraphData,
    label: f64,
    model: &ScorerModel,
) -> (f64, Gradients) {
    let trace = forward_pair(q, c, model);
    let mut grads = Gradients::zeros(model);
    let loss = backward_pair(q, c, label, &trace, model, &mut grads);
    (loss, grads)
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub initial_mse: f64,
    pub final_mse: f64,
    pub epoch_mse: Vec<f64>,
}

/// One training example: indices into a shared graph slice plus the target
/// similarity.
pub type TrainPair = (usize, usize, f64);

/// Mean squared error of the model over a pair set.
pub fn mse(model: &ScorerModel, graphs: &[GraphData], pairs: &[TrainPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|&(qi, ci, label)| {
            let s = predict_prepared(&graphs[qi], &graphs[ci], model);
            (s - label) * (s - label)
        })
        .sum();
    total / pairs.len() as f64
}

fn apply_step(model: &mut ScorerModel, grads: &Gradients, step: f64) {
    let update = |dst: &mut [f64], src: &[f64]| {
        for (d, g) in dst.iter_mut().zip(src) {
            *d -= step * g;
        }
    };
    for (w, g) in model.gcn_w.iter_mut().zip(&grads.gcn_w) {
        update(&mut w.data, &g.data);
    }
    for (b, g) in model.gcn_b.iter_mut().zip(&grads.gcn_b) {
        update(b, g);
    }
    update(&mut model.context_w.data, &grads.context_w.data);
    for (w, g) in model.ntn_w.iter_mut().zip(&grads.ntn_w) {
        update(&mut w.data, &g.data);
    }
    update(&mut model.ntn_v.data, &grads.ntn_v.data);
    update(&mut model.ntn_b, &grads.ntn_b);
    update(&mut model.mlp_w1.data, &grads.mlp_w1.data);
    update(&mut model.mlp_b1, &grads.mlp_b1);
    update(&mut model.mlp_w2, &grads.mlp_w2);
    model.mlp_b2 -= step * grads.mlp_b2;
}

/// Train a fresh model with mini-batch SGD on MSE. Deterministic for a
/// given config; labels must lie in (0, 1].
pub fn train(
    graphs: &[Harg],
    pairs: &[TrainPair],
    model_config: ModelConfig,
    cfg: &TrainConfig,
) -> Result<(ScorerModel, TrainReport), ScorerError> {
    if pairs.is_empty() {
        return Err(ScorerError::NoPairs);
    }
    for &(_, _, label) in pairs {
        if !(label > 0.0 && label <= 1.0) {
            return Err(ScorerError::BadLabel(label));
        }
    }
    let data: Vec<GraphData> = graphs
        .iter()
        .map(|g| GraphData::from_harg(g, model_config.label_hash_dim))
        .collect();
    let mut model = ScorerModel::new(model_config);
    let initial_mse = mse(&model, &data, pairs);

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_7ab1e);
    let mut epoch_mse = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        // Fisher-Yates with the seeded stream keeps epochs reproducible.
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            let mut grads = Gradients::zeros(&model);
            for &p in batch {
                let (qi, ci, label) = pairs[p];
                let trace = forward_pair(&data[qi], &data[ci], &model);
                epoch_loss += backward_pair(&data[qi], &data[ci], label, &trace, &model, &mut grads);
            }
            apply_step(&mut model, &grads, cfg.learning_rate / batch.len() as f64);
        }
        let epoch_loss = epoch_loss / pairs.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(ScorerError::NonFiniteLoss { epoch });
        }
        epoch_mse.push(epoch_loss);
    }
    let final_mse = mse(&model, &data, pairs);
    Ok((
        model,
        TrainReport {
            initial_mse,
            final_mse,
            epoch_mse,
        },
    ))
}
