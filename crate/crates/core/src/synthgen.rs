//! Deterministic synthetic corpora from a toy single-layer multi-head
//! attention forward pass.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the config seed.
//! Stream ids are `kind << 56 | layer << 32 | index`:
//!
//! | kind | index        | draws                                  |
//! |------|--------------|----------------------------------------|
//! | 1    | sample       | sequence length, then embeddings       |
//! | 2    | head         | `W_Q`, `W_K`, value basis (ungrouped)  |
//! | 3    | group        | `W_Q`, `W_K`, value basis (grouped)    |
//! | 4    | head         | value noise                            |
//!
//! Standard normals use the inverse CDF of a uniform on the open unit
//! interval built from the top 53 bits of one `u64`, so the byte stream of
//! a corpus depends only on the seed and the config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelGeometry;
use crate::tensor_store::{write_head_output, EntryKey, HeadOutput, Manifest};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadProfile {
    /// Column-rank cap of the value projection, `1..=D'`.
    pub rank: usize,
    /// Scale of the full-rank noise added to the value projection.
    #[serde(default)]
    pub noise: f64,
    /// Heads sharing a group share attention weights and value directions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<u32>,
}

fn default_attention_scale() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub geometry: ModelGeometry,
    pub n: usize,
    /// Inclusive `[min, max]` sequence length.
    pub seq_len_range: [usize; 2],
    pub embedding_scale: f64,
    /// Multiplier on the query/key projections; larger values sharpen
    /// attention.
    #[serde(default = "default_attention_scale")]
    pub attention_scale: f64,
    /// One profile per head, applied in every layer.
    pub head_profile: Vec<HeadProfile>,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        g.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        let [lo, hi] = self.seq_len_range;
        if lo < 1 || lo > hi || hi > g.max_seq_len {
            return bad(format!(
                "seq_len_range [{lo}, {hi}] must satisfy 1 <= min <= max <= {}",
                g.max_seq_len
            ));
        }
        if !(self.embedding_scale > 0.0 && self.embedding_scale.is_finite()) {
            return bad("embedding_scale must be positive".into());
        }
        if !(self.attention_scale >= 0.0 && self.attention_scale.is_finite()) {
            return bad("attention_scale must be non-negative".into());
        }
        if self.head_profile.len() != g.num_heads {
            return bad(format!(
                "{} head profiles for H = {}",
                self.head_profile.len(),
                g.num_heads
            ));
        }
        for (h, p) in self.head_profile.iter().enumerate() {
            if p.rank < 1 || p.rank > g.head_dim {
                return bad(format!(
                    "head {h}: rank {} not in [1, {}]",
                    p.rank, g.head_dim
                ));
            }
            if !(p.noise >= 0.0 && p.noise.is_finite()) {
                return bad(format!("head {h}: noise must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn sample_id(i: usize) -> String {
        format!("s{i:05}")
    }
}

fn stream(seed: u64, kind: u64, layer: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 56) | ((layer as u64) << 32) | index as u64);
    rng
}

/// Uniform on `(0, 1)` from the top 53 bits.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via the inverse CDF.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u = open_unit(rng);
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u)
}

fn normal_matrix(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| scale * standard_normal(rng)).collect()
}

/// Projection weights of one head, each row-major `D × D'`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    pub query: Vec<f64>,
    pub key: Vec<f64>,
    pub value: Vec<f64>,
}

/// Draws the weights of every head of one layer.
pub fn layer_weights(config: &GeneratorConfig, layer: usize) -> Vec<HeadWeights> {
    let g = &config.geometry;
    let (d, dp) = (g.hidden_dim, g.head_dim);
    let w_scale = 1.0 / (d as f64).sqrt();
    let qk_scale = w_scale * config.attention_scale;

    let draw_base = |kind: u64, index: usize| {
        let mut rng = stream(config.seed, kind, layer, index);
        let q = normal_matrix(&mut rng, d * dp, qk_scale);
        let k = normal_matrix(&mut rng, d * dp, qk_scale);
        let v = normal_matrix(&mut rng, d * dp, w_scale);
        HeadWeights {
            query: q,
            key: k,
            value: v,
        }
    };
    let mut groups: BTreeMap<u32, HeadWeights> = BTreeMap::new();

    config
        .head_profile
        .iter()
        .enumerate()
        .map(|(h, p)| {
            let HeadWeights {
                query,
                key,
                mut value,
            } = match p.group {
                Some(id) => groups
                    .entry(id)
                    .or_insert_with(|| draw_base(3, id as usize))
                    .clone(),
                None => draw_base(2, h),
            };
            for row in value.chunks_mut(dp) {
                row[p.rank..].iter_mut().for_each(|v| *v = 0.0);
            }
            if p.noise > 0.0 {
                let mut rng = stream(config.seed, 4, layer, h);
                for v in value.iter_mut() {
                    *v += p.noise * w_scale * standard_normal(&mut rng);
                }
            }
            HeadWeights { query, key, value }
        })
        .collect()
}

/// `x (s × d) · w (d × c)`.
fn matmul(x: &[f64], w: &[f64], s: usize, d: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; s * c];
    for r in 0..s {
        let xr = &x[r * d..(r + 1) * d];
        let or = &mut out[r * c..(r + 1) * c];
        for (i, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, &wv) in or.iter_mut().zip(&w[i * c..(i + 1) * c]) {
                *o += xv * wv;
            }
        }
    }
    out
}

/// Row-wise softmax of `Q Kᵀ / √D'`, returned row-major `S × S`.
pub fn attention_probs(query: &[f64], key: &[f64], seq_len: usize, head_dim: usize) -> Vec<f64> {
    let scale = 1.0 / (head_dim as f64).sqrt();
    let mut probs = vec![0.0; seq_len * seq_len];
    for i in 0..seq_len {
        let qi = &query[i * head_dim..(i + 1) * head_dim];
        let row = &mut probs[i * seq_len..(i + 1) * seq_len];
        for (j, r) in row.iter_mut().enumerate() {
            let kj = &key[j * head_dim..(j + 1) * head_dim];
            *r = scale * qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for r in row.iter_mut() {
            *r = (*r - max).exp();
            total += *r;
        }
        row.iter_mut().for_each(|r| *r /= total);
    }
    probs
}

/// Per-head `softmax(Q Kᵀ / √D') V` for one embedded sequence, in `f64`.
pub fn toy_attention_forward_f64(
    embeddings: &[f64],
    seq_len: usize,
    weights: &[HeadWeights],
    geometry: &ModelGeometry,
) -> Result<Vec<Vec<f64>>> {
    let (d, dp) = (geometry.hidden_dim, geometry.head_dim);
    if seq_len == 0 || embeddings.len() != seq_len * d {
        return Err(Error::Shape(format!(
            "{} embedding values for S = {seq_len}, D = {d}",
            embeddings.len()
        )));
    }
    if weights.len() != geometry.num_heads {
        return Err(Error::Shape(format!(
            "{} head weights for H = {}",
            weights.len(),
            geometry.num_heads
        )));
    }
    weights
        .iter()
        .enumerate()
        .map(|(h, w)| {
            if [&w.query, &w.key, &w.value]
                .iter()
                .any(|m| m.len() != d * dp)
            {
                return Err(Error::Shape(format!(
                    "head {h}: projection is not {d}x{dp}"
                )));
            }
            let q = matmul(embeddings, &w.query, seq_len, d, dp);
            let k = matmul(embeddings, &w.key, seq_len, d, dp);
            let v = matmul(embeddings, &w.value, seq_len, d, dp);
            let a = attention_probs(&q, &k, seq_len, dp);
            Ok(matmul(&a, &v, seq_len, seq_len, dp))
        })
        .collect()
}

/// Runs the toy forward pass and packages each head's output for storage.
pub fn toy_attention_forward(
    embeddings: &[f64],
    seq_len: usize,
    weights: &[HeadWeights],
    geometry: &ModelGeometry,
    layer: usize,
    sample_id: &str,
) -> Result<Vec<HeadOutput>> {
    toy_attention_forward_f64(embeddings, seq_len, weights, geometry)?
        .into_iter()
        .enumerate()
        .map(|(h, o)| {
            let data = o.iter().map(|&v| v as f32).collect();
            HeadOutput::new(layer, h, sample_id, seq_len, geometry.head_dim, data)
        })
        .collect()
}

/// Sequence length and `S × D` embeddings of sample `i`.
pub fn sample_embeddings(config: &GeneratorConfig, i: usize) -> (usize, Vec<f64>) {
    let mut rng = stream(config.seed, 1, 0, i);
    let [lo, hi] = config.seq_len_range;
    let span = (hi - lo + 1) as u128;
    let s = lo + ((rng.next_u64() as u128 * span) >> 64) as usize;
    let x = normal_matrix(
        &mut rng,
        s * config.geometry.hidden_dim,
        config.embedding_scale,
    );
    (s, x)
}

/// Head outputs of sample `i` for every layer, `[layer][head]`.
pub fn generate_sample(
    config: &GeneratorConfig,
    weights: &[Vec<HeadWeights>],
    i: usize,
) -> Result<Vec<Vec<HeadOutput>>> {
    let (s, x) = sample_embeddings(config, i);
    let sid = GeneratorConfig::sample_id(i);
    weights
        .iter()
        .enumerate()
        .map(|(layer, w)| toy_attention_forward(&x, s, w, &config.geometry, layer, &sid))
        .collect()
}

fn hot_path(dir: &Path, layer: usize, head: usize, sample_id: &str) -> PathBuf {
    dir.join(format!("l{layer:03}"))
        .join(format!("h{head:03}"))
        .join(format!("{sample_id}.hot"))
}

/// Writes `L × H × n` HOT files plus `manifest.json` under `out_dir`.
pub fn generate_corpus(config: &GeneratorConfig, out_dir: impl AsRef<Path>) -> Result<Manifest> {
    config.validate()?;
    let out_dir = out_dir.as_ref();
    let g = config.geometry;
    for layer in 0..g.num_layers {
        for head in 0..g.num_heads {
            let d = out_dir
                .join(format!("l{layer:03}"))
                .join(format!("h{head:03}"));
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
    }
    let weights: Vec<Vec<HeadWeights>> = (0..g.num_layers)
        .into_par_iter()
        .map(|l| layer_weights(config, l))
        .collect();

    (0..config.n).into_par_iter().try_for_each(|i| {
        for (layer, outs) in generate_sample(config, &weights, i)?
            .into_iter()
            .enumerate()
        {
            for out in outs {
                write_head_output(hot_path(out_dir, layer, out.head, &out.sample_id), &out)?;
            }
        }
        Ok::<_, Error>(())
    })?;

    let samples: Vec<String> = (0..config.n).map(GeneratorConfig::sample_id).collect();
    let mut entries = BTreeMap::new();
    for layer in 0..g.num_layers {
        for head in 0..g.num_heads {
            for sid in &samples {
                entries.insert(
                    EntryKey {
                        layer,
                        head,
                        sample_id: sid.clone(),
                    },
                    hot_path(out_dir, layer, head, sid),
                );
            }
        }
    }
    let mut metadata = serde_json::Map::new();
    metadata.insert(
        "generator".into(),
        "toy single-layer multi-head attention".into(),
    );
    metadata.insert("seed".into(), config.seed.into());
    metadata.insert(
        "capture_point".into(),
        "softmax(QK^T/sqrt(D'))V per head, no dropout, no layer norm".into(),
    );
    metadata.insert(
        "config".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    let manifest = Manifest {
        geometry: g,
        samples,
        entries,
        metadata,
    };
    manifest.save(out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
