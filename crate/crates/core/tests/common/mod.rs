#![allow(dead_code)]

use std::path::Path;

use headrank_core::synthgen::generate_corpus;
use headrank_core::{
    CorrelationMatrix, GeneratorConfig, HeadProfile, Manifest, ModelGeometry, RichnessScores,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in [-1, 1).
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect()
}

/// Small corpus with one rank-1 head, a correlated pair and noisy heads.
pub fn small_config(seed: u64, n: usize) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        geometry: ModelGeometry::new(2, 4, 32, 16).unwrap(),
        n,
        seq_len_range: [2, 16],
        embedding_scale: 1.0,
        attention_scale: 2.0,
        head_profile: vec![
            HeadProfile {
                rank: 1,
                noise: 0.0,
                group: None,
            },
            HeadProfile {
                rank: 8,
                noise: 0.0,
                group: Some(7),
            },
            HeadProfile {
                rank: 6,
                noise: 0.0,
                group: Some(7),
            },
            HeadProfile {
                rank: 4,
                noise: 0.05,
                group: None,
            },
        ],
    }
}

/// Eight heads with distinct rank caps and two correlated pairs.
pub fn desk_config(seed: u64, n: usize, seq_len_range: [usize; 2]) -> GeneratorConfig {
    let groups = [None, None, Some(1), Some(1), None, Some(2), Some(2), None];
    GeneratorConfig {
        seed,
        geometry: ModelGeometry::new(2, 8, 64, 32).unwrap(),
        n,
        seq_len_range,
        embedding_scale: 1.0,
        attention_scale: 2.0,
        head_profile: (0..8)
            .map(|h| HeadProfile {
                rank: h + 1,
                noise: 0.01,
                group: groups[h],
            })
            .collect(),
    }
}

pub fn corpus(config: &GeneratorConfig, dir: &Path) -> Manifest {
    generate_corpus(config, dir).unwrap()
}

/// Random layer metrics: richness in `[1, max_index]` and a symmetric,
/// zero-diagonal correlation matrix with entries in `[0, 1)`.
pub fn random_layer(
    rng: &mut ChaCha8Rng,
    layer: usize,
    num_heads: usize,
    max_index: f64,
) -> (RichnessScores, CorrelationMatrix) {
    let values = (0..num_heads)
        .map(|_| rng.random_range(1.0..=max_index))
        .collect();
    let mut flat = vec![0.0; num_heads * num_heads];
    for i in 0..num_heads {
        for j in (i + 1)..num_heads {
            let v: f64 = rng.random_range(0.0..1.0);
            flat[i * num_heads + j] = v;
            flat[j * num_heads + i] = v;
        }
    }
    let rows: Vec<Vec<f64>> = flat.chunks(num_heads).map(<[f64]>::to_vec).collect();
    (
        RichnessScores {
            layer,
            values,
            n: 1,
        },
        CorrelationMatrix::from_rows(layer, 1, &rows).unwrap(),
    )
}
