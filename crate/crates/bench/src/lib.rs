//! Seeded inputs for the criterion benches.

use headrank_core::rankgraph::HeadGraph;
use headrank_core::synthgen::{generate_sample, layer_weights};
use headrank_core::{
    CorrelationMatrix, GeneratorConfig, HeadOutput, HeadProfile, ModelGeometry, RichnessScores,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row-major matrix with entries uniform in [-1, 1).
pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect()
}

/// Head graph built from random richness in [1, 8] and uniform correlations.
pub fn random_graph(seed: u64, num_heads: usize) -> HeadGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..num_heads)
        .map(|_| rng.random_range(1.0..=8.0))
        .collect();
    let mut flat = vec![0.0; num_heads * num_heads];
    for i in 0..num_heads {
        for j in (i + 1)..num_heads {
            let v = rng.random_range(0.0..1.0);
            flat[i * num_heads + j] = v;
            flat[j * num_heads + i] = v;
        }
    }
    let rows: Vec<Vec<f64>> = flat.chunks(num_heads).map(<[f64]>::to_vec).collect();
    let scores = RichnessScores {
        layer: 0,
        values,
        n: 1,
    };
    let corr = CorrelationMatrix::from_rows(0, 1, &rows).expect("valid correlation");
    HeadGraph::from_metrics(&scores, &corr).expect("valid graph")
}

/// Generator config for one layer of `num_heads` heads of width `head_dim`.
pub fn layer_config(
    seed: u64,
    num_heads: usize,
    head_dim: usize,
    n: usize,
    max_seq_len: usize,
) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        geometry: ModelGeometry::new(1, num_heads, num_heads * head_dim, max_seq_len)
            .expect("valid geometry"),
        n,
        seq_len_range: [max_seq_len / 2, max_seq_len],
        embedding_scale: 1.0,
        attention_scale: 2.0,
        head_profile: (0..num_heads)
            .map(|h| HeadProfile {
                rank: 1 + h % head_dim,
                noise: 0.01,
                group: None,
            })
            .collect(),
    }
}

/// In-memory head outputs of layer 0, indexed `[sample][head]`.
pub fn layer_outputs(config: &GeneratorConfig) -> Vec<Vec<HeadOutput>> {
    let weights = vec![layer_weights(config, 0)];
    (0..config.n)
        .map(|i| {
            generate_sample(config, &weights, i)
                .expect("generated sample")
                .remove(0)
        })
        .collect()
}
