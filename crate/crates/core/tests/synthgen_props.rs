mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use headrank_core::metrics::{pair_correlation, sequence_average};
use headrank_core::pipeline::run_corpus;
use headrank_core::spectral::{singular_values, DEFAULT_XI};
use headrank_core::stability::spearman_rank_corr;
use headrank_core::synthgen::{generate_sample, layer_weights, MANIFEST_FILE};
use headrank_core::tensor_store::load_manifest;
use headrank_core::PageRankParams;

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn corpus_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = common::small_config(99, 20);
    common::corpus(&cfg, a.path());
    common::corpus(&cfg, b.path());
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    assert_eq!(ta.len(), 2 * 4 * 20 + 1);
    assert_eq!(ta, tb);
    let c = tempfile::tempdir().unwrap();
    common::corpus(&common::small_config(100, 20), c.path());
    assert_ne!(ta, read_tree(c.path()));
}

#[test]
fn manifest_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::small_config(5, 10);
    let m = common::corpus(&cfg, dir.path());
    let loaded = load_manifest(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded, m);
    assert_eq!(loaded.metadata["seed"], 5);
}

#[test]
fn noiseless_heads_respect_rank_cap() {
    let cfg = common::small_config(21, 40);
    let weights: Vec<_> = (0..2).map(|l| layer_weights(&cfg, l)).collect();
    for i in 0..cfg.n {
        for outs in generate_sample(&cfg, &weights, i).unwrap() {
            for o in outs {
                let profile = &cfg.head_profile[o.head];
                if profile.noise != 0.0 {
                    continue;
                }
                let sv = singular_values(&o.to_f64(), o.seq_len, o.head_dim).unwrap();
                let top = sv.values()[0];
                let significant = sv.values().iter().filter(|&&s| s > 1e-5 * top).count();
                assert!(
                    significant <= profile.rank,
                    "head {} sample {i}: {significant}",
                    o.head
                );
            }
        }
    }
}

#[test]
fn grouped_heads_are_most_correlated() {
    let cfg = common::small_config(22, 60);
    let weights: Vec<_> = (0..2).map(|l| layer_weights(&cfg, l)).collect();
    let mut wins = 0;
    let mut total = 0;
    for i in 0..cfg.n {
        for outs in generate_sample(&cfg, &weights, i).unwrap() {
            let avg: Vec<_> = outs.iter().map(sequence_average).collect();
            let grouped = pair_correlation(&avg[1], &avg[2]).unwrap();
            let best_other = [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)]
                .iter()
                .map(|&(a, b)| pair_correlation(&avg[a], &avg[b]).unwrap())
                .fold(0.0, f64::max);
            total += 1;
            if grouped > best_other {
                wins += 1;
            }
        }
    }
    assert!(wins * 10 >= total * 9, "{wins}/{total}");
}

#[test]
fn richness_grows_with_rank_cap() {
    let dir = tempfile::tempdir().unwrap();
    let m = common::corpus(&common::desk_config(7, 200, [4, 32]), dir.path());
    let run = run_corpus(&m, DEFAULT_XI, &PageRankParams::default()).unwrap();
    for layer in &run.layers {
        assert!(
            layer.richness.values.windows(2).all(|w| w[0] < w[1]),
            "{:?}",
            layer.richness.values
        );
    }
}

#[test]
fn richness_ranking_is_stable_with_sample_count() {
    let small = tempfile::tempdir().unwrap();
    let large = tempfile::tempdir().unwrap();
    let a = common::corpus(&common::desk_config(8, 300, [4, 32]), small.path());
    let b = common::corpus(&common::desk_config(8, 1000, [4, 32]), large.path());
    let ra = run_corpus(&a, DEFAULT_XI, &PageRankParams::default()).unwrap();
    let rb = run_corpus(&b, DEFAULT_XI, &PageRankParams::default()).unwrap();
    for (x, y) in ra.layers.iter().zip(&rb.layers) {
        let rho = spearman_rank_corr(&x.richness.values, &y.richness.values).unwrap();
        assert!(rho >= 0.9, "layer {}: rho {rho}", x.richness.layer);
    }
}
