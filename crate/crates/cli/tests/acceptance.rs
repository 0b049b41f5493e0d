//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use headrank_core::metrics::{analyze_outputs, sequence_average};
use headrank_core::pipeline::run_corpus;
use headrank_core::rankgraph::{
    contraction_bound, pagerank, pagerank_direct, pagerank_step, HeadGraph, Orientation,
};
use headrank_core::selector::{ablation_select, build_mask, select_topk, trainable_ratio};
use headrank_core::spectral::{richness_index, singular_values, DEFAULT_XI};
use headrank_core::stability::{jaccard, spearman_rank_corr};
use headrank_core::synthgen::{generate_corpus, generate_sample, layer_weights};
use headrank_core::tensor_store::load_sample;
use headrank_core::{
    AblationVariant, CorrelationMatrix, GeneratorConfig, HeadOutput, HeadProfile, ModelGeometry,
    PageRankParams, RichnessScores, Strategy,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Richness in `[1, 8]` and symmetric correlations `u^power` with `u` uniform.
fn random_layer(rng: &mut ChaCha8Rng, h: usize, power: i32) -> (RichnessScores, CorrelationMatrix) {
    let values = (0..h).map(|_| rng.random_range(1.0..=8.0)).collect();
    let mut flat = vec![0.0; h * h];
    for i in 0..h {
        for j in (i + 1)..h {
            let v = rng.random_range(0.0f64..1.0).powi(power);
            flat[i * h + j] = v;
            flat[j * h + i] = v;
        }
    }
    let rows: Vec<Vec<f64>> = flat.chunks(h).map(<[f64]>::to_vec).collect();
    (
        RichnessScores {
            layer: 0,
            values,
            n: 1,
        },
        CorrelationMatrix::from_rows(0, 1, &rows).unwrap(),
    )
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn criterion_1() -> Outcome {
    let mut r = rng(1);
    let params = PageRankParams::new(0.85, 1e-10, 10_000);
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 0..200 {
        let h = [4, 8, 16][i % 3];
        let (rich, corr) = random_layer(&mut r, h, 1 + (i as i32 % 4));
        let g = HeadGraph::from_metrics(&rich, &corr).unwrap();
        let it = pagerank(&g, &params).unwrap();
        let direct = pagerank_direct(&g, 0.85).unwrap();
        worst = worst.max(max_abs_diff(&it.p_star, &direct));
        count += 1;
    }
    outcome(
        worst <= 1e-8,
        format!("{count} layers, max L-inf gap {worst:.3e} (tolerance 1e-8)"),
    )
}

fn wide_config(seed: u64, n: usize) -> GeneratorConfig {
    let mut r = rng(seed ^ 0x5eed);
    GeneratorConfig {
        seed,
        geometry: ModelGeometry::new(2, 16, 128, 24).unwrap(),
        n,
        seq_len_range: [4, 24],
        embedding_scale: 1.0,
        attention_scale: 2.0,
        head_profile: (0..16)
            .map(|_| HeadProfile {
                rank: r.random_range(1..=8),
                noise: [0.0, 0.01, 0.1][r.random_range(0..3)],
                group: if r.random_bool(0.5) {
                    Some(r.random_range(0..4))
                } else {
                    None
                },
            })
            .collect(),
    }
}

fn synth_graphs(count: usize) -> Vec<HeadGraph> {
    let mut graphs = Vec::new();
    let mut seed = 100;
    while graphs.len() < count {
        let cfg = wide_config(seed, 30);
        let weights: Vec<_> = (0..2).map(|l| layer_weights(&cfg, l)).collect();
        let samples: Vec<_> = (0..cfg.n)
            .map(|i| generate_sample(&cfg, &weights, i).unwrap())
            .collect();
        for layer in 0..2 {
            let per_sample: Vec<Vec<HeadOutput>> =
                samples.iter().map(|s| s[layer].clone()).collect();
            let (rich, corr) = analyze_outputs(layer, &per_sample, DEFAULT_XI).unwrap();
            graphs.push(HeadGraph::from_metrics(&rich, &corr).unwrap());
        }
        seed += 1;
    }
    graphs
}

fn criterion_2() -> Outcome {
    let params = PageRankParams::new(0.85, 1e-6, 10_000);
    let bound = contraction_bound(0.85, 1e-6);
    let mut r = rng(2);
    let mut family = |power: i32, count: usize| -> Vec<HeadGraph> {
        (0..count)
            .map(|_| {
                let (rich, corr) = random_layer(&mut r, 16, power);
                HeadGraph::from_metrics(&rich, &corr).unwrap()
            })
            .collect()
    };
    let gated = [("uniform", family(1, 300)), ("synthgen", synth_graphs(60))];
    let skewed = [
        ("u^2", family(2, 100)),
        ("u^4", family(4, 100)),
        ("u^8", family(8, 100)),
    ];
    let mut pass = true;
    let mut within_bound = 0;
    let mut total = 0;
    let mut parts = Vec::new();
    for (gate, (name, graphs)) in gated
        .iter()
        .map(|g| (true, g))
        .chain(skewed.iter().map(|g| (false, g)))
    {
        let counts: Vec<usize> = graphs
            .iter()
            .map(|g| pagerank(g, &params).unwrap().iterations)
            .collect();
        let share = counts.iter().filter(|&&c| c <= 12).count() as f64 / counts.len() as f64;
        within_bound += counts.iter().filter(|&&c| c <= bound).count();
        total += counts.len();
        if gate {
            pass &= share >= 0.95;
        }
        parts.push(format!(
            "{name}{} {:.1}% <=12 (max {})",
            if gate { "" } else { " [not gated]" },
            100.0 * share,
            counts.iter().max().unwrap()
        ));
    }
    pass &= within_bound == total;
    outcome(
        pass,
        format!(
            "{}; contraction bound {bound} held on {within_bound}/{total}",
            parts.join(", ")
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let (rich, corr) = random_layer(&mut r, 16, 1);
    let start = Instant::now();
    let g = HeadGraph::from_metrics(&rich, &corr).unwrap();
    let res = pagerank(&g, &PageRankParams::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        secs < 0.4 && res.p_star.len() == 16,
        format!("H=16 solve took {secs:.2e} s (limit 0.4 s)"),
    )
}

/// Parameter count of a BERT encoder with pooler.
fn bert_params(layers: u64, hidden: u64, intermediate: u64, vocab: u64, positions: u64) -> u64 {
    let layer_norm = 2 * hidden;
    let embeddings = (vocab + positions + 2) * hidden + layer_norm;
    let attention = 4 * (hidden * hidden + hidden) + layer_norm;
    let ffn = hidden * intermediate + intermediate + intermediate * hidden + hidden + layer_norm;
    let pooler = hidden * hidden + hidden;
    embeddings + layers * (attention + ffn) + pooler
}

fn criterion_4() -> Outcome {
    let total = bert_params(24, 1024, 4096, 30522, 512);
    let g = ModelGeometry::new(24, 16, 1024, 512).unwrap();
    let mut r = rng(4);
    let p: BTreeMap<usize, Vec<f64>> = (0..24)
        .map(|l| (l, (0..16).map(|_| r.random::<f64>()).collect()))
        .collect();
    let lw = trainable_ratio(
        &g,
        &build_mask(&p, g, Strategy::LayerWise, 3).unwrap(),
        total,
    )
    .unwrap();
    let mt = trainable_ratio(&g, &build_mask(&p, g, Strategy::MidTop, 3).unwrap(), total).unwrap();
    outcome(
        (0.041..=0.043).contains(&lw) && (0.020..=0.022).contains(&mt),
        format!(
            "total {total}, layer-wise {:.3}% (want 4.1..4.3), mid-top {:.3}% (want 2.0..2.2)",
            100.0 * lw,
            100.0 * mt
        ),
    )
}

/// Same geometry as [`small_config`] with noise on every head, so no output
/// is exactly rank deficient.
fn noisy_config(seed: u64, n: usize) -> GeneratorConfig {
    let mut cfg = small_config(seed, n);
    for p in &mut cfg.head_profile {
        p.noise = p.noise.max(0.01);
    }
    cfg
}

fn small_config(seed: u64, n: usize) -> GeneratorConfig {
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

/// Singular values as square roots of the Gram matrix eigenvalues.
fn gram_oracle(o: &HeadOutput) -> Vec<f64> {
    let m = DMatrix::from_row_slice(o.seq_len, o.head_dim, &o.to_f64());
    let gram = if o.seq_len >= o.head_dim {
        m.transpose() * &m
    } else {
        &m * m.transpose()
    };
    let mut ev: Vec<f64> = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn oracle_covariance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let sab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    ((sab - sa * sb / n) / (n - 1.0)).abs()
}

/// Largest correlation gap and largest singular-value gap relative to
/// `σ_max` over every output of a corpus, plus the number of outputs.
fn metric_gaps(dir: &Path, config: &GeneratorConfig) -> (f64, f64, usize) {
    let m = generate_corpus(config, dir).unwrap();
    let mut corr_gap = 0.0f64;
    let mut sv_gap = 0.0f64;
    let mut checked = 0;
    for layer in 0..2 {
        let per_sample: Vec<Vec<HeadOutput>> = m
            .samples
            .iter()
            .map(|sid| {
                (0..4)
                    .map(|h| load_sample(&m, layer, h, sid).unwrap())
                    .collect()
            })
            .collect();
        let (_, corr) = analyze_outputs(layer, &per_sample, DEFAULT_XI).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j {
                    0.0
                } else {
                    per_sample
                        .iter()
                        .map(|s| {
                            oracle_covariance(&sequence_average(&s[i]), &sequence_average(&s[j]))
                        })
                        .sum::<f64>()
                        / 50.0
                };
                corr_gap = corr_gap.max((corr.get(i, j) - want).abs());
            }
        }
        for outs in &per_sample {
            for o in outs {
                let ours = singular_values(&o.to_f64(), o.seq_len, o.head_dim).unwrap();
                let oracle = gram_oracle(o);
                let scale = oracle[0].max(f64::MIN_POSITIVE);
                sv_gap = sv_gap.max(max_abs_diff(ours.values(), &oracle) / scale);
                checked += 1;
            }
        }
    }
    (corr_gap, sv_gap, checked)
}

fn criterion_5(root: &Path) -> Outcome {
    let (corr_gap, sv_gap, checked) = metric_gaps(&root.join("c5"), &noisy_config(5, 50));
    let (_, exact_gap, _) = metric_gaps(&root.join("c5_exact"), &small_config(5, 50));
    outcome(
        corr_gap <= 1e-10 && sv_gap <= 1e-8,
        format!(
            "correlation max gap {corr_gap:.3e} (tol 1e-10), singular values max relative gap {sv_gap:.3e} (tol 1e-8) over {checked} outputs; exactly rank-deficient corpus [not gated] {exact_gap:.3e}"
        ),
    )
}

fn random_outputs(seed: u64, h: usize, dp: usize, n: usize, max_s: usize) -> Vec<Vec<HeadOutput>> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let s = r.random_range(1..=max_s);
            (0..h)
                .map(|head| {
                    let data = (0..s * dp).map(|_| r.random_range(-1.0f32..1.0)).collect();
                    HeadOutput::new(0, head, format!("x{i}"), s, dp, data).unwrap()
                })
                .collect()
        })
        .collect()
}

fn scale_outputs(samples: &[Vec<HeadOutput>], c: f32) -> Vec<Vec<HeadOutput>> {
    samples
        .iter()
        .map(|s| {
            s.iter()
                .map(|o| HeadOutput {
                    data: o.data.iter().map(|v| v * c).collect(),
                    ..o.clone()
                })
                .collect()
        })
        .collect()
}

fn run_property<S, F>(name: &str, strategy: S, test: F) -> std::result::Result<(), String>
where
    S: proptest::strategy::Strategy,
    F: Fn(S::Value) -> std::result::Result<(), TestCaseError>,
{
    let config = Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn criterion_6() -> Outcome {
    let outputs = (any::<u64>(), 2usize..6, 2usize..9, 1usize..5, 1usize..12);
    let results = [
        run_property(
            "richness scale invariance",
            (any::<u64>(), 1usize..12, 1usize..10, 1e-3f64..1e3),
            |(seed, r, c, k)| {
                let mut g = rng(seed);
                let data: Vec<f64> = (0..r * c).map(|_| g.random_range(-1.0..1.0)).collect();
                let scaled: Vec<f64> = data.iter().map(|v| v * k).collect();
                let a = richness_index(&singular_values(&data, r, c).unwrap(), DEFAULT_XI).unwrap();
                let b =
                    richness_index(&singular_values(&scaled, r, c).unwrap(), DEFAULT_XI).unwrap();
                prop_assert_eq!(a, b);
                Ok(())
            },
        ),
        run_property(
            "corpus scaling: richness fixed, R times c^2",
            (outputs.clone(), -8i32..8),
            |((seed, h, dp, n, s), e)| {
                let base = random_outputs(seed, h, dp, n, s);
                let c = 2f32.powi(e);
                let (ra, ca) = analyze_outputs(0, &base, DEFAULT_XI).unwrap();
                let (rb, cb) = analyze_outputs(0, &scale_outputs(&base, c), DEFAULT_XI).unwrap();
                prop_assert_eq!(ra.values, rb.values);
                let c2 = f64::from(c) * f64::from(c);
                for (x, y) in ca.values.iter().zip(&cb.values) {
                    prop_assert_eq!(*y, c2 * x);
                }
                Ok(())
            },
        ),
        run_property(
            "R symmetric, zero diagonal, non-negative",
            outputs.clone(),
            |(seed, h, dp, n, s)| {
                let (_, corr) =
                    analyze_outputs(0, &random_outputs(seed, h, dp, n, s), DEFAULT_XI).unwrap();
                for i in 0..h {
                    prop_assert_eq!(corr.get(i, i), 0.0);
                    for j in 0..h {
                        prop_assert_eq!(corr.get(i, j), corr.get(j, i));
                        prop_assert!(corr.get(i, j) >= 0.0);
                    }
                }
                Ok(())
            },
        ),
        run_property(
            "argsort invariance of every variant",
            (any::<u64>(), 2usize..17, 0usize..17, 1e-3f64..1e3),
            |(seed, h, k, c)| {
                let k = k % (h + 1);
                let mut g = rng(seed);
                let (rich, corr) = random_layer(&mut g, h, 1);
                let p: Vec<f64> = (0..h).map(|_| g.random::<f64>()).collect();
                let rich_c = RichnessScores {
                    values: rich.values.iter().map(|v| v * c).collect(),
                    ..rich.clone()
                };
                let corr_c = CorrelationMatrix {
                    values: corr.values.iter().map(|v| v * c).collect(),
                    ..corr.clone()
                };
                let p_c: Vec<f64> = p.iter().map(|v| v * c).collect();
                for v in AblationVariant::ALL {
                    prop_assert_eq!(
                        ablation_select(v, &rich, &corr, &p, k, seed).unwrap(),
                        ablation_select(v, &rich_c, &corr_c, &p_c, k, seed).unwrap()
                    );
                }
                Ok(())
            },
        ),
        run_property(
            "PageRank iterates stay on the simplex",
            (any::<u64>(), 2usize..33, 0.0f64..0.99, any::<bool>()),
            |(seed, h, d, untransposed)| {
                let mut g = rng(seed);
                let (rich, corr) = random_layer(&mut g, h, 1 + (seed % 8) as i32);
                let graph = HeadGraph::from_metrics(&rich, &corr).unwrap();
                let orientation = if untransposed {
                    Orientation::Untransposed
                } else {
                    Orientation::Transposed
                };
                let mut p = graph.p0.clone();
                let mut next = vec![0.0; h];
                for _ in 0..30 {
                    pagerank_step(&graph, d, orientation, &p, &mut next);
                    prop_assert!(next.iter().all(|&x| x >= 0.0));
                    prop_assert!((next.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    std::mem::swap(&mut p, &mut next);
                }
                Ok(())
            },
        ),
        run_property(
            "per-variant and per-strategy cardinalities",
            (any::<u64>(), 1usize..49, 1usize..17, 0usize..17),
            |(seed, l, h, k)| {
                let k = k % (h + 1);
                let mut g = rng(seed);
                let (rich, corr) = random_layer(&mut g, h, 1);
                let p: Vec<f64> = (0..h).map(|_| g.random::<f64>()).collect();
                for v in AblationVariant::ALL {
                    let sel = ablation_select(v, &rich, &corr, &p, k, seed).unwrap();
                    prop_assert_eq!(sel.len(), k);
                    prop_assert!(sel.windows(2).all(|w| w[0] < w[1]) && sel.iter().all(|&x| x < h));
                }
                let geometry = ModelGeometry::new(l, h, 2 * h, 64).unwrap();
                let ps: BTreeMap<usize, Vec<f64>> = (0..l)
                    .map(|i| (i, (0..h).map(|_| g.random::<f64>()).collect()))
                    .collect();
                prop_assert_eq!(
                    build_mask(&ps, geometry, Strategy::LayerWise, k)
                        .unwrap()
                        .selected_heads(),
                    l * k
                );
                prop_assert_eq!(
                    build_mask(&ps, geometry, Strategy::MidTop, k)
                        .unwrap()
                        .selected_heads(),
                    (l - l / 2) * k
                );
                Ok(())
            },
        ),
    ];
    let failures: Vec<String> = results.iter().filter_map(|r| r.clone().err()).collect();
    let total = results.len();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{total} properties x 1000 cases all held")
        } else {
            failures.join("; ")
        },
    )
}

fn desk_config() -> GeneratorConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn criterion_7(root: &Path) -> Outcome {
    let params = PageRankParams::default();
    let run = |name: &str, cfg: &GeneratorConfig| {
        let m = generate_corpus(cfg, root.join(name)).unwrap();
        run_corpus(&m, DEFAULT_XI, &params).unwrap()
    };
    let base = desk_config();
    let [lo, hi] = base.seq_len_range;
    let small = run(
        "c7_300",
        &GeneratorConfig {
            n: 300,
            ..base.clone()
        },
    );
    let large = run(
        "c7_1000",
        &GeneratorConfig {
            n: 1000,
            ..base.clone()
        },
    );
    let halved = run(
        "c7_sl",
        &GeneratorConfig {
            n: 300,
            seq_len_range: [lo / 2, hi / 2],
            ..base
        },
    );
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, ((a, b), c)) in small
        .layers
        .iter()
        .zip(&large.layers)
        .zip(&halved.layers)
        .enumerate()
    {
        let rho_ss = spearman_rank_corr(&a.richness.values, &b.richness.values).unwrap();
        let jac = jaccard(
            &select_topk(&a.pagerank.p_star, 3).unwrap(),
            &select_topk(&b.pagerank.p_star, 3).unwrap(),
        );
        let rho_sl = spearman_rank_corr(&a.richness.values, &c.richness.values).unwrap();
        pass &= rho_ss >= 0.9 && jac >= 0.5 && rho_sl >= 0.8;
        parts.push(format!(
            "layer {i}: n300/n1000 rho {rho_ss:.3} jaccard {jac:.3}, SL-halved rho {rho_sl:.3}"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn cli(args: &[&str]) -> std::result::Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_headrank"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn pipeline_run(dir: &Path, config: &Path) -> std::result::Result<(), String> {
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let corpus = dir.join("corpus");
    let metrics = dir.join("metrics");
    let select = dir.join("select");
    cli(&["synth", "--config", &s(config), "--out", &s(&corpus)])?;
    cli(&[
        "analyze",
        "--manifest",
        &s(&corpus.join("manifest.json")),
        "--out",
        &s(&metrics),
    ])?;
    cli(&["select", "--metrics", &s(&metrics), "--out", &s(&select)])?;
    cli(&[
        "report",
        "--mask",
        &s(&select.join("mask.json")),
        "--total-params",
        "335141888",
        "--out",
        &s(&select),
    ])?;
    Ok(())
}

fn json_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "json") {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn criterion_8(root: &Path) -> Outcome {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/desk.json");
    let a = root.join("c8_a");
    let b = root.join("c8_b");
    if let Err(e) = pipeline_run(&a, &config).and_then(|_| pipeline_run(&b, &config)) {
        return outcome(false, format!("pipeline failed: {e}"));
    }
    let (ja, jb) = (json_files(&a), json_files(&b));
    let differing: Vec<_> = ja
        .iter()
        .filter(|(k, v)| jb.get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    outcome(
        differing.is_empty() && ja.len() == jb.len() && ja.len() >= 5,
        if differing.is_empty() {
            format!("{} JSON artifacts byte-identical across two runs", ja.len())
        } else {
            format!("differing artifacts: {}", differing.join(", "))
        },
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let root = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("1 pagerank oracle equivalence", Box::new(criterion_1)),
        ("2 convergence count", Box::new(criterion_2)),
        ("3 pagerank wall-clock", Box::new(criterion_3)),
        ("4 trainable ratio", Box::new(criterion_4)),
        (
            "5 metric oracle equivalence",
            Box::new(|| criterion_5(root.path())),
        ),
        ("6 invariant suite", Box::new(criterion_6)),
        ("7 stability analog", Box::new(|| criterion_7(root.path()))),
        ("8 determinism", Box::new(|| criterion_8(root.path()))),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let o = check();
        println!(
            "{} [{name}] {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
