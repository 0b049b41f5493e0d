use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use headrank_core::metrics::{analyze_layer, LayerMetrics};
use headrank_core::pipeline::{rank_layer, run_corpus, select_mask, LayerRun};
use headrank_core::rankgraph::{LayerPageRank, DEFAULT_DAMPING, DEFAULT_EPSILON, DEFAULT_MAX_ITER};
use headrank_core::selector::{params_per_head, trainable_ratio, DEFAULT_K};
use headrank_core::spectral::DEFAULT_XI;
use headrank_core::stability::compare_runs;
use headrank_core::synthgen::{generate_corpus, MANIFEST_FILE};
use headrank_core::tensor_store::load_manifest;
use headrank_core::{
    AblationVariant, GeneratorConfig, ModelGeometry, Orientation, PageRankParams, SelectionMask,
    Strategy,
};

pub const MASK_FILE: &str = "mask.json";
pub const REPORT_FILE: &str = "report.json";

/// Bad flag values; maps to exit code 2 like clap's own parse errors.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(
    name = "headrank",
    version,
    about = "Rank attention heads and emit fine-tuning masks"
)]
pub struct Cli {
    /// Cap on worker threads for data-parallel stages.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic head-output corpus from a generator config.
    Synth(SynthArgs),
    /// Compute per-layer richness and correlation for a corpus.
    Analyze(AnalyzeArgs),
    /// Run PageRank over per-layer metrics and write a selection mask.
    Select(SelectArgs),
    /// Print the trainable-parameter ratio of a mask.
    Report(ReportArgs),
    /// Compare two corpora's rankings.
    Stability(StabilityArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator config JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, visible_alias = "output-dir")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = DEFAULT_XI)]
    pub xi: f64,
    #[arg(long, visible_alias = "output-dir")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// PageRank damping factor.
    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub d: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Iterate with M instead of Mᵀ, renormalizing each step.
    #[arg(long)]
    pub untransposed: bool,
}

impl RankArgs {
    fn params(&self) -> PageRankParams {
        PageRankParams {
            orientation: if self.untransposed {
                Orientation::Untransposed
            } else {
                Orientation::Transposed
            },
            ..PageRankParams::new(self.d, self.epsilon, self.max_iter)
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Directory of per-layer metrics JSON files written by `analyze`.
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value = "layer_wise")]
    pub strategy: String,
    #[arg(long, default_value = "full_hifi")]
    pub variant: String,
    /// Seed for the random variant.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub rank: RankArgs,
    /// Hidden size, needed only when the metrics files carry no geometry.
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Used with --hidden-dim when the metrics files carry no geometry.
    #[arg(long, default_value_t = 512)]
    pub max_seq_len: usize,
    #[arg(long, visible_alias = "output-dir")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub mask: PathBuf,
    /// Total parameter count of the model the mask applies to.
    #[arg(long)]
    pub total_params: u64,
    /// Also write report.json here.
    #[arg(long, visible_alias = "output-dir")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Baseline corpus manifest.
    #[arg(long)]
    pub a: PathBuf,
    /// Compared corpus manifest.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "baseline")]
    pub label_a: String,
    #[arg(long, default_value = "comparison")]
    pub label_b: String,
    #[arg(long, default_value_t = DEFAULT_XI)]
    pub xi: f64,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[command(flatten)]
    pub rank: RankArgs,
    #[arg(long, visible_alias = "output-dir")]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!(UsageError("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker pool")?;
    }
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Select(a) => select(&a),
        Command::Report(a) => report(&a),
        Command::Stability(a) => stability(&a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn metrics_file(layer: usize) -> String {
    format!("metrics_layer_{layer:03}.json")
}

fn pagerank_file(layer: usize) -> String {
    format!("pagerank_layer_{layer:03}.json")
}

fn synth(a: &SynthArgs) -> Result<()> {
    let text =
        fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let config: GeneratorConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    ensure_dir(&a.out)?;
    generate_corpus(&config, &a.out)?;
    println!("{}", a.out.join(MANIFEST_FILE).display());
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    ensure_dir(&a.out)?;
    for layer in 0..manifest.geometry.num_layers {
        let (richness, corr) = analyze_layer(&manifest, layer, a.xi)?;
        let doc = LayerMetrics::new(&richness, &corr, a.xi, Some(manifest.geometry));
        let path = a.out.join(metrics_file(layer));
        write_json(&path, &doc)?;
        println!("{}", path.display());
    }
    Ok(())
}

/// Reads every `*.json` file in `dir` that parses as layer metrics.
pub fn load_metrics_dir(dir: &Path) -> Result<Vec<LayerMetrics>> {
    let mut by_layer = BTreeMap::new();
    let entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("metrics"))
        })
        .collect();
    paths.sort();
    for p in paths {
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let m: LayerMetrics =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        if by_layer.insert(m.layer, m).is_some() {
            bail!("duplicate metrics for one layer in {}", dir.display());
        }
    }
    if by_layer.is_empty() {
        bail!("no metrics files in {}", dir.display());
    }
    Ok(by_layer.into_values().collect())
}

fn metrics_geometry(metrics: &[LayerMetrics], a: &SelectArgs) -> Result<ModelGeometry> {
    let h = metrics[0].richness.len();
    let declared: Vec<_> = metrics.iter().filter_map(|m| m.geometry).collect();
    let geometry = match (declared.first(), a.hidden_dim) {
        (Some(g), _) => {
            if declared.iter().any(|x| x != g) {
                bail!("metrics files disagree on geometry");
            }
            *g
        }
        (None, Some(d)) => {
            let layers = metrics.iter().map(|m| m.layer).max().unwrap_or(0) + 1;
            ModelGeometry::new(layers, h, d, a.max_seq_len)?
        }
        (None, None) => bail!(UsageError(
            "metrics carry no geometry; pass --hidden-dim".into()
        )),
    };
    if metrics
        .iter()
        .any(|m| m.richness.len() != geometry.num_heads)
    {
        bail!(
            "metrics head count does not match H = {}",
            geometry.num_heads
        );
    }
    Ok(geometry)
}

fn parse_flag<T: std::str::FromStr<Err = headrank_core::Error>>(v: &str) -> Result<T> {
    v.parse::<T>().map_err(|e| UsageError(e.to_string()).into())
}

fn select(a: &SelectArgs) -> Result<()> {
    let strategy: Strategy = parse_flag(&a.strategy)?;
    let variant: AblationVariant = parse_flag(&a.variant)?;
    let params = a.rank.params();
    params.validate().map_err(|e| UsageError(e.to_string()))?;

    let metrics = load_metrics_dir(&a.metrics)?;
    let geometry = metrics_geometry(&metrics, a)?;
    if a.k > geometry.num_heads {
        bail!(UsageError(format!(
            "--k {} exceeds H = {}",
            a.k, geometry.num_heads
        )));
    }
    ensure_dir(&a.out)?;
    let mut layers = Vec::with_capacity(metrics.len());
    for m in &metrics {
        geometry.check_layer(m.layer)?;
        let (richness, correlation) = m.to_parts()?;
        let pagerank = rank_layer(&richness, &correlation, &params)?;
        write_json(
            &a.out.join(pagerank_file(m.layer)),
            &LayerPageRank::new(m.layer, &pagerank),
        )?;
        layers.push(LayerRun {
            richness,
            correlation,
            pagerank,
        });
    }
    let mask = select_mask(&layers, geometry, strategy, a.k, variant, a.seed)?;
    let path = a.out.join(MASK_FILE);
    write_json(&path, &mask)?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RatioReport {
    pub strategy: Strategy,
    pub variant: AblationVariant,
    pub k: usize,
    pub selected_heads: usize,
    pub total_heads: usize,
    pub params_per_head: u64,
    pub trainable_params: u64,
    pub total_params: u64,
    pub ratio: f64,
}

fn report(a: &ReportArgs) -> Result<()> {
    let text =
        fs::read_to_string(&a.mask).with_context(|| format!("reading {}", a.mask.display()))?;
    let mask: SelectionMask =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.mask.display()))?;
    mask.validate()?;
    if a.total_params == 0 {
        bail!(UsageError("--total-params must be positive".into()));
    }
    let g = mask.geometry;
    let ratio = trainable_ratio(&g, &mask, a.total_params)?;
    let per_head = params_per_head(&g);
    let selected = mask.selected_heads();
    let rep = RatioReport {
        strategy: mask.strategy,
        variant: mask.variant,
        k: mask.k,
        selected_heads: selected,
        total_heads: g.num_layers * g.num_heads,
        params_per_head: per_head,
        trainable_params: selected as u64 * per_head,
        total_params: a.total_params,
        ratio,
    };
    println!("strategy: {}", rep.strategy);
    println!("variant: {}", rep.variant);
    println!("k: {}", rep.k);
    println!(
        "selected heads: {} / {}",
        rep.selected_heads, rep.total_heads
    );
    println!(
        "trainable parameters: {} / {}",
        rep.trainable_params, rep.total_params
    );
    println!(
        "trainable ratio: {:.6} ({:.2}%)",
        rep.ratio,
        100.0 * rep.ratio
    );
    if let Some(out) = &a.out {
        ensure_dir(out)?;
        write_json(&out.join(REPORT_FILE), &rep)?;
    }
    Ok(())
}

fn stability(a: &StabilityArgs) -> Result<()> {
    let params = a.rank.params();
    params.validate().map_err(|e| UsageError(e.to_string()))?;
    let ma = load_manifest(&a.a)?;
    let mb = load_manifest(&a.b)?;
    if ma.geometry != mb.geometry {
        return Err(headrank_core::Error::Geometry(format!(
            "manifests differ: {:?} vs {:?}",
            ma.geometry, mb.geometry
        ))
        .into());
    }
    if a.k > ma.geometry.num_heads {
        bail!(UsageError(format!(
            "--k {} exceeds H = {}",
            a.k, ma.geometry.num_heads
        )));
    }
    let ra = run_corpus(&ma, a.xi, &params)?;
    let rb = run_corpus(&mb, a.xi, &params)?;
    let rep = compare_runs(&a.label_a, &ra, &a.label_b, &rb, a.k)?;
    ensure_dir(&a.out)?;
    write_json(&a.out.join("stability.json"), &rep)?;
    let csv = a.out.join("stability.csv");
    fs::write(&csv, rep.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    for c in &rep.comparisons {
        for l in &c.layers {
            let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
            println!(
                "{} vs {} layer {}: richness rho {}, pagerank rho {}, top-{} jaccard {:.4}, delta R {:.4}",
                rep.baseline,
                c.label,
                l.layer,
                fmt(l.richness_rho),
                fmt(l.pagerank_rho),
                c.k,
                l.topk_jaccard,
                l.delta_r
            );
        }
    }
    Ok(())
}
