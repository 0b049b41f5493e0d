//! End-to-end composition: corpus → per-layer metrics → PageRank → mask.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::ModelGeometry;
use crate::metrics::{analyze_layer, CorrelationMatrix, RichnessScores};
use crate::rankgraph::{pagerank, HeadGraph, PageRankParams, PageRankResult};
use crate::selector::{ablation_select, build_mask_with, AblationVariant, SelectionMask, Strategy};
use crate::tensor_store::Manifest;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRun {
    pub richness: RichnessScores,
    pub correlation: CorrelationMatrix,
    pub pagerank: PageRankResult,
}

/// Metrics and PageRank for every layer of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub geometry: ModelGeometry,
    pub layers: Vec<LayerRun>,
}

pub fn analyze_corpus(
    manifest: &Manifest,
    xi: f64,
) -> Result<Vec<(RichnessScores, CorrelationMatrix)>> {
    (0..manifest.geometry.num_layers)
        .map(|l| analyze_layer(manifest, l, xi))
        .collect()
}

pub fn rank_layer(
    richness: &RichnessScores,
    correlation: &CorrelationMatrix,
    params: &PageRankParams,
) -> Result<PageRankResult> {
    let graph = HeadGraph::from_metrics(richness, correlation)?;
    pagerank(&graph, params)
}

pub fn rank_layers(
    metrics: Vec<(RichnessScores, CorrelationMatrix)>,
    geometry: ModelGeometry,
    params: &PageRankParams,
) -> Result<RunResult> {
    let layers = metrics
        .into_par_iter()
        .map(|(richness, correlation)| {
            let pagerank = rank_layer(&richness, &correlation, params)?;
            Ok(LayerRun {
                richness,
                correlation,
                pagerank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult { geometry, layers })
}

pub fn run_corpus(manifest: &Manifest, xi: f64, params: &PageRankParams) -> Result<RunResult> {
    let metrics = analyze_corpus(manifest, xi)?;
    rank_layers(metrics, manifest.geometry, params)
}

/// Builds a mask from per-layer runs with any selection variant.
pub fn select_mask(
    layers: &[LayerRun],
    geometry: ModelGeometry,
    strategy: Strategy,
    k: usize,
    variant: AblationVariant,
    seed: u64,
) -> Result<SelectionMask> {
    let by_layer: BTreeMap<usize, &LayerRun> =
        layers.iter().map(|l| (l.richness.layer, l)).collect();
    let seed_field = (variant == AblationVariant::Random).then_some(seed);
    build_mask_with(geometry, strategy, k, variant, seed_field, |layer| {
        let run = by_layer
            .get(&layer)
            .ok_or_else(|| Error::IncompleteCorpus(format!("no metrics for layer {layer}")))?;
        ablation_select(
            variant,
            &run.richness,
            &run.correlation,
            &run.pagerank.p_star,
            k,
            seed,
        )
    })
}
