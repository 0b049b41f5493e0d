//! Fine-tuning masks from per-layer head rankings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelGeometry;
use crate::metrics::{CorrelationMatrix, RichnessScores};

pub const DEFAULT_K: usize = 3;

/// Which layers receive trainable heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Top-k heads in every layer.
    #[default]
    LayerWise,
    /// Top-k heads in layers `⌊L/2⌋..L`, lower half frozen.
    MidTop,
}

impl Strategy {
    pub fn layers(self, num_layers: usize) -> std::ops::Range<usize> {
        match self {
            Strategy::LayerWise => 0..num_layers,
            Strategy::MidTop => num_layers / 2..num_layers,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::LayerWise => "layer_wise",
            Strategy::MidTop => "mid_top",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layer_wise" | "layer-wise" => Ok(Strategy::LayerWise),
            "mid_top" | "mid-top" => Ok(Strategy::MidTop),
            _ => Err(Error::InvalidParameter(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Head-selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationVariant {
    /// Top-k by PageRank.
    #[default]
    FullHifi,
    /// Top-k by richness.
    WithoutCorr,
    /// Bottom-k by richness.
    WithoutCorrInv,
    /// Top-k by total correlation mass.
    WithoutInfo,
    /// Bottom-k by PageRank.
    PageInv,
    /// k distinct heads drawn from a seeded generator.
    Random,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 6] = [
        AblationVariant::FullHifi,
        AblationVariant::WithoutCorr,
        AblationVariant::WithoutCorrInv,
        AblationVariant::WithoutInfo,
        AblationVariant::PageInv,
        AblationVariant::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationVariant::FullHifi => "full_hifi",
            AblationVariant::WithoutCorr => "without_corr",
            AblationVariant::WithoutCorrInv => "without_corr_inv",
            AblationVariant::WithoutInfo => "without_info",
            AblationVariant::PageInv => "page_inv",
            AblationVariant::Random => "random",
        }
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant {s:?}")))
    }
}

fn check_k(k: usize, h: usize) -> Result<()> {
    if k > h {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds H = {h}")));
    }
    Ok(())
}

/// Indices ordered by value, ties broken by lower index. Returns the first
/// `k`, sorted ascending.
fn rank_select(values: &[f64], k: usize, descending: bool) -> Result<Vec<usize>> {
    check_k(k, values.len())?;
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        let ord = if descending { ord.reverse() } else { ord };
        ord.then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

/// Indices of the `k` largest values; ties go to the lower index.
pub fn select_topk(values: &[f64], k: usize) -> Result<Vec<usize>> {
    rank_select(values, k, true)
}

/// Indices of the `k` smallest values; ties go to the lower index.
pub fn select_bottomk(values: &[f64], k: usize) -> Result<Vec<usize>> {
    rank_select(values, k, false)
}

/// `k` distinct heads from a ChaCha8 stream keyed by `seed`, one stream per
/// layer.
pub fn random_select(num_heads: usize, k: usize, seed: u64, layer: usize) -> Result<Vec<usize>> {
    check_k(k, num_heads)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(layer as u64);
    let mut idx = rand::seq::index::sample(&mut rng, num_heads, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Heads chosen by `variant` for one layer.
pub fn ablation_select(
    variant: AblationVariant,
    richness: &RichnessScores,
    corr: &CorrelationMatrix,
    p_star: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let h = richness.values.len();
    if corr.num_heads != h || p_star.len() != h {
        return Err(Error::Shape(format!(
            "layer inputs disagree on H: richness {h}, correlation {}, pagerank {}",
            corr.num_heads,
            p_star.len()
        )));
    }
    match variant {
        AblationVariant::FullHifi => select_topk(p_star, k),
        AblationVariant::WithoutCorr => select_topk(&richness.values, k),
        AblationVariant::WithoutCorrInv => select_bottomk(&richness.values, k),
        AblationVariant::WithoutInfo => select_topk(&corr.row_sums(), k),
        AblationVariant::PageInv => select_bottomk(p_star, k),
        AblationVariant::Random => random_select(h, k, seed, richness.layer),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSelection {
    pub layer: usize,
    pub heads: Vec<usize>,
}

/// Per-layer boolean head mask; `delta[l][h]` marks head `h` of layer `l`
/// as trainable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMask {
    pub strategy: Strategy,
    pub k: usize,
    #[serde(default)]
    pub variant: AblationVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub geometry: ModelGeometry,
    pub delta: Vec<Vec<bool>>,
    pub selected: Vec<LayerSelection>,
}

impl SelectionMask {
    pub fn selected_heads(&self) -> usize {
        self.delta.iter().flatten().filter(|&&b| b).count()
    }

    /// Checks shape and per-strategy cardinalities.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        g.validate()?;
        if self.delta.len() != g.num_layers || self.delta.iter().any(|r| r.len() != g.num_heads) {
            return Err(Error::Shape(format!(
                "mask is not {}x{}",
                g.num_layers, g.num_heads
            )));
        }
        let active = self.strategy.layers(g.num_layers);
        for (l, row) in self.delta.iter().enumerate() {
            let count = row.iter().filter(|&&b| b).count();
            let want = if active.contains(&l) { self.k } else { 0 };
            if count != want {
                return Err(Error::InvalidParameter(format!(
                    "layer {l} has {count} selected heads, expected {want}"
                )));
            }
        }
        Ok(())
    }
}

/// Assembles a mask by asking `select` for the heads of every active layer.
pub fn build_mask_with<F>(
    geometry: ModelGeometry,
    strategy: Strategy,
    k: usize,
    variant: AblationVariant,
    seed: Option<u64>,
    mut select: F,
) -> Result<SelectionMask>
where
    F: FnMut(usize) -> Result<Vec<usize>>,
{
    geometry.validate()?;
    check_k(k, geometry.num_heads)?;
    let mut delta = vec![vec![false; geometry.num_heads]; geometry.num_layers];
    let mut selected = Vec::new();
    for layer in strategy.layers(geometry.num_layers) {
        let heads = select(layer)?;
        if heads.len() != k {
            return Err(Error::InvalidParameter(format!(
                "layer {layer}: {} heads selected, expected {k}",
                heads.len()
            )));
        }
        for &h in &heads {
            geometry.check_head(h)?;
            delta[layer][h] = true;
        }
        selected.push(LayerSelection { layer, heads });
    }
    let mask = SelectionMask {
        strategy,
        k,
        variant,
        seed,
        geometry,
        delta,
        selected,
    };
    mask.validate()?;
    Ok(mask)
}

/// Top-k PageRank mask. `p_stars` must hold a vector for every layer the
/// strategy activates; extra layers are ignored.
pub fn build_mask(
    p_stars: &BTreeMap<usize, Vec<f64>>,
    geometry: ModelGeometry,
    strategy: Strategy,
    k: usize,
) -> Result<SelectionMask> {
    build_mask_with(
        geometry,
        strategy,
        k,
        AblationVariant::FullHifi,
        None,
        |layer| {
            let p = p_stars.get(&layer).ok_or_else(|| {
                Error::IncompleteCorpus(format!("missing PageRank vector for layer {layer}"))
            })?;
            if p.len() != geometry.num_heads {
                return Err(Error::Shape(format!(
                    "layer {layer}: {} PageRank values for H = {}",
                    p.len(),
                    geometry.num_heads
                )));
            }
            select_topk(p, k)
        },
    )
}

/// Parameters per head: `W_Q`, `W_K`, `W_V`, each `D × D'`, biases excluded.
pub fn params_per_head(geometry: &ModelGeometry) -> u64 {
    3 * geometry.hidden_dim as u64 * geometry.head_dim as u64
}

/// Share of `total_params` that the mask leaves trainable.
pub fn trainable_ratio(
    geometry: &ModelGeometry,
    mask: &SelectionMask,
    total_params: u64,
) -> Result<f64> {
    if total_params == 0 {
        return Err(Error::InvalidParameter(
            "total_params must be positive".into(),
        ));
    }
    let trainable = mask.selected_heads() as u64 * params_per_head(geometry);
    Ok(trainable as f64 / total_params as f64)
}
