//! Rank-stability statistics between two runs of the pipeline.
//!
//! Everything here is descriptive; pass/fail thresholds belong to callers.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CorrelationMatrix;
use crate::pipeline::RunResult;
use crate::selector::select_topk;

/// Ranks starting at 1, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman_rank_corr(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "lengths {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidParameter("need at least two values".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN value".into()));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets count as identical.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let a: BTreeSet<_> = a.iter().collect();
    let b: BTreeSet<_> = b.iter().collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

fn max_normalized(m: &CorrelationMatrix) -> Vec<f64> {
    let max = m.values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        m.values.iter().map(|v| v / max).collect()
    } else {
        vec![0.0; m.values.len()]
    }
}

/// Mean absolute off-diagonal difference of the two matrices after each is
/// divided by its largest entry.
pub fn correlation_delta(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<f64> {
    if a.num_heads != b.num_heads {
        return Err(Error::Shape("correlation matrices differ in size".into()));
    }
    let h = a.num_heads;
    if h < 2 {
        return Ok(0.0);
    }
    let (na, nb) = (max_normalized(a), max_normalized(b));
    let mut sum = 0.0;
    for i in 0..h {
        for j in 0..h {
            if i != j {
                sum += (na[i * h + j] - nb[i * h + j]).abs();
            }
        }
    }
    Ok(sum / (h * (h - 1)) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStability {
    pub layer: usize,
    /// `None` when either richness vector has no rank variance.
    pub richness_rho: Option<f64>,
    pub pagerank_rho: Option<f64>,
    pub topk_jaccard: f64,
    pub delta_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label: String,
    pub k: usize,
    pub layers: Vec<LayerStability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub baseline: String,
    pub comparisons: Vec<Comparison>,
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedCorrelation) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Per-layer comparison of two runs over the same geometry.
pub fn compare_layers(
    baseline: &RunResult,
    other: &RunResult,
    k: usize,
) -> Result<Vec<LayerStability>> {
    if baseline.geometry != other.geometry {
        return Err(Error::Geometry(format!(
            "runs differ: {:?} vs {:?}",
            baseline.geometry, other.geometry
        )));
    }
    if baseline.layers.len() != other.layers.len() {
        return Err(Error::Shape("runs cover different layers".into()));
    }
    baseline
        .layers
        .iter()
        .zip(&other.layers)
        .map(|(a, b)| {
            let richness_rho = defined(spearman_rank_corr(&a.richness.values, &b.richness.values))?;
            let pagerank_rho = defined(spearman_rank_corr(&a.pagerank.p_star, &b.pagerank.p_star))?;
            let sa = select_topk(&a.pagerank.p_star, k)?;
            let sb = select_topk(&b.pagerank.p_star, k)?;
            Ok(LayerStability {
                layer: a.richness.layer,
                richness_rho,
                pagerank_rho,
                topk_jaccard: jaccard(&sa, &sb),
                delta_r: correlation_delta(&a.correlation, &b.correlation)?,
            })
        })
        .collect()
}

/// Report with a single comparison of `other` against `baseline`.
pub fn compare_runs(
    baseline_label: &str,
    baseline: &RunResult,
    other_label: &str,
    other: &RunResult,
    k: usize,
) -> Result<StabilityReport> {
    Ok(StabilityReport {
        baseline: baseline_label.to_string(),
        comparisons: vec![Comparison {
            label: other_label.to_string(),
            k,
            layers: compare_layers(baseline, other, k)?,
        }],
    })
}

impl StabilityReport {
    /// Flat CSV, one row per layer per comparison. Undefined correlations
    /// are left empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::from(
            "baseline,comparison,layer,k,richness_rho,pagerank_rho,topk_jaccard,delta_r\n",
        );
        for c in &self.comparisons {
            for l in &c.layers {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    self.baseline,
                    c.label,
                    l.layer,
                    c.k,
                    opt(l.richness_rho),
                    opt(l.pagerank_rho),
                    l.topk_jaccard,
                    l.delta_r
                );
            }
        }
        s
    }
}
