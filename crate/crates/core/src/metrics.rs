//! Monte-Carlo estimates of per-head information richness and of the
//! head-to-head correlation matrix for one layer.
//!
//! Per-sample terms may be computed in any order or in parallel; they are
//! always summed in manifest sample order, so results do not depend on the
//! number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelGeometry;
use crate::spectral::{check_xi, richness_index, singular_values};
use crate::tensor_store::{load_sample, HeadOutput, Manifest};

/// Mean richness index per head of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RichnessScores {
    pub layer: usize,
    pub values: Vec<f64>,
    pub n: usize,
}

/// Symmetric, zero-diagonal, non-negative `H × H` matrix (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub layer: usize,
    pub num_heads: usize,
    pub values: Vec<f64>,
    pub n: usize,
}

impl CorrelationMatrix {
    /// Builds a matrix from rows, checking symmetry, diagonal and signs.
    pub fn from_rows(layer: usize, n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let h = rows.len();
        if rows.iter().any(|r| r.len() != h) {
            return Err(Error::Shape("correlation matrix is not square".into()));
        }
        let m = Self {
            layer,
            num_heads: h,
            values: rows.iter().flatten().copied().collect(),
            n,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.num_heads;
        if self.values.len() != h * h {
            return Err(Error::Shape("correlation matrix size".into()));
        }
        for i in 0..h {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "correlation diagonal entry {i} is non-zero"
                )));
            }
            for j in 0..h {
                let v = self.get(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "correlation entry ({i}, {j}) = {v} must be finite and non-negative"
                    )));
                }
                if v != self.get(j, i) {
                    return Err(Error::InvalidParameter(format!(
                        "correlation matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.num_heads + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.num_heads.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Total correlation mass of each head, `Σ_{h'≠h} R[h][h']`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.num_heads)
            .map(|i| {
                (0..self.num_heads)
                    .filter(|&j| j != i)
                    .map(|j| self.get(i, j))
                    .sum()
            })
            .collect()
    }
}

/// Mean of the rows of a head output.
pub fn sequence_average(out: &HeadOutput) -> Vec<f64> {
    let mut acc = vec![0.0; out.head_dim];
    for s in 0..out.seq_len {
        for (a, &v) in acc.iter_mut().zip(out.row(s)) {
            *a += f64::from(v);
        }
    }
    let scale = out.seq_len as f64;
    acc.iter_mut().for_each(|a| *a /= scale);
    acc
}

/// Absolute unbiased covariance between two vectors, taken across their
/// components.
pub fn pair_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "vector lengths {} and {} differ",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::CovarianceUndefined(n));
    }
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let mean_b = b.iter().sum::<f64>() / n as f64;
    let cross: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - mean_a) * (y - mean_b))
        .sum();
    Ok((cross / (n - 1) as f64).abs())
}

fn sample_index(out: &HeadOutput, xi: f64) -> Result<usize> {
    let spectrum = singular_values(&out.to_f64(), out.seq_len, out.head_dim)?;
    richness_index(&spectrum, xi)
}

fn label(out: &HeadOutput, e: Error) -> Error {
    match e {
        e @ Error::Sample { .. } => e,
        e => Error::Sample {
            layer: out.layer,
            head: out.head,
            sample_id: out.sample_id.clone(),
            source: Box::new(e),
        },
    }
}

/// Mean richness index over every sample of one head.
pub fn information_richness<I>(stream: I, xi: f64) -> Result<f64>
where
    I: IntoIterator<Item = Result<HeadOutput>>,
{
    check_xi(xi)?;
    let mut sum = 0u64;
    let mut n = 0usize;
    for out in stream {
        let out = out?;
        let t = sample_index(&out, xi).map_err(|e| label(&out, e))?;
        sum += t as u64;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(sum as f64 / n as f64)
}

/// Number of unordered head pairs.
fn pair_count(h: usize) -> usize {
    h * h.saturating_sub(1) / 2
}

/// Upper-triangle pair correlations of one sample, in `(i, j>i)` order.
fn sample_pair_terms(averages: &[Vec<f64>]) -> Result<Vec<f64>> {
    let h = averages.len();
    let mut terms = Vec::with_capacity(pair_count(h));
    for i in 0..h {
        for j in (i + 1)..h {
            terms.push(pair_correlation(&averages[i], &averages[j])?);
        }
    }
    Ok(terms)
}

fn mirror(layer: usize, h: usize, sums: &[f64], n: usize) -> CorrelationMatrix {
    let mut values = vec![0.0; h * h];
    let mut k = 0;
    for i in 0..h {
        for j in (i + 1)..h {
            let v = sums[k] / n as f64;
            values[i * h + j] = v;
            values[j * h + i] = v;
            k += 1;
        }
    }
    CorrelationMatrix {
        layer,
        num_heads: h,
        values,
        n,
    }
}

/// Correlation matrix of one layer from one stream per head. The streams
/// must enumerate the same samples in the same order.
pub fn layer_correlation_matrix<I>(streams: Vec<I>) -> Result<CorrelationMatrix>
where
    I: IntoIterator<Item = Result<HeadOutput>>,
{
    let h = streams.len();
    if h == 0 {
        return Err(Error::Shape("no heads".into()));
    }
    let mut iters: Vec<_> = streams.into_iter().map(IntoIterator::into_iter).collect();
    let mut sums = vec![0.0; pair_count(h)];
    let mut n = 0usize;
    let mut layer = None;
    loop {
        let mut row: Vec<HeadOutput> = Vec::with_capacity(h);
        let mut finished = 0;
        for it in iters.iter_mut() {
            match it.next() {
                Some(out) => row.push(out?),
                None => finished += 1,
            }
        }
        if finished == h {
            break;
        }
        if finished != 0 {
            return Err(Error::MismatchedSamples(format!(
                "streams end at different lengths after {n} samples"
            )));
        }
        let sid = &row[0].sample_id;
        if let Some(other) = row.iter().find(|o| &o.sample_id != sid) {
            return Err(Error::MismatchedSamples(format!(
                "sample {n}: head {} has {:?}, head {} has {:?}",
                row[0].head, sid, other.head, other.sample_id
            )));
        }
        layer.get_or_insert(row[0].layer);
        let averages: Vec<_> = row.iter().map(sequence_average).collect();
        let terms = sample_pair_terms(&averages).map_err(|e| label(&row[0], e))?;
        for (s, t) in sums.iter_mut().zip(terms) {
            *s += t;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(mirror(layer.unwrap_or(0), h, &sums, n))
}

/// Everything one sample contributes to a layer's estimates.
#[derive(Debug, Clone)]
pub struct SampleTerms {
    pub indices: Vec<usize>,
    pub pairs: Vec<f64>,
}

/// Computes the richness indices and pair correlations of one sample,
/// given the outputs of every head of a layer for that sample.
pub fn sample_terms(outputs: &[HeadOutput], xi: f64) -> Result<SampleTerms> {
    let indices = outputs
        .iter()
        .map(|o| sample_index(o, xi).map_err(|e| label(o, e)))
        .collect::<Result<Vec<_>>>()?;
    let averages: Vec<_> = outputs.iter().map(sequence_average).collect();
    let pairs = match outputs.first() {
        Some(first) => sample_pair_terms(&averages).map_err(|e| label(first, e))?,
        None => Vec::new(),
    };
    Ok(SampleTerms { indices, pairs })
}

/// Sums per-sample terms in the given order.
pub fn aggregate(
    layer: usize,
    num_heads: usize,
    terms: &[SampleTerms],
) -> Result<(RichnessScores, CorrelationMatrix)> {
    let n = terms.len();
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut index_sums = vec![0u64; num_heads];
    let mut pair_sums = vec![0.0; pair_count(num_heads)];
    for t in terms {
        for (s, &i) in index_sums.iter_mut().zip(&t.indices) {
            *s += i as u64;
        }
        for (s, &p) in pair_sums.iter_mut().zip(&t.pairs) {
            *s += p;
        }
    }
    let richness = RichnessScores {
        layer,
        values: index_sums.iter().map(|&s| s as f64 / n as f64).collect(),
        n,
    };
    Ok((richness, mirror(layer, num_heads, &pair_sums, n)))
}

/// Richness and correlation of one in-memory layer: `per_sample[i][h]` is
/// head `h`'s output on sample `i`.
pub fn analyze_outputs(
    layer: usize,
    per_sample: &[Vec<HeadOutput>],
    xi: f64,
) -> Result<(RichnessScores, CorrelationMatrix)> {
    check_xi(xi)?;
    let h = per_sample.first().map_or(0, Vec::len);
    if per_sample.iter().any(|s| s.len() != h) {
        return Err(Error::MismatchedSamples("ragged head count".into()));
    }
    let terms = per_sample
        .par_iter()
        .map(|outs| sample_terms(outs, xi))
        .collect::<Result<Vec<_>>>()?;
    aggregate(layer, h, &terms)
}

/// Richness and correlation of one layer of a corpus, computed in a single
/// pass over its samples.
pub fn analyze_layer(
    manifest: &Manifest,
    layer: usize,
    xi: f64,
) -> Result<(RichnessScores, CorrelationMatrix)> {
    check_xi(xi)?;
    manifest.geometry.check_layer(layer)?;
    let h = manifest.geometry.num_heads;
    let terms = manifest
        .samples
        .par_iter()
        .map(|sid| {
            let outs = (0..h)
                .map(|head| load_sample(manifest, layer, head, sid))
                .collect::<Result<Vec<_>>>()?;
            sample_terms(&outs, xi)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(layer, h, &terms)
}

/// Serialized per-layer metrics, the hand-off between `analyze` and `select`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMetrics {
    pub layer: usize,
    pub n: usize,
    pub xi: f64,
    pub richness: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
    /// Not required on input; external exporters may omit it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<ModelGeometry>,
}

impl LayerMetrics {
    pub fn new(
        richness: &RichnessScores,
        correlation: &CorrelationMatrix,
        xi: f64,
        geometry: Option<ModelGeometry>,
    ) -> Self {
        Self {
            layer: richness.layer,
            n: richness.n,
            xi,
            richness: richness.values.clone(),
            correlation: correlation.rows(),
            geometry,
        }
    }

    /// Splits back into typed scores, validating the correlation invariants.
    pub fn to_parts(&self) -> Result<(RichnessScores, CorrelationMatrix)> {
        let h = self.richness.len();
        if h == 0 {
            return Err(Error::Shape("empty richness vector".into()));
        }
        if self.correlation.len() != h {
            return Err(Error::Shape(format!(
                "{} richness values but {} correlation rows",
                h,
                self.correlation.len()
            )));
        }
        if self.richness.iter().any(|v| !v.is_finite() || *v < 1.0) {
            return Err(Error::InvalidParameter(
                "richness values must be finite and >= 1".into(),
            ));
        }
        let corr = CorrelationMatrix::from_rows(self.layer, self.n, &self.correlation)?;
        Ok((
            RichnessScores {
                layer: self.layer,
                values: self.richness.clone(),
                n: self.n,
            },
            corr,
        ))
    }
}
