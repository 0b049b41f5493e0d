//! Head graph and PageRank.
//!
//! Nodes are heads. The initial distribution is richness normalized to sum
//! to one; edge `h → h'` carries `R[h][h'] / Σ_{h''≠h} R[h][h'']`. The
//! iteration is
//!
//! ```text
//! P ← d · Mᵀ · P + (1 − d) / H
//! ```
//!
//! `M` is row-stochastic, so `Mᵀ` moves each node's mass along its out-edges
//! and every iterate stays on the probability simplex. The untransposed form
//! `d · M · P` is available through [`Orientation::Untransposed`]; its
//! iterates are renormalized to sum to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{CorrelationMatrix, RichnessScores};

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Transposed,
    Untransposed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGraph {
    /// Initial node probabilities.
    pub p0: Vec<f64>,
    /// Row-major `H × H` transition matrix; row `h` is the move distribution
    /// out of head `h`.
    pub transition: Vec<f64>,
}

impl HeadGraph {
    pub fn new(p0: Vec<f64>, transition: Vec<f64>) -> Result<Self> {
        let g = Self { p0, transition };
        g.validate()?;
        Ok(g)
    }

    pub fn from_metrics(scores: &RichnessScores, corr: &CorrelationMatrix) -> Result<Self> {
        if scores.values.len() != corr.num_heads {
            return Err(Error::Shape(format!(
                "{} richness values for {} heads",
                scores.values.len(),
                corr.num_heads
            )));
        }
        Self::new(initial_distribution(scores)?, transition_matrix(corr))
    }

    pub fn num_heads(&self) -> usize {
        self.p0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.p0.len();
        if h == 0 {
            return Err(Error::Shape("graph has no nodes".into()));
        }
        if self.transition.len() != h * h {
            return Err(Error::Shape(format!(
                "transition matrix has {} entries for {h} nodes",
                self.transition.len()
            )));
        }
        if self.p0.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("p0 entries must be >= 0".into()));
        }
        let s: f64 = self.p0.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("p0 sums to {s}")));
        }
        for i in 0..h {
            let row = &self.transition[i * h..(i + 1) * h];
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has negative entries"
                )));
            }
            if h > 1 {
                if row[i] != 0.0 {
                    return Err(Error::InvalidParameter(format!("row {i} has a self-loop")));
                }
                let rs: f64 = row.iter().sum();
                if (rs - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidParameter(format!("row {i} sums to {rs}")));
                }
            }
        }
        Ok(())
    }
}

/// Richness normalized to a probability vector.
pub fn initial_distribution(scores: &RichnessScores) -> Result<Vec<f64>> {
    if scores.values.is_empty() {
        return Err(Error::Shape("no heads".into()));
    }
    if scores.values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidParameter(
            "richness values must be positive".into(),
        ));
    }
    let total: f64 = scores.values.iter().sum();
    Ok(scores.values.iter().map(|v| v / total).collect())
}

/// Row-normalized correlation. A row with no correlation mass becomes the
/// uniform distribution over the other heads. With a single head the
/// matrix is `[0]` and PageRank returns `[1]`.
pub fn transition_matrix(corr: &CorrelationMatrix) -> Vec<f64> {
    let h = corr.num_heads;
    let mut m = vec![0.0; h * h];
    if h < 2 {
        return m;
    }
    let sums = corr.row_sums();
    for i in 0..h {
        for j in 0..h {
            if i == j {
                continue;
            }
            m[i * h + j] = if sums[i] > 0.0 {
                corr.get(i, j) / sums[i]
            } else {
                1.0 / (h - 1) as f64
            };
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    pub p_star: Vec<f64>,
    /// Executions of the convergence loop after the first update; zero when
    /// the first update already moved less than `epsilon`.
    pub iterations: usize,
    /// L1 distance between the last two iterates.
    pub residual: f64,
    pub damping: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub orientation: Orientation,
}

impl Default for PageRankParams {
    fn default() -> Self {
        Self {
            damping: DEFAULT_DAMPING,
            epsilon: DEFAULT_EPSILON,
            max_iter: DEFAULT_MAX_ITER,
            orientation: Orientation::Transposed,
        }
    }
}

impl PageRankParams {
    pub fn new(damping: f64, epsilon: f64, max_iter: usize) -> Self {
        Self {
            damping,
            epsilon,
            max_iter,
            orientation: Orientation::Transposed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidParameter(format!(
                "damping {} not in [0, 1)",
                self.damping
            )));
        }
        if self.epsilon <= 0.0 || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// One damped update of `p` into `next`.
pub fn pagerank_step(
    graph: &HeadGraph,
    damping: f64,
    orientation: Orientation,
    p: &[f64],
    next: &mut [f64],
) {
    let h = graph.num_heads();
    let m = &graph.transition;
    let teleport = (1.0 - damping) / h as f64;
    match orientation {
        Orientation::Transposed => {
            // next[j] = d Σ_i m[i][j] p[i] + teleport
            next.iter_mut().for_each(|v| *v = 0.0);
            for (i, &pi) in p.iter().enumerate() {
                let row = &m[i * h..(i + 1) * h];
                for (nj, &mij) in next.iter_mut().zip(row) {
                    *nj += mij * pi;
                }
            }
            next.iter_mut().for_each(|v| *v = damping * *v + teleport);
        }
        Orientation::Untransposed => {
            for (i, ni) in next.iter_mut().enumerate() {
                let row = &m[i * h..(i + 1) * h];
                let dot: f64 = row.iter().zip(p).map(|(a, b)| a * b).sum();
                *ni = damping * dot + teleport;
            }
            let s: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= s);
        }
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Power iteration from `graph.p0` until successive iterates differ by at
/// most `epsilon` in L1.
pub fn pagerank(graph: &HeadGraph, params: &PageRankParams) -> Result<PageRankResult> {
    params.validate()?;
    graph.validate()?;
    let h = graph.num_heads();
    if h == 1 {
        return Ok(PageRankResult {
            p_star: vec![1.0],
            iterations: 0,
            residual: 0.0,
            damping: params.damping,
            epsilon: params.epsilon,
        });
    }
    let mut prev = graph.p0.clone();
    let mut cur = vec![0.0; h];
    pagerank_step(graph, params.damping, params.orientation, &prev, &mut cur);
    let mut residual = l1(&cur, &prev);
    let mut iterations = 0;
    while residual > params.epsilon {
        if iterations == params.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual,
                epsilon: params.epsilon,
                last: cur,
            });
        }
        std::mem::swap(&mut prev, &mut cur);
        pagerank_step(graph, params.damping, params.orientation, &prev, &mut cur);
        residual = l1(&cur, &prev);
        iterations += 1;
    }
    Ok(PageRankResult {
        p_star: cur,
        iterations,
        residual,
        damping: params.damping,
        epsilon: params.epsilon,
    })
}

/// Exact fixed point of the transposed iteration, solving
/// `(I − d·Mᵀ) P = (1 − d)/H · 1` by Gaussian elimination with partial
/// pivoting.
pub fn pagerank_direct(graph: &HeadGraph, damping: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::InvalidParameter(format!(
            "damping {damping} not in [0, 1)"
        )));
    }
    let h = graph.num_heads();
    if h == 1 {
        return Ok(vec![1.0]);
    }
    let m = &graph.transition;
    let w = h + 1;
    let mut a = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..h {
            let id = if r == c { 1.0 } else { 0.0 };
            a[r * w + c] = id - damping * m[c * h + r];
        }
        a[r * w + h] = (1.0 - damping) / h as f64;
    }
    for col in 0..h {
        let pivot = (col..h)
            .max_by(|&x, &y| a[x * w + col].abs().total_cmp(&a[y * w + col].abs()))
            .unwrap();
        if a[pivot * w + col].abs() < 1e-300 {
            return Err(Error::SingularSystem);
        }
        if pivot != col {
            for c in 0..w {
                a.swap(pivot * w + c, col * w + c);
            }
        }
        let diag = a[col * w + col];
        for r in (col + 1)..h {
            let f = a[r * w + col] / diag;
            if f == 0.0 {
                continue;
            }
            for c in col..w {
                a[r * w + c] -= f * a[col * w + c];
            }
        }
    }
    let mut x = vec![0.0; h];
    for r in (0..h).rev() {
        let mut s = a[r * w + h];
        for c in (r + 1)..h {
            s -= a[r * w + c] * x[c];
        }
        x[r] = s / a[r * w + r];
    }
    Ok(x)
}

/// Upper bound on loop iterations implied by the contraction factor `d`.
pub fn contraction_bound(damping: f64, epsilon: f64) -> usize {
    if damping == 0.0 {
        return 1;
    }
    ((epsilon / 2.0).ln() / damping.ln()).ceil().max(0.0) as usize
}

/// Serialized per-layer PageRank output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPageRank {
    pub layer: usize,
    pub d: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub residual: f64,
    pub pagerank: Vec<f64>,
}

impl LayerPageRank {
    pub fn new(layer: usize, result: &PageRankResult) -> Self {
        Self {
            layer,
            d: result.damping,
            epsilon: result.epsilon,
            iterations: result.iterations,
            residual: result.residual,
            pagerank: result.p_star.clone(),
        }
    }
}
