//! Singular-value spectra of head outputs and the richness index.
//!
//! Only singular values are needed. They are obtained as square roots of the
//! eigenvalues of the smaller Gram matrix (`OᵀO` when `S ≥ D'`, else `OOᵀ`),
//! diagonalized with cyclic Jacobi rotations.

use crate::error::{Error, Result};

/// Default cumulative-share threshold.
pub const DEFAULT_XI: f64 = 0.9;

/// Eigenvalues below `-NEG_CLAMP * λ_max` indicate a broken decomposition.
const NEG_CLAMP: f64 = 1e-10;

/// Singular values sorted in non-increasing order, length `min(S, D')`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    values: Vec<f64>,
}

impl SingularSpectrum {
    /// Wraps a precomputed spectrum, checking ordering and signs.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Shape("empty spectrum".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "singular values must be finite and non-negative".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "singular values must be non-increasing".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Eigenvalues of a dense symmetric `n × n` matrix (row-major), unsorted.
///
/// Cyclic Jacobi; converges quadratically and is accurate to a few ulps
/// relative to the matrix norm.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[i * n + i] * a[i * n + i];
            for j in (i + 1)..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off == 0.0 || off <= f64::EPSILON * f64::EPSILON * diag {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

/// Singular values of a row-major `rows × cols` matrix.
pub fn singular_values(data: &[f64], rows: usize, cols: usize) -> Result<SingularSpectrum> {
    if rows == 0 || cols == 0 || data.len() != rows * cols {
        return Err(Error::Shape(format!(
            "{} values for a {rows}x{cols} matrix",
            data.len()
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = rows.min(cols);
    let mut gram = vec![0.0; n * n];
    if rows >= cols {
        // OᵀO
        for r in 0..rows {
            let row = &data[r * cols..(r + 1) * cols];
            for i in 0..cols {
                let ri = row[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..cols {
                    gram[i * n + j] += ri * row[j];
                }
            }
        }
    } else {
        // OOᵀ
        for i in 0..rows {
            let ri = &data[i * cols..(i + 1) * cols];
            for j in i..rows {
                let rj = &data[j * cols..(j + 1) * cols];
                gram[i * n + j] = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[i * n + j] = gram[j * n + i];
        }
    }

    let mut eig = symmetric_eigenvalues(gram, n);
    eig.sort_by(|a, b| b.total_cmp(a));
    let lmax = eig[0].max(0.0);
    let mut values = Vec::with_capacity(n);
    for l in eig {
        if l < 0.0 {
            if l < -NEG_CLAMP * lmax {
                return Err(Error::Numerical(format!(
                    "Gram eigenvalue {l:e} is negative beyond roundoff (max {lmax:e})"
                )));
            }
            values.push(0.0);
        } else {
            values.push(l.sqrt());
        }
    }
    Ok(SingularSpectrum { values })
}

/// Smallest `t` (1-based) whose leading singular values hold at least a
/// `xi` share of the total.
pub fn richness_index(spectrum: &SingularSpectrum, xi: f64) -> Result<usize> {
    check_xi(xi)?;
    let values = spectrum.values();
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateOutput);
    }
    let mut cum = 0.0;
    for (i, v) in values.iter().enumerate() {
        cum += v;
        if cum / total >= xi {
            return Ok(i + 1);
        }
    }
    // `cum` at the end equals `total` bit-for-bit, so this is unreachable for
    // xi <= 1.
    Ok(values.len())
}

pub fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::InvalidParameter(format!("xi = {xi} not in (0, 1]")));
    }
    Ok(())
}
