use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use statrs::statistics::Statistics;

use super::neighbors::{check_points, knn};
use crate::error::{Error, Result};

/// Size of the coordinate shift given to exact duplicates before the MLE.
pub const DUPLICATE_JITTER: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleEstimate {
    pub mean: f64,
    pub std: f64,
    pub per_point: Vec<f64>,
    /// Points dropped because a neighbor distance was still zero.
    pub skipped: usize,
}

/// Moves every exact duplicate of an earlier point by a tiny,
/// index-dependent offset so that neighbor distances are non-zero.
fn separate_duplicates(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = points.to_vec();
    let mut seen = std::collections::HashMap::new();
    for (i, p) in out.iter_mut().enumerate() {
        let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key, i).is_some() {
            for (c, v) in p.iter_mut().enumerate() {
                let step = 1 + (i * 31 + c * 17) % 7;
                *v += DUPLICATE_JITTER * step as f64 * v.abs().max(1.0);
            }
        }
    }
    out
}

/// Local dimension `d̂ᵢ = −k / Σ_{j=1..k} log(r_{i,j} / r_{i,k})` from the
/// `k` nearest neighbors, averaged over points. The `j = k` term is zero.
pub fn mle_dimension(points: &[Vec<f64>], k: usize) -> Result<MleEstimate> {
    if k < 2 {
        return Err(Error::InvalidArgument("MLE needs k >= 2".into()));
    }
    let pts = separate_duplicates(points);
    let nn = knn(&pts, k)?;
    let mut per_point = Vec::with_capacity(pts.len());
    let mut skipped = 0;
    for row in &nn {
        let rk = row[k - 1].1;
        if row[0].1 <= 0.0 {
            skipped += 1;
            continue;
        }
        let s: f64 = row.iter().map(|&(_, r)| (r / rk).ln()).sum();
        if s >= 0.0 {
            // All k neighbors equidistant.
            skipped += 1;
            continue;
        }
        per_point.push(-(k as f64) / s);
    }
    if per_point.is_empty() {
        return Err(Error::Degenerate("no point has distinct neighbor distances".into()));
    }
    let mean = per_point.iter().mean();
    let std = if per_point.len() > 1 { per_point.iter().std_dev() } else { 0.0 };
    Ok(MleEstimate {
        mean,
        std,
        per_point,
        skipped,
    })
}

/// Eigenvalues of the (N−1)-normalized sample covariance, descending and
/// clipped at zero.
pub fn pca_spectrum(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let dim = check_points(points)?;
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidArgument("PCA needs at least two points".into()));
    }
    let mean: Vec<f64> = (0..dim)
        .map(|c| points.iter().map(|p| p[c]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, dim, |r, c| points[r][c] - mean[c]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let mut values: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("all points coincide; covariance is zero".into()));
    }
    Ok(values)
}

/// Smallest `m` with `Σ_{j≤m} λⱼ / Σ λ ≥ alpha`.
pub fn effective_dimension(spectrum: &[f64], alpha: f64) -> usize {
    let total: f64 = spectrum.iter().sum();
    let mut acc = 0.0;
    for (m, v) in spectrum.iter().enumerate() {
        acc += v;
        if acc >= alpha * total {
            return m + 1;
        }
    }
    spectrum.len()
}

/// Spectrum plus the effective dimension at each requested variance share.
pub fn pca_dimension(points: &[Vec<f64>], alphas: &[f64]) -> Result<(Vec<f64>, Vec<usize>)> {
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(Error::InvalidArgument(format!("variance share {a} outside (0, 1]")));
    }
    let spectrum = pca_spectrum(points)?;
    let dims = alphas.iter().map(|&a| effective_dimension(&spectrum, a)).collect();
    Ok((spectrum, dims))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimReport {
    pub mle_mean: f64,
    pub mle_std: f64,
    pub k_mle: usize,
    pub mle_skipped: usize,
    pub pca_spectrum: Vec<f64>,
    pub d_pca_95: usize,
    pub d_pca_99: usize,
}

pub fn dim_report(points: &[Vec<f64>], k_mle: usize) -> Result<DimReport> {
    let mle = mle_dimension(points, k_mle)?;
    let (spectrum, dims) = pca_dimension(points, &[0.95, 0.99])?;
    Ok(DimReport {
        mle_mean: mle.mean,
        mle_std: mle.std,
        k_mle,
        mle_skipped: mle.skipped,
        pca_spectrum: spectrum,
        d_pca_95: dims[0],
        d_pca_99: dims[1],
    })
}
