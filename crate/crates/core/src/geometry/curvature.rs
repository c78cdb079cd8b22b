use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics, Statistics};

use super::neighbors::{check_points, knn};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub kappa: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub iqr: f64,
    pub k_curv: usize,
    /// Points whose neighbors all coincide with them (κ set to 0).
    pub flagged: usize,
}

/// κᵢ = σ_min / σ_max of `[z_{i,1} − zᵢ, …, z_{i,k} − zᵢ]` over its
/// `min(dim, k)` singular values.
pub fn local_curvature(points: &[Vec<f64>], k: usize) -> Result<CurvatureReport> {
    let dim = check_points(points)?;
    let nn = knn(points, k)?;
    let mut kappa = Vec::with_capacity(points.len());
    let mut flagged = 0;
    for (i, row) in nn.iter().enumerate() {
        let x = DMatrix::from_fn(dim, k, |r, c| points[row[c].0][r] - points[i][r]);
        let sv = x.singular_values();
        let hi = sv.max();
        if hi <= 0.0 {
            flagged += 1;
            kappa.push(0.0);
            continue;
        }
        kappa.push((sv.min() / hi).clamp(0.0, 1.0));
    }
    let mut data = Data::new(kappa.clone());
    Ok(CurvatureReport {
        mean: kappa.iter().mean(),
        std: if kappa.len() > 1 { kappa.iter().std_dev() } else { 0.0 },
        median: data.median(),
        min: kappa.iter().copied().fold(f64::INFINITY, f64::min),
        max: kappa.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        iqr: data.interquartile_range(),
        kappa,
        k_curv: k,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn gaussian_ball_is_positive() {
        let mut r = rng::stream(8, 0);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..20).map(|_| rng::normal(&mut r)).collect())
            .collect();
        let rep = local_curvature(&pts, 25).unwrap();
        assert!(rep.kappa.iter().all(|&k| k > 0.0 && k <= 1.0));
        assert!(rep.min <= rep.median && rep.median <= rep.max);
        assert_eq!(rep.flagged, 0);
    }

    #[test]
    fn coincident_neighbors_are_flagged() {
        let mut pts = vec![vec![1.0, 2.0]; 4];
        pts.push(vec![5.0, 5.0]);
        let rep = local_curvature(&pts, 2).unwrap();
        assert_eq!(rep.flagged, 4);
        assert_eq!(&rep.kappa[..4], &[0.0; 4]);
    }
}
