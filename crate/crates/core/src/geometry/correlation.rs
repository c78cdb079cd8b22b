use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::statistics::{Data, OrderStatistics, RankTieBreaker};

use super::neighbors::sq_dist;
use crate::error::{Error, Result};
use crate::qcore::{bures_angle, DensityMatrix};
use crate::rng::{self, Rng};

/// Smallest reported Pearson p-value.
pub const P_VALUE_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistancePair {
    pub i: usize,
    pub j: usize,
    pub d_latent: f64,
    pub d_bures: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n_pairs: usize,
    pub pearson_r: f64,
    pub pearson_p: f64,
    pub spearman_rho: f64,
    pub r_squared: f64,
    /// Fit `d_L = slope · d_B + intercept`.
    pub slope: f64,
    pub intercept: f64,
    pub rmse: f64,
    pub mae: f64,
    pub pairs: Vec<DistancePair>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson correlation. Errors when either list has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least two pairs".into()));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate(
            "zero variance in a distance list; correlation undefined".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    let rx = Data::new(x.to_vec()).ranks(RankTieBreaker::Average);
    let ry = Data::new(y.to_vec()).ranks(RankTieBreaker::Average);
    pearson(&rx, &ry)
}

/// Two-sided p-value of `t = r√((n−2)/(1−r²))` under Student's t with
/// `n − 2` degrees of freedom, floored at [`P_VALUE_FLOOR`].
pub fn pearson_p_value(r: f64, n: usize) -> f64 {
    if n < 3 {
        return 1.0;
    }
    let df = (n - 2) as f64;
    let one_minus = 1.0 - r * r;
    if one_minus <= 0.0 {
        return P_VALUE_FLOOR;
    }
    let t2 = r * r * df / one_minus;
    beta_reg(df / 2.0, 0.5, df / (df + t2)).clamp(P_VALUE_FLOOR, 1.0)
}

/// Least-squares line `y = slope·x + intercept` with R², RMSE and MAE of
/// its residuals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rmse: f64,
    pub mae: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    pearson(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (slope * a + intercept)).collect();
    let ss_res: f64 = res.iter().map(|e| e * e).sum();
    Ok(LinearFit {
        slope,
        intercept,
        r_squared: 1.0 - ss_res / syy,
        rmse: (ss_res / res.len() as f64).sqrt(),
        mae: res.iter().map(|e| e.abs()).sum::<f64>() / res.len() as f64,
    })
}

/// Correlation statistics for precomputed distance pairs.
pub fn correlation_report(pairs: Vec<DistancePair>) -> Result<CorrelationReport> {
    let dl: Vec<f64> = pairs.iter().map(|p| p.d_latent).collect();
    let db: Vec<f64> = pairs.iter().map(|p| p.d_bures).collect();
    let r = pearson(&dl, &db)?;
    let fit = linear_fit(&db, &dl)?;
    Ok(CorrelationReport {
        n_pairs: pairs.len(),
        pearson_r: r,
        pearson_p: pearson_p_value(r, pairs.len()),
        spearman_rho: spearman(&dl, &db)?,
        r_squared: fit.r_squared,
        slope: fit.slope,
        intercept: fit.intercept,
        rmse: fit.rmse,
        mae: fit.mae,
        pairs,
    })
}

/// Samples `n_pairs` distinct pairs and compares Euclidean latent distance
/// with the Bures angle of the matching states.
pub fn geodesic_correlation(
    latents: &[Vec<f64>],
    rhos: &[DensityMatrix],
    n_pairs: usize,
    rng: &mut Rng,
) -> Result<CorrelationReport> {
    if latents.len() != rhos.len() {
        return Err(Error::DimensionMismatch {
            expected: latents.len(),
            got: rhos.len(),
        });
    }
    if latents.len() < 2 || n_pairs < 2 {
        return Err(Error::InvalidArgument(
            "need at least two states and two pairs".into(),
        ));
    }
    let pairs = rng::distinct_pairs(rng, latents.len(), n_pairs)
        .into_iter()
        .map(|(i, j)| {
            Ok(DistancePair {
                i,
                j,
                d_latent: sq_dist(&latents[i], &latents[j]).sqrt(),
                d_bures: bures_angle(&rhos[i], &rhos[j])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    correlation_report(pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdBand {
    Strong,
    Moderate,
    Weak,
}

/// r > 0.8 is Strong, 0.6 < r ≤ 0.8 Moderate, anything else Weak.
pub fn classify_threshold(r: f64) -> ThresholdBand {
    if r > 0.8 {
        ThresholdBand::Strong
    } else if r > 0.6 {
        ThresholdBand::Moderate
    } else {
        ThresholdBand::Weak
    }
}

impl std::fmt::Display for ThresholdBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ThresholdBand::Strong => "strong",
            ThresholdBand::Moderate => "moderate",
            ThresholdBand::Weak => "weak",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBin {
    pub label: String,
    pub latent_lo: f64,
    /// `None` for the open-ended last bin.
    pub latent_hi: Option<f64>,
    pub count: usize,
    pub mean_bures: Option<f64>,
    pub mean_fidelity: Option<f64>,
}

const BINS: [(f64, Option<f64>, &str); 5] = [
    (0.0, Some(0.3), "Nearly identical"),
    (0.3, Some(0.6), "Highly similar"),
    (0.6, Some(0.9), "Moderately similar"),
    (0.9, Some(1.2), "Distinguishable"),
    (1.2, None, "Highly distinguishable"),
];

/// Groups pairs by latent distance into five fixed ranges and reports the
/// mean Bures angle and mean fidelity `cos²(d_B)` of each.
pub fn distance_fidelity_table(pairs: &[DistancePair]) -> Vec<DistanceBin> {
    BINS.iter()
        .map(|&(lo, hi, label)| {
            let members: Vec<&DistancePair> = pairs
                .iter()
                .filter(|p| p.d_latent >= lo && hi.is_none_or(|h| p.d_latent < h))
                .collect();
            let n = members.len();
            let avg = |f: &dyn Fn(&DistancePair) -> f64| {
                (n > 0).then(|| members.iter().map(|p| f(p)).sum::<f64>() / n as f64)
            };
            DistanceBin {
                label: label.to_string(),
                latent_lo: lo,
                latent_hi: hi,
                count: n,
                mean_bures: avg(&|p| p.d_bures),
                mean_fidelity: avg(&|p| p.d_bures.cos().powi(2)),
            }
        })
        .collect()
}
