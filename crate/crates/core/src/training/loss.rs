use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{bures_angle, fidelity, DensityMatrix};
use crate::rng::{self, Rng};

/// Pairs with a Bures angle at or below this are excluded from the metric
/// loss.
pub const MIN_BURES_FOR_PAIR: f64 = 1e-6;
/// Added to the Bures angle in the ratio denominator.
pub const RATIO_EPSILON: f64 = 1e-8;

/// One sampled pair of batch members.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub i: usize,
    pub j: usize,
    pub d_latent: f64,
    pub d_bures: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricLoss {
    pub value: f64,
    pub pairs: Vec<PairSample>,
    pub k_valid: usize,
}

impl MetricLoss {
    /// No pair survived the Bures-distance cut.
    pub fn is_degenerate(&self) -> bool {
        self.k_valid == 0
    }
}

/// Mean of `1 − F(ρ_true, ρ_pred)` over the batch.
pub fn recon_loss(pairs: &[(&DensityMatrix, &DensityMatrix)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut total = 0.0;
    for (t, p) in pairs {
        total += 1.0 - fidelity(t, p)?;
    }
    Ok(total / pairs.len() as f64)
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Proportionality penalty `mean_k (d_L/(d_B + ε) − 1)²` over the sampled
/// pairs whose Bures angle exceeds [`MIN_BURES_FOR_PAIR`].
pub fn metric_loss_for_pairs(
    latents: &[Vec<f64>],
    rhos: &[DensityMatrix],
    pairs: &[(usize, usize)],
) -> Result<MetricLoss> {
    if latents.len() != rhos.len() {
        return Err(Error::DimensionMismatch {
            expected: latents.len(),
            got: rhos.len(),
        });
    }
    let mut samples = Vec::with_capacity(pairs.len());
    let mut sum = 0.0;
    let mut k_valid = 0;
    for &(i, j) in pairs {
        let d_latent = euclidean(&latents[i], &latents[j]);
        let d_bures = bures_angle(&rhos[i], &rhos[j])?;
        let valid = d_bures > MIN_BURES_FOR_PAIR;
        if valid {
            sum += (d_latent / (d_bures + RATIO_EPSILON) - 1.0).powi(2);
            k_valid += 1;
        }
        samples.push(PairSample {
            i,
            j,
            d_latent,
            d_bures,
            valid,
        });
    }
    Ok(MetricLoss {
        value: if k_valid == 0 { 0.0 } else { sum / k_valid as f64 },
        pairs: samples,
        k_valid,
    })
}

/// Samples `k` distinct pairs from the batch and evaluates the metric loss.
pub fn metric_loss(
    latents: &[Vec<f64>],
    rhos: &[DensityMatrix],
    k: usize,
    rng: &mut Rng,
) -> Result<MetricLoss> {
    if latents.len() < 2 {
        return Err(Error::InvalidArgument(
            "metric loss needs at least two batch members".into(),
        ));
    }
    let pairs = rng::distinct_pairs(rng, latents.len(), k);
    metric_loss_for_pairs(latents, rhos, &pairs)
}

pub fn total_loss(recon: f64, metric: f64, lambda: f64) -> f64 {
    recon + lambda * metric
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stategen::{make_state, ChannelKind};

    #[test]
    fn recon_examples() {
        let a = DensityMatrix::maximally_mixed(4);
        assert!(recon_loss(&[(&a, &a), (&a, &a)]).unwrap().abs() < 1e-9);

        let p0 = DensityMatrix::basis(4, 0);
        let p1 = DensityMatrix::basis(4, 1);
        let p2 = DensityMatrix::basis(4, 2);
        assert!((recon_loss(&[(&p0, &p1), (&p1, &p2)]).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn recon_is_mean_of_infidelities() {
        let d = |v: [f64; 4]| {
            DensityMatrix::new(crate::qcore::ComplexMatrix::from_real_diagonal(&v)).unwrap()
        };
        let a = d([0.5, 0.5, 0.0, 0.0]);
        let b = d([0.9, 0.1, 0.0, 0.0]);
        let c = d([0.8, 0.2, 0.0, 0.0]);
        let f_ab = fidelity(&a, &b).unwrap();
        let f_ac = fidelity(&a, &c).unwrap();
        let got = recon_loss(&[(&a, &b), (&a, &c)]).unwrap();
        assert!((got - (2.0 - f_ab - f_ac) / 2.0).abs() < 1e-15);
        assert!(recon_loss(&[]).is_err());
    }

    #[test]
    fn recon_with_fidelities_point_nine_and_point_eight() {
        assert!((total_loss(((1.0 - 0.9) + (1.0 - 0.8)) / 2.0, 0.0, 0.06) - 0.15).abs() < 1e-15);
    }

    fn states(n: usize) -> Vec<DensityMatrix> {
        let mut r = crate::rng::stream(12, 0);
        (0..n)
            .map(|_| make_state(ChannelKind::Depolarized, 0.1, &mut r).unwrap())
            .collect()
    }

    #[test]
    fn proportional_latents() {
        let rhos = states(6);
        let pairs: Vec<(usize, usize)> =
            (0..6).flat_map(|i| ((i + 1)..6).map(move |j| (i, j))).collect();
        // Embed on a line so that d_L equals a chosen multiple of d_B for
        // pairs that include point 0.
        let d0: Vec<f64> = (0..6).map(|j| bures_angle(&rhos[0], &rhos[j]).unwrap()).collect();
        for scale in [1.0, 2.0] {
            let mut latents: Vec<Vec<f64>> = d0.iter().map(|d| vec![scale * (d + RATIO_EPSILON)]).collect();
            latents[0] = vec![0.0];
            let only_first: Vec<(usize, usize)> = pairs.iter().copied().filter(|p| p.0 == 0).collect();
            let m = metric_loss_for_pairs(&latents, &rhos, &only_first).unwrap();
            assert_eq!(m.k_valid, 5);
            let want = (scale - 1.0).powi(2);
            assert!((m.value - want).abs() < 1e-12, "{} vs {want}", m.value);
        }
    }

    #[test]
    fn identical_states_are_excluded() {
        let rho = make_state(ChannelKind::Depolarized, 0.2, &mut crate::rng::stream(1, 1)).unwrap();
        let rhos = vec![rho; 5];
        let latents: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let m = metric_loss(&latents, &rhos, 50, &mut crate::rng::stream(0, 0)).unwrap();
        assert!(m.is_degenerate());
        assert_eq!(m.value, 0.0);
        assert_eq!(m.pairs.len(), 10);
        assert!(m.pairs.iter().all(|p| !p.valid && p.d_bures <= MIN_BURES_FOR_PAIR));
    }

    #[test]
    fn total_loss_examples() {
        assert!((total_loss(0.043, 0.018, 0.06) - 0.04408).abs() < 1e-15);
        assert_eq!(total_loss(0.3, 5.0, 0.0), 0.3);
        assert_eq!(total_loss(0.0, 0.0, 0.06), 0.0);
    }

    #[test]
    fn metric_loss_needs_two_members() {
        let rhos = states(1);
        assert!(metric_loss(&[vec![0.0]], &rhos, 5, &mut crate::rng::stream(0, 0)).is_err());
    }
}
