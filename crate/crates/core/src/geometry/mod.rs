//! Diagnostics of a learned latent point cloud: intrinsic dimension, local
//! flatness and agreement between latent and Bures distances.

mod correlation;
mod curvature;
mod dimension;
mod neighbors;

pub use correlation::{
    classify_threshold, correlation_report, distance_fidelity_table, geodesic_correlation,
    linear_fit, pearson, pearson_p_value, spearman, CorrelationReport, DistanceBin, DistancePair,
    LinearFit, ThresholdBand, P_VALUE_FLOOR,
};
pub use curvature::{local_curvature, CurvatureReport};
pub use dimension::{
    dim_report, effective_dimension, mle_dimension, pca_dimension, pca_spectrum, DimReport,
    MleEstimate, DUPLICATE_JITTER,
};
pub use neighbors::knn;
