use crate::error::{Error, Result};

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices and distances of the `k` nearest other points of every point,
/// nearest first. Exact brute force; ties go to the lower index.
pub fn knn(points: &[Vec<f64>], k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    check_points(points)?;
    if k == 0 || k >= points.len() {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k < N, got k = {k}, N = {}",
            points.len()
        )));
    }
    let mut out = Vec::with_capacity(points.len());
    let mut row: Vec<(f64, usize)> = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        row.clear();
        row.extend(
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(j, q)| (sq_dist(p, q), j)),
        );
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        row.select_nth_unstable_by(k - 1, cmp);
        let mut nearest = row[..k].to_vec();
        nearest.sort_by(cmp);
        out.push(nearest.into_iter().map(|(d, j)| (j, d.sqrt())).collect());
    }
    Ok(out)
}

pub(crate) fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("no points".into()));
    };
    let dim = first.len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_neighbors_with_ties() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let nn = knn(&pts, 2).unwrap();
        assert_eq!(nn[2], vec![(1, 1.0), (3, 1.0)]);
        assert_eq!(nn[0], vec![(1, 1.0), (2, 2.0)]);
        assert!(knn(&pts, 5).is_err());
        assert!(knn(&pts, 0).is_err());
    }
}
