use crate::error::{Error, Result};

/// `Σ_l (N_l/N) v_l`, summed in client order, then clamped elementwise to
/// the `[min_l v_l, max_l v_l]` envelope so rounding can never leave the
/// convex hull (and identical inputs come back exactly).
pub fn weighted_average(vectors: &[&[f64]], counts: &[usize]) -> Result<Vec<f64>> {
    if vectors.is_empty() || vectors.len() != counts.len() {
        return Err(Error::MissingClient {
            expected: counts.len().max(1),
            actual: vectors.len(),
        });
    }
    let len = vectors[0].len();
    if let Some(v) = vectors.iter().find(|v| v.len() != len) {
        return Err(Error::dims("weighted_average", len, v.len()));
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyDataset);
    }
    let weights = aggregation_weights(counts);
    let mut out = vec![0.0; len];
    for (v, &w) in vectors.iter().zip(&weights) {
        for (o, &x) in out.iter_mut().zip(v.iter()) {
            *o += w * x;
        }
    }
    for (j, o) in out.iter_mut().enumerate() {
        let (lo, hi) = vectors
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[j]), hi.max(v[j])));
        *o = o.clamp(lo, hi);
    }
    Ok(out)
}

/// `N_l / N` for each client.
pub fn aggregation_weights(counts: &[usize]) -> Vec<f64> {
    let total: usize = counts.iter().sum();
    counts.iter().map(|&n| n as f64 / total as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        assert_eq!(weighted_average(&[&[1.0], &[5.0]], &[3, 1]).unwrap(), vec![2.0]);
        assert_eq!(weighted_average(&[&[0.0], &[4.0]], &[1, 3]).unwrap(), vec![3.0]);
        assert_eq!(weighted_average(&[&[1.5, -2.0], &[-1.5, 2.0]], &[7, 7]).unwrap(), vec![0.0, 0.0]);
        let v = [0.1, 0.2, 0.3];
        assert_eq!(weighted_average(&[&v], &[9]).unwrap(), v.to_vec());
        assert_eq!(weighted_average(&[&v, &v, &v], &[1, 2, 4]).unwrap(), v.to_vec());
    }

    #[test]
    fn errors() {
        assert!(matches!(weighted_average(&[], &[]), Err(Error::MissingClient { .. })));
        assert!(matches!(weighted_average(&[&[1.0]], &[1, 2]), Err(Error::MissingClient { .. })));
        assert!(matches!(
            weighted_average(&[&[1.0], &[1.0, 2.0]], &[1, 2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn weights_sum_to_one() {
        let w = aggregation_weights(&[3, 7, 11, 13]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}
