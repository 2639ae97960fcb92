use crate::error::{CsixError, Result};

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Per-point silhouette values `(d_nearest - d_intra) / max(d_intra, d_nearest)`
/// with Euclidean distance. Members of singleton clusters score 0, as do
/// points whose two distances are both 0.
pub fn silhouette_samples(points: &[[f64; 2]], labels: &[usize]) -> Result<Vec<f64>> {
    if points.len() != labels.len() {
        return Err(CsixError::DimensionMismatch {
            expected: points.len(),
            got: labels.len(),
        });
    }
    let clusters = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; clusters];
    for &l in labels {
        sizes[l] += 1;
    }
    let present = sizes.iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(CsixError::InvalidInput(format!(
            "silhouette needs at least 2 clusters, found {present}"
        )));
    }

    let mut sums = vec![0.0; clusters];
    Ok(points
        .iter()
        .zip(labels)
        .map(|(p, &own)| {
            if sizes[own] == 1 {
                return 0.0;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            for (q, &l) in points.iter().zip(labels) {
                sums[l] += dist(p, q);
            }
            let intra = sums[own] / (sizes[own] - 1) as f64;
            let nearest = (0..clusters)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = intra.max(nearest);
            if denom == 0.0 {
                0.0
            } else {
                (nearest - intra) / denom
            }
        })
        .collect())
}

/// Mean silhouette over all points.
pub fn silhouette(points: &[[f64; 2]], labels: &[usize]) -> Result<f64> {
    let s = silhouette_samples(points, labels)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cluster_fixture() {
        let pts = [[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        let s = silhouette(&pts, &[0, 0, 1, 1]).unwrap();
        let nearest = (10.0 + 101f64.sqrt()) / 2.0;
        assert!((s - (nearest - 1.0) / nearest).abs() < 1e-15);
        assert!((s - 0.900).abs() < 1e-3);

        let swapped = silhouette(&pts, &[0, 1, 0, 1]).unwrap();
        assert!(swapped < 0.0);
    }

    #[test]
    fn degenerate_cases() {
        let same = [[1.0, 1.0]; 4];
        assert_eq!(silhouette(&same, &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(silhouette(&same, &[2, 2, 2, 2]).is_err());
        // singleton cluster members score 0
        let s = silhouette_samples(&[[0.0, 0.0], [0.0, 1.0], [5.0, 5.0]], &[0, 0, 1]).unwrap();
        assert_eq!(s[2], 0.0);
        assert!(s[0] > 0.0);
    }

    #[test]
    fn sparse_labels_are_fine() {
        let pts = [[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        let a = silhouette(&pts, &[0, 0, 1, 1]).unwrap();
        let b = silhouette(&pts, &[3, 3, 7, 7]).unwrap();
        assert_eq!(a, b);
    }
}
