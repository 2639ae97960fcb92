use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{CsixError, Result};

pub const DEFAULT_K: usize = 5;

/// k-nearest-neighbour vote with Euclidean distance on raw channels.
///
/// Neighbours are ranked by (distance, sample order). A vote tie goes to the
/// tied class whose member appears first in that ranking. Returns a zero-based class.
pub fn knn_predict(train: &Dataset, x: &[f64], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(CsixError::InvalidInput("k must be at least 1".into()));
    }
    if k > train.len() {
        return Err(CsixError::InvalidInput(format!(
            "k = {k} exceeds the {} training samples",
            train.len()
        )));
    }
    if x.len() != train.channels() {
        return Err(CsixError::DimensionMismatch {
            expected: train.channels(),
            got: x.len(),
        });
    }
    let mut ranked: Vec<(f64, usize)> = train
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let d: f64 = s
                .channels
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d, i)
        })
        .collect();
    ranked.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nearest = &mut ranked[..k];
    nearest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut votes = vec![0usize; train.locations()];
    for &(_, i) in nearest.iter() {
        votes[train.samples()[i].class()] += 1;
    }
    let top = *votes.iter().max().expect("at least one class");
    let winner = nearest
        .iter()
        .map(|&(_, i)| train.samples()[i].class())
        .find(|&c| votes[c] == top)
        .expect("a top class appears among the neighbours");
    Ok(winner)
}

pub fn knn_predict_all(train: &Dataset, queries: &Dataset, k: usize) -> Result<Vec<usize>> {
    queries
        .samples()
        .par_iter()
        .map(|s| knn_predict(train, &s.channels, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CsiSample, Split};

    fn ds(rows: &[(usize, [f64; 2])]) -> Dataset {
        let m = rows.iter().map(|r| r.0).max().unwrap();
        let samples = rows
            .iter()
            .map(|(l, c)| CsiSample {
                channels: c.to_vec(),
                location: *l,
                session: 0,
                split: Split::Train,
            })
            .collect();
        Dataset::new(samples, 2, 1, m).unwrap()
    }

    #[test]
    fn one_neighbour_returns_the_exact_match() {
        let d = ds(&[(1, [0.0, 0.0]), (2, [5.0, 5.0]), (3, [9.0, 0.0])]);
        assert_eq!(knn_predict(&d, &[5.0, 5.0], 1).unwrap(), 1);
        assert!(knn_predict(&d, &[5.0, 5.0], 4).is_err());
        assert!(knn_predict(&d, &[5.0, 5.0], 0).is_err());
        assert!(knn_predict(&d, &[5.0], 1).is_err());
    }

    #[test]
    fn vote_tie_goes_to_the_nearest_neighbours_class() {
        // two votes each for classes 1 and 2; class 2 owns the closest point
        let d = ds(&[
            (1, [1.0, 0.0]),
            (1, [3.0, 0.0]),
            (2, [0.5, 0.0]),
            (2, [4.0, 0.0]),
            (3, [50.0, 0.0]),
        ]);
        assert_eq!(knn_predict(&d, &[0.0, 0.0], 4).unwrap(), 1);
    }

    #[test]
    fn distance_ties_use_sample_order() {
        let d = ds(&[(2, [2.0, 0.0]), (1, [0.0, 0.0])]);
        assert_eq!(knn_predict(&d, &[1.0, 0.0], 1).unwrap(), 1);
    }
}
