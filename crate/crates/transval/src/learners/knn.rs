//! k-nearest-neighbor classification, standard Euclidean metric.

use crate::dataset::{Dataset, Label, TaskKind};
use crate::error::{Error, Result};
use crate::loss::{Prediction, Predictor};

/// Memorizes the training set. Distance ties resolve to the lower training
/// index, vote ties to the lowest class id, so prediction is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnModel {
    points: Vec<(Vec<f64>, usize)>,
    k: usize,
    class_count: usize,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn training_points(&self) -> &[(Vec<f64>, usize)] {
        &self.points
    }
}

pub fn train_knn(data: &Dataset, k: usize) -> Result<KnnModel> {
    if data.task() != TaskKind::Classification {
        return Err(Error::contract("k-NN expects classification data"));
    }
    if k == 0 {
        return Err(Error::contract("k must be at least 1"));
    }
    if k > data.len() {
        return Err(Error::contract(format!(
            "k = {k} exceeds the training size {}",
            data.len()
        )));
    }
    let points = data
        .examples()
        .iter()
        .map(|ex| {
            let class = match ex.label {
                Label::Class(c) => c,
                _ => unreachable!("classification dataset"),
            };
            (ex.features.clone(), class)
        })
        .collect();
    Ok(KnnModel {
        points,
        k,
        class_count: data.class_count().unwrap(),
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

impl Predictor for KnnModel {
    fn predict(&self, features: &[f64]) -> Prediction {
        // squared distances order identically to Euclidean ones
        let mut order: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, (x, _))| (squared_distance(features, x), i))
            .collect();
        order.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite distances")
                .then(a.1.cmp(&b.1))
        });
        let mut votes = vec![0usize; self.class_count];
        for &(_, i) in order.iter().take(self.k) {
            votes[self.points[i].1] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        Prediction::Class(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Example;

    fn classification(points: &[(Vec<f64>, usize)], classes: usize) -> Dataset {
        Dataset::classification(
            points
                .iter()
                .map(|(x, c)| Example::class(x.clone(), *c))
                .collect(),
            classes,
        )
        .unwrap()
    }

    #[test]
    fn self_neighbor_wins_at_k1() {
        let data = classification(
            &[
                (vec![0.0, 0.0], 0),
                (vec![1.0, 1.0], 1),
                (vec![2.0, 0.0], 0),
            ],
            2,
        );
        let model = train_knn(&data, 1).unwrap();
        for (x, c) in model.training_points().to_vec() {
            assert_eq!(model.predict(&x), Prediction::Class(c));
        }
    }

    #[test]
    fn k3_matches_brute_force_oracle() {
        let points = vec![
            (vec![0.0, 0.0], 0),
            (vec![0.5, 0.1], 0),
            (vec![2.0, 2.0], 1),
            (vec![2.2, 1.9], 1),
            (vec![1.0, 1.0], 1),
        ];
        let data = classification(&points, 2);
        let model = train_knn(&data, 3).unwrap();
        for query in [
            vec![0.2, 0.2],
            vec![1.9, 1.9],
            vec![1.0, 0.9],
            vec![0.9, 1.1],
        ] {
            // oracle: repeatedly extract the unseen point with minimal
            // Euclidean distance (lower index first), then majority vote
            let mut remaining: Vec<usize> = (0..points.len()).collect();
            let mut picked = Vec::new();
            for _ in 0..3 {
                let mut best = remaining[0];
                for &i in &remaining {
                    let di = squared_distance(&query, &points[i].0);
                    let db = squared_distance(&query, &points[best].0);
                    if di < db || (di == db && i < best) {
                        best = i;
                    }
                }
                picked.push(best);
                remaining.retain(|&i| i != best);
            }
            let ones = picked.iter().filter(|&&i| points[i].1 == 1).count();
            let expected = if ones > picked.len() - ones { 1 } else { 0 };
            assert_eq!(model.predict(&query), Prediction::Class(expected));
        }
    }

    #[test]
    fn vote_tie_takes_lowest_class() {
        // k=2, one neighbor of each class
        let data = classification(&[(vec![-1.0], 1), (vec![1.0], 0)], 2);
        let model = train_knn(&data, 2).unwrap();
        assert_eq!(model.predict(&[0.0]), Prediction::Class(0));
    }

    #[test]
    fn distance_tie_takes_lower_index() {
        // both points at distance 1 from the query; index 0 has class 1
        let data = classification(&[(vec![-1.0], 1), (vec![1.0], 0)], 2);
        let model = train_knn(&data, 1).unwrap();
        assert_eq!(model.predict(&[0.0]), Prediction::Class(1));
    }

    #[test]
    fn k_beyond_size_rejected() {
        let data = classification(&[(vec![0.0], 0), (vec![1.0], 1)], 2);
        assert!(matches!(train_knn(&data, 3), Err(Error::Contract(_))));
    }

    #[test]
    fn k1_interpolates_distinct_points() {
        let data = classification(
            &[
                (vec![0.0], 0),
                (vec![0.3], 1),
                (vec![0.9], 0),
                (vec![1.4], 1),
            ],
            2,
        );
        let model = train_knn(&data, 1).unwrap();
        let loss =
            crate::loss::empirical_loss(&model, &data, crate::loss::LossKind::ZeroOne).unwrap();
        assert_eq!(loss, 0.0);
    }
}
