//! Logistic-loss SGD: multinomial softmax, zero initialization, constant
//! learning rate. The batch-sample procedure feeds it a whole schedule;
//! plain fits run epochs over shuffled training data.

use crate::dataset::{Dataset, Label, Split, TaskKind};
use crate::error::{Error, Result};
use crate::loss::{Prediction, Predictor};
use crate::rng::Seed;
use crate::sampling::{BatchSchedule, BatchSource};

/// class_count rows of dim+1 weights; the last column is the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxModel {
    weights: Vec<Vec<f64>>,
    class_count: usize,
}

impl SoftmaxModel {
    fn zeros(class_count: usize, dim: usize) -> Self {
        SoftmaxModel {
            weights: vec![vec![0.0; dim + 1]; class_count],
            class_count,
        }
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    fn scores(&self, features: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| {
                let mut s = row[features.len()];
                for (w, x) in row.iter().zip(features) {
                    s += w * x;
                }
                s
            })
            .collect()
    }

    /// One mean-gradient step over the given examples.
    fn step(&mut self, batch: &[(&[f64], usize)], lr: f64) {
        let dim = self.weights[0].len() - 1;
        let scale = lr / batch.len() as f64;
        for &(features, label) in batch {
            let mut scores = self.scores(features);
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - max).exp();
                total += *s;
            }
            for (c, row) in self.weights.iter_mut().enumerate() {
                let p = scores[c] / total;
                let g = p - if c == label { 1.0 } else { 0.0 };
                for (w, x) in row.iter_mut().zip(features) {
                    *w -= scale * g * x;
                }
                row[dim] -= scale * g;
            }
        }
    }
}

impl Predictor for SoftmaxModel {
    fn predict(&self, features: &[f64]) -> Prediction {
        let scores = self.scores(features);
        let mut best = 0usize;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        Prediction::Class(best)
    }
}

fn batch_refs<'a>(data: &'a Dataset, indices: &[usize]) -> Result<Vec<(&'a [f64], usize)>> {
    let mut out = Vec::with_capacity(indices.len());
    for &i in indices {
        if i >= data.len() {
            return Err(Error::contract(format!(
                "schedule index {i} out of range for a source of {}",
                data.len()
            )));
        }
        let ex = data.example(i);
        match ex.label {
            Label::Class(c) => out.push((ex.features.as_slice(), c)),
            _ => return Err(Error::contract("SGD expects classification data")),
        }
    }
    Ok(out)
}

fn check_lr(lr: f64) -> Result<()> {
    if !lr.is_finite() || lr <= 0.0 {
        return Err(Error::contract("learning rate must be finite and positive"));
    }
    Ok(())
}

/// Consume a batch schedule exactly in order: each batch resolves against
/// its source (train or validation) of the given split. An empty schedule
/// returns the all-zero initialization.
pub fn train_sgd_schedule(split: &Split, schedule: &BatchSchedule, lr: f64) -> Result<SoftmaxModel> {
    check_lr(lr)?;
    if split.train.task() != TaskKind::Classification {
        return Err(Error::contract("SGD expects classification data"));
    }
    let class_count = split.train.class_count().unwrap();
    let mut model = SoftmaxModel::zeros(class_count, split.train.dim());
    for batch in &schedule.batches {
        let source = match batch.source {
            BatchSource::Train => &split.train,
            BatchSource::Validation => &split.validation,
        };
        let refs = batch_refs(source, &batch.indices)?;
        if refs.is_empty() {
            continue;
        }
        model.step(&refs, lr);
    }
    Ok(model)
}

/// Plain fit: `epochs` passes of per-epoch shuffled batches over `data`.
/// Zero epochs returns the all-zero initialization.
pub fn train_sgd_epochs(
    data: &Dataset,
    lr: f64,
    epochs: usize,
    batch_size: usize,
    seed: &Seed,
) -> Result<SoftmaxModel> {
    check_lr(lr)?;
    if data.task() != TaskKind::Classification {
        return Err(Error::contract("SGD expects classification data"));
    }
    if batch_size == 0 {
        return Err(Error::contract("batch size must be at least 1"));
    }
    if batch_size > data.len() {
        return Err(Error::sizing(format!(
            "batch size {batch_size} exceeds the training size {}",
            data.len()
        )));
    }
    let class_count = data.class_count().unwrap();
    let mut model = SoftmaxModel::zeros(class_count, data.dim());
    let mut rng = seed.rng();
    let mut perm: Vec<usize> = (0..data.len()).collect();
    for _ in 0..epochs {
        rng.shuffle(&mut perm);
        for chunk in perm.chunks(batch_size) {
            let refs = batch_refs(data, chunk)?;
            model.step(&refs, lr);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_split, Example};
    use crate::loss::{empirical_loss, LossKind};
    use crate::sampling::batch_schedule;

    fn two_class_line(count: usize) -> Dataset {
        // x < 0 -> class 0, x > 0 -> class 1, margin 0.5
        let examples = (0..count)
            .map(|i| {
                let offset = 0.25 + (i / 2) as f64 * 0.1;
                if i % 2 == 0 {
                    Example::class(vec![-offset], 0)
                } else {
                    Example::class(vec![offset], 1)
                }
            })
            .collect();
        Dataset::classification(examples, 2).unwrap()
    }

    #[test]
    fn zero_epochs_is_zero_weights() {
        let data = two_class_line(8);
        let model = train_sgd_epochs(&data, 0.1, 0, 4, &Seed::new(1)).unwrap();
        assert!(model
            .weights()
            .iter()
            .all(|row| row.iter().all(|&w| w == 0.0)));
        // all-zero scores tie; the tie-break picks class 0
        assert_eq!(model.predict(&[1.0]), Prediction::Class(0));
    }

    #[test]
    fn empty_schedule_is_zero_weights() {
        let data = two_class_line(12);
        let split = build_split(&data, 8, 4, 0, &Seed::new(2)).unwrap();
        let schedule = batch_schedule(&split, 0.5, 2, 0, &Seed::new(3)).unwrap();
        let model = train_sgd_schedule(&split, &schedule, 0.1).unwrap();
        assert!(model
            .weights()
            .iter()
            .all(|row| row.iter().all(|&w| w == 0.0)));
    }

    #[test]
    fn separable_data_reaches_full_accuracy() {
        let data = two_class_line(16);
        let model = train_sgd_epochs(&data, 0.5, 300, 4, &Seed::new(4)).unwrap();
        let loss = empirical_loss(&model, &data, LossKind::ZeroOne).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let data = two_class_line(16);
        let a = train_sgd_epochs(&data, 0.3, 20, 4, &Seed::new(9)).unwrap();
        let b = train_sgd_epochs(&data, 0.3, 20, 4, &Seed::new(9)).unwrap();
        assert_eq!(a, b);

        let split = build_split(&data, 10, 6, 0, &Seed::new(5)).unwrap();
        let schedule = batch_schedule(&split, 0.4, 3, 50, &Seed::new(6)).unwrap();
        let c = train_sgd_schedule(&split, &schedule, 0.3).unwrap();
        let d = train_sgd_schedule(&split, &schedule, 0.3).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn schedule_source_affects_the_fit() {
        let data = two_class_line(16);
        let split = build_split(&data, 10, 6, 0, &Seed::new(5)).unwrap();
        let all_train = batch_schedule(&split, 0.0, 3, 40, &Seed::new(6)).unwrap();
        let all_val = batch_schedule(&split, 1.0, 3, 40, &Seed::new(6)).unwrap();
        let a = train_sgd_schedule(&split, &all_train, 0.3).unwrap();
        let b = train_sgd_schedule(&split, &all_val, 0.3).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn bad_hyperparameters_rejected() {
        let data = two_class_line(8);
        assert!(train_sgd_epochs(&data, 0.0, 1, 2, &Seed::new(1)).is_err());
        assert!(train_sgd_epochs(&data, 0.1, 1, 0, &Seed::new(1)).is_err());
        assert!(train_sgd_epochs(&data, 0.1, 1, 9, &Seed::new(1)).is_err());
    }

    #[test]
    fn multiclass_softmax_learns_three_blobs() {
        let data = crate::synth::gen_blobs(3, 2, 20, 6.0, &Seed::new(11)).unwrap();
        let model = train_sgd_epochs(&data, 0.5, 100, 10, &Seed::new(12)).unwrap();
        let loss = empirical_loss(&model, &data, LossKind::ZeroOne).unwrap();
        assert!(loss <= 0.05, "training loss {loss}");
    }
}
