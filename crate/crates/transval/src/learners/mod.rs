//! Four from-scratch learners behind one fit/evaluate contract.

mod knn;
mod polyreg;
mod sgd;
mod svm;

pub use knn::{train_knn, KnnModel};
pub use polyreg::{train_polyreg, PolyModel};
pub use sgd::{train_sgd_epochs, train_sgd_schedule, SoftmaxModel};
pub use svm::{train_svm_rbf, BinaryMachine, SvmModel, KKT_TOLERANCE};

use crate::dataset::{Dataset, Split, TaskKind};
use crate::error::{Error, Result};
use crate::loss::{empirical_loss, LossKind, Prediction, Predictor};
use crate::rng::Seed;
use crate::sampling::BatchSchedule;

/// A learner configuration: which algorithm plus its hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Learner {
    Polyreg {
        degree: usize,
        ridge: f64,
    },
    Knn {
        k: usize,
    },
    SvmRbf {
        gamma: f64,
        c: f64,
    },
    SgdLogistic {
        learning_rate: f64,
        epochs: usize,
        batch_size: usize,
    },
}

impl Learner {
    pub fn task(&self) -> TaskKind {
        match self {
            Learner::Polyreg { .. } => TaskKind::Regression,
            _ => TaskKind::Classification,
        }
    }

    /// Short human-readable identifier for reports.
    pub fn name(&self) -> String {
        match self {
            Learner::Polyreg { degree, ridge } => format!("polyreg(degree={degree}, ridge={ridge})"),
            Learner::Knn { k } => format!("knn(k={k})"),
            Learner::SvmRbf { gamma, c } => format!("svm-rbf(gamma={gamma}, C={c})"),
            Learner::SgdLogistic {
                learning_rate,
                epochs,
                batch_size,
            } => format!("sgd-logistic(lr={learning_rate}, epochs={epochs}, batch={batch_size})"),
        }
    }

    /// Fit on a dataset. The seed only matters for SGD (its per-epoch
    /// shuffles); the other learners are deterministic in the data alone.
    pub fn fit(&self, data: &Dataset, seed: &Seed) -> Result<FittedModel> {
        match *self {
            Learner::Polyreg { degree, ridge } => {
                Ok(FittedModel::Poly(train_polyreg(data, degree, ridge)?))
            }
            Learner::Knn { k } => Ok(FittedModel::Knn(train_knn(data, k)?)),
            Learner::SvmRbf { gamma, c } => Ok(FittedModel::Svm(train_svm_rbf(data, gamma, c)?)),
            Learner::SgdLogistic {
                learning_rate,
                epochs,
                batch_size,
            } => Ok(FittedModel::Softmax(train_sgd_epochs(
                data,
                learning_rate,
                epochs,
                batch_size,
                seed,
            )?)),
        }
    }

    /// Fit by consuming a prepared batch schedule; only the iterative
    /// learner supports this path.
    pub fn fit_batch_schedule(&self, split: &Split, schedule: &BatchSchedule) -> Result<FittedModel> {
        match *self {
            Learner::SgdLogistic { learning_rate, .. } => Ok(FittedModel::Softmax(
                train_sgd_schedule(split, schedule, learning_rate)?,
            )),
            _ => Err(Error::contract(format!(
                "{} cannot train from a batch schedule; batch sampling needs an iterative learner",
                self.name()
            ))),
        }
    }
}

/// Learned state of any learner; predicts through one dispatch point.
#[derive(Clone, Debug, PartialEq)]
pub enum FittedModel {
    Poly(PolyModel),
    Knn(KnnModel),
    Svm(SvmModel),
    Softmax(SoftmaxModel),
}

impl Predictor for FittedModel {
    fn predict(&self, features: &[f64]) -> Prediction {
        match self {
            FittedModel::Poly(m) => m.predict(features),
            FittedModel::Knn(m) => m.predict(features),
            FittedModel::Svm(m) => m.predict(features),
            FittedModel::Softmax(m) => m.predict(features),
        }
    }
}

impl FittedModel {
    pub fn task(&self) -> TaskKind {
        match self {
            FittedModel::Poly(_) => TaskKind::Regression,
            _ => TaskKind::Classification,
        }
    }

    /// KKT residual for SVM models, none otherwise.
    pub fn max_kkt_violation(&self) -> Option<f64> {
        match self {
            FittedModel::Svm(m) => Some(m.max_kkt_violation()),
            _ => None,
        }
    }

    /// Order-sensitive hash of the learned parameters; equal fingerprints on
    /// reruns certify bit-identical training.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        match self {
            FittedModel::Poly(m) => m.coefficients().iter().for_each(|&c| feed(c)),
            FittedModel::Knn(m) => {
                for (x, c) in m.training_points() {
                    x.iter().for_each(|&v| feed(v));
                    feed(*c as f64);
                }
            }
            FittedModel::Svm(m) => {
                for machine in m.machines() {
                    feed(machine.bias());
                    for (v, c) in machine.support_vectors().iter().zip(machine.coefficients()) {
                        feed(*c);
                        v.iter().for_each(|&x| feed(x));
                    }
                }
            }
            FittedModel::Softmax(m) => {
                for row in m.weights() {
                    row.iter().for_each(|&v| feed(v));
                }
            }
        }
        h
    }
}

/// Evaluate a fitted model: mean loss over a dataset.
pub fn evaluate(model: &FittedModel, data: &Dataset, loss: LossKind) -> Result<f64> {
    empirical_loss(model, data, loss)
}

/// The fit contract stability estimators are generic over: anything that
/// turns a dataset and a seed into a predictor. Implemented by [`Learner`];
/// tests implement it for data-independent baselines.
pub trait Algorithm: Sync {
    type Model: Predictor;
    fn fit(&self, data: &Dataset, seed: &Seed) -> Result<Self::Model>;
    fn task(&self) -> TaskKind;
}

impl Algorithm for Learner {
    type Model = FittedModel;

    fn fit(&self, data: &Dataset, seed: &Seed) -> Result<FittedModel> {
        Learner::fit(self, data, seed)
    }

    fn task(&self) -> TaskKind {
        Learner::task(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Example;
    use crate::synth::{gen_blobs, gen_cubic, CubicSpec};

    #[test]
    fn evaluate_matches_empirical_loss() {
        let data = gen_blobs(2, 2, 10, 4.0, &Seed::new(3)).unwrap();
        let model = Learner::Knn { k: 1 }.fit(&data, &Seed::new(0)).unwrap();
        let via_evaluate = evaluate(&model, &data, LossKind::ZeroOne).unwrap();
        let direct = empirical_loss(&model, &data, LossKind::ZeroOne).unwrap();
        assert_eq!(via_evaluate, direct);
        assert_eq!(via_evaluate, 0.0); // 1-NN memorizes distinct points
    }

    #[test]
    fn constant_classifier_on_balanced_data() {
        struct AlwaysZero;
        impl Predictor for AlwaysZero {
            fn predict(&self, _f: &[f64]) -> Prediction {
                Prediction::Class(0)
            }
        }
        let examples = (0..10)
            .map(|i| Example::class(vec![i as f64], i % 2))
            .collect();
        let data = Dataset::classification(examples, 2).unwrap();
        let loss = empirical_loss(&AlwaysZero, &data, LossKind::ZeroOne).unwrap();
        assert_eq!(loss, 0.5);
    }

    #[test]
    fn polyreg_exact_on_heldout_noiseless_cubic() {
        let spec = CubicSpec {
            noise_sigma: 0.0,
            ..CubicSpec::default()
        };
        let train = gen_cubic(&spec, 10, &Seed::new(1)).unwrap();
        let heldout = gen_cubic(&spec, 50, &Seed::new(2)).unwrap();
        let model = Learner::Polyreg {
            degree: 3,
            ridge: 0.0,
        }
        .fit(&train, &Seed::new(0))
        .unwrap();
        let loss = evaluate(&model, &heldout, LossKind::SquaredError).unwrap();
        assert!(loss < 1e-10, "held-out squared loss {loss}");
    }

    #[test]
    fn fingerprints_detect_reruns_and_changes() {
        let data = gen_blobs(2, 2, 12, 3.0, &Seed::new(8)).unwrap();
        let learner = Learner::SgdLogistic {
            learning_rate: 0.2,
            epochs: 5,
            batch_size: 4,
        };
        let a = learner.fit(&data, &Seed::new(1)).unwrap().fingerprint();
        let b = learner.fit(&data, &Seed::new(1)).unwrap().fingerprint();
        let c = learner.fit(&data, &Seed::new(2)).unwrap().fingerprint();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn schedule_fit_rejected_for_batch_learners() {
        let data = gen_blobs(2, 1, 8, 3.0, &Seed::new(2)).unwrap();
        let split = crate::dataset::build_split(&data, 10, 6, 0, &Seed::new(3)).unwrap();
        let schedule = crate::sampling::batch_schedule(&split, 0.5, 2, 4, &Seed::new(4)).unwrap();
        let err = Learner::Knn { k: 1 }
            .fit_batch_schedule(&split, &schedule)
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
