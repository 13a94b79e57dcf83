//! Loss functions and the prediction contract all learners satisfy.

use crate::dataset::{Dataset, Label, TaskKind};
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    ZeroOne,
    SquaredError,
}

impl LossKind {
    /// The natural loss for a task: zero-one for classification,
    /// squared error for regression.
    pub fn for_task(task: TaskKind) -> LossKind {
        match task {
            TaskKind::Classification => LossKind::ZeroOne,
            TaskKind::Regression => LossKind::SquaredError,
        }
    }

    pub fn task(&self) -> TaskKind {
        match self {
            LossKind::ZeroOne => TaskKind::Classification,
            LossKind::SquaredError => TaskKind::Regression,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::ZeroOne => "zero-one",
            LossKind::SquaredError => "squared-error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Prediction {
    Class(usize),
    Value(f64),
}

/// Anything that maps a feature vector to a prediction. Implementations must
/// be deterministic: same model, same features, same output.
pub trait Predictor {
    fn predict(&self, features: &[f64]) -> Prediction;
}

/// Per-example loss; errors when the prediction, label and loss kind do not
/// agree on a task.
pub fn example_loss(prediction: &Prediction, label: &Label, loss: LossKind) -> Result<f64> {
    match (loss, prediction, label) {
        (LossKind::ZeroOne, Prediction::Class(p), Label::Class(y)) => {
            Ok(if p == y { 0.0 } else { 1.0 })
        }
        (LossKind::SquaredError, Prediction::Value(v), Label::Target(t)) => {
            let r = v - t;
            Ok(r * r)
        }
        _ => Err(Error::contract(
            "loss kind incompatible with the prediction or label kind",
        )),
    }
}

/// Mean per-example loss of a model over a dataset.
///
/// The sum is pairwise over the dataset order, so the value is a pure
/// function of (model, data) regardless of the caller's threading.
pub fn empirical_loss<P: Predictor + ?Sized>(
    model: &P,
    data: &Dataset,
    loss: LossKind,
) -> Result<f64> {
    if loss.task() != data.task() {
        return Err(Error::contract(format!(
            "loss {} does not apply to this task kind",
            loss.as_str()
        )));
    }
    let mut values = Vec::with_capacity(data.len());
    for ex in data.examples() {
        values.push(example_loss(&model.predict(&ex.features), &ex.label, loss)?);
    }
    Ok(pairwise_sum(&values) / values.len() as f64)
}
