//! Grid selection over a model family, with the diagnostics that say when a
//! selection can be trusted: the minimum loss gap, ordering preservation,
//! test-set bias, and the knee of a score curve.

use crate::dataset::{Dataset, Split, TaskKind};
use crate::error::{Error, Result};
use crate::learners::{evaluate, Learner};
use crate::loss::LossKind;
use crate::rng::Seed;
use crate::sampling::AugmentedSplit;
use crate::stability::min_selection_gap;

/// Anything selection can run against: a training set to fit on, a
/// validation set to rank on, and an optional held-out test set. The
/// augmented view trains on the leaked set while ranking on the full,
/// untouched validation set.
pub trait TrainView {
    fn train_set(&self) -> &Dataset;
    fn validation_set(&self) -> &Dataset;
    fn test_set(&self) -> Option<&Dataset>;
}

impl TrainView for Split {
    fn train_set(&self) -> &Dataset {
        &self.train
    }
    fn validation_set(&self) -> &Dataset {
        &self.validation
    }
    fn test_set(&self) -> Option<&Dataset> {
        self.test.as_ref()
    }
}

impl TrainView for AugmentedSplit {
    fn train_set(&self) -> &Dataset {
        &self.effective_train
    }
    fn validation_set(&self) -> &Dataset {
        &self.base.validation
    }
    fn test_set(&self) -> Option<&Dataset> {
        self.base.test.as_ref()
    }
}

/// Candidate family for selection. Nonempty, single task kind.
#[derive(Clone, Debug)]
pub struct ModelGrid {
    models: Vec<Learner>,
}

impl ModelGrid {
    pub fn new(models: Vec<Learner>) -> Result<Self> {
        let first = match models.first() {
            Some(m) => m.task(),
            None => return Err(Error::contract("model grid must be nonempty")),
        };
        if models.iter().any(|m| m.task() != first) {
            return Err(Error::contract("model grid mixes task kinds"));
        }
        Ok(ModelGrid { models })
    }

    pub fn models(&self) -> &[Learner] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn task(&self) -> TaskKind {
        self.models[0].task()
    }
}

/// Outcome of one selection pass: per-model losses and the argmin.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectionReport {
    pub chosen: usize,
    pub validation_losses: Vec<f64>,
    /// Present when the view carries a test set, in grid order.
    pub test_losses: Option<Vec<f64>>,
    /// Minimum pairwise validation-loss difference; infinite for one model.
    pub min_gap: f64,
    /// Whether the chosen model differs from the test argmin; present only
    /// when test losses are.
    pub bias_flagged: Option<bool>,
}

/// Index of the smallest value, lowest index on ties.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Fit every model in the grid on the view's training set and rank by loss
/// over the full validation set, evaluating on the test set too when one is
/// present. Ties go to the lowest index. Fit seeds are derived per model
/// index, so the result is a pure function of (grid, view, seed).
pub fn select_model<V: TrainView>(
    grid: &ModelGrid,
    view: &V,
    loss: LossKind,
    seed: &Seed,
) -> Result<SelectionReport> {
    if loss.task() != grid.task() {
        return Err(Error::contract("loss kind does not match the grid task"));
    }
    let mut validation_losses = Vec::with_capacity(grid.len());
    let mut test_losses = view.test_set().map(|_| Vec::with_capacity(grid.len()));
    for (i, learner) in grid.models().iter().enumerate() {
        let model = learner
            .fit(view.train_set(), &seed.derive("fit", i as u64))
            .map_err(|e| e.in_model(i))?;
        validation_losses
            .push(evaluate(&model, view.validation_set(), loss).map_err(|e| e.in_model(i))?);
        if let (Some(losses), Some(test)) = (test_losses.as_mut(), view.test_set()) {
            losses.push(evaluate(&model, test, loss).map_err(|e| e.in_model(i))?);
        }
    }
    let chosen = argmin(&validation_losses);
    let min_gap = if grid.len() == 1 {
        f64::INFINITY
    } else {
        min_selection_gap(&validation_losses)?
    };
    let bias_flagged = test_losses.as_ref().map(|t| argmin(t) != chosen);
    Ok(SelectionReport {
        chosen,
        validation_losses,
        test_losses,
        min_gap,
        bias_flagged,
    })
}

/// True iff the two loss lists rank every pair identically, with exact
/// equality counting as its own rank class: a tie in one list must be a tie
/// in the other.
pub fn ordering_preserved(base_losses: &[f64], aug_losses: &[f64]) -> Result<bool> {
    if base_losses.len() != aug_losses.len() {
        return Err(Error::contract("loss lists differ in length"));
    }
    if base_losses.len() < 2 {
        return Err(Error::contract("ordering needs at least 2 entries"));
    }
    for i in 0..base_losses.len() {
        for j in (i + 1)..base_losses.len() {
            let a = (base_losses[i] - base_losses[j]).partial_cmp(&0.0);
            let b = (aug_losses[i] - aug_losses[j]).partial_cmp(&0.0);
            if a != b || a.is_none() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Did ranking on the validation set pick a model the test set disagrees
/// with, and by how much test loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasReport {
    /// True when the validation argmin differs from the test argmin.
    pub flagged: bool,
    /// Test loss of the chosen model minus the best test loss; always >= 0.
    pub magnitude: f64,
}

pub fn selection_bias(report: &SelectionReport) -> Result<BiasReport> {
    let test = report
        .test_losses
        .as_ref()
        .ok_or_else(|| Error::contract("selection bias needs test losses"))?;
    if test.len() != report.validation_losses.len() {
        return Err(Error::contract("test losses do not match the grid size"));
    }
    let test_best = argmin(test);
    Ok(BiasReport {
        flagged: test_best != report.chosen,
        magnitude: test[report.chosen] - test[test_best],
    })
}

/// Knee of a score-versus-p curve: both axes are min-max normalized, and the
/// returned index maximizes the vertical distance of the curve above the
/// chord joining its endpoints. Scores rank higher-is-better; feed negated
/// losses to find the knee of a loss curve. Returns `None` when no point
/// rises above the chord by at least 1e-6 on the normalized scale.
pub fn knee_detect(p_values: &[f64], validation_scores: &[f64]) -> Result<Option<usize>> {
    const MIN_DISTANCE: f64 = 1e-6;
    if p_values.len() != validation_scores.len() {
        return Err(Error::contract("p values and scores differ in length"));
    }
    if p_values.len() < 3 {
        return Err(Error::contract("knee detection needs at least 3 points"));
    }
    if p_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::contract("p values must be strictly increasing"));
    }
    let y_min = validation_scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = validation_scores
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(y_min.is_finite() && y_max.is_finite()) {
        return Err(Error::contract("scores must be finite"));
    }
    let y_range = y_max - y_min;
    if y_range == 0.0 {
        return Ok(None);
    }
    let x_min = p_values[0];
    let x_range = p_values[p_values.len() - 1] - x_min;
    let norm_y = |i: usize| (validation_scores[i] - y_min) / y_range;
    let first = norm_y(0);
    let last = norm_y(p_values.len() - 1);
    let mut best = None;
    let mut best_distance = 0.0;
    for i in 0..p_values.len() {
        let x = (p_values[i] - x_min) / x_range;
        let chord = first + (last - first) * x;
        let distance = norm_y(i) - chord;
        if distance > best_distance {
            best_distance = distance;
            best = Some(i);
        }
    }
    if best_distance < MIN_DISTANCE {
        return Ok(None);
    }
    Ok(best)
}
