//! Monte Carlo estimators for the stability quantities and the bound
//! arithmetic they feed.
//!
//! Each estimator derives an independent seed per trial, so trials can run
//! on any number of workers; values are reduced in trial order with pairwise
//! summation, making every reported mean and standard error bit-stable.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::learners::Algorithm;
use crate::loss::{empirical_loss, example_loss, LossKind, Predictor};
use crate::rng::Seed;
use crate::stats::mean_std_error;
use crate::synth::Generator;

/// Fresh-draw size approximating the population loss in gap checks.
pub const FRESH_TEST_DRAW: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// Replace-one stability, absolute loss change (epsilon-1).
    Oaros,
    /// Validation stability, signed loss change.
    Oavs,
    /// Train-loss drop when one fresh example is added (epsilon-2).
    ErmGap,
    /// Population-minus-train loss gap.
    GenGap,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::Oaros => "oaros-eps1",
            Quantity::Oavs => "oavs",
            Quantity::ErmGap => "erm-gap-eps2",
            Quantity::GenGap => "gen-gap",
        }
    }

    pub fn parse(s: &str) -> Option<Quantity> {
        match s {
            "oaros-eps1" => Some(Quantity::Oaros),
            "oavs" => Some(Quantity::Oavs),
            "erm-gap-eps2" => Some(Quantity::ErmGap),
            "gen-gap" => Some(Quantity::GenGap),
            _ => None,
        }
    }
}

/// Monte Carlo summary of one stability quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub quantity: Quantity,
}

impl StabilityEstimate {
    fn from_values(quantity: Quantity, values: &[f64]) -> Self {
        let (mean, std_error) = mean_std_error(values);
        StabilityEstimate {
            mean,
            std_error,
            trials: values.len(),
            quantity,
        }
    }
}

fn check_estimator_inputs<A: Algorithm, G: Generator + ?Sized>(
    algo: &A,
    gen: &G,
    trials: usize,
) -> Result<LossKind> {
    if trials < 2 {
        return Err(Error::contract("estimators need at least 2 trials"));
    }
    if algo.task() != gen.task() {
        return Err(Error::contract(
            "learner task kind does not match the generator",
        ));
    }
    Ok(LossKind::for_task(gen.task()))
}

fn run_trials<F>(trials: usize, seed: &Seed, mode: ExecMode, trial: F) -> Result<Vec<f64>>
where
    F: Fn(&Seed) -> Result<f64> + Sync,
{
    let results = map_indexed(mode, trials, |i| {
        trial(&seed.derive("trial", i as u64)).map_err(|e| e.in_trial(i))
    });
    // scanning in trial order makes the reported error deterministic
    let mut values = Vec::with_capacity(trials);
    for r in results {
        values.push(r?);
    }
    Ok(values)
}

/// Replace-one stability: draw a training set, replace one uniformly chosen
/// point with a fresh draw, and record the absolute loss change on the
/// replaced point. Reported with mean and standard error over trials.
pub fn estimate_oaros<A: Algorithm, G: Generator + ?Sized>(
    algo: &A,
    gen: &G,
    n: usize,
    trials: usize,
    seed: &Seed,
    mode: ExecMode,
) -> Result<StabilityEstimate> {
    let loss = check_estimator_inputs(algo, gen, trials)?;
    if n == 0 {
        return Err(Error::contract("n must be at least 1"));
    }
    let values = run_trials(trials, seed, mode, |ts| {
        let train = gen.sample(n, &ts.derive("train", 0))?;
        let fresh = gen.sample(1, &ts.derive("fresh", 0))?;
        let z_index = ts.derive("pick", 0).rng().next_below(n as u64) as usize;
        let z = train.example(z_index).clone();
        let base = algo.fit(&train, &ts.derive("fit", 0))?;
        let replaced_set = train.with_replaced(z_index, fresh.example(0).clone())?;
        let replaced = algo.fit(&replaced_set, &ts.derive("fit", 1))?;
        let before = example_loss(&base.predict(&z.features), &z.label, loss)?;
        let after = example_loss(&replaced.predict(&z.features), &z.label, loss)?;
        Ok((before - after).abs())
    })?;
    Ok(StabilityEstimate::from_values(Quantity::Oaros, &values))
}

/// Validation stability: draw train and validation sets, pick y and y'
/// uniformly from validation, and record the signed loss change on y when y'
/// joins the training set. Signed by definition; no absolute value.
pub fn estimate_oavs<A: Algorithm, G: Generator + ?Sized>(
    algo: &A,
    gen: &G,
    n: usize,
    m: usize,
    trials: usize,
    seed: &Seed,
    mode: ExecMode,
) -> Result<StabilityEstimate> {
    let loss = check_estimator_inputs(algo, gen, trials)?;
    if n == 0 || m == 0 {
        return Err(Error::contract("n and m must be at least 1"));
    }
    let values = run_trials(trials, seed, mode, |ts| {
        let train = gen.sample(n, &ts.derive("train", 0))?;
        let validation = gen.sample(m, &ts.derive("validation", 0))?;
        let mut pick = ts.derive("pick", 0).rng();
        let y = validation.example(pick.next_below(m as u64) as usize).clone();
        let y_added = validation.example(pick.next_below(m as u64) as usize).clone();
        let base = algo.fit(&train, &ts.derive("fit", 0))?;
        let augmented_set = train.with_appended(y_added)?;
        let augmented = algo.fit(&augmented_set, &ts.derive("fit", 1))?;
        let before = example_loss(&base.predict(&y.features), &y.label, loss)?;
        let after = example_loss(&augmented.predict(&y.features), &y.label, loss)?;
        Ok(before - after)
    })?;
    Ok(StabilityEstimate::from_values(Quantity::Oavs, &values))
}

/// Add-one ERM gap: train-loss of the fit on T minus train-loss of the fit
/// on T plus one fresh example, each on its own training set.
pub fn estimate_erm_gap<A: Algorithm, G: Generator + ?Sized>(
    algo: &A,
    gen: &G,
    n: usize,
    trials: usize,
    seed: &Seed,
    mode: ExecMode,
) -> Result<StabilityEstimate> {
    let loss = check_estimator_inputs(algo, gen, trials)?;
    if n == 0 {
        return Err(Error::contract("n must be at least 1"));
    }
    let values = run_trials(trials, seed, mode, |ts| {
        let train = gen.sample(n, &ts.derive("train", 0))?;
        let fresh = gen.sample(1, &ts.derive("fresh", 0))?;
        let base = algo.fit(&train, &ts.derive("fit", 0))?;
        let extended_set = train.with_appended(fresh.example(0).clone())?;
        let extended = algo.fit(&extended_set, &ts.derive("fit", 1))?;
        let before = empirical_loss(&base, &train, loss)?;
        let after = empirical_loss(&extended, &extended_set, loss)?;
        Ok(before - after)
    })?;
    Ok(StabilityEstimate::from_values(Quantity::ErmGap, &values))
}

/// Outcome of the generalization-bound check: the gap estimate, the
/// stability estimate, and whether gap <= stability within 3 combined
/// standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizationCheck {
    pub gen_gap: StabilityEstimate,
    pub oaros: StabilityEstimate,
    pub holds: bool,
}

/// Estimate the expected population-minus-train gap and the replace-one
/// stability on the same generator, and test the ERM generalization
/// inequality statistically. The population loss is approximated by a fresh
/// draw of [`FRESH_TEST_DRAW`] points per trial. Meaningful for learners
/// that minimize empirical risk; for others the result is informational.
pub fn check_generalization<A: Algorithm, G: Generator + ?Sized>(
    algo: &A,
    gen: &G,
    n: usize,
    trials: usize,
    seed: &Seed,
    mode: ExecMode,
) -> Result<GeneralizationCheck> {
    let loss = check_estimator_inputs(algo, gen, trials)?;
    if n == 0 {
        return Err(Error::contract("n must be at least 1"));
    }
    let gap_seed = seed.derive("gen-gap", 0);
    let values = run_trials(trials, &gap_seed, mode, |ts| {
        let train = gen.sample(n, &ts.derive("train", 0))?;
        let model = algo.fit(&train, &ts.derive("fit", 0))?;
        let population = gen.sample(FRESH_TEST_DRAW, &ts.derive("population", 0))?;
        let on_train = empirical_loss(&model, &train, loss)?;
        let on_population = empirical_loss(&model, &population, loss)?;
        Ok(on_population - on_train)
    })?;
    let gen_gap = StabilityEstimate::from_values(Quantity::GenGap, &values);
    let oaros = estimate_oaros(algo, gen, n, trials, &seed.derive("oaros", 0), mode)?;
    let slack = 3.0 * crate::stats::combined_std_error(&[gen_gap.std_error, oaros.std_error]);
    let holds = gen_gap.mean <= oaros.mean + slack;
    Ok(GeneralizationCheck {
        gen_gap,
        oaros,
        holds,
    })
}

/// Validation-stability rate from its two ingredients: (3 + 1/m) eps1 + eps2.
pub fn theorem1_bound(eps1: f64, eps2: f64, m: usize) -> Result<f64> {
    if eps1 < 0.0 || eps2 < 0.0 {
        return Err(Error::contract("stability rates must be nonnegative"));
    }
    if m == 0 {
        return Err(Error::contract("m must be at least 1"));
    }
    Ok((3.0 + 1.0 / m as f64) * eps1 + eps2)
}

/// Minimum pairwise absolute difference between per-model validation losses.
/// A perturbation below this gap cannot flip the argmin.
pub fn min_selection_gap(validation_losses: &[f64]) -> Result<f64> {
    if validation_losses.len() < 2 {
        return Err(Error::contract("the selection gap needs at least 2 losses"));
    }
    let mut min = f64::INFINITY;
    for (i, a) in validation_losses.iter().enumerate() {
        for b in &validation_losses[i + 1..] {
            min = min.min((a - b).abs());
        }
    }
    Ok(min)
}

/// Markov tail bound: a stability rate eps holds to eps/delta with
/// probability at least 1 - delta.
pub fn markov_confidence_bound(eps: f64, delta: f64) -> Result<f64> {
    if eps < 0.0 {
        return Err(Error::contract("eps must be nonnegative"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::contract("delta must lie in (0, 1]"));
    }
    Ok(eps / delta)
}
