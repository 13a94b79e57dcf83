//! Experiment driver: a full (p, model, replication) grid under either
//! leakage procedure.
//!
//! Seeds form a tree keyed by coordinates: replication seeds hang off the
//! master seed, p-level seeds off the replication, and fit seeds off the p
//! level. The leak draw is shared by every model at the same (p,
//! replication), so the grid is paired: models see identical leaked sets.

use crate::dataset::{build_split, Split};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::learners::{evaluate, Learner};
use crate::loss::LossKind;
use crate::rng::Seed;
use crate::sampling::{batch_schedule, presample};
use crate::selection::{ModelGrid, TrainView};
use crate::synth::{apply_bias, BiasSpec, Generator};

/// Per-replication dataset sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSizes {
    pub n: usize,
    pub m: usize,
    pub test: Option<usize>,
}

impl SplitSizes {
    fn total(&self) -> Result<usize> {
        self.n
            .checked_add(self.m)
            .and_then(|t| t.checked_add(self.test.unwrap_or(0)))
            .ok_or_else(|| Error::sizing("split sizes overflow"))
    }
}

/// Distribution shifts applied to the held-out sets after splitting.
#[derive(Clone, Debug)]
pub struct BiasPair {
    pub validation: BiasSpec,
    pub test: BiasSpec,
}

/// Everything a sweep needs except the data source and the seed.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    /// Leak probabilities, one grid column set per value.
    pub p_values: Vec<f64>,
    pub models: ModelGrid,
    pub replications: usize,
    pub sizes: SplitSizes,
    pub loss: LossKind,
    /// When present, validation and test sets are shifted after splitting.
    pub bias: Option<BiasPair>,
}

/// How validation examples reach the training side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Procedure {
    /// Leak a subset of V into the training set once, before fitting.
    Presample,
    /// Route whole validation batches into an iterative learner's stream.
    BatchSample,
}

impl Procedure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Procedure::Presample => "presample",
            Procedure::BatchSample => "batch-sample",
        }
    }

    pub fn parse(s: &str) -> Option<Procedure> {
        match s {
            "presample" => Some(Procedure::Presample),
            "batch-sample" => Some(Procedure::BatchSample),
            _ => None,
        }
    }
}

/// What a successful cell measured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellResult {
    /// Loss over the full, untouched validation set.
    pub val_loss: f64,
    /// Loss over the test set when the sweep sizes include one.
    pub test_loss: Option<f64>,
    /// Presample: leaked examples. Batch-sample: validation batches taken.
    pub leak_count: usize,
}

/// One (p, model, replication) grid entry. Failures stay local to the cell.
#[derive(Clone, Debug)]
pub struct GridCell {
    pub p_index: usize,
    pub model_index: usize,
    pub replication: usize,
    pub result: Result<CellResult>,
    /// Path of the fit seed that produced (or would produce) this cell.
    pub seed_path: String,
}

/// Filled sweep grid. Cells are laid out in (p, model, replication)
/// lexicographic order regardless of execution order.
#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub p_values: Vec<f64>,
    pub model_count: usize,
    pub replications: usize,
    pub cells: Vec<GridCell>,
    /// Validation argmin per (p, replication); none when any model in the
    /// pair failed.
    pub chosen: Vec<Option<usize>>,
}

impl SweepGrid {
    pub fn cell_index(&self, p_index: usize, model_index: usize, replication: usize) -> usize {
        (p_index * self.model_count + model_index) * self.replications + replication
    }

    pub fn cell(&self, p_index: usize, model_index: usize, replication: usize) -> &GridCell {
        &self.cells[self.cell_index(p_index, model_index, replication)]
    }

    pub fn chosen_for(&self, p_index: usize, replication: usize) -> Option<usize> {
        self.chosen[p_index * self.replications + replication]
    }
}

fn validate_spec(spec: &SweepSpec) -> Result<()> {
    if spec.p_values.is_empty() {
        return Err(Error::contract("p grid must be nonempty"));
    }
    if let Some(bad) = spec
        .p_values
        .iter()
        .find(|p| !(p.is_finite() && (0.0..=1.0).contains(*p)))
    {
        return Err(Error::contract(format!(
            "p value {bad} outside [0, 1]"
        )));
    }
    if spec.replications == 0 {
        return Err(Error::contract("replications must be at least 1"));
    }
    if spec.loss.task() != spec.models.task() {
        return Err(Error::contract("loss kind does not match the model grid"));
    }
    spec.sizes.total().map(|_| ())
}

/// Build one replication's split: draw the pooled sample, split it, and
/// apply any held-out-set bias. Pure function of (source, sizes, bias,
/// replication seed).
pub fn replication_split<G: Generator + ?Sized>(
    source: &G,
    sizes: &SplitSizes,
    bias: Option<&BiasPair>,
    rep_seed: &Seed,
) -> Result<Split> {
    let data = source.sample(sizes.total()?, &rep_seed.derive("data", 0))?;
    let mut split = build_split(
        &data,
        sizes.n,
        sizes.m,
        sizes.test.unwrap_or(0),
        &rep_seed.derive("split", 0),
    )?;
    if let Some(pair) = bias {
        split.validation = apply_bias(
            &split.validation,
            &pair.validation,
            &rep_seed.derive("bias", 0),
        )?;
        if let Some(test) = split.test.take() {
            split.test = Some(apply_bias(&test, &pair.test, &rep_seed.derive("bias", 1))?);
        }
    }
    Ok(split)
}

fn measure_cell(
    learner: &Learner,
    split: &Split,
    p: f64,
    procedure: Procedure,
    loss: LossKind,
    p_seed: &Seed,
    model_index: usize,
) -> Result<CellResult> {
    let leak_seed = p_seed.derive("leak", 0);
    let (model, leak_count) = match procedure {
        Procedure::Presample => {
            let aug = presample(split, p, &leak_seed)?;
            let model = learner.fit(
                aug.train_set(),
                &p_seed.derive("fit", model_index as u64),
            )?;
            (model, aug.leak_count())
        }
        Procedure::BatchSample => match learner {
            Learner::SgdLogistic {
                epochs, batch_size, ..
            } => {
                let iterations = epochs
                    .checked_mul(split.n().div_ceil(*batch_size))
                    .ok_or_else(|| Error::sizing("iteration count overflows"))?;
                let schedule = batch_schedule(split, p, *batch_size, iterations, &leak_seed)?;
                let model = learner.fit_batch_schedule(split, &schedule)?;
                (model, schedule.validation_batches())
            }
            other => {
                return Err(Error::contract(format!(
                    "{} cannot train under batch sampling",
                    other.name()
                )))
            }
        },
    };
    let val_loss = evaluate(&model, &split.validation, loss)?;
    let test_loss = match &split.test {
        Some(test) => Some(evaluate(&model, test, loss)?),
        None => None,
    };
    Ok(CellResult {
        val_loss,
        test_loss,
        leak_count,
    })
}

fn run_pair<G: Generator + ?Sized>(
    spec: &SweepSpec,
    procedure: Procedure,
    source: &G,
    seed: &Seed,
    p_index: usize,
    replication: usize,
) -> (Vec<GridCell>, Option<usize>) {
    let rep_seed = seed.derive("rep", replication as u64);
    let p_seed = rep_seed.derive("p", p_index as u64);
    let p = spec.p_values[p_index];
    let split = replication_split(source, &spec.sizes, spec.bias.as_ref(), &rep_seed);
    let cells: Vec<GridCell> = (0..spec.models.len())
        .map(|mi| {
            let result = match &split {
                Ok(split) => {
                    measure_cell(&spec.models.models()[mi], split, p, procedure, spec.loss, &p_seed, mi)
                }
                Err(e) => Err(e.clone()),
            }
            .map_err(|e| e.in_cell(p_index, mi, replication));
            GridCell {
                p_index,
                model_index: mi,
                replication,
                result,
                seed_path: p_seed.derive("fit", mi as u64).path_string(),
            }
        })
        .collect();
    let chosen = if cells.iter().all(|c| c.result.is_ok()) {
        let mut best = 0;
        for (i, cell) in cells.iter().enumerate().skip(1) {
            let val = cell.result.as_ref().unwrap().val_loss;
            if val < cells[best].result.as_ref().unwrap().val_loss {
                best = i;
            }
        }
        Some(best)
    } else {
        None
    };
    (cells, chosen)
}

/// Fill the whole grid. Per-cell failures are recorded in their cells and
/// the run continues; only a malformed spec aborts. Output is identical for
/// every execution mode.
pub fn run_sweep<G: Generator + ?Sized>(
    spec: &SweepSpec,
    procedure: Procedure,
    source: &G,
    seed: &Seed,
    mode: ExecMode,
) -> Result<SweepGrid> {
    validate_spec(spec)?;
    let p_count = spec.p_values.len();
    let k = spec.models.len();
    let reps = spec.replications;
    let pairs = map_indexed(mode, p_count * reps, |u| {
        run_pair(spec, procedure, source, seed, u / reps, u % reps)
    });
    let mut grid = SweepGrid {
        p_values: spec.p_values.clone(),
        model_count: k,
        replications: reps,
        cells: Vec::with_capacity(p_count * k * reps),
        chosen: vec![None; p_count * reps],
    };
    // scatter into lexicographic (p, model, replication) order
    let mut slots: Vec<Option<GridCell>> = vec![None; p_count * k * reps];
    for (u, (cells, chosen)) in pairs.into_iter().enumerate() {
        let (pi, rep) = (u / reps, u % reps);
        grid.chosen[pi * reps + rep] = chosen;
        for cell in cells {
            let idx = (pi * k + cell.model_index) * reps + rep;
            slots[idx] = Some(cell);
        }
    }
    grid.cells = slots.into_iter().map(|s| s.expect("cell filled")).collect();
    Ok(grid)
}

/// Recompute a single cell, bit-identical to its slot in the full sweep.
/// Rebuilds the replication context, so it costs one pair, not one grid.
pub fn run_cell<G: Generator + ?Sized>(
    spec: &SweepSpec,
    procedure: Procedure,
    source: &G,
    seed: &Seed,
    p_index: usize,
    model_index: usize,
    replication: usize,
) -> Result<GridCell> {
    validate_spec(spec)?;
    if p_index >= spec.p_values.len()
        || model_index >= spec.models.len()
        || replication >= spec.replications
    {
        return Err(Error::contract("cell coordinates outside the grid"));
    }
    let (mut cells, _) = run_pair(spec, procedure, source, seed, p_index, replication);
    Ok(cells.swap_remove(model_index))
}
