//! The two validation-leak procedures and the cross-procedure p equivalence.
//!
//! Both procedures make the validation set "transparent": its examples may
//! flow into training, while model selection still evaluates over the full,
//! untouched validation set.

use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::rng::{Rng, Seed};

/// A split whose training side has been augmented with leaked validation
/// examples. Leaked examples are copied, never moved: `base.validation` is
/// exactly the original validation set.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSplit {
    pub base: Split,
    /// Indices into `base.validation`, ascending.
    pub leaked: Vec<usize>,
    /// `base.train` followed by the leaked validation examples in index order.
    pub effective_train: Dataset,
    /// The probability the augmentation was drawn with.
    pub p: f64,
}

impl AugmentedSplit {
    pub fn leak_count(&self) -> usize {
        self.leaked.len()
    }
}

/// Include each validation example in the training set independently with
/// probability p. p=0 reproduces the base training set exactly; p=1 leaks
/// all of V.
pub fn presample(split: &Split, p: f64, seed: &Seed) -> Result<AugmentedSplit> {
    check_probability(p)?;
    let mut rng = seed.rng();
    let mut leaked = Vec::new();
    for i in 0..split.m() {
        if rng.bernoulli(p) {
            leaked.push(i);
        }
    }
    let effective_train = if leaked.is_empty() {
        split.train.clone()
    } else {
        split.train.concat(&split.validation.subset(&leaked)?)?
    };
    Ok(AugmentedSplit {
        base: split.clone(),
        leaked,
        effective_train,
        p,
    })
}

/// Where one batch's examples come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSource {
    Train,
    Validation,
}

/// One whole-source batch: indices into that source's dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub source: BatchSource,
    pub indices: Vec<usize>,
    pub iteration: usize,
}

/// Per-iteration batch plan for an iterative learner. Each iteration's batch
/// is drawn wholly from V with probability p, otherwise wholly from T.
/// Within a source, batches walk a per-epoch shuffle without repetition; a
/// short batch closes an epoch when the source size is not a multiple of the
/// batch size.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSchedule {
    pub batches: Vec<Batch>,
    pub batch_size: usize,
    pub p: f64,
}

impl BatchSchedule {
    pub fn validation_batches(&self) -> usize {
        self.batches
            .iter()
            .filter(|b| b.source == BatchSource::Validation)
            .count()
    }
}

/// Epoch cursor over one source: hands out permutation chunks, reshuffling
/// when an epoch is exhausted.
struct EpochCursor {
    perm: Vec<usize>,
    pos: usize,
}

impl EpochCursor {
    fn new(len: usize) -> Self {
        EpochCursor {
            perm: (0..len).collect(),
            pos: len, // force a shuffle before the first batch
        }
    }

    fn next_batch(&mut self, batch_size: usize, rng: &mut Rng) -> Vec<usize> {
        if self.pos >= self.perm.len() {
            rng.shuffle(&mut self.perm);
            self.pos = 0;
        }
        let take = batch_size.min(self.perm.len() - self.pos);
        let out = self.perm[self.pos..self.pos + take].to_vec();
        self.pos += take;
        out
    }
}

/// Build the batch plan: `iterations` independent Bernoulli(p) source
/// choices, each filled from that source's epoch cursor.
pub fn batch_schedule(
    split: &Split,
    p: f64,
    batch_size: usize,
    iterations: usize,
    seed: &Seed,
) -> Result<BatchSchedule> {
    check_probability(p)?;
    if batch_size == 0 {
        return Err(Error::contract("batch size must be at least 1"));
    }
    let limit = split.n().min(split.m());
    if batch_size > limit {
        return Err(Error::sizing(format!(
            "batch size {batch_size} exceeds the smaller split side {limit}"
        )));
    }
    let mut rng = seed.rng();
    let mut train_cursor = EpochCursor::new(split.n());
    let mut val_cursor = EpochCursor::new(split.m());
    let mut batches = Vec::with_capacity(iterations);
    for iteration in 0..iterations {
        let (source, cursor) = if rng.bernoulli(p) {
            (BatchSource::Validation, &mut val_cursor)
        } else {
            (BatchSource::Train, &mut train_cursor)
        };
        batches.push(Batch {
            source,
            indices: cursor.next_batch(batch_size, &mut rng),
            iteration,
        });
    }
    Ok(BatchSchedule {
        batches,
        batch_size,
        p,
    })
}

/// Presample probability equivalent to batch-sampling at `p_batch`:
/// (n/m) * p_batch, clamped to [0,1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalentP {
    pub p: f64,
    pub clamped: bool,
}

pub fn equivalent_presample_p(p_batch: f64, n: usize, m: usize) -> Result<EquivalentP> {
    check_probability(p_batch)?;
    if n == 0 || m == 0 {
        return Err(Error::contract("equivalent p needs n >= 1 and m >= 1"));
    }
    let raw = p_batch * n as f64 / m as f64;
    if raw > 1.0 {
        Ok(EquivalentP {
            p: 1.0,
            clamped: true,
        })
    } else {
        Ok(EquivalentP {
            p: raw,
            clamped: false,
        })
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::contract(format!("probability {p} outside [0, 1]")));
    }
    Ok(())
}
