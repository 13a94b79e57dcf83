//! Examples, datasets, and train/validation/test splits.

use crate::error::{Error, Result};
use crate::rng::Seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Classification,
    Regression,
}

/// A label is either a class id (classification) or a real target.
#[derive(Clone, Debug, PartialEq)]
pub enum Label {
    Class(usize),
    Target(f64),
}

/// One example z = (x, y).
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Example {
    pub fn class(features: Vec<f64>, class: usize) -> Self {
        Example {
            features,
            label: Label::Class(class),
        }
    }

    pub fn target(features: Vec<f64>, target: f64) -> Self {
        Example {
            features,
            label: Label::Target(target),
        }
    }
}

/// Immutable ordered collection of examples sharing one task kind and one
/// feature dimension. `class_count` is `Some` exactly for classification.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
    task: TaskKind,
    class_count: Option<usize>,
}

impl Dataset {
    pub fn classification(examples: Vec<Example>, class_count: usize) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::contract(format!(
                "classification needs at least 2 classes, got {class_count}"
            )));
        }
        let ds = Dataset {
            examples,
            task: TaskKind::Classification,
            class_count: Some(class_count),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn regression(examples: Vec<Example>) -> Result<Self> {
        let ds = Dataset {
            examples,
            task: TaskKind::Regression,
            class_count: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        if self.examples.is_empty() {
            return Err(Error::contract("dataset must be nonempty"));
        }
        let dim = self.examples[0].features.len();
        if dim == 0 {
            return Err(Error::contract("feature dimension must be positive"));
        }
        for (i, ex) in self.examples.iter().enumerate() {
            if ex.features.len() != dim {
                return Err(Error::contract(format!(
                    "example {i} has dimension {} but the dataset has {dim}",
                    ex.features.len()
                )));
            }
            if ex.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract(format!("example {i} has a non-finite feature")));
            }
            match (&ex.label, self.task) {
                (Label::Class(c), TaskKind::Classification) => {
                    let k = self.class_count.unwrap();
                    if *c >= k {
                        return Err(Error::contract(format!(
                            "example {i} has class {c} but class count is {k}"
                        )));
                    }
                }
                (Label::Target(t), TaskKind::Regression) => {
                    if !t.is_finite() {
                        return Err(Error::contract(format!("example {i} has a non-finite target")));
                    }
                }
                _ => {
                    return Err(Error::contract(format!(
                        "example {i} label kind does not match the dataset task kind"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.examples[0].features.len()
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn class_count(&self) -> Option<usize> {
        self.class_count
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn example(&self, i: usize) -> &Example {
        &self.examples[i]
    }

    /// New dataset holding the listed examples, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut examples = Vec::with_capacity(indices.len());
        for &i in indices {
            let ex = self
                .examples
                .get(i)
                .ok_or_else(|| Error::sizing(format!("subset index {i} out of range {}", self.len())))?;
            examples.push(ex.clone());
        }
        if examples.is_empty() {
            return Err(Error::contract("subset must be nonempty"));
        }
        Ok(Dataset {
            examples,
            task: self.task,
            class_count: self.class_count,
        })
    }

    /// Concatenation preserving order: self's examples, then other's.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.task != other.task || self.class_count != other.class_count {
            return Err(Error::contract("cannot concatenate datasets of different task kinds"));
        }
        if self.dim() != other.dim() {
            return Err(Error::contract("cannot concatenate datasets of different dimensions"));
        }
        let mut examples = self.examples.clone();
        examples.extend_from_slice(&other.examples);
        Ok(Dataset {
            examples,
            task: self.task,
            class_count: self.class_count,
        })
    }

    /// Copy with one extra example at the end.
    pub fn with_appended(&self, ex: Example) -> Result<Self> {
        let mut examples = self.examples.clone();
        examples.push(ex);
        let ds = Dataset {
            examples,
            task: self.task,
            class_count: self.class_count,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Copy with the example at `index` replaced.
    pub fn with_replaced(&self, index: usize, ex: Example) -> Result<Self> {
        if index >= self.len() {
            return Err(Error::sizing(format!(
                "replace index {index} out of range {}",
                self.len()
            )));
        }
        let mut examples = self.examples.clone();
        examples[index] = ex;
        let ds = Dataset {
            examples,
            task: self.task,
            class_count: self.class_count,
        };
        ds.validate()?;
        Ok(ds)
    }
}

/// Disjoint train / validation / optional test partition of a source dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Option<Dataset>,
}

impl Split {
    pub fn n(&self) -> usize {
        self.train.len()
    }

    pub fn m(&self) -> usize {
        self.validation.len()
    }
}

/// Uniformly shuffled disjoint assignment of `n` train, `m` validation and
/// `test` test examples. Deterministic in the seed.
pub fn build_split(data: &Dataset, n: usize, m: usize, test: usize, seed: &Seed) -> Result<Split> {
    if n == 0 {
        return Err(Error::contract("train size must be at least 1"));
    }
    if m == 0 {
        return Err(Error::contract("validation size must be at least 1"));
    }
    let want = n + m + test;
    if want > data.len() {
        return Err(Error::sizing(format!(
            "split needs {want} examples but the dataset has {}",
            data.len()
        )));
    }
    let mut indices: Vec<usize> = (0..data.len()).collect();
    seed.rng().shuffle(&mut indices);
    let train = data.subset(&indices[..n])?;
    let validation = data.subset(&indices[n..n + m])?;
    let test = if test > 0 {
        Some(data.subset(&indices[n + m..n + m + test])?)
    } else {
        None
    };
    Ok(Split {
        train,
        validation,
        test,
    })
}
