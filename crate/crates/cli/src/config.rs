//! TOML experiment configuration: a permissive parse into raw option
//! fields, then one validation pass that collects every problem before
//! reporting, so a bad config lists all offending keys at once.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use transval::sweep::{BiasPair, Procedure, SplitSizes};
use transval::{BiasSpec, BlobsSpec, CubicSpec, Learner, LossKind, Quantity, TaskKind};

use crate::CliError;

/// Where the examples come from.
#[derive(Clone, Debug)]
pub enum SourceConfig {
    Cubic(CubicSpec),
    Blobs(BlobsSpec),
    Idx { images: PathBuf, labels: PathBuf },
}

impl SourceConfig {
    pub fn task(&self) -> TaskKind {
        match self {
            SourceConfig::Cubic(_) => TaskKind::Regression,
            SourceConfig::Blobs(_) | SourceConfig::Idx { .. } => TaskKind::Classification,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DataConfig {
    pub source: SourceConfig,
    pub sizes: SplitSizes,
    pub bias: Option<BiasPair>,
}

#[derive(Clone, Debug)]
pub struct StabilityConfig {
    pub quantities: Vec<Quantity>,
    /// Index into the model list.
    pub model: usize,
    pub n: usize,
    /// Validation size; required only by the oavs quantity.
    pub m: Option<usize>,
    pub trials: usize,
}

/// A fully validated experiment description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub procedure: Procedure,
    pub loss: LossKind,
    pub replications: usize,
    pub p_grid: Vec<f64>,
    pub output: PathBuf,
    /// 0 means one worker per core.
    pub workers: usize,
    pub data: DataConfig,
    pub models: Vec<Learner>,
    pub stability: Option<StabilityConfig>,
}

/// Command-line overrides applied before validation.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub procedure: Option<Procedure>,
}

/// Accepts the flag spellings `presample`, `batch` and the config spelling
/// `batch-sample`.
pub fn parse_procedure(s: &str) -> Option<Procedure> {
    match s {
        "batch" => Some(Procedure::BatchSample),
        other => Procedure::parse(other),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    master_seed: Option<u64>,
    procedure: Option<String>,
    loss: Option<String>,
    replications: Option<usize>,
    p_grid: Option<Vec<f64>>,
    output: Option<String>,
    workers: Option<usize>,
    data: Option<RawData>,
    model: Option<Vec<RawModel>>,
    stability: Option<RawStability>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    source: Option<String>,
    n: Option<usize>,
    m: Option<usize>,
    test: Option<usize>,
    coefficients: Option<Vec<f64>>,
    x_range: Option<Vec<f64>>,
    noise_sigma: Option<f64>,
    classes: Option<usize>,
    dim: Option<usize>,
    separation: Option<f64>,
    images: Option<String>,
    labels: Option<String>,
    bias: Option<RawBias>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBias {
    validation_delta: Option<Vec<f64>>,
    test_delta: Option<Vec<f64>>,
    validation_priors: Option<Vec<f64>>,
    validation_reversal: Option<f64>,
    test_priors: Option<Vec<f64>>,
    test_reversal: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: Option<String>,
    degree: Option<usize>,
    ridge: Option<f64>,
    k: Option<usize>,
    gamma: Option<f64>,
    c: Option<f64>,
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStability {
    quantities: Option<Vec<String>>,
    model: Option<usize>,
    n: Option<usize>,
    m: Option<usize>,
    trials: Option<usize>,
}

/// Read, parse and validate a config file, applying overrides on top.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(vec![format!("{e}")]))?;
    validate(raw, overrides).map_err(CliError::Config)
}

fn validate(raw: RawConfig, overrides: &Overrides) -> Result<ExperimentConfig, Vec<String>> {
    let mut issues = Vec::new();

    let master_seed = match (overrides.seed, raw.master_seed) {
        (Some(s), _) => s,
        (None, Some(s)) => s,
        (None, None) => {
            issues.push("master_seed: required".to_string());
            0
        }
    };

    let procedure = match &overrides.procedure {
        Some(p) => *p,
        None => match raw.procedure.as_deref() {
            None => Procedure::Presample,
            Some(s) => match parse_procedure(s) {
                Some(p) => p,
                None => {
                    issues.push(format!(
                        "procedure: expected \"presample\" or \"batch-sample\" (got \"{s}\")"
                    ));
                    Procedure::Presample
                }
            },
        },
    };

    let replications = match raw.replications {
        Some(r) if r >= 1 => r,
        Some(r) => {
            issues.push(format!("replications: must be at least 1 (got {r})"));
            1
        }
        None => {
            issues.push("replications: required".to_string());
            1
        }
    };

    let p_grid = raw.p_grid.unwrap_or_default();
    if p_grid.is_empty() {
        issues.push("p_grid: required and nonempty".to_string());
    }
    for &p in &p_grid {
        if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
            issues.push(format!("p_grid: values must lie in [0, 1] (got {p})"));
        }
    }
    if p_grid.windows(2).any(|w| !(w[0] < w[1])) {
        issues.push("p_grid: values must be strictly increasing".to_string());
    }

    let output = overrides
        .out
        .clone()
        .or_else(|| raw.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results.csv"));
    let workers = overrides.workers.or(raw.workers).unwrap_or(1);

    let data = match raw.data {
        Some(d) => validate_data(d, &mut issues),
        None => {
            issues.push("data: section required".to_string());
            None
        }
    };

    let models = validate_models(raw.model, &mut issues);

    // cross-field checks need both sides parsed
    let task = data.as_ref().map(|d| d.source.task());
    if let (Some(task), false) = (task, models.is_empty()) {
        let mixed = models.iter().any(|l| l.task() != models[0].task());
        if mixed {
            issues.push("model: all entries must share one task kind".to_string());
        } else if models[0].task() != task {
            issues.push(format!(
                "model: task kind does not match the data source ({:?} data)",
                task
            ));
        }
    }

    let loss = match raw.loss.as_deref() {
        None => LossKind::for_task(task.unwrap_or(TaskKind::Regression)),
        Some("squared-error") => LossKind::SquaredError,
        Some("zero-one") => LossKind::ZeroOne,
        Some(s) => {
            issues.push(format!(
                "loss: expected \"squared-error\" or \"zero-one\" (got \"{s}\")"
            ));
            LossKind::SquaredError
        }
    };
    if let Some(task) = task {
        if raw.loss.is_some() && loss.task() != task {
            issues.push(format!("loss: {} does not fit the data task", loss.as_str()));
        }
    }

    if procedure == Procedure::BatchSample {
        for (i, l) in models.iter().enumerate() {
            match l {
                Learner::SgdLogistic { batch_size, .. } => {
                    if let Some(d) = &data {
                        let limit = d.sizes.n.min(d.sizes.m);
                        if *batch_size > limit {
                            issues.push(format!(
                                "model[{i}].batch_size: exceeds the smaller split side ({limit})"
                            ));
                        }
                    }
                }
                _ => issues.push(format!(
                    "model[{i}].kind: batch-sample requires sgd-logistic models"
                )),
            }
        }
    }

    let stability = validate_stability(raw.stability, &data, &models, &mut issues);

    if issues.is_empty() {
        Ok(ExperimentConfig {
            master_seed,
            procedure,
            loss,
            replications,
            p_grid,
            output,
            workers,
            data: data.expect("validated"),
            models,
            stability,
        })
    } else {
        Err(issues)
    }
}

fn validate_data(d: RawData, issues: &mut Vec<String>) -> Option<DataConfig> {
    let n = match d.n {
        Some(n) if n >= 1 => n,
        Some(n) => {
            issues.push(format!("data.n: must be at least 1 (got {n})"));
            1
        }
        None => {
            issues.push("data.n: required".to_string());
            1
        }
    };
    let m = match d.m {
        Some(m) if m >= 1 => m,
        Some(m) => {
            issues.push(format!("data.m: must be at least 1 (got {m})"));
            1
        }
        None => {
            issues.push("data.m: required".to_string());
            1
        }
    };
    let sizes = SplitSizes { n, m, test: d.test.filter(|&t| t > 0) };

    // flag keys that belong to a different source than the one named
    let mut reject = |cond: bool, key: &str, source: &str| {
        if cond {
            issues.push(format!("data.{key}: only meaningful for the {source} source"));
        }
    };
    let source = match d.source.as_deref() {
        Some("cubic") => {
            reject(d.classes.is_some(), "classes", "blobs");
            reject(d.dim.is_some(), "dim", "blobs");
            reject(d.separation.is_some(), "separation", "blobs");
            reject(d.images.is_some(), "images", "idx");
            reject(d.labels.is_some(), "labels", "idx");
            let mut spec = CubicSpec::default();
            if let Some(c) = &d.coefficients {
                if c.len() == 4 && c.iter().all(|v| v.is_finite()) {
                    spec.coefficients = [c[0], c[1], c[2], c[3]];
                } else {
                    issues.push("data.coefficients: expected 4 finite values".to_string());
                }
            }
            if let Some(r) = &d.x_range {
                if r.len() == 2 && r[0].is_finite() && r[1].is_finite() && r[0] < r[1] {
                    spec.x_range = (r[0], r[1]);
                } else {
                    issues.push("data.x_range: expected [low, high] with low < high".to_string());
                }
            }
            if let Some(s) = d.noise_sigma {
                if s.is_finite() && s >= 0.0 {
                    spec.noise_sigma = s;
                } else {
                    issues.push(format!("data.noise_sigma: must be finite and >= 0 (got {s})"));
                }
            }
            Some(SourceConfig::Cubic(spec))
        }
        Some("blobs") => {
            reject(d.coefficients.is_some(), "coefficients", "cubic");
            reject(d.x_range.is_some(), "x_range", "cubic");
            reject(d.noise_sigma.is_some(), "noise_sigma", "cubic");
            reject(d.images.is_some(), "images", "idx");
            reject(d.labels.is_some(), "labels", "idx");
            let classes = match d.classes {
                Some(c) if c >= 2 => c,
                Some(c) => {
                    issues.push(format!("data.classes: must be at least 2 (got {c})"));
                    2
                }
                None => {
                    issues.push("data.classes: required for the blobs source".to_string());
                    2
                }
            };
            let dim = match d.dim {
                Some(k) if k >= 1 => k,
                Some(k) => {
                    issues.push(format!("data.dim: must be at least 1 (got {k})"));
                    1
                }
                None => {
                    issues.push("data.dim: required for the blobs source".to_string());
                    1
                }
            };
            let separation = d.separation.unwrap_or(2.0);
            if !(separation.is_finite() && separation >= 0.0) {
                issues.push(format!(
                    "data.separation: must be finite and >= 0 (got {separation})"
                ));
            }
            Some(SourceConfig::Blobs(BlobsSpec { classes, dim, separation }))
        }
        Some("idx") => {
            reject(d.coefficients.is_some(), "coefficients", "cubic");
            reject(d.x_range.is_some(), "x_range", "cubic");
            reject(d.noise_sigma.is_some(), "noise_sigma", "cubic");
            reject(d.classes.is_some(), "classes", "blobs");
            reject(d.dim.is_some(), "dim", "blobs");
            reject(d.separation.is_some(), "separation", "blobs");
            match (&d.images, &d.labels) {
                (Some(i), Some(l)) => Some(SourceConfig::Idx {
                    images: PathBuf::from(i),
                    labels: PathBuf::from(l),
                }),
                _ => {
                    if d.images.is_none() {
                        issues.push("data.images: required for the idx source".to_string());
                    }
                    if d.labels.is_none() {
                        issues.push("data.labels: required for the idx source".to_string());
                    }
                    None
                }
            }
        }
        Some(s) => {
            issues.push(format!(
                "data.source: expected \"cubic\", \"blobs\" or \"idx\" (got \"{s}\")"
            ));
            None
        }
        None => {
            issues.push("data.source: required".to_string());
            None
        }
    };

    let bias = match (d.bias, &source) {
        (None, _) => None,
        (Some(_), None) => None,
        (Some(b), Some(source)) => validate_bias(b, source, sizes.test.is_some(), issues),
    };

    source.map(|source| DataConfig { source, sizes, bias })
}

fn validate_bias(
    b: RawBias,
    source: &SourceConfig,
    has_test: bool,
    issues: &mut Vec<String>,
) -> Option<BiasPair> {
    let delta = |v: &Option<Vec<f64>>, key: &str, issues: &mut Vec<String>| match v {
        Some(c) if c.len() == 4 && c.iter().all(|x| x.is_finite()) => {
            Some([c[0], c[1], c[2], c[3]])
        }
        Some(_) => {
            issues.push(format!("data.bias.{key}: expected 4 finite values"));
            None
        }
        None => {
            issues.push(format!("data.bias.{key}: required for a regression source"));
            None
        }
    };
    let pair = match source.task() {
        TaskKind::Regression => {
            for key in ["validation_priors", "validation_reversal", "test_priors", "test_reversal"] {
                let set = match key {
                    "validation_priors" => b.validation_priors.is_some(),
                    "validation_reversal" => b.validation_reversal.is_some(),
                    "test_priors" => b.test_priors.is_some(),
                    _ => b.test_reversal.is_some(),
                };
                if set {
                    issues.push(format!(
                        "data.bias.{key}: only meaningful for a classification source"
                    ));
                }
            }
            let v = delta(&b.validation_delta, "validation_delta", issues)?;
            let t = delta(&b.test_delta, "test_delta", issues)?;
            BiasPair {
                validation: BiasSpec::Regression { coefficient_delta: v },
                test: BiasSpec::Regression { coefficient_delta: t },
            }
        }
        TaskKind::Classification => {
            if b.validation_delta.is_some() || b.test_delta.is_some() {
                issues.push(
                    "data.bias.validation_delta: only meaningful for a regression source"
                        .to_string(),
                );
            }
            let priors = |v: &Option<Vec<f64>>, key: &str, issues: &mut Vec<String>| match v {
                Some(p) if !p.is_empty() && p.iter().all(|x| x.is_finite() && *x >= 0.0) => {
                    Some(p.clone())
                }
                Some(_) => {
                    issues.push(format!("data.bias.{key}: weights must be nonnegative"));
                    None
                }
                None => {
                    issues.push(format!("data.bias.{key}: required for a classification source"));
                    None
                }
            };
            let rev = |v: Option<f64>, key: &str, issues: &mut Vec<String>| {
                let r = v.unwrap_or(0.0);
                if r.is_finite() && (0.0..=1.0).contains(&r) {
                    Some(r)
                } else {
                    issues.push(format!("data.bias.{key}: must lie in [0, 1] (got {r})"));
                    None
                }
            };
            let vp = priors(&b.validation_priors, "validation_priors", issues)?;
            let tp = priors(&b.test_priors, "test_priors", issues)?;
            let vr = rev(b.validation_reversal, "validation_reversal", issues)?;
            let tr = rev(b.test_reversal, "test_reversal", issues)?;
            BiasPair {
                validation: BiasSpec::Classification {
                    class_priors: vp,
                    reversal_probability: vr,
                },
                test: BiasSpec::Classification {
                    class_priors: tp,
                    reversal_probability: tr,
                },
            }
        }
    };
    if !has_test {
        issues.push("data.test: a bias section needs a test split to shift".to_string());
        return None;
    }
    Some(pair)
}

fn validate_models(raw: Option<Vec<RawModel>>, issues: &mut Vec<String>) -> Vec<Learner> {
    let raw = match raw {
        Some(r) if !r.is_empty() => r,
        _ => {
            issues.push("model: at least one [[model]] entry required".to_string());
            return Vec::new();
        }
    };
    let mut models = Vec::with_capacity(raw.len());
    for (i, m) in raw.into_iter().enumerate() {
        let mut reject = |set: bool, key: &str, kind: &str| {
            if set {
                issues.push(format!("model[{i}].{key}: not a {kind} parameter"));
            }
        };
        match m.kind.as_deref() {
            Some("polyreg") => {
                reject(m.k.is_some(), "k", "polyreg");
                reject(m.gamma.is_some(), "gamma", "polyreg");
                reject(m.c.is_some(), "c", "polyreg");
                reject(m.learning_rate.is_some(), "learning_rate", "polyreg");
                reject(m.epochs.is_some(), "epochs", "polyreg");
                reject(m.batch_size.is_some(), "batch_size", "polyreg");
                let degree = m.degree.unwrap_or_else(|| {
                    issues.push(format!("model[{i}].degree: required for polyreg"));
                    1
                });
                let ridge = m.ridge.unwrap_or(0.0);
                if !(ridge.is_finite() && ridge >= 0.0) {
                    issues.push(format!("model[{i}].ridge: must be finite and >= 0 (got {ridge})"));
                }
                models.push(Learner::Polyreg { degree, ridge });
            }
            Some("knn") => {
                reject(m.degree.is_some(), "degree", "knn");
                reject(m.ridge.is_some(), "ridge", "knn");
                reject(m.gamma.is_some(), "gamma", "knn");
                reject(m.c.is_some(), "c", "knn");
                reject(m.learning_rate.is_some(), "learning_rate", "knn");
                reject(m.epochs.is_some(), "epochs", "knn");
                reject(m.batch_size.is_some(), "batch_size", "knn");
                let k = match m.k {
                    Some(k) if k >= 1 => k,
                    Some(k) => {
                        issues.push(format!("model[{i}].k: must be at least 1 (got {k})"));
                        1
                    }
                    None => {
                        issues.push(format!("model[{i}].k: required for knn"));
                        1
                    }
                };
                models.push(Learner::Knn { k });
            }
            Some("svm-rbf") => {
                reject(m.degree.is_some(), "degree", "svm-rbf");
                reject(m.ridge.is_some(), "ridge", "svm-rbf");
                reject(m.k.is_some(), "k", "svm-rbf");
                reject(m.learning_rate.is_some(), "learning_rate", "svm-rbf");
                reject(m.epochs.is_some(), "epochs", "svm-rbf");
                reject(m.batch_size.is_some(), "batch_size", "svm-rbf");
                let gamma = m.gamma.unwrap_or(1.0);
                let c = m.c.unwrap_or(1.0);
                if !(gamma.is_finite() && gamma > 0.0) {
                    issues.push(format!("model[{i}].gamma: must be finite and > 0 (got {gamma})"));
                }
                if !(c.is_finite() && c > 0.0) {
                    issues.push(format!("model[{i}].c: must be finite and > 0 (got {c})"));
                }
                models.push(Learner::SvmRbf { gamma, c });
            }
            Some("sgd-logistic") => {
                reject(m.degree.is_some(), "degree", "sgd-logistic");
                reject(m.ridge.is_some(), "ridge", "sgd-logistic");
                reject(m.k.is_some(), "k", "sgd-logistic");
                reject(m.gamma.is_some(), "gamma", "sgd-logistic");
                reject(m.c.is_some(), "c", "sgd-logistic");
                let learning_rate = m.learning_rate.unwrap_or(0.1);
                if !(learning_rate.is_finite() && learning_rate > 0.0) {
                    issues.push(format!(
                        "model[{i}].learning_rate: must be finite and > 0 (got {learning_rate})"
                    ));
                }
                let epochs = match m.epochs {
                    Some(e) if e >= 1 => e,
                    Some(e) => {
                        issues.push(format!("model[{i}].epochs: must be at least 1 (got {e})"));
                        1
                    }
                    None => 1,
                };
                let batch_size = match m.batch_size {
                    Some(b) if b >= 1 => b,
                    Some(b) => {
                        issues.push(format!("model[{i}].batch_size: must be at least 1 (got {b})"));
                        1
                    }
                    None => 1,
                };
                models.push(Learner::SgdLogistic { learning_rate, epochs, batch_size });
            }
            Some(s) => issues.push(format!(
                "model[{i}].kind: expected polyreg, knn, svm-rbf or sgd-logistic (got \"{s}\")"
            )),
            None => issues.push(format!("model[{i}].kind: required")),
        }
    }
    models
}

fn validate_stability(
    raw: Option<RawStability>,
    data: &Option<DataConfig>,
    models: &[Learner],
    issues: &mut Vec<String>,
) -> Option<StabilityConfig> {
    let raw = raw?;
    if let Some(DataConfig { source: SourceConfig::Idx { .. }, .. }) = data {
        issues.push("stability: estimators need a synthetic source, not idx".to_string());
        return None;
    }
    let mut quantities = Vec::new();
    match &raw.quantities {
        Some(qs) if !qs.is_empty() => {
            for q in qs {
                match Quantity::parse(q) {
                    Some(parsed) => quantities.push(parsed),
                    None => issues.push(format!(
                        "stability.quantities: unknown quantity \"{q}\" (expected \
                         oaros-eps1, oavs, erm-gap-eps2 or gen-gap)"
                    )),
                }
            }
        }
        _ => issues.push("stability.quantities: required and nonempty".to_string()),
    }
    let model = raw.model.unwrap_or(0);
    if !models.is_empty() && model >= models.len() {
        issues.push(format!(
            "stability.model: index {model} outside the model list (len {})",
            models.len()
        ));
    }
    let n = match raw.n {
        Some(n) if n >= 1 => n,
        Some(n) => {
            issues.push(format!("stability.n: must be at least 1 (got {n})"));
            1
        }
        None => {
            issues.push("stability.n: required".to_string());
            1
        }
    };
    let m = raw.m;
    if quantities.contains(&Quantity::Oavs) {
        match m {
            Some(m) if m >= 1 => {}
            Some(m) => issues.push(format!("stability.m: must be at least 1 (got {m})")),
            None => issues.push("stability.m: required by the oavs quantity".to_string()),
        }
    }
    let trials = match raw.trials {
        Some(t) if t >= 2 => t,
        Some(t) => {
            issues.push(format!("stability.trials: must be at least 2 (got {t})"));
            2
        }
        None => {
            issues.push("stability.trials: required".to_string());
            2
        }
    };
    Some(StabilityConfig { quantities, model, n, m, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
master_seed = 42
replications = 3
p_grid = [0.0, 0.5, 1.0]
output = "out.csv"

[data]
source = "cubic"
n = 10
m = 5
noise_sigma = 0.25

[[model]]
kind = "polyreg"
degree = 1
ridge = 0.01

[[model]]
kind = "polyreg"
degree = 3
ridge = 0.01
"#;

    fn parse(text: &str) -> Result<ExperimentConfig, Vec<String>> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| vec![format!("{e}")])?;
        validate(raw, &Overrides::default())
    }

    #[test]
    fn good_config_validates() {
        let cfg = parse(GOOD).unwrap();
        assert_eq!(cfg.master_seed, 42);
        assert_eq!(cfg.procedure, Procedure::Presample);
        assert_eq!(cfg.loss, LossKind::SquaredError);
        assert_eq!(cfg.models.len(), 2);
        assert_eq!(cfg.workers, 1);
        assert!(cfg.data.bias.is_none());
    }

    #[test]
    fn out_of_range_p_listed_by_key() {
        let bad = GOOD.replace("[0.0, 0.5, 1.0]", "[0.0, 0.5, 1.5]");
        let issues = parse(&bad).unwrap_err();
        assert!(issues.iter().any(|i| i.starts_with("p_grid:")), "{issues:?}");
    }

    #[test]
    fn multiple_issues_all_listed() {
        let bad = GOOD
            .replace("master_seed = 42", "")
            .replace("replications = 3", "replications = 0")
            .replace("[0.0, 0.5, 1.0]", "[0.5, 0.5]");
        let issues = parse(&bad).unwrap_err();
        assert!(issues.iter().any(|i| i.starts_with("master_seed:")), "{issues:?}");
        assert!(issues.iter().any(|i| i.starts_with("replications:")), "{issues:?}");
        assert!(issues.iter().any(|i| i.starts_with("p_grid:")), "{issues:?}");
    }

    #[test]
    fn task_mismatch_flagged() {
        let bad = GOOD.replace("kind = \"polyreg\"\ndegree = 1\nridge = 0.01", "kind = \"knn\"\nk = 3");
        let issues = parse(&bad).unwrap_err();
        assert!(issues.iter().any(|i| i.starts_with("model:")), "{issues:?}");
    }

    #[test]
    fn unknown_key_rejected() {
        let bad = format!("{GOOD}\nunknown_key = 1\n");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn overrides_replace_config_values() {
        let raw: RawConfig = toml::from_str(GOOD).unwrap();
        let cfg = validate(
            raw,
            &Overrides {
                seed: Some(7),
                out: Some(PathBuf::from("elsewhere.csv")),
                workers: Some(8),
                procedure: None,
            },
        )
        .unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.output, PathBuf::from("elsewhere.csv"));
        assert_eq!(cfg.workers, 8);
    }

    #[test]
    fn batch_procedure_needs_sgd_models() {
        let bad = GOOD.replace("replications = 3", "replications = 3\nprocedure = \"batch-sample\"");
        let issues = parse(&bad).unwrap_err();
        assert!(
            issues.iter().any(|i| i.contains("batch-sample requires sgd-logistic")),
            "{issues:?}"
        );
    }

    #[test]
    fn procedure_flag_spellings() {
        assert_eq!(parse_procedure("batch"), Some(Procedure::BatchSample));
        assert_eq!(parse_procedure("batch-sample"), Some(Procedure::BatchSample));
        assert_eq!(parse_procedure("presample"), Some(Procedure::Presample));
        assert_eq!(parse_procedure("other"), None);
    }

    #[test]
    fn bias_requires_test_split() {
        let bad = GOOD.replace(
            "noise_sigma = 0.25",
            "noise_sigma = 0.25\n\n[data.bias]\nvalidation_delta = [0.0, 0.0, 1.0, 0.0]\ntest_delta = [0.0, 0.0, 0.8, 0.0]",
        );
        let issues = parse(&bad).unwrap_err();
        assert!(issues.iter().any(|i| i.starts_with("data.test:")), "{issues:?}");
        let good = bad.replace("m = 5", "m = 5\ntest = 50");
        let cfg = parse(&good).unwrap();
        assert!(cfg.data.bias.is_some());
    }
}
