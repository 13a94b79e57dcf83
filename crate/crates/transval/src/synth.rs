//! Synthetic data: the noisy-cubic regression task, Gaussian blob classes,
//! finite discrete distributions for exact-enumeration oracles, and the
//! dataset-shift bias injectors.

use crate::dataset::{Dataset, Example, TaskKind};
use crate::error::{Error, Result};
use crate::rng::Seed;

/// A distribution that can be sampled i.i.d. given a seed.
pub trait Generator: Sync {
    fn sample(&self, count: usize, seed: &Seed) -> Result<Dataset>;
    fn task(&self) -> TaskKind;
}

pub(crate) fn cubic_value(coefficients: &[f64; 4], x: f64) -> f64 {
    let [a, b, c, d] = *coefficients;
    ((a * x + b) * x + c) * x + d
}

/// y = a x^3 + b x^2 + c x + d plus Gaussian noise, x uniform on a range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicSpec {
    /// (a, b, c, d), highest power first.
    pub coefficients: [f64; 4],
    pub x_range: (f64, f64),
    pub noise_sigma: f64,
}

impl Default for CubicSpec {
    fn default() -> Self {
        CubicSpec {
            coefficients: [1.0, 0.0, -2.0, 0.0],
            x_range: (-2.0, 2.0),
            noise_sigma: 1.0,
        }
    }
}

impl CubicSpec {
    fn check(&self) -> Result<()> {
        if !(self.x_range.0 < self.x_range.1) {
            return Err(Error::contract("x range must be a nonempty interval"));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::contract("noise sigma must be finite and nonnegative"));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::contract("cubic coefficients must be finite"));
        }
        Ok(())
    }
}

/// Sample `count` noisy cubic points.
pub fn gen_cubic(spec: &CubicSpec, count: usize, seed: &Seed) -> Result<Dataset> {
    spec.check()?;
    if count == 0 {
        return Err(Error::contract("count must be at least 1"));
    }
    let mut rng = seed.rng();
    let mut examples = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.uniform_in(spec.x_range.0, spec.x_range.1);
        let mut y = cubic_value(&spec.coefficients, x);
        if spec.noise_sigma > 0.0 {
            y += spec.noise_sigma * rng.normal();
        }
        examples.push(Example::target(vec![x], y));
    }
    Dataset::regression(examples)
}

impl Generator for CubicSpec {
    fn sample(&self, count: usize, seed: &Seed) -> Result<Dataset> {
        gen_cubic(self, count, seed)
    }

    fn task(&self) -> TaskKind {
        TaskKind::Regression
    }
}

/// Isotropic unit-variance Gaussian clusters, one per class. Class c has its
/// center on axis c mod dim at distance separation * (1 + c / dim), so any
/// number of classes fits in any dimension.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlobsSpec {
    pub classes: usize,
    pub dim: usize,
    pub separation: f64,
}

impl BlobsSpec {
    fn check(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::contract("blobs need at least 2 classes"));
        }
        if self.dim == 0 {
            return Err(Error::contract("blobs need dimension at least 1"));
        }
        if !self.separation.is_finite() || self.separation < 0.0 {
            return Err(Error::contract("separation must be finite and nonnegative"));
        }
        Ok(())
    }

    fn center(&self, class: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        c[class % self.dim] = self.separation * (1 + class / self.dim) as f64;
        c
    }

    fn draw_point(&self, class: usize, rng: &mut crate::rng::Rng) -> Example {
        let mut features = self.center(class);
        for v in features.iter_mut() {
            *v += rng.normal();
        }
        Example::class(features, class)
    }
}

/// Exactly `per_class` points for each class, class-major order.
pub fn gen_blobs(
    classes: usize,
    dim: usize,
    per_class: usize,
    separation: f64,
    seed: &Seed,
) -> Result<Dataset> {
    let spec = BlobsSpec {
        classes,
        dim,
        separation,
    };
    spec.check()?;
    if per_class == 0 {
        return Err(Error::contract("per-class count must be at least 1"));
    }
    let mut rng = seed.rng();
    let mut examples = Vec::with_capacity(classes * per_class);
    for class in 0..classes {
        for _ in 0..per_class {
            examples.push(spec.draw_point(class, &mut rng));
        }
    }
    Dataset::classification(examples, classes)
}

impl Generator for BlobsSpec {
    /// i.i.d. draws: uniform class, then the class's Gaussian.
    fn sample(&self, count: usize, seed: &Seed) -> Result<Dataset> {
        self.check()?;
        if count == 0 {
            return Err(Error::contract("count must be at least 1"));
        }
        let mut rng = seed.rng();
        let mut examples = Vec::with_capacity(count);
        for _ in 0..count {
            let class = rng.next_below(self.classes as u64) as usize;
            examples.push(self.draw_point(class, &mut rng));
        }
        Dataset::classification(examples, self.classes)
    }

    fn task(&self) -> TaskKind {
        TaskKind::Classification
    }
}

/// Finite support distribution with fixed labels; small enough cases admit
/// exhaustive enumeration, which the stability tests exploit.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteSpec {
    points: Vec<(Vec<f64>, usize)>,
    probabilities: Vec<f64>,
    class_count: usize,
}

impl DiscreteSpec {
    pub fn new(points: Vec<(Vec<f64>, usize)>, probabilities: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::contract("discrete support must be nonempty"));
        }
        if points.len() != probabilities.len() {
            return Err(Error::contract("one probability per support point required"));
        }
        let dim = points[0].0.len();
        if dim == 0 || points.iter().any(|(x, _)| x.len() != dim) {
            return Err(Error::contract("support points must share a positive dimension"));
        }
        if probabilities.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::contract("probabilities must lie in [0, 1]"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!("probabilities sum to {total}, not 1")));
        }
        let class_count = points.iter().map(|(_, c)| c + 1).max().unwrap();
        if class_count < 2 {
            return Err(Error::contract("discrete support must span at least 2 classes"));
        }
        Ok(DiscreteSpec {
            points,
            probabilities,
            class_count,
        })
    }

    pub fn support(&self) -> &[(Vec<f64>, usize)] {
        &self.points
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    fn draw_index(&self, u: f64) -> usize {
        let mut cum = 0.0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            cum += p;
            if u < cum {
                return i;
            }
        }
        self.points.len() - 1
    }
}

impl Generator for DiscreteSpec {
    fn sample(&self, count: usize, seed: &Seed) -> Result<Dataset> {
        if count == 0 {
            return Err(Error::contract("count must be at least 1"));
        }
        let mut rng = seed.rng();
        let mut examples = Vec::with_capacity(count);
        for _ in 0..count {
            let idx = self.draw_index(rng.next_f64());
            let (x, c) = &self.points[idx];
            examples.push(Example::class(x.clone(), *c));
        }
        Dataset::classification(examples, self.class_count)
    }

    fn task(&self) -> TaskKind {
        TaskKind::Classification
    }
}

/// Reverse feature order; applying it twice restores the input bit-exactly.
pub fn reverse_coordinates(features: &[f64]) -> Vec<f64> {
    features.iter().rev().copied().collect()
}

/// Dataset-shift injector.
///
/// Regression bias shifts each target by a cubic delta of x, the difference
/// between an alternative curve and the data's own curve; an all-zero delta
/// is the exact identity. Classification bias resamples class memberships
/// toward a prior weight vector (drawing features from same-class donors)
/// and reverses feature order with the given probability.
#[derive(Clone, Debug, PartialEq)]
pub enum BiasSpec {
    Regression { coefficient_delta: [f64; 4] },
    Classification {
        class_priors: Vec<f64>,
        reversal_probability: f64,
    },
}

impl BiasSpec {
    /// Default validation-set shift for the bias experiment: slope raised
    /// by 1.0. The validation and test shifts point the same way, a shared
    /// drift away from the training distribution.
    pub fn validation_default() -> Self {
        BiasSpec::Regression {
            coefficient_delta: [0.0, 0.0, 1.0, 0.0],
        }
    }

    /// Default test-set shift for the bias experiment: slope raised by 0.8,
    /// close to but not identical with the validation shift.
    pub fn test_default() -> Self {
        BiasSpec::Regression {
            coefficient_delta: [0.0, 0.0, 0.8, 0.0],
        }
    }

    fn task(&self) -> TaskKind {
        match self {
            BiasSpec::Regression { .. } => TaskKind::Regression,
            BiasSpec::Classification { .. } => TaskKind::Classification,
        }
    }
}

/// Apply a bias spec to a dataset. Feature dimension and example count are
/// always preserved.
pub fn apply_bias(data: &Dataset, spec: &BiasSpec, seed: &Seed) -> Result<Dataset> {
    if spec.task() != data.task() {
        return Err(Error::contract("bias spec does not match the dataset task kind"));
    }
    match spec {
        BiasSpec::Regression { coefficient_delta } => {
            if coefficient_delta.iter().all(|&d| d == 0.0) {
                return Ok(data.clone());
            }
            let examples = data
                .examples()
                .iter()
                .map(|ex| {
                    let x = ex.features[0];
                    let y = match ex.label {
                        crate::dataset::Label::Target(t) => t,
                        _ => unreachable!("regression dataset"),
                    };
                    Example::target(ex.features.clone(), y + cubic_value(coefficient_delta, x))
                })
                .collect();
            Dataset::regression(examples)
        }
        BiasSpec::Classification {
            class_priors,
            reversal_probability,
        } => {
            let k = data.class_count().unwrap();
            if class_priors.len() != k {
                return Err(Error::contract(format!(
                    "prior vector has {} entries for {k} classes",
                    class_priors.len()
                )));
            }
            if class_priors.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
                return Err(Error::contract("prior weights must lie in [0, 1]"));
            }
            let total: f64 = class_priors.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::contract(format!("prior weights sum to {total}, not 1")));
            }
            if !(0.0..=1.0).contains(reversal_probability) {
                return Err(Error::contract("reversal probability outside [0, 1]"));
            }
            let mut pools: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (i, ex) in data.examples().iter().enumerate() {
                if let crate::dataset::Label::Class(c) = ex.label {
                    pools[c].push(i);
                }
            }
            let mut rng = seed.rng();
            let mut examples = Vec::with_capacity(data.len());
            for _ in 0..data.len() {
                let class = {
                    let u = rng.next_f64();
                    let mut cum = 0.0;
                    let mut chosen = k - 1;
                    for (c, &w) in class_priors.iter().enumerate() {
                        cum += w;
                        if u < cum {
                            chosen = c;
                            break;
                        }
                    }
                    chosen
                };
                let pool = &pools[class];
                if pool.is_empty() {
                    return Err(Error::sizing(format!(
                        "class {class} has positive prior weight but no donor examples"
                    )));
                }
                let donor = pool[rng.next_below(pool.len() as u64) as usize];
                let mut features = data.example(donor).features.clone();
                if rng.bernoulli(*reversal_probability) {
                    features = reverse_coordinates(&features);
                }
                examples.push(Example::class(features, class));
            }
            Dataset::classification(examples, k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_cubic_is_exact() {
        let spec = CubicSpec {
            noise_sigma: 0.0,
            ..CubicSpec::default()
        };
        let data = gen_cubic(&spec, 50, &Seed::new(1)).unwrap();
        for ex in data.examples() {
            let x = ex.features[0];
            if let crate::dataset::Label::Target(y) = ex.label {
                assert!((y - (x * x * x - 2.0 * x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cubic_deterministic_and_sized() {
        let spec = CubicSpec::default();
        let a = gen_cubic(&spec, 15, &Seed::new(7)).unwrap();
        let b = gen_cubic(&spec, 15, &Seed::new(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 15);
    }

    #[test]
    fn cubic_noise_moments() {
        let spec = CubicSpec {
            noise_sigma: 0.7,
            ..CubicSpec::default()
        };
        let n = 100_000usize;
        let data = gen_cubic(&spec, n, &Seed::new(13)).unwrap();
        let residuals: Vec<f64> = data
            .examples()
            .iter()
            .map(|ex| {
                let x = ex.features[0];
                match ex.label {
                    crate::dataset::Label::Target(y) => y - (x * x * x - 2.0 * x),
                    _ => unreachable!(),
                }
            })
            .collect();
        let mean: f64 = residuals.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * spec.noise_sigma / (n as f64).sqrt(), "mean {mean}");
        let var: f64 =
            residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n as f64 - 1.0);
        let std = var.sqrt();
        assert!(
            (std - spec.noise_sigma).abs() < 0.02 * spec.noise_sigma,
            "std {std}"
        );
    }

    #[test]
    fn sampled_prefix_is_shared_across_counts() {
        // Drawing n points and 2n points from the same seed shares the first
        // n examples; stability trend checks rely on this coupling.
        let spec = CubicSpec::default();
        let small = gen_cubic(&spec, 10, &Seed::new(3)).unwrap();
        let large = gen_cubic(&spec, 20, &Seed::new(3)).unwrap();
        for i in 0..10 {
            assert_eq!(small.example(i), large.example(i));
        }
    }

    #[test]
    fn blob_counts_exact() {
        let data = gen_blobs(3, 2, 7, 2.0, &Seed::new(5)).unwrap();
        assert_eq!(data.len(), 21);
        let mut counts = [0usize; 3];
        for ex in data.examples() {
            if let crate::dataset::Label::Class(c) = ex.label {
                counts[c] += 1;
            }
        }
        assert_eq!(counts, [7, 7, 7]);
    }

    #[test]
    fn blob_centers_distinct_across_classes() {
        let spec = BlobsSpec {
            classes: 5,
            dim: 2,
            separation: 3.0,
        };
        let mut centers: Vec<Vec<f64>> = (0..5).map(|c| spec.center(c)).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        centers.dedup();
        assert_eq!(centers.len(), 5);
    }

    #[test]
    fn discrete_frequencies_match_probabilities() {
        let spec = DiscreteSpec::new(
            vec![
                (vec![0.0], 0),
                (vec![1.0], 1),
                (vec![3.0], 0),
            ],
            vec![0.5, 0.3, 0.2],
        )
        .unwrap();
        let n = 100_000usize;
        let data = spec.sample(n, &Seed::new(17)).unwrap();
        let mut counts = [0usize; 3];
        for ex in data.examples() {
            let idx = spec
                .support()
                .iter()
                .position(|(x, _)| x[0] == ex.features[0])
                .unwrap();
            counts[idx] += 1;
        }
        for (i, &p) in spec.probabilities().iter().enumerate() {
            let freq = counts[i] as f64 / n as f64;
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * sd, "point {i}: freq {freq}, p {p}");
        }
    }

    #[test]
    fn discrete_validation() {
        assert!(DiscreteSpec::new(vec![], vec![]).is_err());
        assert!(DiscreteSpec::new(vec![(vec![0.0], 0)], vec![0.5]).is_err());
        // single class rejected
        assert!(
            DiscreteSpec::new(vec![(vec![0.0], 0), (vec![1.0], 0)], vec![0.5, 0.5]).is_err()
        );
    }

    #[test]
    fn reversal_is_an_involution() {
        let xs = vec![1.0, -2.5, 3.25, 0.0, 7.0];
        let twice = reverse_coordinates(&reverse_coordinates(&xs));
        assert_eq!(xs, twice);
    }

    #[test]
    fn zero_delta_bias_is_bit_exact_identity() {
        let data = gen_cubic(&CubicSpec::default(), 40, &Seed::new(2)).unwrap();
        let spec = BiasSpec::Regression {
            coefficient_delta: [0.0; 4],
        };
        let out = apply_bias(&data, &spec, &Seed::new(9)).unwrap();
        assert_eq!(data, out);
    }

    #[test]
    fn regression_bias_shifts_targets_by_delta() {
        let data = gen_cubic(&CubicSpec::default(), 25, &Seed::new(2)).unwrap();
        let spec = BiasSpec::Regression {
            coefficient_delta: [0.0, 0.0, 1.0, 0.0],
        };
        let out = apply_bias(&data, &spec, &Seed::new(9)).unwrap();
        assert_eq!(out.len(), data.len());
        for (a, b) in data.examples().iter().zip(out.examples()) {
            assert_eq!(a.features, b.features);
            let (ya, yb) = match (&a.label, &b.label) {
                (crate::dataset::Label::Target(ya), crate::dataset::Label::Target(yb)) => (*ya, *yb),
                _ => unreachable!(),
            };
            assert!((yb - ya - a.features[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn class_prior_bias_hits_requested_frequency() {
        // prior weight 0.5 on class 9; empirical frequency within [0.48, 0.52]
        let data = gen_blobs(10, 3, 1000, 4.0, &Seed::new(31)).unwrap();
        let mut priors = vec![0.5 / 9.0; 10];
        priors[9] = 0.5;
        let spec = BiasSpec::Classification {
            class_priors: priors,
            reversal_probability: 0.0,
        };
        let out = apply_bias(&data, &spec, &Seed::new(77)).unwrap();
        assert_eq!(out.len(), 10_000);
        let nines = out
            .examples()
            .iter()
            .filter(|ex| ex.label == crate::dataset::Label::Class(9))
            .count() as f64;
        let freq = nines / out.len() as f64;
        assert!((0.48..=0.52).contains(&freq), "class-9 frequency {freq}");
    }

    #[test]
    fn bias_task_mismatch_rejected() {
        let data = gen_blobs(2, 2, 5, 1.0, &Seed::new(1)).unwrap();
        let err = apply_bias(&data, &BiasSpec::validation_default(), &Seed::new(1)).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn bias_preserves_dimension_and_count() {
        let data = gen_blobs(3, 4, 50, 2.0, &Seed::new(6)).unwrap();
        let spec = BiasSpec::Classification {
            class_priors: vec![0.2, 0.3, 0.5],
            reversal_probability: 0.5,
        };
        let out = apply_bias(&data, &spec, &Seed::new(8)).unwrap();
        assert_eq!(out.len(), data.len());
        assert_eq!(out.dim(), data.dim());
    }
}
