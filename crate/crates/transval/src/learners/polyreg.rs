//! Polynomial ridge regression by normal equations.

use crate::dataset::{Dataset, Label, TaskKind};
use crate::error::{Error, Result};
use crate::linalg::solve_linear;
use crate::loss::{Prediction, Predictor};

/// coefficient[j] multiplies x^j.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyModel {
    coefficients: Vec<f64>,
}

impl PolyModel {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }
}

impl Predictor for PolyModel {
    fn predict(&self, features: &[f64]) -> Prediction {
        let x = features[0];
        let mut acc = 0.0;
        for &c in self.coefficients.iter().rev() {
            acc = acc * x + c;
        }
        Prediction::Value(acc)
    }
}

/// Least squares over polynomial features with an exact ridge term:
/// (X'X + ridge*I) c = X'y. The ridge supplied is the ridge used; callers
/// wanting a singularity guard pass their own jitter.
pub fn train_polyreg(data: &Dataset, degree: usize, ridge: f64) -> Result<PolyModel> {
    if data.task() != TaskKind::Regression {
        return Err(Error::contract("polynomial regression expects regression data"));
    }
    if data.dim() != 1 {
        return Err(Error::contract("polynomial regression expects 1-D features"));
    }
    if !ridge.is_finite() || ridge < 0.0 {
        return Err(Error::contract("ridge must be finite and nonnegative"));
    }
    let d = degree + 1;
    // power sums give X'X and X'y without forming X
    let mut power_sums = vec![0.0f64; 2 * degree + 1];
    let mut moments = vec![0.0f64; d];
    for ex in data.examples() {
        let x = ex.features[0];
        let y = match ex.label {
            Label::Target(t) => t,
            _ => unreachable!("regression dataset"),
        };
        let mut xp = 1.0;
        for (t, slot) in power_sums.iter_mut().enumerate() {
            *slot += xp;
            if t < d {
                moments[t] += xp * y;
            }
            xp *= x;
        }
    }
    let mut gram = vec![0.0f64; d * d];
    for j in 0..d {
        for k in 0..d {
            gram[j * d + k] = power_sums[j + k];
        }
        gram[j * d + j] += ridge;
    }
    let coefficients = solve_linear(gram, moments)?;
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numerical("non-finite polynomial coefficients".to_string()));
    }
    Ok(PolyModel { coefficients })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Example;
    use crate::loss::{empirical_loss, LossKind};
    use crate::rng::Seed;

    fn regression(points: &[(f64, f64)]) -> Dataset {
        Dataset::regression(
            points
                .iter()
                .map(|&(x, y)| Example::target(vec![x], y))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_point_line() {
        let data = regression(&[(0.0, 0.0), (1.0, 2.0)]);
        let model = train_polyreg(&data, 1, 0.0).unwrap();
        for ex in data.examples() {
            let Prediction::Value(v) = model.predict(&ex.features) else {
                unreachable!()
            };
            let Label::Target(y) = ex.label else { unreachable!() };
            assert!((v - y).abs() < 1e-10);
        }
        assert!((model.coefficients()[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn recovers_cubic_coefficients() {
        // y = x^3 - x sampled noiselessly at 4 points: coefficients
        // (c0, c1, c2, c3) = (0, -1, 0, 1)
        let points: Vec<(f64, f64)> = [-1.5, -0.5, 0.5, 1.5]
            .iter()
            .map(|&x| (x, x * x * x - x))
            .collect();
        let model = train_polyreg(&regression(&points), 3, 0.0).unwrap();
        let want = [0.0, -1.0, 0.0, 1.0];
        for (c, w) in model.coefficients().iter().zip(want) {
            assert!((c - w).abs() < 1e-8, "coefficients {:?}", model.coefficients());
        }
    }

    #[test]
    fn duplicate_x_needs_ridge() {
        let data = regression(&[(1.0, 0.0), (1.0, 2.0), (1.0, 4.0)]);
        assert!(matches!(
            train_polyreg(&data, 1, 0.0),
            Err(Error::Numerical(_))
        ));
        let model = train_polyreg(&data, 1, 1e-8).unwrap();
        assert!(model.coefficients().iter().all(|c| c.is_finite()));
    }

    #[test]
    fn degree_zero_is_the_mean() {
        let data = regression(&[(0.0, 1.0), (5.0, 3.0)]);
        let model = train_polyreg(&data, 0, 0.0).unwrap();
        assert!((model.coefficients()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn classification_data_rejected() {
        let data = Dataset::classification(
            vec![Example::class(vec![0.0], 0), Example::class(vec![1.0], 1)],
            2,
        )
        .unwrap();
        assert!(matches!(
            train_polyreg(&data, 1, 0.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn erm_local_minimality() {
        // With ridge = 0 the fit minimizes training squared loss: random
        // small coefficient perturbations may never do better.
        let mut rng = Seed::new(404).rng();
        let points: Vec<(f64, f64)> = (0..20)
            .map(|_| {
                let x = rng.uniform_in(-2.0, 2.0);
                (x, x * x - 0.5 * x + 0.3 * rng.normal())
            })
            .collect();
        let data = regression(&points);
        let model = train_polyreg(&data, 2, 0.0).unwrap();
        let base = empirical_loss(&model, &data, LossKind::SquaredError).unwrap();
        for _ in 0..100 {
            let coefficients: Vec<f64> = model
                .coefficients()
                .iter()
                .map(|c| c + 1e-3 * (2.0 * rng.next_f64() - 1.0))
                .collect();
            let perturbed = PolyModel { coefficients };
            let loss = empirical_loss(&perturbed, &data, LossKind::SquaredError).unwrap();
            assert!(
                loss + 1e-15 >= base,
                "perturbation beat the fit: {loss} < {base}"
            );
        }
    }
}
