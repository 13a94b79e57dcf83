//! Soft-margin kernel SVM trained by two-variable dual coordinate steps.
//!
//! The kernel is exp(-gamma * ||a - b||), with the plain Euclidean norm in
//! the exponent. Binary problems train one machine; multiclass trains one
//! machine per class (one-vs-rest) with ties broken by largest margin, then
//! lowest class id.

use crate::dataset::{Dataset, Label, TaskKind};
use crate::error::{Error, Result};
use crate::loss::{Prediction, Predictor};

/// Dual variables below this are treated as zero when extracting support
/// vectors and when classifying KKT cases.
const ALPHA_EPS: f64 = 1e-9;
/// Smallest dual step that counts as progress.
const STEP_EPS: f64 = 1e-10;
/// A solution is accepted when no example violates its KKT condition by
/// more than this.
pub const KKT_TOLERANCE: f64 = 1e-3;
/// Full sweeps over the training set before giving up.
pub const MAX_PASSES: usize = 100_000;

pub(crate) fn kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2.sqrt()).exp()
}

/// One binary decision function: sum_i coefficient_i * K(vector_i, x) + bias,
/// where coefficient_i = alpha_i * y_i for the retained support vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMachine {
    vectors: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
    bias: f64,
    gamma: f64,
}

impl BinaryMachine {
    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut acc = self.bias;
        for (v, c) in self.vectors.iter().zip(&self.coefficients) {
            acc += c * kernel(v, x, self.gamma);
        }
        acc
    }

    pub fn support_count(&self) -> usize {
        self.vectors.len()
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    machines: Vec<BinaryMachine>,
    class_count: usize,
    max_kkt_violation: f64,
}

impl SvmModel {
    /// Largest KKT residual over all trained machines.
    pub fn max_kkt_violation(&self) -> f64 {
        self.max_kkt_violation
    }

    pub fn machines(&self) -> &[BinaryMachine] {
        &self.machines
    }
}

impl Predictor for SvmModel {
    fn predict(&self, features: &[f64]) -> Prediction {
        if self.machines.len() == 1 {
            // binary: positive side is class 1
            let d = self.machines[0].decision(features);
            return Prediction::Class(if d > 0.0 { 1 } else { 0 });
        }
        let mut best = 0usize;
        let mut best_margin = f64::NEG_INFINITY;
        for (c, machine) in self.machines.iter().enumerate() {
            let d = machine.decision(features);
            if d > best_margin {
                best_margin = d;
                best = c;
            }
        }
        Prediction::Class(best)
    }
}

/// Raw dual solution of one binary subproblem.
pub(crate) struct SmoSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub max_violation: f64,
}

/// Dual objective W(alpha) = sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
#[cfg(test)]
pub(crate) fn dual_objective(alphas: &[f64], ys: &[f64], gram: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * ys[i] * ys[j] * gram[i * n + j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Solve the soft-margin dual for labels in {-1, +1} by deterministic
/// sequential minimal optimization: sweep examples in index order, pair each
/// violator with the partner of maximal error gap, and keep sweeping until a
/// full pass makes no progress.
pub(crate) fn smo_solve(xs: &[Vec<f64>], ys: &[f64], gamma: f64, c: f64) -> Result<SmoSolution> {
    let n = xs.len();
    debug_assert_eq!(ys.len(), n);

    // one-sided problems have the exact solution alpha = 0, bias = sign
    if ys.iter().all(|&y| y > 0.0) || ys.iter().all(|&y| y < 0.0) {
        return Ok(SmoSolution {
            alphas: vec![0.0; n],
            bias: ys[0].signum(),
            max_violation: 0.0,
        });
    }

    let mut gram = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let k = kernel(&xs[i], &xs[j], gamma);
            gram[i * n + j] = k;
            gram[j * n + i] = k;
        }
    }

    let mut alphas = vec![0.0f64; n];
    let mut bias = 0.0f64;

    let decision = |alphas: &[f64], bias: f64, i: usize| -> f64 {
        let mut acc = bias;
        for j in 0..n {
            if alphas[j] > 0.0 {
                acc += alphas[j] * ys[j] * gram[i * n + j];
            }
        }
        acc
    };

    // analytic two-variable step; returns true when alphas actually moved
    let try_step = |alphas: &mut Vec<f64>, bias: &mut f64, i: usize, j: usize| -> bool {
        if i == j {
            return false;
        }
        let (a_i, a_j) = (alphas[i], alphas[j]);
        let (lo, hi) = if ys[i] != ys[j] {
            ((a_j - a_i).max(0.0), (c + a_j - a_i).min(c))
        } else {
            ((a_i + a_j - c).max(0.0), (a_i + a_j).min(c))
        };
        if hi - lo < STEP_EPS {
            return false;
        }
        let eta = gram[i * n + i] + gram[j * n + j] - 2.0 * gram[i * n + j];
        if eta <= 1e-12 {
            return false;
        }
        let e_i = decision(alphas, *bias, i) - ys[i];
        let e_j = decision(alphas, *bias, j) - ys[j];
        let a_j_new = (a_j + ys[j] * (e_i - e_j) / eta).clamp(lo, hi);
        if (a_j_new - a_j).abs() < STEP_EPS {
            return false;
        }
        let a_i_new = a_i + ys[i] * ys[j] * (a_j - a_j_new);
        alphas[i] = a_i_new;
        alphas[j] = a_j_new;
        let b1 = *bias - e_i
            - ys[i] * (a_i_new - a_i) * gram[i * n + i]
            - ys[j] * (a_j_new - a_j) * gram[i * n + j];
        let b2 = *bias - e_j
            - ys[i] * (a_i_new - a_i) * gram[i * n + j]
            - ys[j] * (a_j_new - a_j) * gram[j * n + j];
        *bias = if a_i_new > ALPHA_EPS && a_i_new < c - ALPHA_EPS {
            b1
        } else if a_j_new > ALPHA_EPS && a_j_new < c - ALPHA_EPS {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        true
    };

    let kkt_violation = |alphas: &[f64], bias: f64| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..n {
            let margin = ys[i] * decision(alphas, bias, i);
            let v = if alphas[i] <= ALPHA_EPS {
                (1.0 - margin).max(0.0)
            } else if alphas[i] >= c - ALPHA_EPS {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    };

    let mut passes = 0usize;
    loop {
        let mut changed = 0usize;
        for i in 0..n {
            let e_i = decision(&alphas, bias, i) - ys[i];
            let r = ys[i] * e_i;
            let violates = (r < 0.0 && alphas[i] < c) || (r > 0.0 && alphas[i] > 0.0);
            if !violates {
                continue;
            }
            // partner with the largest error gap first, then the rest in order
            let mut best_j = usize::MAX;
            let mut best_gap = -1.0f64;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gap = (e_i - (decision(&alphas, bias, j) - ys[j])).abs();
                if gap > best_gap {
                    best_gap = gap;
                    best_j = j;
                }
            }
            if try_step(&mut alphas, &mut bias, i, best_j) {
                changed += 1;
                continue;
            }
            for j in 0..n {
                if j != best_j && try_step(&mut alphas, &mut bias, i, j) {
                    changed += 1;
                    break;
                }
            }
        }
        passes += 1;
        if changed == 0 {
            break;
        }
        if passes >= MAX_PASSES {
            return Err(Error::Convergence {
                passes,
                violation: kkt_violation(&alphas, bias),
            });
        }
    }

    let max_violation = kkt_violation(&alphas, bias);
    if max_violation > KKT_TOLERANCE {
        return Err(Error::Convergence {
            passes,
            violation: max_violation,
        });
    }
    Ok(SmoSolution {
        alphas,
        bias,
        max_violation,
    })
}

fn machine_from_solution(
    xs: &[Vec<f64>],
    ys: &[f64],
    solution: &SmoSolution,
    gamma: f64,
) -> BinaryMachine {
    let mut vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (i, &a) in solution.alphas.iter().enumerate() {
        if a > ALPHA_EPS {
            vectors.push(xs[i].clone());
            coefficients.push(a * ys[i]);
        }
    }
    BinaryMachine {
        vectors,
        coefficients,
        bias: solution.bias,
        gamma,
    }
}

pub fn train_svm_rbf(data: &Dataset, gamma: f64, c: f64) -> Result<SvmModel> {
    if data.task() != TaskKind::Classification {
        return Err(Error::contract("SVM expects classification data"));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::contract("gamma must be finite and positive"));
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::contract("C must be finite and positive"));
    }
    let class_count = data.class_count().unwrap();
    let xs: Vec<Vec<f64>> = data.examples().iter().map(|ex| ex.features.clone()).collect();
    let labels: Vec<usize> = data
        .examples()
        .iter()
        .map(|ex| match ex.label {
            Label::Class(cl) => cl,
            _ => unreachable!("classification dataset"),
        })
        .collect();

    // binary: a single machine whose positive side is class 1;
    // multiclass: one machine per class
    let positives: Vec<usize> = if class_count == 2 {
        vec![1]
    } else {
        (0..class_count).collect()
    };
    let mut machines = Vec::with_capacity(positives.len());
    let mut max_kkt_violation = 0.0f64;
    for positive in positives {
        let ys: Vec<f64> = labels
            .iter()
            .map(|&l| if l == positive { 1.0 } else { -1.0 })
            .collect();
        let solution = smo_solve(&xs, &ys, gamma, c)?;
        max_kkt_violation = max_kkt_violation.max(solution.max_violation);
        machines.push(machine_from_solution(&xs, &ys, &solution, gamma));
    }
    Ok(SvmModel {
        machines,
        class_count,
        max_kkt_violation,
    })
}
