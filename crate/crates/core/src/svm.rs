//! Soft-margin SVM without intercept, trained in the dual by greedy
//! coordinate ascent (SMO with single-variable working sets).
//!
//! Dropping the bias removes the equality constraint `Σ α_i y_i = 0`, leaving
//!
//! ```text
//! max  Σ α_i - ½ Σ_ij α_i α_j y_i y_j K_ij     s.t. 0 ≤ α_i ≤ C
//! ```
//!
//! whose decision function `f(x) = Σ α_i y_i k(x_i, x)` equals `⟨w, x⟩` with
//! `w = Σ α_i y_i x_i` and no residual term.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;
use crate::sparse::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Box constraint.
    pub c: f64,
    /// Stop once the largest projected-gradient KKT violation is below this.
    pub tol: f64,
    /// Iteration cap in passes of `n` coordinate updates; `None` means `10·n`.
    pub max_passes: Option<usize>,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: None,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if self.tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Dual objective at `alpha`.
    pub objective: f64,
    pub iterations: usize,
    /// Largest KKT violation at termination.
    pub max_violation: f64,
    pub converged: bool,
}

impl DualSolution {
    pub fn support_count(&self) -> usize {
        self.alpha.iter().filter(|&&a| a > 0.0).count()
    }
}

pub(crate) fn check_labels(labels: &[i8], n: usize) -> Result<()> {
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: n,
            found: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::Config(format!("label {bad} is not -1 or +1")));
    }
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Projected-gradient KKT violation of one coordinate.
fn violation(alpha: f64, grad: f64, c: f64) -> f64 {
    if grad > 0.0 && alpha < c {
        grad
    } else if grad < 0.0 && alpha > 0.0 {
        -grad
    } else {
        0.0
    }
}

/// `Σ α - ½ αᵀ Q α` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(kernel: &KernelMatrix, labels: &[i8], alpha: &[f64]) -> f64 {
    let ya: Vec<f64> = alpha.iter().zip(labels).map(|(a, &y)| a * y as f64).collect();
    alpha.iter().sum::<f64>() - 0.5 * kernel.quadratic_form(&ya)
}

pub fn smo_train(kernel: &KernelMatrix, labels: &[i8], cfg: &SvmConfig) -> Result<DualSolution> {
    smo_train_warm(kernel, labels, cfg, None)
}

/// As [`smo_train`], starting from `init` (clipped into the box) when given.
pub fn smo_train_warm(
    kernel: &KernelMatrix,
    labels: &[i8],
    cfg: &SvmConfig,
    init: Option<&[f64]>,
) -> Result<DualSolution> {
    cfg.validate()?;
    let n = kernel.size();
    check_labels(labels, n)?;
    let scale = kernel.rows().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if let Some((row, col)) = kernel.asymmetry(1e-9 * scale) {
        return Err(Error::NotSymmetric { row, col });
    }
    let c = cfg.c;
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mut alpha = match init {
        Some(a) if a.len() == n => a.iter().map(|v| v.clamp(0.0, c)).collect(),
        _ => vec![0.0; n],
    };
    // grad_i = 1 - y_i Σ_j α_j y_j K_ij
    let mut grad: Vec<f64> = (0..n)
        .map(|i| {
            let row = kernel.row(i);
            1.0 - y[i] * (0..n).map(|j| alpha[j] * y[j] * row[j]).sum::<f64>()
        })
        .collect();

    let max_iter = cfg.max_passes.unwrap_or(10 * n).saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut worst = 0.0;
    let mut converged = false;
    while iterations < max_iter {
        let (i, v) = (0..n)
            .map(|i| (i, violation(alpha[i], grad[i], c)))
            .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        worst = v;
        if v < cfg.tol {
            converged = true;
            break;
        }
        let qii = kernel.get(i, i);
        let target = if qii > 0.0 {
            (alpha[i] + grad[i] / qii).clamp(0.0, c)
        } else if grad[i] > 0.0 {
            c
        } else {
            0.0
        };
        let delta = target - alpha[i];
        alpha[i] = target;
        let row = kernel.row(i);
        let ydi = y[i] * delta;
        for j in 0..n {
            grad[j] -= y[j] * ydi * row[j];
        }
        iterations += 1;
    }
    if !converged {
        worst = (0..n).map(|i| violation(alpha[i], grad[i], c)).fold(0.0, f64::max);
        converged = worst < cfg.tol;
        if !converged {
            warn!(
                "SMO stopped after {iterations} updates with KKT violation {worst:.3e} (tol {:.1e})",
                cfg.tol
            );
        }
    }
    let objective = dual_objective(kernel, labels, &alpha);
    if !objective.is_finite() {
        return Err(Error::Numerical("dual objective is not finite".into()));
    }
    Ok(DualSolution {
        alpha,
        objective,
        iterations,
        max_violation: worst,
        converged,
    })
}

/// Dual-form decision value `Σ α_i y_i k_i` given kernel values `k_i = k(x_i, x)`.
pub fn dual_decision(alpha: &[f64], labels: &[i8], kernel_column: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(labels)
        .zip(kernel_column)
        .map(|((a, &y), k)| a * y as f64 * k)
        .sum()
}

/// `w = Σ α_i y_i x_i`.
pub fn primal_weights(solution: &DualSolution, labels: &[i8], vectors: &[SparseVector]) -> Result<SparseVector> {
    let n = solution.alpha.len();
    if labels.len() != n || vectors.len() != n {
        return Err(Error::LengthMismatch {
            what: "training vectors",
            expected: n,
            found: vectors.len().min(labels.len()),
        });
    }
    let dim = vectors.first().map_or(0, SparseVector::dim);
    let mut acc = vec![0.0; dim];
    for ((&a, &y), x) in solution.alpha.iter().zip(labels).zip(vectors) {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim(),
            });
        }
        if a != 0.0 {
            x.axpy_into(a * y as f64, &mut acc);
        }
    }
    Ok(SparseVector::from_dense(&acc))
}

/// Sign of `raw`, with zero mapped to benign.
pub fn decide(raw: f64) -> i8 {
    if raw > 0.0 {
        1
    } else {
        -1
    }
}

/// `(sign, raw)` with `raw = ⟨w, x⟩`.
pub fn predict(w: &SparseVector, x: &SparseVector) -> Result<(i8, f64)> {
    let raw = w.dot(x)?;
    Ok((decide(raw), raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_matrix;

    fn tight() -> SvmConfig {
        SvmConfig {
            c: 1e6,
            tol: 1e-10,
            max_passes: None,
        }
    }

    #[test]
    fn orthonormal_pair_gets_unit_alphas() {
        let xs = vec![SparseVector::from_dense(&[1.0, 0.0]), SparseVector::from_dense(&[0.0, 1.0])];
        let k = kernel_matrix(&xs).unwrap();
        let labels = [1, -1];
        let sol = smo_train(&k, &labels, &tight()).unwrap();
        assert!((sol.alpha[0] - 1.0).abs() < 1e-9 && (sol.alpha[1] - 1.0).abs() < 1e-9);
        for i in 0..2 {
            let f = dual_decision(&sol.alpha, &labels, k.row(i));
            assert!((f - labels[i] as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn antipodal_pair_gives_margin_one_separator() {
        let x = SparseVector::from_dense(&[0.6, 0.8]);
        let xs = vec![x.clone(), x.scaled(-1.0)];
        let k = kernel_matrix(&xs).unwrap();
        let labels = [1, -1];
        let sol = smo_train(&k, &labels, &tight()).unwrap();
        assert!((sol.alpha[0] + sol.alpha[1] - 1.0).abs() < 1e-9);
        let w = primal_weights(&sol, &labels, &xs).unwrap();
        for (a, b) in w.to_dense().iter().zip(x.to_dense()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_tie_is_benign() {
        let e1 = SparseVector::from_dense(&[1.0, 0.0]);
        let e2 = SparseVector::from_dense(&[0.0, 1.0]);
        assert_eq!(predict(&e1, &e1).unwrap(), (1, 1.0));
        assert_eq!(predict(&e1, &e2).unwrap(), (-1, 0.0));
        assert_eq!(predict(&e1.scaled(-2.0), &e1).unwrap(), (-1, -2.0));
        assert!(predict(&e1, &SparseVector::zeros(3)).is_err());
    }

    #[test]
    fn zero_alphas_give_zero_weights() {
        let xs = vec![SparseVector::from_dense(&[1.0, 2.0]), SparseVector::from_dense(&[3.0, 0.0])];
        let sol = DualSolution {
            alpha: vec![0.0, 0.0],
            objective: 0.0,
            iterations: 0,
            max_violation: 0.0,
            converged: true,
        };
        assert!(primal_weights(&sol, &[1, -1], &xs).unwrap().is_zero());
        let e3 = SparseVector::from_dense(&[0.0, 0.0, 0.0, 1.0]);
        let one = DualSolution {
            alpha: vec![1.0],
            ..sol
        };
        assert_eq!(primal_weights(&one, &[1], std::slice::from_ref(&e3)).unwrap(), e3);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let k = KernelMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.4, 1.0]]).unwrap();
        assert!(matches!(
            smo_train(&k, &[1, -1], &SvmConfig::default()),
            Err(Error::NotSymmetric { .. })
        ));
        let k = KernelMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!(matches!(smo_train(&k, &[1, 1], &SvmConfig::default()), Err(Error::SingleClass)));
        let bad = SvmConfig {
            c: 0.0,
            ..SvmConfig::default()
        };
        assert!(smo_train(&k, &[1, -1], &bad).is_err());
    }

    #[test]
    fn duplicated_training_set_keeps_decision_function() {
        let xs: Vec<SparseVector> = [[1.0, 0.2, 0.0], [0.1, 1.0, 0.3], [0.0, 0.4, 1.0], [0.7, 0.7, 0.1]]
            .iter()
            .map(|r| SparseVector::from_dense(r))
            .collect();
        let labels = [1, -1, -1, 1];
        let cfg = SvmConfig {
            c: 10.0,
            tol: 1e-12,
            max_passes: Some(10_000),
        };
        let k = kernel_matrix(&xs).unwrap();
        let w1 = primal_weights(&smo_train(&k, &labels, &cfg).unwrap(), &labels, &xs).unwrap();
        let xs2: Vec<SparseVector> = xs.iter().chain(&xs).cloned().collect();
        let l2: Vec<i8> = labels.iter().chain(&labels).copied().collect();
        // C per sample halves for the duplicated set to keep the same problem
        let cfg2 = SvmConfig { c: 5.0, ..cfg };
        let k2 = kernel_matrix(&xs2).unwrap();
        let w2 = primal_weights(&smo_train(&k2, &l2, &cfg2).unwrap(), &l2, &xs2).unwrap();
        for (a, b) in w1.to_dense().iter().zip(w2.to_dense()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}
