//! Multiple kernel learning over per-view linear kernels.
//!
//! Solves the saddle problem
//!
//! ```text
//! min_{β ≥ 0} max_{0 ≤ α ≤ C}  Σ α - ½ Σ_v β_v s_v(α) + (λ/2) ‖β‖_p²,
//! s_v(α) = αᵀ Y K_v Y α
//! ```
//!
//! by alternation: an SMO solve for `α` on `K(β) = Σ β_v K_v`, then the
//! closed-form minimizer over `β` for that `α`. A β step that would raise the
//! outer objective `J(β) = max_α (...)` is shortened by backtracking, so `J`
//! never increases.
//!
//! The trained model is also expressed in primal form: with composite
//! vectors `X = ⊕_v √β_v x_v`, `⟨X_i, X_j⟩ = Σ_v β_v k_v(x_i, x_j)` and the
//! composite weights `W = Σ α_i y_i X_i` reproduce the dual decision values.

use std::collections::BTreeMap;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_matrix, KernelMatrix};
use crate::sparse::SparseVector;
use crate::svm::{self, DualSolution, SvmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MklConfig {
    /// Norm exponent of the β regularizer.
    pub p: f64,
    /// Regularization strength λ on `‖β‖_p²`.
    pub lambda: f64,
    /// Relative change of the outer objective that counts as converged.
    pub outer_tol: f64,
    pub max_outer_iters: usize,
    /// Inner SVM settings; `svm.c` is the box constraint C.
    pub svm: SvmConfig,
}

impl Default for MklConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            lambda: 1.0,
            outer_tol: 1e-4,
            max_outer_iters: 50,
            svm: SvmConfig::default(),
        }
    }
}

impl MklConfig {
    pub fn c(&self) -> f64 {
        self.svm.c
    }

    pub fn validate(&self) -> Result<()> {
        self.svm.validate()?;
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("p must be >= 1, got {}", self.p)));
        }
        if self.lambda.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.outer_tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Config("outer_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Placement of one view's block inside the composite feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewBlock {
    pub name: String,
    pub beta: f64,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MklFit {
    pub views: Vec<ViewBlock>,
    pub alpha: DualSolution,
    pub labels: Vec<i8>,
    /// `W = Σ α_i y_i X_i` over the concatenated space.
    pub composite_weights: SparseVector,
    /// Outer objective after each accepted iteration.
    pub objective_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub uniform: bool,
}

impl MklFit {
    pub fn betas(&self) -> BTreeMap<String, f64> {
        self.views.iter().map(|v| (v.name.clone(), v.beta)).collect()
    }

    /// β rescaled to sum to one (all zero if every β is zero).
    pub fn normalized_betas(&self) -> BTreeMap<String, f64> {
        let total: f64 = self.views.iter().map(|v| v.beta).sum();
        self.views
            .iter()
            .map(|v| (v.name.clone(), if total > 0.0 { v.beta / total } else { 0.0 }))
            .collect()
    }

    pub fn view(&self, name: &str) -> Option<&ViewBlock> {
        self.views.iter().find(|v| v.name == name)
    }

    pub fn composite_dim(&self) -> usize {
        self.views.last().map_or(0, |v| v.offset + v.len)
    }

    /// `X = ⊕_v √β_v x_v` laid out per the view blocks.
    pub fn composite_embed(&self, sample_views: &BTreeMap<String, SparseVector>) -> Result<SparseVector> {
        let mut pairs = Vec::new();
        for block in &self.views {
            let x = sample_views
                .get(&block.name)
                .ok_or_else(|| Error::UnknownView(block.name.clone()))?;
            if x.dim() != block.len {
                return Err(Error::DimensionMismatch {
                    expected: block.len,
                    found: x.dim(),
                });
            }
            let s = block.beta.sqrt();
            pairs.extend(x.iter().map(|(i, v)| ((block.offset + i) as u32, s * v)));
        }
        SparseVector::from_pairs(self.composite_dim(), pairs)
    }

    /// Primal decision value `⟨W, X⟩`.
    pub fn decision_value(&self, sample_views: &BTreeMap<String, SparseVector>) -> Result<f64> {
        self.composite_weights.dot(&self.composite_embed(sample_views)?)
    }

    /// Dual decision value `Σ_i α_i y_i Σ_v β_v ⟨x_{i,v}, x_v⟩` against the
    /// training vectors the model was fitted on.
    pub fn dual_decision_value(
        &self,
        training: &[(String, Vec<SparseVector>)],
        sample_views: &BTreeMap<String, SparseVector>,
    ) -> Result<f64> {
        let mut total = 0.0;
        for block in &self.views {
            let train = &training
                .iter()
                .find(|(n, _)| *n == block.name)
                .ok_or_else(|| Error::UnknownView(block.name.clone()))?
                .1;
            let x = sample_views
                .get(&block.name)
                .ok_or_else(|| Error::UnknownView(block.name.clone()))?;
            let column: Vec<f64> = train.iter().map(|t| t.dot(x)).collect::<Result<_>>()?;
            total += block.beta * svm::dual_decision(&self.alpha.alpha, &self.labels, &column);
        }
        Ok(total)
    }
}

fn regularizer(betas: &[f64], cfg: &MklConfig) -> f64 {
    let norm = betas.iter().map(|b| b.powf(cfg.p)).sum::<f64>().powf(1.0 / cfg.p);
    0.5 * cfg.lambda * norm * norm
}

/// Minimizer over `β ≥ 0` of `-½ Σ β_v s_v + (λ/2) ‖β‖_p²` for fixed `s ≥ 0`.
pub fn beta_update(s: &[f64], p: f64, lambda: f64) -> Vec<f64> {
    let s: Vec<f64> = s.iter().map(|&v| v.max(0.0)).collect();
    let max = s.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![0.0; s.len()];
    }
    if p <= 1.0 {
        let winners = s.iter().filter(|&&v| v == max).count() as f64;
        let total = max / (2.0 * lambda);
        return s.iter().map(|&v| if v == max { total / winners } else { 0.0 }).collect();
    }
    let q = 1.0 / (p - 1.0);
    let norm = s.iter().map(|&v| v.powf(p * q)).sum::<f64>().powf(1.0 / p);
    let denom = 2.0 * lambda * norm.powf(2.0 - p);
    s.iter().map(|&v| v.powf(q) / denom).collect()
}

fn combine(kernels: &[KernelMatrix], betas: &[f64]) -> Result<KernelMatrix> {
    let n = kernels.first().map_or(0, KernelMatrix::size);
    let mut k = KernelMatrix::zeros(n);
    for (kv, &b) in kernels.iter().zip(betas) {
        if b != 0.0 {
            k.add_scaled(b, kv)?;
        }
    }
    Ok(k)
}

fn view_strengths(kernels: &[KernelMatrix], labels: &[i8], alpha: &[f64]) -> Vec<f64> {
    let ya: Vec<f64> = alpha.iter().zip(labels).map(|(a, &y)| a * y as f64).collect();
    kernels.iter().map(|k| k.quadratic_form(&ya)).collect()
}

/// Result of the kernel-level solve, before primal assembly.
#[derive(Debug, Clone)]
pub struct KernelSolution {
    pub betas: Vec<f64>,
    pub alpha: DualSolution,
    pub objective_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
}

/// Learns β and α from precomputed per-view Gram matrices. With `uniform`,
/// β stays at `1/|V|` and a single SVM is solved.
pub fn solve_kernels(kernels: &[KernelMatrix], labels: &[i8], cfg: &MklConfig, uniform: bool) -> Result<KernelSolution> {
    cfg.validate()?;
    if kernels.is_empty() {
        return Err(Error::Config("no views to combine".into()));
    }
    let n = kernels[0].size();
    if let Some(k) = kernels.iter().find(|k| k.size() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: k.size(),
        });
    }
    svm::check_labels(labels, n)?;
    let v = kernels.len();
    let dead: Vec<bool> = kernels
        .iter()
        .map(|k| (0..n).all(|i| k.get(i, i) == 0.0))
        .collect();
    let mut betas: Vec<f64> = dead
        .iter()
        .map(|&d| if d { 0.0 } else { 1.0 / v as f64 })
        .collect();
    for (i, &d) in dead.iter().enumerate() {
        if d {
            warn!("view {i} embeds every sample to zero; its kernel weight is fixed at 0");
        }
    }

    let solve = |betas: &[f64], warm: Option<&[f64]>| -> Result<(DualSolution, f64)> {
        let k = combine(kernels, betas)?;
        let sol = svm::smo_train_warm(&k, labels, &cfg.svm, warm)?;
        let j = sol.objective + regularizer(betas, cfg);
        Ok((sol, j))
    };

    let (mut alpha, mut j) = solve(&betas, None)?;
    let mut trace = vec![j];
    if uniform {
        return Ok(KernelSolution {
            betas,
            alpha,
            objective_trace: trace,
            outer_iterations: 0,
            converged: true,
        });
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_outer_iters {
        iterations += 1;
        let s = view_strengths(kernels, labels, &alpha.alpha);
        let mut target = beta_update(&s, cfg.p, cfg.lambda);
        for (t, &d) in target.iter_mut().zip(&dead) {
            if d {
                *t = 0.0;
            }
        }
        if target.iter().all(|&b| b == 0.0) {
            converged = true;
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let cand: Vec<f64> = betas
                .iter()
                .zip(&target)
                .map(|(b, t)| b + step * (t - b))
                .collect();
            let (sol, jc) = solve(&cand, Some(&alpha.alpha))?;
            if jc <= j + 1e-12 * j.abs().max(1.0) {
                accepted = Some((cand, sol, jc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, sol, jc)) = accepted else {
            debug!("MKL backtracking found no decrease at iteration {iterations}");
            converged = true;
            break;
        };
        let rel = (j - jc).abs() / jc.abs().max(1e-12);
        betas = cand;
        alpha = sol;
        j = jc;
        trace.push(j);
        debug!("MKL iteration {iterations}: J = {j:.6}, β = {betas:?}");
        if rel < cfg.outer_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        warn!(
            "MKL stopped after {} outer iterations without reaching relative tolerance {:.1e}",
            cfg.max_outer_iters, cfg.outer_tol
        );
    }
    Ok(KernelSolution {
        betas,
        alpha,
        objective_trace: trace,
        outer_iterations: iterations,
        converged,
    })
}

/// Trains on explicit per-view vectors (one list per view, aligned with
/// `labels`) and assembles the composite primal model.
pub fn mkl_train(per_view: &[(String, Vec<SparseVector>)], labels: &[i8], cfg: &MklConfig) -> Result<MklFit> {
    train(per_view, labels, cfg, false)
}

/// β fixed at `1/|V|`: the mean of the base kernels.
pub fn uniform_combine(per_view: &[(String, Vec<SparseVector>)], labels: &[i8], cfg: &MklConfig) -> Result<MklFit> {
    train(per_view, labels, cfg, true)
}

fn train(per_view: &[(String, Vec<SparseVector>)], labels: &[i8], cfg: &MklConfig, uniform: bool) -> Result<MklFit> {
    for (name, vectors) in per_view {
        if vectors.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "view vectors",
                expected: labels.len(),
                found: vectors.len(),
            });
        }
        if per_view.iter().filter(|(n, _)| n == name).count() > 1 {
            return Err(Error::Config(format!("view {name:?} given twice")));
        }
    }
    let kernels: Vec<KernelMatrix> = per_view
        .par_iter()
        .map(|(_, vs)| kernel_matrix(vs))
        .collect::<Result<_>>()?;
    let sol = solve_kernels(&kernels, labels, cfg, uniform)?;
    assemble(per_view, labels, sol, uniform)
}

/// Builds view blocks and `W = Σ α_i y_i X_i`.
pub fn assemble(
    per_view: &[(String, Vec<SparseVector>)],
    labels: &[i8],
    sol: KernelSolution,
    uniform: bool,
) -> Result<MklFit> {
    let mut views = Vec::with_capacity(per_view.len());
    let mut offset = 0;
    for ((name, vectors), &beta) in per_view.iter().zip(&sol.betas) {
        let len = vectors.first().map_or(0, SparseVector::dim);
        views.push(ViewBlock {
            name: name.clone(),
            beta,
            offset,
            len,
        });
        offset += len;
    }
    let mut acc = vec![0.0; offset];
    for (block, (_, vectors)) in views.iter().zip(per_view) {
        let root = block.beta.sqrt();
        for ((&a, &y), x) in sol.alpha.alpha.iter().zip(labels).zip(vectors) {
            if x.dim() != block.len {
                return Err(Error::DimensionMismatch {
                    expected: block.len,
                    found: x.dim(),
                });
            }
            if a == 0.0 || root == 0.0 {
                continue;
            }
            let f = a * y as f64 * root;
            for (i, v) in x.iter() {
                acc[block.offset + i] += f * v;
            }
        }
    }
    Ok(MklFit {
        views,
        alpha: sol.alpha,
        labels: labels.to_vec(),
        composite_weights: SparseVector::from_dense(&acc),
        objective_trace: sol.objective_trace,
        outer_iterations: sol.outer_iterations,
        converged: sol.converged,
        uniform,
    })
}
