// SPDX-License-Identifier: MIT OR Apache-2.0

//! Continuous best-subset optimizer.
//!
//! For `t ∈ [0,1]^n` let `M_t = T XᵀX T + n (I - T²)` and let `β̃_t` solve
//! `M_t u = T Xᵀ y`. The relaxed Lagrangian
//!
//! ```text
//! f(t) = (1/n) ‖y - X T β̃_t‖² + λ Σ t_i
//! ```
//!
//! agrees with the restricted least-squares loss at the corners of the cube.
//! It is minimized with Adam over `w ∈ ℝ^n` through `t_i = 1 - exp(-w_i²)`,
//! and the final `t` is thresholded to a selection `s`.

use alloc::vec::Vec;
use libm::{exp, log, sqrt};

use crate::error::{check_len, Error, Result};
use crate::linalg::{gram_apply, prefix_sum, suffix_sum, DiagonalScaling, MtFactor};

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CombssOptions {
    pub learning_rate: f64,
    pub max_iterations: usize,
    /// Stop once `max_i |t_i(k+1) - t_i(k)|` falls to this value.
    pub convergence_tol: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// `s_i = 1` iff `t_i > threshold`.
    pub threshold: f64,
    /// Every coordinate starts here. Must be in `(0, 1)`: `w = 0` is a
    /// stationary point of the reparameterization.
    pub t_init: f64,
}

impl Default for CombssOptions {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_iterations: 1000,
            convergence_tol: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            threshold: 0.5,
            t_init: 0.5,
        }
    }
}

impl CombssOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| {
            Err(Error::InvalidInput(alloc::format!(
                "combss options: {what}"
            )))
        };
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergence_tol must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam decay rates must lie in [0, 1)");
        }
        if !(self.adam_epsilon > 0.0) {
            return bad("adam_epsilon must be positive");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad("threshold must lie in (0, 1)");
        }
        if !(self.t_init > 0.0 && self.t_init < 1.0) {
            return bad("t_init must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Outcome of one optimizer run at a fixed penalty.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CombssRun {
    pub lambda: f64,
    pub t_final: Vec<f64>,
    pub s: Vec<bool>,
    pub selected_count: usize,
    pub objective_value: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

/// `t_i = 1 - exp(-w_i²)`.
pub fn map_w_to_t(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&wi| w_to_t(wi)).collect()
}

fn w_to_t(w: f64) -> f64 {
    -libm::expm1(-w * w)
}

fn dt_dw(w: f64) -> f64 {
    2.0 * w * exp(-w * w)
}

/// Nonnegative inverse of [`map_w_to_t`] for `t ∈ [0, 1)`.
pub fn t_to_w(t: f64) -> f64 {
    sqrt(-log(1.0 - t))
}

/// `s_i = t_i > threshold`.
pub fn threshold_t(t: &[f64], threshold: f64) -> Vec<bool> {
    t.iter().map(|&ti| ti > threshold).collect()
}

/// Quantities shared by the objective and its gradient at one `t`.
struct Relaxation {
    factor: MtFactor,
    beta: Vec<f64>,
    /// `X T β̃`.
    fitted: Vec<f64>,
    residual: Vec<f64>,
}

impl Relaxation {
    fn new(t: &[f64], y: &[f64]) -> Result<Self> {
        check_len(t.len(), y.len())?;
        let factor = MtFactor::new(DiagonalScaling::new(t))?;
        let xty = suffix_sum(y);
        let t = factor.scaling().t();
        let rhs: Vec<f64> = t.iter().zip(&xty).map(|(ti, ci)| ti * ci).collect();
        let beta = factor.solve(&rhs)?;
        let t_beta: Vec<f64> = t.iter().zip(&beta).map(|(ti, bi)| ti * bi).collect();
        let fitted = prefix_sum(&t_beta);
        let residual = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
        Ok(Self {
            factor,
            beta,
            fitted,
            residual,
        })
    }

    fn n(&self) -> f64 {
        self.beta.len() as f64
    }

    fn loss(&self) -> f64 {
        self.residual.iter().map(|e| e * e).sum::<f64>() / self.n()
    }

    /// `∂/∂t_i` of `(1/n)‖y - X T β̃_t‖²`, via one adjoint solve.
    ///
    /// With `r = Xᵀ e` and `v = M_t⁻¹ T r`:
    /// `∂‖e‖²/∂t_i = -2 [ (β_i + v_i) r_i - β_i (XᵀX T v)_i + 2n t_i v_i β_i ]`.
    fn loss_gradient_t(&self) -> Result<Vec<f64>> {
        let n = self.n();
        let t = self.factor.scaling().t();
        let r = suffix_sum(&self.residual);
        let tr: Vec<f64> = t.iter().zip(&r).map(|(ti, ri)| ti * ri).collect();
        let v = self.factor.solve(&tr)?;
        let tv: Vec<f64> = t.iter().zip(&v).map(|(ti, vi)| ti * vi).collect();
        let gtv = gram_apply(&tv);
        Ok((0..t.len())
            .map(|i| {
                let b = self.beta[i];
                let inner = (b + v[i]) * r[i] - b * gtv[i] + 2.0 * n * t[i] * v[i] * b;
                -2.0 * inner / n
            })
            .collect())
    }
}

/// `β̃_t`, the solution of `M_t u = T Xᵀ y` (with `t` clamped).
pub fn beta_tilde(t: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(Relaxation::new(t, y)?.beta)
}

/// `X T β̃_t`, the relaxed fitted means.
pub fn relaxed_fit(t: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    Ok(Relaxation::new(t, y)?.fitted)
}

/// `(1/n)‖y - X T β̃_t‖² + λ Σ t_i` with `t` clamped before the solve.
/// The penalty uses `t` as given.
pub fn objective(t: &[f64], y: &[f64], lambda: f64) -> Result<f64> {
    let relax = Relaxation::new(t, y)?;
    Ok(relax.loss() + lambda * t.iter().sum::<f64>())
}

/// Gradient of `w ↦ objective(map_w_to_t(w), y, λ)`.
pub fn gradient(w: &[f64], y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let t = map_w_to_t(w);
    let relax = Relaxation::new(&t, y)?;
    Ok(chain_rule(&relax.loss_gradient_t()?, w, lambda))
}

fn chain_rule(loss_grad_t: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    loss_grad_t
        .iter()
        .zip(w)
        .map(|(&g, &wi)| (g + lambda) * dt_dw(wi))
        .collect()
}

/// Minimizes the relaxed Lagrangian at penalty `lambda` and thresholds the
/// result. Hitting `max_iterations` is reported through `converged = false`.
pub fn run_combss(y: &[f64], lambda: f64, opts: &CombssOptions) -> Result<CombssRun> {
    let n = y.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two observations".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(
            "penalty must be finite and nonnegative".into(),
        ));
    }
    opts.validate()?;

    let mut w = alloc::vec![t_to_w(opts.t_init); n];
    let mut t = map_w_to_t(&w);
    let mut m = alloc::vec![0.0; n];
    let mut v = alloc::vec![0.0; n];
    let (mut pow1, mut pow2) = (1.0, 1.0);
    let mut converged = false;
    let mut iterations_used = 0;

    for _ in 0..opts.max_iterations {
        iterations_used += 1;
        let relax = Relaxation::new(&t, y)?;
        let grad = chain_rule(&relax.loss_gradient_t()?, &w, lambda);

        pow1 *= opts.adam_beta1;
        pow2 *= opts.adam_beta2;
        for i in 0..n {
            let g = grad[i];
            m[i] = opts.adam_beta1 * m[i] + (1.0 - opts.adam_beta1) * g;
            v[i] = opts.adam_beta2 * v[i] + (1.0 - opts.adam_beta2) * g * g;
            let m_hat = m[i] / (1.0 - pow1);
            let v_hat = v[i] / (1.0 - pow2);
            w[i] -= opts.learning_rate * m_hat / (sqrt(v_hat) + opts.adam_epsilon);
        }

        let t_next = map_w_to_t(&w);
        let change = t
            .iter()
            .zip(&t_next)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        t = t_next;
        if change <= opts.convergence_tol {
            converged = true;
            break;
        }
    }

    let objective_value = objective(&t, y, lambda)?;
    let s = threshold_t(&t, opts.threshold);
    let selected_count = s.iter().filter(|&&si| si).count();
    Ok(CombssRun {
        lambda,
        t_final: t,
        s,
        selected_count,
        objective_value,
        iterations_used,
        converged,
    })
}
