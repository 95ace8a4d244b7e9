//! Two-stage training: Adam with gradient clipping, plateau learning-rate
//! decay, and optional adaptive loss reweighting, followed by L-BFGS
//! refinement on the frozen objective.

use std::collections::VecDeque;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CollocationBatch;
use crate::loss::{
    adaptive_reweight, empirical_objective, objective_gradient, LossHistory, ResidualWeights,
    WeightMode,
};
use crate::network::{save_checkpoint, Network, ParameterVector};
use crate::transform::MaterialModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
    pub epochs: usize,
    /// Interior-point minibatch size; None = full batch. Boundary sets are
    /// always evaluated in full.
    pub minibatch_size: Option<usize>,
    /// Rescale the gradient to this norm when exceeded; None disables.
    pub clip_norm: Option<f64>,
    /// Multiplicative learning-rate factor applied on plateau.
    pub lr_decay: f64,
    /// Plateau detector: decay when the loss improves by less than
    /// `plateau_rel` over `plateau_window` epochs.
    pub plateau_window: usize,
    pub plateau_rel: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
            epochs: 1000,
            minibatch_size: None,
            clip_norm: Some(10.0),
            lr_decay: 0.5,
            plateau_window: 200,
            plateau_rel: 0.01,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps_hat > 0.0
            && self.lr_decay > 0.0
            && self.clip_norm.map_or(true, |c| c > 0.0)
            && self.minibatch_size.map_or(true, |m| m > 0);
        if !ok {
            return Err(Error::Config("invalid Adam hyperparameters".into()));
        }
        Ok(())
    }
}

/// First/second moment accumulators for Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: usize,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `theta` in place. The gradient is
/// norm-clipped before entering the moment recurrences.
pub fn adam_step(
    state: &mut AdamState,
    theta: &mut [f64],
    gradient: &[f64],
    config: &AdamConfig,
    learning_rate: f64,
) -> Result<()> {
    if gradient.len() != theta.len() || state.m.len() != theta.len() {
        return Err(Error::ShapeMismatch("adam buffers".into()));
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::Training("non-finite gradient entries".into()));
    }
    let norm: f64 = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    let scale = match config.clip_norm {
        Some(c) if norm > c => c / norm,
        _ => 1.0,
    };
    state.t += 1;
    let bc1 = 1.0 - config.beta1.powi(state.t as i32);
    let bc2 = 1.0 - config.beta2.powi(state.t as i32);
    for i in 0..theta.len() {
        let g = gradient[i] * scale;
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        let mhat = state.m[i] / bc1;
        let vhat = state.v[i] / bc2;
        theta[i] -= learning_rate * mhat / (vhat.sqrt() + config.eps_hat);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbfgsConfig {
    pub max_iters: usize,
    pub history_size: usize,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub grad_tol: f64,
    pub step_tol: f64,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            max_iters: 500,
            history_size: 10,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            grad_tol: 1e-9,
            step_tol: 1e-16,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.history_size >= 1
            && self.wolfe_c1 > 0.0
            && self.wolfe_c1 < 0.5
            && self.wolfe_c2 > self.wolfe_c1
            && self.wolfe_c2 < 1.0
            && self.grad_tol > 0.0
            && self.step_tol > 0.0;
        if !ok {
            return Err(Error::Config("invalid L-BFGS hyperparameters".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LbfgsStatus {
    Converged,
    MaxIters,
    SmallStep,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct LbfgsOutcome {
    pub theta: Vec<f64>,
    pub status: LbfgsStatus,
    pub iterations: usize,
    pub final_value: f64,
    pub final_grad_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Strong-Wolfe line search (bracket + zoom with cubic/bisection steps).
/// Returns (alpha, f(alpha), grad at alpha) or None on failure.
fn wolfe_search<F>(
    f0: f64,
    g0_dot_d: f64,
    x: &[f64],
    d: &[f64],
    eval: &mut F,
    c1: f64,
    c2: f64,
) -> Option<(f64, f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut xt = vec![0.0; n];
    let mut phi = |a: f64, grad: &mut Vec<f64>, xt: &mut Vec<f64>| -> (f64, f64) {
        for i in 0..n {
            xt[i] = x[i] + a * d[i];
        }
        let v = eval(xt, grad);
        (v, dot(grad, d))
    };
    let (mut a_prev, mut f_prev, mut dg_prev) = (0.0, f0, g0_dot_d);
    let mut a = 1.0f64;
    let a_max = 1e10;
    let mut bracket: Option<(f64, f64, f64, f64, f64, f64)> = None; // lo: (a, f, dg), hi: (a, f, dg)
    for i in 0..25 {
        let (fa, dga) = phi(a, &mut grad, &mut xt);
        if !fa.is_finite() {
            // back off into the finite region
            a = 0.5 * (a_prev + a);
            continue;
        }
        if fa > f0 + c1 * a * g0_dot_d || (i > 0 && fa >= f_prev) {
            bracket = Some((a_prev, f_prev, dg_prev, a, fa, dga));
            break;
        }
        if dga.abs() <= -c2 * g0_dot_d {
            return Some((a, fa, grad));
        }
        if dga >= 0.0 {
            bracket = Some((a, fa, dga, a_prev, f_prev, dg_prev));
            break;
        }
        a_prev = a;
        f_prev = fa;
        dg_prev = dga;
        a = (2.0 * a).min(a_max);
        if a >= a_max {
            return None;
        }
    }
    let (mut alo, mut flo, mut dglo, mut ahi, mut fhi, _dghi) = bracket?;
    for _ in 0..40 {
        // bisection-guarded quadratic interpolation in the bracket
        let mut a_j = alo - 0.5 * dglo * (ahi - alo) * (ahi - alo)
            / (fhi - flo - dglo * (ahi - alo));
        let lo = alo.min(ahi);
        let hi = alo.max(ahi);
        if !a_j.is_finite() || a_j <= lo + 0.1 * (hi - lo) || a_j >= hi - 0.1 * (hi - lo) {
            a_j = 0.5 * (alo + ahi);
        }
        let (fj, dgj) = phi(a_j, &mut grad, &mut xt);
        if !fj.is_finite() || fj > f0 + c1 * a_j * g0_dot_d || fj >= flo {
            ahi = a_j;
            fhi = fj;
        } else {
            if dgj.abs() <= -c2 * g0_dot_d {
                return Some((a_j, fj, grad));
            }
            if dgj * (ahi - alo) >= 0.0 {
                ahi = alo;
                fhi = flo;
            }
            alo = a_j;
            flo = fj;
            dglo = dgj;
        }
        if (ahi - alo).abs() < 1e-16 * (1.0 + alo.abs()) {
            break;
        }
    }
    None
}

/// L-BFGS with two-loop recursion and strong-Wolfe line search. `eval` fills
/// the gradient buffer and returns the objective; it must be deterministic.
/// Line-search failure is not an error: the best iterate so far is returned
/// with a status flag.
pub fn lbfgs_run<F>(theta_init: &[f64], mut eval: F, config: &LbfgsConfig) -> Result<LbfgsOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    config.validate()?;
    let n = theta_init.len();
    let mut x = theta_init.to_vec();
    let mut g = vec![0.0; n];
    let mut f = eval(&x, &mut g);
    if !f.is_finite() {
        return Err(Error::Training("non-finite objective at L-BFGS start".into()));
    }
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new(); // (s, y, rho)
    let mut status = LbfgsStatus::MaxIters;
    let mut iters = 0;
    for _ in 0..config.max_iters {
        let gnorm = norm(&g);
        if gnorm <= config.grad_tol {
            status = LbfgsStatus::Converged;
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in &mut q {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += s[i] * (a - b);
            }
        }
        let d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut dg = dot(&g, &d);
        let d = if dg >= 0.0 {
            // not a descent direction (stale curvature); fall back to steepest
            pairs.clear();
            dg = -dot(&g, &g);
            g.iter().map(|v| -v).collect()
        } else {
            d
        };
        match wolfe_search(f, dg, &x, &d, &mut eval, config.wolfe_c1, config.wolfe_c2) {
            Some((a, fa, ga)) => {
                let mut s = vec![0.0; n];
                let mut y = vec![0.0; n];
                let mut step_norm = 0.0;
                for i in 0..n {
                    s[i] = a * d[i];
                    step_norm += s[i] * s[i];
                    y[i] = ga[i] - g[i];
                    x[i] += s[i];
                }
                let sy = dot(&s, &y);
                if sy > 0.0 {
                    if pairs.len() == config.history_size {
                        pairs.pop_front();
                    }
                    pairs.push_back((s, y, 1.0 / sy));
                }
                f = fa;
                g = ga;
                iters += 1;
                if step_norm.sqrt() <= config.step_tol {
                    status = LbfgsStatus::SmallStep;
                    break;
                }
            }
            None => {
                status = LbfgsStatus::LineSearchFailed;
                break;
            }
        }
    }
    if iters == 0 && norm(&g) <= config.grad_tol {
        status = LbfgsStatus::Converged;
    }
    Ok(LbfgsOutcome {
        final_grad_norm: norm(&g),
        theta: x,
        status,
        iterations: iters,
        final_value: f,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub lbfgs: LbfgsConfig,
    /// Checkpoint every K epochs into `out_dir` when both are set.
    pub checkpoint_every: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            lbfgs: LbfgsConfig::default(),
            checkpoint_every: None,
            out_dir: None,
        }
    }
}

/// Full trainer state returned by [`train`].
pub struct TrainerState {
    pub theta: Vec<f64>,
    pub history: LossHistory,
    pub weights: ResidualWeights,
    pub adam_epochs_run: usize,
    pub lbfgs: Option<LbfgsOutcome>,
    /// Iteration index at which the weights were frozen for stage 2.
    pub frozen_at: Option<usize>,
    pub loss_after_adam: f64,
    pub final_loss: f64,
}

/// Two-stage training on a fixed collocation batch. Stage 1 runs Adam with
/// optional adaptive reweighting, plateau learning-rate decay, and non-finite
/// recovery; stage 2 freezes the weights and refines with L-BFGS. The stage-2
/// objective is the same batch with frozen weights, so its terminal loss never
/// exceeds the stage-1 terminal loss.
pub fn train(
    network: &Network,
    theta_init: &[f64],
    batch: &CollocationBatch,
    material: &MaterialModel,
    weights: &ResidualWeights,
    config: &TrainConfig,
) -> Result<TrainerState> {
    network.check_theta(theta_init)?;
    weights.validate()?;
    config.adam.validate()?;
    config.lbfgs.validate()?;
    let n = theta_init.len();
    let mut theta = theta_init.to_vec();
    let mut ws = network.workspace();
    let mut grad = vec![0.0; n];
    let mut adam_state = AdamState::new(n);
    let mut history = LossHistory::default();
    let mut w = weights.clone();
    let mut lr = config.adam.learning_rate;
    let mut last_finite = theta.clone();
    let mut recoveries = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(batch.seed ^ 0x5eed_ad4a);
    let mut epochs_run = 0;

    for epoch in 0..config.adam.epochs {
        let sub;
        let eb: &CollocationBatch = match config.adam.minibatch_size {
            Some(mb) if mb < batch.n_interior() => {
                let mut b = batch.clone();
                b.interior = (0..mb)
                    .map(|_| batch.interior[rng.gen_range(0..batch.interior.len())])
                    .collect();
                sub = b;
                &sub
            }
            _ => batch,
        };
        let breakdown = objective_gradient(network, &theta, eb, material, &w, &mut ws, &mut grad)?;
        if !breakdown.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            recoveries += 1;
            if recoveries > 3 {
                return Err(Error::Training(
                    "loss stayed non-finite after 3 learning-rate halvings".into(),
                ));
            }
            theta.copy_from_slice(&last_finite);
            adam_state = AdamState::new(n);
            lr *= 0.5;
            continue;
        }
        last_finite.copy_from_slice(&theta);
        history.push(breakdown);
        if w.mode == WeightMode::Adaptive {
            w = adaptive_reweight(&history, &w);
        }
        // plateau learning-rate decay on the full history
        let pw = config.adam.plateau_window;
        if pw > 0 && history.records.len() >= 2 * pw && history.records.len() % pw == 0 {
            let len = history.records.len();
            let old = history.records[len - pw - 1].total;
            let new = history.records[len - 1].total;
            if old.is_finite() && new > old * (1.0 - config.adam.plateau_rel) {
                lr *= config.adam.lr_decay;
            }
        }
        adam_step(&mut adam_state, &mut theta, &grad, &config.adam, lr)?;
        epochs_run = epoch + 1;
        if let (Some(k), Some(dir)) = (config.checkpoint_every, &config.out_dir) {
            if k > 0 && (epoch + 1) % k == 0 {
                std::fs::create_dir_all(dir)?;
                let pv = ParameterVector {
                    data: theta.clone(),
                    shape: network.shape_map(),
                };
                save_checkpoint(&dir.join(format!("epoch_{:06}.dlsp", epoch + 1)), network, &pv)?;
            }
        }
    }

    // stage 2: frozen weights, frozen batch
    let frozen_at = Some(history.records.len());
    let loss_after_adam = empirical_objective(network, &theta, batch, material, &w)?.total;
    let lbfgs = if config.lbfgs.max_iters > 0 {
        let w2 = w.clone();
        let mut ws2 = network.workspace();
        let mut stage2_hist: Vec<crate::loss::LossBreakdown> = Vec::new();
        let outcome = lbfgs_run(
            &theta,
            |th, g| match objective_gradient(network, th, batch, material, &w2, &mut ws2, g) {
                Ok(b) => {
                    stage2_hist.push(b);
                    b.total
                }
                Err(_) => f64::INFINITY,
            },
            &config.lbfgs,
        )?;
        if outcome.final_value <= loss_after_adam {
            theta = outcome.theta.clone();
        }
        // log the accepted stage-2 trajectory (weights constant by construction)
        for b in stage2_hist {
            history.push(b);
        }
        Some(outcome)
    } else {
        None
    };
    let final_loss = empirical_objective(network, &theta, batch, material, &w)?.total;
    Ok(TrainerState {
        theta,
        history,
        weights: w,
        adam_epochs_run: epochs_run,
        lbfgs,
        frozen_at,
        loss_after_adam,
        final_loss,
    })
}
