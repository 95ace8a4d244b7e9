//! Residuals, the weighted least-squares objective in Monte Carlo form,
//! coercivity-derived default weights, and adaptive reweighting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CollocationBatch, Point};
use crate::network::{FieldEval, FieldSensitivity, Network, Workspace};
use crate::transform::{transform_boundary_pressure, MaterialModel};

/// Anything that produces the four field quantities at a point: a network
/// with fixed parameters, or an exact reference solution.
pub trait Field {
    fn eval(&self, x: &Point) -> FieldEval;
}

impl<F: Fn(&Point) -> FieldEval> Field for F {
    fn eval(&self, x: &Point) -> FieldEval {
        self(x)
    }
}

/// A network with fixed parameters viewed as a [`Field`].
pub struct NetworkField<'a> {
    network: &'a Network,
    theta: &'a [f64],
    ws: std::cell::RefCell<Workspace>,
}

impl<'a> NetworkField<'a> {
    pub fn new(network: &'a Network, theta: &'a [f64]) -> Self {
        NetworkField {
            network,
            theta,
            ws: std::cell::RefCell::new(network.workspace()),
        }
    }
}

impl Field for NetworkField<'_> {
    fn eval(&self, x: &Point) -> FieldEval {
        self.network
            .forward_with_spatial_derivs(self.theta, x, &mut self.ws.borrow_mut())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Fixed,
    Coercivity,
    Adaptive,
}

/// Loss weights lambda_1..lambda_4 and the adaptive-rebalancing knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualWeights {
    pub lambda: [f64; 4],
    pub mode: WeightMode,
    pub alpha: f64,
    pub epsilon: f64,
    pub window: usize,
    pub trigger_ratio: f64,
}

impl Default for ResidualWeights {
    fn default() -> Self {
        ResidualWeights {
            lambda: [1.0; 4],
            mode: WeightMode::Fixed,
            alpha: 1.0,
            epsilon: 1e-8,
            window: 50,
            trigger_ratio: 5.0,
        }
    }
}

impl ResidualWeights {
    pub fn unit_adaptive() -> Self {
        ResidualWeights {
            mode: WeightMode::Adaptive,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("all loss weights must be > 0".into()));
        }
        if !(self.alpha > 0.0) || !(self.trigger_ratio > 1.0) || self.window < 1 {
            return Err(Error::Config(
                "adaptive weighting requires alpha > 0, trigger_ratio > 1, window >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// The four empirical components, their weights, and the weighted total.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pi: [f64; 4],
    pub lambda: [f64; 4],
    pub total: f64,
    pub n_interior: usize,
    pub n_gamma_u: usize,
    pub n_gamma_p: usize,
}

/// Per-iteration loss records plus windowed relative-decrease statistics.
#[derive(Debug, Clone, Default)]
pub struct LossHistory {
    pub records: Vec<LossBreakdown>,
}

impl LossHistory {
    pub fn push(&mut self, b: LossBreakdown) {
        self.records.push(b);
    }

    pub fn last(&self) -> Option<&LossBreakdown> {
        self.records.last()
    }

    /// Moving averages of the per-component relative decreases r_m over the
    /// trailing `window` iteration pairs. None until enough records exist.
    pub fn moving_averages(&self, window: usize, epsilon: f64) -> Option<[f64; 4]> {
        if self.records.len() < window + 1 {
            return None;
        }
        let start = self.records.len() - window - 1;
        let mut rbar = [0.0; 4];
        for t in start..self.records.len() - 1 {
            let prev = &self.records[t];
            let curr = &self.records[t + 1];
            for m in 0..4 {
                rbar[m] += relative_decrease(prev.pi[m], curr.pi[m], epsilon);
            }
        }
        for r in &mut rbar {
            *r /= window as f64;
        }
        Some(rbar)
    }

    /// CSV with columns `iter, pi_1..pi_4, lambda_1..lambda_4, total`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "iter,pi_1,pi_2,pi_3,pi_4,lambda_1,lambda_2,lambda_3,lambda_4,total\n",
        );
        for (i, r) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                i,
                r.pi[0],
                r.pi[1],
                r.pi[2],
                r.pi[3],
                r.lambda[0],
                r.lambda[1],
                r.lambda[2],
                r.lambda[3],
                r.total
            ));
        }
        out
    }
}

/// R1 = mu * K0(x)^-1 * u + grad P.
pub fn residual_r1(eval: &FieldEval, material: &MaterialModel, x: &Point, nd: usize) -> [f64; 3] {
    let mut r = [0.0f64; 3];
    match material.k0.scalar_at(x) {
        Some(k) => {
            let c = material.mu / k;
            for i in 0..nd {
                r[i] = c * eval.u[i] + eval.grad_p[i];
            }
        }
        None => {
            let kinv = material
                .k0
                .tensor_at(x, nd)
                .inverse()
                .expect("K0 is invertible under the ellipticity invariants");
            let v = kinv.apply(&eval.u);
            for i in 0..nd {
                r[i] = material.mu * v[i] + eval.grad_p[i];
            }
        }
    }
    r
}

/// R2 = div u.
#[inline]
pub fn residual_r2(eval: &FieldEval) -> f64 {
    eval.div_u
}

/// R3 = u . n - u_n.
#[inline]
pub fn residual_r3(eval: &FieldEval, normal: &Point, u_n: f64) -> f64 {
    eval.u[0] * normal[0] + eval.u[1] * normal[1] + eval.u[2] * normal[2] - u_n
}

/// R4 = P - P_p (both in transformed variables).
#[inline]
pub fn residual_r4(eval: &FieldEval, p_p_transformed: f64) -> f64 {
    eval.p - p_p_transformed
}

/// Squared weighted norm of R1: R1 . (K0/mu) R1, i.e. the square of
/// mu^{-1/2} sqrt(K0) R1.
fn r1_weighted_sq(r1: &[f64; 3], material: &MaterialModel, x: &Point, nd: usize) -> f64 {
    match material.k0.scalar_at(x) {
        Some(k) => {
            let c = k / material.mu;
            let mut s = 0.0;
            for r in r1.iter().take(nd) {
                s += c * r * r;
            }
            s
        }
        None => material.k0.tensor_at(x, nd).quad_form(r1) / material.mu,
    }
}

/// Evaluate the empirical objective for an arbitrary field over a batch.
pub fn empirical_objective_field(
    field: &dyn Field,
    batch: &CollocationBatch,
    material: &MaterialModel,
    weights: &ResidualWeights,
    nd: usize,
) -> Result<LossBreakdown> {
    let n_omega = batch.n_interior();
    let n_u = batch.n_gamma_u();
    let n_p = batch.n_gamma_p();
    if n_omega == 0 {
        return Err(Error::Config("empty interior collocation set".into()));
    }
    if n_p == 0 && weights.lambda[3] != 0.0 {
        return Err(Error::Config(
            "no prescribed-pressure points but lambda_4 > 0; the pressure level is unconstrained"
                .into(),
        ));
    }
    let mut pi = [0.0f64; 4];
    for x in &batch.interior {
        let e = field.eval(x);
        let r1 = residual_r1(&e, material, x, nd);
        pi[0] += r1_weighted_sq(&r1, material, x, nd);
        let r2 = residual_r2(&e);
        pi[1] += r2 * r2;
    }
    pi[0] /= 2.0 * n_omega as f64;
    pi[1] /= 2.0 * n_omega as f64;
    for seg in &batch.segments {
        if seg.is_pressure {
            for (x, &p_p) in seg.points.iter().zip(&seg.data) {
                let e = field.eval(x);
                let r4 = residual_r4(&e, transform_boundary_pressure(material, p_p)?);
                pi[3] += r4 * r4;
            }
        } else {
            for ((x, n), &u_n) in seg.points.iter().zip(&seg.normals).zip(&seg.data) {
                let e = field.eval(x);
                let r3 = residual_r3(&e, n, u_n);
                pi[2] += r3 * r3;
            }
        }
    }
    if n_u > 0 {
        pi[2] /= 2.0 * n_u as f64;
    }
    if n_p > 0 {
        pi[3] /= 2.0 * n_p as f64;
    }
    let total = (0..4).map(|m| weights.lambda[m] * pi[m]).sum();
    Ok(LossBreakdown {
        pi,
        lambda: weights.lambda,
        total,
        n_interior: n_omega,
        n_gamma_u: n_u,
        n_gamma_p: n_p,
    })
}

/// Evaluate the empirical objective for a parameterized network.
pub fn empirical_objective(
    network: &Network,
    theta: &[f64],
    batch: &CollocationBatch,
    material: &MaterialModel,
    weights: &ResidualWeights,
) -> Result<LossBreakdown> {
    network.check_theta(theta)?;
    let ws = std::cell::RefCell::new(network.workspace());
    let field = |x: &Point| network.forward_with_spatial_derivs(theta, x, &mut ws.borrow_mut());
    empirical_objective_field(&field, batch, material, weights, network.config.nd)
}

/// The coercivity proof's explicit weight recipe. `_c_p` (Poincare constant)
/// is accepted for interface completeness; the recipe fixes lambda_4 = 1
/// independently of it.
pub fn coercivity_weights(mu: f64, k_min: f64, c_div: f64, _c_p: f64) -> Result<ResidualWeights> {
    if !(mu > 0.0 && k_min > 0.0 && c_div > 0.0 && _c_p > 0.0) {
        return Err(Error::Config("coercivity weight inputs must be > 0".into()));
    }
    let l1 = 4.0 * mu / k_min;
    // lambda_2 = 2 C_div^2 lambda_1 epsilon with epsilon = 2 mu / k_min
    let l23 = 16.0 * mu * mu * c_div * c_div / (k_min * k_min);
    Ok(ResidualWeights {
        lambda: [l1, l23, l23, 1.0],
        mode: WeightMode::Coercivity,
        ..Default::default()
    })
}

/// |(prev - curr) / (prev + epsilon)|.
#[inline]
pub fn relative_decrease(prev: f64, curr: f64, epsilon: f64) -> f64 {
    ((prev - curr) / (prev + epsilon)).abs()
}

/// Rebalance the weights from the windowed relative-decrease averages: the
/// slowest-decreasing component is boosted toward 1 + alpha, the fastest
/// stays at 1. No-op until the window fills or while the spread is below
/// `trigger_ratio`.
pub fn adaptive_reweight(history: &LossHistory, weights: &ResidualWeights) -> ResidualWeights {
    let rbar = match history.moving_averages(weights.window, weights.epsilon) {
        Some(r) => r,
        None => return weights.clone(),
    };
    let rmax = rbar.iter().cloned().fold(f64::MIN, f64::max);
    let rmin = rbar.iter().cloned().fold(f64::MAX, f64::min);
    if rmin <= 0.0 {
        if rmax <= 0.0 {
            // stalled on every component: no information to rebalance on
            return weights.clone();
        }
    } else if rmax / rmin <= weights.trigger_ratio {
        return weights.clone();
    }
    let mut out = weights.clone();
    for m in 0..4 {
        out.lambda[m] = 1.0 + weights.alpha * (rmax - rbar[m]) / (rmax - rmin + weights.epsilon);
    }
    out
}

/// Exact gradient of the empirical objective in theta. Accumulates into
/// `grad` (zeroed first) and returns the loss breakdown from the same pass.
pub fn objective_gradient(
    network: &Network,
    theta: &[f64],
    batch: &CollocationBatch,
    material: &MaterialModel,
    weights: &ResidualWeights,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> Result<LossBreakdown> {
    network.check_theta(theta)?;
    if grad.len() != theta.len() {
        return Err(Error::ShapeMismatch("gradient buffer length".into()));
    }
    grad.iter_mut().for_each(|g| *g = 0.0);
    let nd = network.config.nd;
    let n_omega = batch.n_interior();
    let n_u = batch.n_gamma_u();
    let n_p = batch.n_gamma_p();
    if n_omega == 0 {
        return Err(Error::Config("empty interior collocation set".into()));
    }
    if n_p == 0 && weights.lambda[3] != 0.0 {
        return Err(Error::Config(
            "no prescribed-pressure points but lambda_4 > 0".into(),
        ));
    }
    let mut pi = [0.0f64; 4];
    let c1 = weights.lambda[0] / n_omega as f64;
    let c2 = weights.lambda[1] / n_omega as f64;
    for x in &batch.interior {
        let e = network.forward_with_spatial_derivs(theta, x, ws);
        let r1 = residual_r1(&e, material, x, nd);
        pi[0] += r1_weighted_sq(&r1, material, x, nd);
        let r2 = residual_r2(&e);
        pi[1] += r2 * r2;
        // dPi1/dR1 = (K0/mu) R1 per point; chain through
        // R1 = mu K0^-1 u + grad P gives d_u = R1, d_grad_p = (K0/mu) R1.
        let mut sens = FieldSensitivity::default();
        match material.k0.scalar_at(x) {
            Some(k) => {
                let c = k / material.mu;
                for i in 0..nd {
                    sens.d_u[i] = c1 * r1[i];
                    sens.d_grad_p[i] = c1 * c * r1[i];
                }
            }
            None => {
                let m = material.k0.tensor_at(x, nd);
                let mr = m.apply(&r1);
                for i in 0..nd {
                    sens.d_u[i] = c1 * r1[i];
                    sens.d_grad_p[i] = c1 * mr[i] / material.mu;
                }
            }
        }
        sens.d_div_u = c2 * r2;
        network.backprop(theta, ws, &sens, grad);
    }
    pi[0] /= 2.0 * n_omega as f64;
    pi[1] /= 2.0 * n_omega as f64;
    let c3 = if n_u > 0 { weights.lambda[2] / n_u as f64 } else { 0.0 };
    let c4 = if n_p > 0 { weights.lambda[3] / n_p as f64 } else { 0.0 };
    for seg in &batch.segments {
        if seg.is_pressure {
            for (x, &p_p) in seg.points.iter().zip(&seg.data) {
                let e = network.forward_with_spatial_derivs(theta, x, ws);
                let r4 = residual_r4(&e, transform_boundary_pressure(material, p_p)?);
                pi[3] += r4 * r4;
                let sens = FieldSensitivity {
                    d_p: c4 * r4,
                    ..Default::default()
                };
                network.backprop(theta, ws, &sens, grad);
            }
        } else {
            for ((x, n), &u_n) in seg.points.iter().zip(&seg.normals).zip(&seg.data) {
                let e = network.forward_with_spatial_derivs(theta, x, ws);
                let r3 = residual_r3(&e, n, u_n);
                pi[2] += r3 * r3;
                let mut sens = FieldSensitivity::default();
                for i in 0..nd {
                    sens.d_u[i] = c3 * r3 * n[i];
                }
                network.backprop(theta, ws, &sens, grad);
            }
        }
    }
    if n_u > 0 {
        pi[2] /= 2.0 * n_u as f64;
    }
    if n_p > 0 {
        pi[3] /= 2.0 * n_p as f64;
    }
    let total = (0..4).map(|m| weights.lambda[m] * pi[m]).sum();
    Ok(LossBreakdown {
        pi,
        lambda: weights.lambda,
        total,
        n_interior: n_omega,
        n_gamma_u: n_u,
        n_gamma_p: n_p,
    })
}
