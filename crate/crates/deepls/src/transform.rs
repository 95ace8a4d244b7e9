//! Klinkenberg constitutive model, the Hopf-Cole forward transform, and its
//! Lambert-W based inverse.
//!
//! The transform `P = p + beta * p_atm * ln(p)` linearizes the pressure-dependent
//! permeability model; the principal Lambert-W branch inverts it on (0, inf).

use crate::error::{Error, Result};
use crate::tensor::SymTensor;

/// Positive lower threshold for admissible absolute pressures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureDatum {
    pub p_min: f64,
}

impl Default for PressureDatum {
    fn default() -> Self {
        PressureDatum { p_min: 1e-8 }
    }
}

impl PressureDatum {
    pub fn new(p_min: f64) -> Result<Self> {
        if !(p_min > 0.0) {
            return Err(Error::Config(format!("p_min must be > 0, got {p_min}")));
        }
        Ok(PressureDatum { p_min })
    }

    pub fn check(&self, p: f64) -> Result<()> {
        if !(p >= self.p_min) {
            return Err(Error::InadmissiblePressure {
                pressure: p,
                p_min: self.p_min,
            });
        }
        Ok(())
    }
}

/// Intrinsic permeability field K0(x): a symmetric positive tensor per point,
/// with scalar and layered shorthands used by the benchmarks.
#[derive(Debug, Clone)]
pub enum Permeability {
    /// `k0 * I` everywhere.
    Scalar(f64),
    /// Piecewise-constant scalar in y: `values[i]` on `[breaks[i], breaks[i+1])`,
    /// with `breaks` holding the interior interface heights only.
    LayeredY { breaks: Vec<f64>, values: Vec<f64> },
    /// Anisotropic diagonal tensor, constant in space.
    Diagonal(Vec<f64>),
    /// Full symmetric tensor, constant in space.
    Full(SymTensor),
}

impl Permeability {
    /// Scalar value if K0(x) is a multiple of the identity at x.
    pub fn scalar_at(&self, x: &[f64; 3]) -> Option<f64> {
        match self {
            Permeability::Scalar(k) => Some(*k),
            Permeability::LayeredY { breaks, values } => {
                let y = x[1];
                // half-open intervals [y_i, y_{i+1})
                let idx = breaks.iter().take_while(|&&b| y >= b).count();
                Some(values[idx])
            }
            _ => None,
        }
    }

    pub fn tensor_at(&self, x: &[f64; 3], nd: usize) -> SymTensor {
        match self {
            Permeability::Diagonal(d) => SymTensor::diagonal(d),
            Permeability::Full(t) => *t,
            _ => SymTensor::scalar(nd, self.scalar_at(x).unwrap()),
        }
    }
}

/// Material data for the Klinkenberg model.
#[derive(Debug, Clone)]
pub struct MaterialModel {
    pub k0: Permeability,
    /// Dimensionless Klinkenberg parameter, >= 0.
    pub beta: f64,
    pub p_atm: f64,
    pub mu: f64,
    /// Uniform ellipticity bounds: 0 < k_min <= zeta.K0 zeta / |zeta|^2 <= k_max.
    pub k_min: f64,
    pub k_max: f64,
    pub datum: PressureDatum,
}

impl MaterialModel {
    pub fn new(k0: Permeability, beta: f64, p_atm: f64, mu: f64) -> Result<Self> {
        let (k_min, k_max) = match &k0 {
            Permeability::Scalar(k) => (*k, *k),
            Permeability::LayeredY { values, .. } => {
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(0.0f64, f64::max);
                (lo, hi)
            }
            Permeability::Diagonal(d) => {
                let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = d.iter().cloned().fold(0.0f64, f64::max);
                (lo, hi)
            }
            Permeability::Full(t) => {
                let (eig, _) = t.eigen();
                let lo = eig[..t.nd].iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = eig[..t.nd].iter().cloned().fold(0.0f64, f64::max);
                (lo, hi)
            }
        };
        let m = MaterialModel {
            k0,
            beta,
            p_atm,
            mu,
            k_min,
            k_max,
            datum: PressureDatum::default(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Isotropic homogeneous shorthand.
    pub fn scalar(k0: f64, beta: f64, p_atm: f64, mu: f64) -> Result<Self> {
        Self::new(Permeability::Scalar(k0), beta, p_atm, mu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.mu > 0.0) {
            return Err(Error::Config(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.p_atm > 0.0) {
            return Err(Error::Config(format!("p_atm must be > 0, got {}", self.p_atm)));
        }
        if !(self.k_min > 0.0 && self.k_min <= self.k_max) {
            return Err(Error::Config(format!(
                "ellipticity bounds require 0 < k_min <= k_max, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        Ok(())
    }

    /// `beta * p_atm`, the coefficient of the logarithmic term.
    #[inline]
    pub fn bpa(&self) -> f64 {
        self.beta * self.p_atm
    }
}

/// Apparent gas permeability `K0(x) * (1 + beta * p_atm / p)`.
pub fn apparent_permeability(material: &MaterialModel, x: &[f64; 3], p: f64, nd: usize) -> Result<SymTensor> {
    material.datum.check(p)?;
    let factor = 1.0 + material.bpa() / p;
    let base = material.k0.tensor_at(x, nd);
    let mut out = SymTensor::zeros(nd);
    for i in 0..nd {
        for j in i..nd {
            out.set(i, j, base.get(i, j) * factor);
        }
    }
    Ok(out)
}

/// Forward Hopf-Cole map `P = p + beta * p_atm * ln(p)`.
pub fn hopf_cole_forward(material: &MaterialModel, p: f64) -> Result<f64> {
    material.datum.check(p)?;
    if material.beta == 0.0 {
        return Ok(p);
    }
    Ok(p + material.bpa() * p.ln())
}

/// Prescribed-pressure boundary data mapped into the transformed variable.
pub fn transform_boundary_pressure(material: &MaterialModel, p_p: f64) -> Result<f64> {
    hopf_cole_forward(material, p_p)
}

/// Principal branch of the Lambert-W function, `w e^w = x` with `w >= -1`.
///
/// Halley iteration with a piecewise initial guess; converges cubically and is
/// stopped at `|dw| <= 1e-15 (1 + |w|)` or 50 iterations.
pub fn lambert_w0(x: f64) -> Result<f64> {
    const NEG_INV_E: f64 = -0.36787944117144233;
    if x < NEG_INV_E {
        return Err(Error::LambertDomain(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x > std::f64::consts::E {
        let l = x.ln();
        l - l.ln().max(0.0)
    } else if x < -0.25 {
        // series about the branch point x = -1/e
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    } else {
        x * (1.0 - x)
    };
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let dw = f / denom;
        w -= dw;
        if dw.abs() <= 1e-15 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w.max(-1.0))
}

/// Inverse Hopf-Cole map: recovers the physical pressure from the transformed one.
///
/// Uses `p = c * W0(exp(P/c) / c)` with `c = beta * p_atm`; falls back to a
/// safeguarded Newton solve on the monotone forward map when `exp(P/c)` would
/// overflow, and to the identity when `beta = 0`.
pub fn hopf_cole_inverse(material: &MaterialModel, p_transformed: f64) -> Result<f64> {
    let c = material.bpa();
    if c == 0.0 {
        return Ok(p_transformed);
    }
    let y = p_transformed / c;
    // exp overflows near 709.78; keep margin for the 1/c factor
    if y - c.ln() < 700.0 {
        let arg = y.exp() / c;
        if arg.is_finite() {
            return Ok(c * lambert_w0(arg)?);
        }
    }
    newton_inverse(material, p_transformed)
}

/// Safeguarded Newton on `f(p) = p + c ln(p) - P`, which is strictly increasing.
fn newton_inverse(material: &MaterialModel, target: f64) -> Result<f64> {
    let c = material.bpa();
    // bracket the root of the monotone map
    let mut lo = material.datum.p_min.min(1e-12);
    let mut hi = target.max(1.0);
    while hi + c * hi.ln() < target {
        hi *= 2.0;
    }
    let mut p = if target > 1.0 { (target - c * target.ln()).max(lo) } else { hi.min(1.0) };
    for _ in 0..200 {
        let f = p + c * p.ln() - target;
        if f > 0.0 {
            hi = p;
        } else {
            lo = p;
        }
        let step = f / (1.0 + c / p);
        let mut next = p - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - p).abs() <= 1e-15 * (1.0 + p.abs()) {
            return Ok(next);
        }
        p = next;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: bisection on w e^w = x.
    fn lambert_bisect(x: f64) -> f64 {
        let mut lo = -1.0f64;
        let mut hi = if x > std::f64::consts::E { x } else { std::f64::consts::E };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > x {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn material(beta: f64) -> MaterialModel {
        MaterialModel::scalar(1.0, beta, 1.0, 1.0).unwrap()
    }

    #[test]
    fn lambert_w0_reference_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-14);
        // frozen from the bisection oracle on [0,1]
        assert!((lambert_w0(1.0).unwrap() - 0.5671432904).abs() < 1e-10);
        assert!((lambert_w0(1.0).unwrap() - lambert_bisect(1.0)).abs() < 1e-12);
    }

    #[test]
    fn lambert_w0_defining_identity_log_grid() {
        let lo: f64 = -1.0 / std::f64::consts::E + 1e-9;
        // log-spaced in (x - lo) up to 1e6
        for i in 0..=400 {
            let x = lo + 10f64.powf(-9.0 + 15.0 * i as f64 / 400.0).min(1e6 - lo);
            let w = lambert_w0(x).unwrap();
            let resid = (w * w.exp() - x).abs();
            assert!(
                resid <= 1e-12 * x.abs().max(1.0),
                "identity residual {resid} at x={x}"
            );
        }
    }

    #[test]
    fn lambert_w0_domain_error() {
        assert!(matches!(lambert_w0(-0.4), Err(Error::LambertDomain(_))));
    }

    #[test]
    fn forward_examples() {
        let m = material(1.0);
        assert!((hopf_cole_forward(&m, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // ln(10) via the exp bisection oracle
        let ln10 = {
            let (mut lo, mut hi) = (2.0f64, 3.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid.exp() > 10.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let p10 = hopf_cole_forward(&m, 10.0).unwrap();
        assert!((p10 - (10.0 + ln10)).abs() < 1e-12);
        assert!((p10 - 12.302585093).abs() < 1e-9);
        let darcy = material(0.0);
        assert_eq!(hopf_cole_forward(&darcy, 7.3).unwrap(), 7.3);
    }

    #[test]
    fn forward_monotone() {
        for &beta in &[0.0, 0.1, 1.0, 10.0, 200.0] {
            let m = material(beta);
            let mut prev = f64::NEG_INFINITY;
            for i in 0..60 {
                let p = 1e-3 * 1.26f64.powi(i);
                let val = hopf_cole_forward(&m, p).unwrap();
                assert!(val > prev, "monotonicity at beta={beta}, p={p}");
                prev = val;
            }
        }
    }

    #[test]
    fn inverse_examples_and_roundtrip() {
        let m = material(1.0);
        assert!((hopf_cole_inverse(&m, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((hopf_cole_inverse(&m, 12.302585093).unwrap() - 10.0).abs() < 1e-8);
        let darcy = material(0.0);
        assert_eq!(hopf_cole_inverse(&darcy, 5.0).unwrap(), 5.0);

        for &beta in &[0.0, 0.1, 1.0, 10.0, 200.0] {
            let m = material(beta);
            for e in -3..=3 {
                let p = 10f64.powi(e);
                let rt = hopf_cole_inverse(&m, hopf_cole_forward(&m, p).unwrap()).unwrap();
                assert!(
                    ((rt - p) / p).abs() <= 1e-10,
                    "roundtrip beta={beta} p={p} -> {rt}"
                );
            }
        }
    }

    #[test]
    fn inverse_overflow_guard() {
        // beta*p_atm small: exp(P/(beta*p_atm)) overflows, Newton path must engage
        let m = MaterialModel::scalar(1.0, 1e-3, 1.0, 1.0).unwrap();
        for &p in &[5.0, 50.0, 1000.0] {
            let fwd = hopf_cole_forward(&m, p).unwrap();
            let rt = hopf_cole_inverse(&m, fwd).unwrap();
            assert!(((rt - p) / p).abs() < 1e-10, "p={p} rt={rt}");
        }
    }

    #[test]
    fn apparent_permeability_cases() {
        let darcy = material(0.0);
        let k = apparent_permeability(&darcy, &[0.0; 3], 3.7, 2).unwrap();
        assert_eq!(k, SymTensor::identity(2));

        let m = material(1.0);
        let k = apparent_permeability(&m, &[0.0; 3], 1.0, 2).unwrap();
        assert_eq!(k, SymTensor::scalar(2, 2.0));

        assert!(apparent_permeability(&m, &[0.0; 3], -1.0, 2).is_err());
        assert!(apparent_permeability(&m, &[0.0; 3], 0.0, 2).is_err());
    }

    #[test]
    fn darcy_limit_high_pressure() {
        let m = material(1.0);
        let p = 1e8;
        let k = apparent_permeability(&m, &[0.0; 3], p, 2).unwrap();
        let rel = (k.get(0, 0) - 1.0).abs();
        assert!(rel <= m.bpa() / p * 1.0001);
    }

    #[test]
    fn beta_ranges_accepted() {
        // shale and carbonate ranges must pass model validation
        for &beta in &[1.0, 10.0, 200.0] {
            assert!(MaterialModel::scalar(1.0, beta, 1.0, 1.0).is_ok());
        }
        assert!(MaterialModel::scalar(1.0, -0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn layered_permeability_half_open_intervals() {
        let k0 = Permeability::LayeredY {
            breaks: vec![1.0, 2.0],
            values: vec![1.0, 10.0, 1.0],
        };
        assert_eq!(k0.scalar_at(&[0.0, 0.5, 0.0]), Some(1.0));
        assert_eq!(k0.scalar_at(&[0.0, 1.0, 0.0]), Some(10.0));
        assert_eq!(k0.scalar_at(&[0.0, 1.999, 0.0]), Some(10.0));
        assert_eq!(k0.scalar_at(&[0.0, 2.0, 0.0]), Some(1.0));
    }
}
