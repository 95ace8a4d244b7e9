//! Closed-form reference solutions: concentric-cylinder and concentric-sphere
//! radial flows, the layered-medium step profile, and the Darcy (beta = 0)
//! baseline. All solutions are expressed in the transformed pressure; the
//! physical pressure comes out of the Lambert-W inverse.

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::loss::Field;
use crate::network::FieldEval;
use crate::transform::{hopf_cole_forward, hopf_cole_inverse, MaterialModel, Permeability};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialKind {
    Cylinder,
    Sphere,
}

/// Radial flow between concentric boundaries at r_i (pressure p_i) and r_o
/// (pressure p_o), homogeneous scalar permeability.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub kind: RadialKind,
    pub r_i: f64,
    pub r_o: f64,
    pub p_i: f64,
    pub p_o: f64,
    pub material: MaterialModel,
    /// Transformed boundary values.
    pub pp_i: f64,
    pub pp_o: f64,
}

impl RadialSolution {
    fn new(kind: RadialKind, r_i: f64, r_o: f64, p_i: f64, p_o: f64, material: MaterialModel) -> Result<Self> {
        if !(0.0 < r_i && r_i < r_o) {
            return Err(Error::Config(format!("need 0 < r_i < r_o, got ({r_i}, {r_o})")));
        }
        if material.k0.scalar_at(&[0.0; 3]).is_none() {
            return Err(Error::Config("radial solutions require scalar permeability".into()));
        }
        let pp_i = hopf_cole_forward(&material, p_i)?;
        let pp_o = hopf_cole_forward(&material, p_o)?;
        Ok(RadialSolution {
            kind,
            r_i,
            r_o,
            p_i,
            p_o,
            material,
            pp_i,
            pp_o,
        })
    }

    fn k0(&self) -> f64 {
        self.material.k0.scalar_at(&[0.0; 3]).unwrap()
    }

    fn check_r(&self, r: f64) -> Result<()> {
        let tol = 1e-12 * self.r_o;
        if r < self.r_i - tol || r > self.r_o + tol {
            return Err(Error::Config(format!(
                "radius {r} outside [{}, {}]",
                self.r_i, self.r_o
            )));
        }
        Ok(())
    }

    /// Transformed pressure P(r).
    pub fn p_transformed(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        Ok(match self.kind {
            RadialKind::Cylinder => {
                self.pp_i
                    + (self.pp_o - self.pp_i) * (r.ln() - self.r_i.ln())
                        / (self.r_o.ln() - self.r_i.ln())
            }
            RadialKind::Sphere => {
                let c = self.r_i * self.r_o / (self.r_o - self.r_i);
                self.pp_o + (self.pp_i - self.pp_o) * c * (1.0 / r - 1.0 / self.r_o)
            }
        })
    }

    /// dP/dr.
    pub fn dp_dr(&self, r: f64) -> Result<f64> {
        self.check_r(r)?;
        Ok(match self.kind {
            RadialKind::Cylinder => {
                (self.pp_o - self.pp_i) / (self.r_o.ln() - self.r_i.ln()) / r
            }
            RadialKind::Sphere => {
                let c = self.r_i * self.r_o / (self.r_o - self.r_i);
                -(self.pp_i - self.pp_o) * c / (r * r)
            }
        })
    }

    /// Radial Darcy velocity u_r(r) = -(k0/mu) dP/dr. Positive for p_i > p_o.
    pub fn u_r(&self, r: f64) -> Result<f64> {
        Ok(-self.k0() / self.material.mu * self.dp_dr(r)?)
    }

    /// Physical pressure p(r) via the Lambert-W inverse.
    pub fn p(&self, r: f64) -> Result<f64> {
        hopf_cole_inverse(&self.material, self.p_transformed(r)?)
    }

    pub fn field_eval(&self, x: &Point) -> FieldEval {
        let nd = match self.kind {
            RadialKind::Cylinder => 2,
            RadialKind::Sphere => 3,
        };
        let mut r2 = 0.0;
        for xi in x.iter().take(nd) {
            r2 += xi * xi;
        }
        let r = r2.sqrt().clamp(self.r_i, self.r_o);
        let p = self.p_transformed(r).unwrap();
        let dpdr = self.dp_dr(r).unwrap();
        let ur = -self.k0() / self.material.mu * dpdr;
        let mut u = [0.0f64; 3];
        let mut grad_p = [0.0f64; 3];
        for i in 0..nd {
            let e = x[i] / r;
            u[i] = ur * e;
            grad_p[i] = dpdr * e;
        }
        FieldEval {
            p,
            u,
            grad_p,
            div_u: 0.0,
        }
    }
}

impl Field for RadialSolution {
    fn eval(&self, x: &Point) -> FieldEval {
        self.field_eval(x)
    }
}

/// Flow between concentric cylinders (2-D annulus cross-section).
pub fn cylinder_solution(r_i: f64, r_o: f64, p_i: f64, p_o: f64, material: MaterialModel) -> Result<RadialSolution> {
    RadialSolution::new(RadialKind::Cylinder, r_i, r_o, p_i, p_o, material)
}

/// Flow between concentric spheres (computed on the half shell by symmetry).
pub fn sphere_solution(r_i: f64, r_o: f64, p_i: f64, p_o: f64, material: MaterialModel) -> Result<RadialSolution> {
    RadialSolution::new(RadialKind::Sphere, r_i, r_o, p_i, p_o, material)
}

/// The beta = 0 specialization of the same geometry.
pub fn darcy_baseline(sol: &RadialSolution) -> Result<RadialSolution> {
    let mut material = sol.material.clone();
    material.beta = 0.0;
    RadialSolution::new(sol.kind, sol.r_i, sol.r_o, sol.p_i, sol.p_o, material)
}

/// Horizontal pressure-driven flow through horizontal permeability layers:
/// P is linear in x and independent of y, u_x steps with k(y), u_y = 0.
#[derive(Debug, Clone)]
pub struct LayeredSolution {
    pub l: f64,
    pub h: f64,
    pub material: MaterialModel,
    pub pp_left: f64,
    pub pp_right: f64,
}

impl LayeredSolution {
    /// Transformed pressure gradient magnitude (P_left - P_right)/L.
    pub fn drop_rate(&self) -> f64 {
        (self.pp_left - self.pp_right) / self.l
    }

    pub fn p_transformed(&self, x: f64) -> f64 {
        self.pp_left + (self.pp_right - self.pp_left) * x / self.l
    }

    pub fn u_x(&self, y: f64) -> f64 {
        let k = self.material.k0.scalar_at(&[0.0, y, 0.0]).unwrap();
        k / self.material.mu * self.drop_rate()
    }
}

impl Field for LayeredSolution {
    fn eval(&self, x: &Point) -> FieldEval {
        FieldEval {
            p: self.p_transformed(x[0]),
            u: [self.u_x(x[1]), 0.0, 0.0],
            grad_p: [-self.drop_rate(), 0.0, 0.0],
            div_u: 0.0,
        }
    }
}

/// Layered-medium solution with pressure drop p_left -> p_right over [0, L].
pub fn layered_solution(
    l: f64,
    h: f64,
    p_left: f64,
    p_right: f64,
    material: MaterialModel,
) -> Result<LayeredSolution> {
    match &material.k0 {
        Permeability::Scalar(_) | Permeability::LayeredY { .. } => {}
        _ => {
            return Err(Error::Config(
                "layered solution requires scalar or y-layered permeability".into(),
            ))
        }
    }
    if !(l > 0.0 && h > 0.0) {
        return Err(Error::Config("need L, H > 0".into()));
    }
    let pp_left = hopf_cole_forward(&material, p_left)?;
    let pp_right = hopf_cole_forward(&material, p_right)?;
    Ok(LayeredSolution {
        l,
        h,
        material,
        pp_left,
        pp_right,
    })
}
