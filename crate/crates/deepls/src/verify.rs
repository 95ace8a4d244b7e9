//! Error metrics against reference fields, the Betti reciprocity indicator,
//! and the capacity-sweep harness.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundarySegment, Domain, Point};
use crate::loss::Field;
use crate::transform::{hopf_cole_inverse, transform_boundary_pressure, MaterialModel};

/// L2(Omega) errors of physical pressure and velocity, with the reference
/// norms needed for relative figures.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorReport {
    pub l2_p: f64,
    pub l2_u: f64,
    pub ref_norm_p: f64,
    pub ref_norm_u: f64,
    pub n_mc: usize,
    pub seed: u64,
}

impl ErrorReport {
    pub fn rel_p(&self) -> f64 {
        self.l2_p / self.ref_norm_p
    }

    pub fn rel_u(&self) -> f64 {
        self.l2_u / self.ref_norm_u
    }
}

/// Monte Carlo estimate of (int_Omega (f - g)^2 dOmega)^(1/2), domain measure
/// included.
pub fn l2_error<F, G>(f: F, g: G, domain: &Domain, n_mc: usize, seed: u64) -> Result<f64>
where
    F: Fn(&Point) -> f64,
    G: Fn(&Point) -> f64,
{
    let pts = domain.sample_interior(n_mc, seed)?;
    let mut acc = 0.0;
    for x in &pts {
        let d = f(x) - g(x);
        acc += d * d;
    }
    Ok((domain.measure() * acc / n_mc as f64).sqrt())
}

/// Physical-pressure and velocity L2 errors of a predicted field against a
/// reference, both expressed in transformed variables; the Lambert-W inverse
/// runs inside the metric so the headline number is in physical pressure.
pub fn error_report(
    predicted: &dyn Field,
    reference: &dyn Field,
    material: &MaterialModel,
    domain: &Domain,
    n_mc: usize,
    seed: u64,
) -> Result<ErrorReport> {
    let pts = domain.sample_interior(n_mc, seed)?;
    let nd = domain.dim();
    let (mut ep, mut eu, mut rp, mut ru) = (0.0, 0.0, 0.0, 0.0);
    for x in &pts {
        let a = predicted.eval(x);
        let b = reference.eval(x);
        let pa = hopf_cole_inverse(material, a.p).unwrap_or(f64::NAN);
        let pb = hopf_cole_inverse(material, b.p)?;
        let dp = pa - pb;
        ep += dp * dp;
        rp += pb * pb;
        for i in 0..nd {
            let du = a.u[i] - b.u[i];
            eu += du * du;
            ru += b.u[i] * b.u[i];
        }
    }
    let scale = domain.measure() / n_mc as f64;
    Ok(ErrorReport {
        l2_p: (scale * ep).sqrt(),
        l2_u: (scale * eu).sqrt(),
        ref_norm_p: (scale * rp).sqrt(),
        ref_norm_u: (scale * ru).sqrt(),
        n_mc,
        seed,
    })
}

/// The two reciprocity integrals, their gap, and the normalized indicator.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BettiReport {
    pub i12: f64,
    pub i21: f64,
    pub r_b: f64,
    /// None when |I12| + |I21| = 0 (degenerate: no boundary work at all).
    pub eta_b: Option<f64>,
    pub n_quad: usize,
}

impl BettiReport {
    pub fn is_degenerate(&self) -> bool {
        self.eta_b.is_none()
    }
}

/// Betti reciprocity residual between two solutions of the same domain and
/// material under different boundary data. `segments_k` carries the data of
/// solution k; the two lists must describe the same geometry with the same
/// Gamma_p / Gamma_u split. Deterministic quadrature with `n_quad` nodes per
/// segment.
pub fn betti_residual(
    field1: &dyn Field,
    segments1: &[BoundarySegment],
    field2: &dyn Field,
    segments2: &[BoundarySegment],
    material: &MaterialModel,
    n_quad: usize,
) -> Result<BettiReport> {
    if segments1.len() != segments2.len() {
        return Err(Error::Config("segment lists differ in length".into()));
    }
    if n_quad == 0 {
        return Err(Error::Config("n_quad must be >= 1".into()));
    }
    let mut i12 = 0.0;
    let mut i21 = 0.0;
    for (s1, s2) in segments1.iter().zip(segments2) {
        if s1.geometry != s2.geometry || s1.is_pressure() != s2.is_pressure() {
            return Err(Error::Config(
                "segment lists must share geometry and boundary-condition types".into(),
            ));
        }
        let (pts, normals, wts) = s1.geometry.quadrature(n_quad);
        if s1.is_pressure() {
            // int_{Gamma_p} P_p^(k) u^(j) . n dGamma
            for ((x, n), w) in pts.iter().zip(&normals).zip(&wts) {
                let pp1 = transform_boundary_pressure(material, s1.data().eval(x))?;
                let pp2 = transform_boundary_pressure(material, s2.data().eval(x))?;
                let u1 = field1.eval(x).u;
                let u2 = field2.eval(x).u;
                let un1 = u1[0] * n[0] + u1[1] * n[1] + u1[2] * n[2];
                let un2 = u2[0] * n[0] + u2[1] * n[1] + u2[2] * n[2];
                i12 += w * pp2 * un1;
                i21 += w * pp1 * un2;
            }
        } else {
            // - int_{Gamma_u} u_n^(k) P^(j) dGamma
            for (x, w) in pts.iter().zip(&wts) {
                let un1 = s1.data().eval(x);
                let un2 = s2.data().eval(x);
                let p1 = field1.eval(x).p;
                let p2 = field2.eval(x).p;
                i12 -= w * un2 * p1;
                i21 -= w * un1 * p2;
            }
        }
    }
    let r_b = i12 - i21;
    let denom = i12.abs() + i21.abs();
    let eta_b = if denom > 0.0 { Some(r_b.abs() / denom) } else { None };
    Ok(BettiReport {
        i12,
        i21,
        r_b,
        eta_b,
        n_quad,
    })
}

/// One cell of the capacity study.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub depth: usize,
    pub width: usize,
    pub n_tot: usize,
    pub seed: u64,
    pub l2_p: f64,
    pub l2_u: f64,
    pub wall_seconds: f64,
}

/// Train one network per (depth, width, seed) cell via `runner` and collect
/// the error table. The runner owns sampling/optimizer configuration so that
/// every cell is trained identically.
pub fn capacity_sweep<R>(
    depths: &[usize],
    widths: &[usize],
    seeds: &[u64],
    mut runner: R,
) -> Result<Vec<SweepRow>>
where
    R: FnMut(usize, usize, u64) -> Result<ErrorReport>,
{
    let mut rows = Vec::new();
    for &depth in depths {
        for &width in widths {
            for &seed in seeds {
                let start = std::time::Instant::now();
                let report = runner(depth, width, seed)?;
                rows.push(SweepRow {
                    depth,
                    width,
                    n_tot: depth * width,
                    seed,
                    l2_p: report.rel_p(),
                    l2_u: report.rel_u(),
                    wall_seconds: start.elapsed().as_secs_f64(),
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with columns `depth, width, n_tot, seed, l2_p, l2_u, wall_seconds`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("depth,width,n_tot,seed,l2_p,l2_u,wall_seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.depth, r.width, r.n_tot, r.seed, r.l2_p, r.l2_u, r.wall_seconds
        ));
    }
    out
}

/// Median of a slice (average of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
