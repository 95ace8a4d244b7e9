//! Computational domains, typed boundary segments, outward normals, and
//! samplers for interior and boundary collocation points.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Spatial point; the trailing component is unused in 2-D.
pub type Point = [f64; 3];

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// 2-D annulus centered at the origin, 0 < r_i < r_o.
    Annulus { r_i: f64, r_o: f64 },
    /// 2-D rectangle [0, l] x [0, h].
    Rectangle { l: f64, h: f64 },
    /// Rectangle with horizontal permeability layers; `layer_breaks` holds the
    /// interior interface heights (strictly increasing, inside (0, h)).
    LayeredRectangle {
        l: f64,
        h: f64,
        layer_breaks: Vec<f64>,
        layer_k0s: Vec<f64>,
    },
    /// 3-D half spherical shell: r_i <= |x| <= r_o, z >= 0.
    HalfSphericalShell { r_i: f64, r_o: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::HalfSphericalShell { .. } => 3,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Annulus { r_i, r_o } | Domain::HalfSphericalShell { r_i, r_o } => {
                if !(0.0 < *r_i && r_i < r_o) {
                    return Err(Error::Config(format!(
                        "annulus/shell requires 0 < r_i < r_o, got ({r_i}, {r_o})"
                    )));
                }
            }
            Domain::Rectangle { l, h } => {
                if !(*l > 0.0 && *h > 0.0) {
                    return Err(Error::Config(format!("rectangle requires L, H > 0, got ({l}, {h})")));
                }
            }
            Domain::LayeredRectangle { l, h, layer_breaks, layer_k0s } => {
                if !(*l > 0.0 && *h > 0.0) {
                    return Err(Error::Config(format!("rectangle requires L, H > 0, got ({l}, {h})")));
                }
                let mut prev = 0.0;
                for &b in layer_breaks {
                    if !(b > prev && b < *h) {
                        return Err(Error::Config(
                            "layer_breaks must be strictly increasing within (0, H)".into(),
                        ));
                    }
                    prev = b;
                }
                if layer_k0s.len() != layer_breaks.len() + 1 {
                    return Err(Error::Config(format!(
                        "expected {} layer permeabilities for {} breaks, got {}",
                        layer_breaks.len() + 1,
                        layer_breaks.len(),
                        layer_k0s.len()
                    )));
                }
                if layer_k0s.iter().any(|&k| k <= 0.0) {
                    return Err(Error::Config("layer permeabilities must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// True iff `x` lies in the open domain.
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Domain::Annulus { r_i, r_o } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                *r_i < r && r < *r_o
            }
            Domain::Rectangle { l, h } | Domain::LayeredRectangle { l, h, .. } => {
                0.0 < x[0] && x[0] < *l && 0.0 < x[1] && x[1] < *h
            }
            Domain::HalfSphericalShell { r_i, r_o } => {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                *r_i < r && r < *r_o && x[2] > 0.0
            }
        }
    }

    /// Area (2-D) or volume (3-D).
    pub fn measure(&self) -> f64 {
        match self {
            Domain::Annulus { r_i, r_o } => PI * (r_o * r_o - r_i * r_i),
            Domain::Rectangle { l, h } | Domain::LayeredRectangle { l, h, .. } => l * h,
            Domain::HalfSphericalShell { r_i, r_o } => {
                2.0 / 3.0 * PI * (r_o.powi(3) - r_i.powi(3))
            }
        }
    }

    /// Diagonal of the axis-aligned bounding box; sets the default Fourier
    /// frequency scale.
    pub fn bounding_box_diagonal(&self) -> f64 {
        match self {
            Domain::Annulus { r_o, .. } => (2.0 * r_o) * std::f64::consts::SQRT_2,
            Domain::Rectangle { l, h } | Domain::LayeredRectangle { l, h, .. } => {
                (l * l + h * h).sqrt()
            }
            Domain::HalfSphericalShell { r_o, .. } => {
                let d = 2.0 * r_o;
                (d * d + d * d + r_o * r_o).sqrt()
            }
        }
    }

    /// `n` i.i.d. uniform points in the domain; deterministic per seed.
    pub fn sample_interior(&self, n: usize, seed: u64) -> Result<Vec<Point>> {
        if n == 0 {
            return Err(Error::Config("interior sample count must be >= 1".into()));
        }
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(n);
        match self {
            Domain::Annulus { r_i, r_o } => {
                for _ in 0..n {
                    // area-uniform inverse CDF in r
                    let u: f64 = rng.gen();
                    let r = (r_i * r_i + u * (r_o * r_o - r_i * r_i)).sqrt();
                    let th = rng.gen::<f64>() * TAU;
                    pts.push([r * th.cos(), r * th.sin(), 0.0]);
                }
            }
            Domain::Rectangle { l, h } | Domain::LayeredRectangle { l, h, .. } => {
                for _ in 0..n {
                    pts.push([rng.gen::<f64>() * l, rng.gen::<f64>() * h, 0.0]);
                }
            }
            Domain::HalfSphericalShell { r_i, r_o } => {
                // rejection in the half bounding box
                while pts.len() < n {
                    let x = [
                        (rng.gen::<f64>() * 2.0 - 1.0) * r_o,
                        (rng.gen::<f64>() * 2.0 - 1.0) * r_o,
                        rng.gen::<f64>() * r_o,
                    ];
                    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                    if *r_i <= r && r <= *r_o {
                        pts.push(x);
                    }
                }
            }
        }
        Ok(pts)
    }

    /// Sum of the boundary measure (perimeter or surface area).
    pub fn boundary_measure(&self) -> f64 {
        match self {
            Domain::Annulus { r_i, r_o } => TAU * (r_i + r_o),
            Domain::Rectangle { l, h } | Domain::LayeredRectangle { l, h, .. } => 2.0 * (l + h),
            Domain::HalfSphericalShell { r_i, r_o } => {
                TAU * (r_i * r_i + r_o * r_o) + PI * (r_o * r_o - r_i * r_i)
            }
        }
    }
}

/// Boundary data: a constant or a function of position.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    Position(Arc<dyn Fn(&Point) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryData::Constant(c) => write!(f, "Constant({c})"),
            BoundaryData::Position(_) => write!(f, "Position(fn)"),
        }
    }
}

impl BoundaryData {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            BoundaryData::Constant(c) => *c,
            BoundaryData::Position(g) => g(x),
        }
    }
}

/// Boundary condition type carried by a segment.
#[derive(Debug, Clone)]
pub enum BoundaryKind {
    /// Gamma_p: prescribed absolute pressure p_p.
    PrescribedPressure(BoundaryData),
    /// Gamma_u: prescribed normal velocity u_n.
    PrescribedFlux(BoundaryData),
}

/// Geometric boundary piece with an outward-normal convention.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentGeometry {
    /// Full circle of radius `radius` centered at the origin; `outward = 1.0`
    /// for the outer boundary of an annulus, `-1.0` for the inner one.
    Circle { radius: f64, outward: f64 },
    /// Horizontal edge y = const, x in [x0, x1]; closed-left on x0.
    EdgeX { y: f64, x0: f64, x1: f64, normal_y: f64 },
    /// Vertical edge x = const, y in [y0, y1].
    EdgeY { x: f64, y0: f64, y1: f64, normal_x: f64 },
    /// Hemisphere surface |x| = radius, z >= 0.
    Hemisphere { radius: f64, outward: f64 },
    /// Annular cut plane z = 0, r_i <= rho <= r_o; outward normal (0,0,-1).
    CutAnnulus { r_i: f64, r_o: f64 },
}

impl SegmentGeometry {
    pub fn measure(&self) -> f64 {
        match self {
            SegmentGeometry::Circle { radius, .. } => TAU * radius,
            SegmentGeometry::EdgeX { x0, x1, .. } => x1 - x0,
            SegmentGeometry::EdgeY { y0, y1, .. } => y1 - y0,
            SegmentGeometry::Hemisphere { radius, .. } => TAU * radius * radius,
            SegmentGeometry::CutAnnulus { r_i, r_o } => PI * (r_o * r_o - r_i * r_i),
        }
    }

    fn point_and_normal(&self, u: f64, v: f64) -> (Point, Point) {
        match self {
            SegmentGeometry::Circle { radius, outward } => {
                let th = u * TAU;
                let (c, s) = (th.cos(), th.sin());
                ([radius * c, radius * s, 0.0], [outward * c, outward * s, 0.0])
            }
            SegmentGeometry::EdgeX { y, x0, x1, normal_y } => {
                ([x0 + u * (x1 - x0), *y, 0.0], [0.0, *normal_y, 0.0])
            }
            SegmentGeometry::EdgeY { x, y0, y1, normal_x } => {
                ([*x, y0 + u * (y1 - y0), 0.0], [*normal_x, 0.0, 0.0])
            }
            SegmentGeometry::Hemisphere { radius, outward } => {
                // area-uniform: z uniform on [0, r] (Archimedes), azimuth uniform
                let z = u * radius;
                let rho = (radius * radius - z * z).max(0.0).sqrt();
                let phi = v * TAU;
                let p = [rho * phi.cos(), rho * phi.sin(), z];
                let n = [
                    outward * p[0] / radius,
                    outward * p[1] / radius,
                    outward * p[2] / radius,
                ];
                (p, n)
            }
            SegmentGeometry::CutAnnulus { r_i, r_o } => {
                let r = (r_i * r_i + u * (r_o * r_o - r_i * r_i)).sqrt();
                let phi = v * TAU;
                ([r * phi.cos(), r * phi.sin(), 0.0], [0.0, 0.0, -1.0])
            }
        }
    }

    /// `n` uniform random points with outward unit normals.
    pub fn sample(&self, n: usize, seed: u64) -> Result<(Vec<Point>, Vec<Point>)> {
        if n == 0 {
            return Err(Error::Config("boundary sample count must be >= 1".into()));
        }
        if self.measure() <= 0.0 {
            return Err(Error::Config("zero-measure boundary segment".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for _ in 0..n {
            let (p, nrm) = self.point_and_normal(rng.gen(), rng.gen());
            pts.push(p);
            normals.push(nrm);
        }
        Ok((pts, normals))
    }

    /// Deterministic quadrature rule: `n` equal-weight nodes spread over the
    /// piece (equispaced in 1-D; uniformized lattice with golden-angle azimuth
    /// for the 3-D surfaces). Weights sum to the segment measure.
    pub fn quadrature(&self, n: usize) -> (Vec<Point>, Vec<Point>, Vec<f64>) {
        let w = self.measure() / n as f64;
        let golden = 0.6180339887498949;
        let mut pts = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let v = (i as f64 * golden).fract();
            let (p, nrm) = self.point_and_normal(u, v);
            pts.push(p);
            normals.push(nrm);
        }
        (pts, normals, vec![w; n])
    }
}

/// A typed boundary piece: geometry plus prescribed data.
#[derive(Debug, Clone)]
pub struct BoundarySegment {
    pub id: String,
    pub kind: BoundaryKind,
    pub geometry: SegmentGeometry,
}

impl BoundarySegment {
    pub fn measure(&self) -> f64 {
        self.geometry.measure()
    }

    pub fn is_pressure(&self) -> bool {
        matches!(self.kind, BoundaryKind::PrescribedPressure(_))
    }

    pub fn data(&self) -> &BoundaryData {
        match &self.kind {
            BoundaryKind::PrescribedPressure(d) | BoundaryKind::PrescribedFlux(d) => d,
        }
    }
}

/// Collocation points for one boundary segment, with prescribed data evaluated
/// per point (raw p_p or u_n, untransformed).
#[derive(Debug, Clone)]
pub struct SegmentBatch {
    pub segment_index: usize,
    pub is_pressure: bool,
    pub points: Vec<Point>,
    pub normals: Vec<Point>,
    pub data: Vec<f64>,
}

/// Interior and boundary collocation points for one run.
#[derive(Debug, Clone)]
pub struct CollocationBatch {
    pub interior: Vec<Point>,
    pub segments: Vec<SegmentBatch>,
    pub seed: u64,
}

impl CollocationBatch {
    /// Draw a full batch: `n_interior` interior points and `n_boundary` points
    /// per segment. Sub-seeds are derived from `seed` so segments decorrelate.
    pub fn sample(
        domain: &Domain,
        segments: &[BoundarySegment],
        n_interior: usize,
        n_boundary: usize,
        seed: u64,
    ) -> Result<Self> {
        let interior = domain.sample_interior(n_interior, seed)?;
        let mut seg_batches = Vec::with_capacity(segments.len());
        for (i, seg) in segments.iter().enumerate() {
            let (points, normals) = seg.geometry.sample(n_boundary, seed ^ (0x9e37_79b9 + i as u64))?;
            let data = points.iter().map(|p| seg.data().eval(p)).collect();
            seg_batches.push(SegmentBatch {
                segment_index: i,
                is_pressure: seg.is_pressure(),
                points,
                normals,
                data,
            });
        }
        Ok(CollocationBatch {
            interior,
            segments: seg_batches,
            seed,
        })
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_gamma_u(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| !s.is_pressure)
            .map(|s| s.points.len())
            .sum()
    }

    pub fn n_gamma_p(&self) -> usize {
        self.segments
            .iter()
            .filter(|s| s.is_pressure)
            .map(|s| s.points.len())
            .sum()
    }
}

/// Checks segment cover and, for all-flux problems, the zero-net-flux
/// compatibility condition (quadrature with 10^4 nodes per segment).
pub fn validate_boundary_data(domain: &Domain, segments: &[BoundarySegment]) -> Result<()> {
    let total: f64 = segments.iter().map(|s| s.measure()).sum();
    let expected = domain.boundary_measure();
    if (total - expected).abs() > 1e-9 * expected {
        return Err(Error::Config(format!(
            "boundary segments measure {total} does not cover the boundary ({expected})"
        )));
    }
    if segments.iter().any(|s| s.is_pressure()) {
        return Ok(());
    }
    let mut net = 0.0;
    for seg in segments {
        let (pts, _normals, w) = seg.geometry.quadrature(10_000);
        for (p, wi) in pts.iter().zip(&w) {
            net += seg.data().eval(p) * wi;
        }
    }
    if net.abs() > 1e-8 * expected {
        return Err(Error::IncompatibleBoundaryData(net));
    }
    Ok(())
}

/// Annulus with prescribed pressures on the inner and outer circles.
pub fn annulus_segments(r_i: f64, r_o: f64, p_i: f64, p_o: f64) -> Vec<BoundarySegment> {
    vec![
        BoundarySegment {
            id: "inner".into(),
            kind: BoundaryKind::PrescribedPressure(BoundaryData::Constant(p_i)),
            geometry: SegmentGeometry::Circle { radius: r_i, outward: -1.0 },
        },
        BoundarySegment {
            id: "outer".into(),
            kind: BoundaryKind::PrescribedPressure(BoundaryData::Constant(p_o)),
            geometry: SegmentGeometry::Circle { radius: r_o, outward: 1.0 },
        },
    ]
}

/// Footing layout on [0,L]x[0,H]: sealed left/right/bottom walls; top split into
/// T1 = [0, L/4] at pressure `p1`, T2 = (L/4, 3L/4] sealed, T3 = (3L/4, L] at
/// pressure `p3` (junctions assigned closed-left).
pub fn footing_segments(l: f64, h: f64, p1: f64, p3: f64) -> Vec<BoundarySegment> {
    let no_flux = || BoundaryKind::PrescribedFlux(BoundaryData::Constant(0.0));
    vec![
        BoundarySegment {
            id: "left".into(),
            kind: no_flux(),
            geometry: SegmentGeometry::EdgeY { x: 0.0, y0: 0.0, y1: h, normal_x: -1.0 },
        },
        BoundarySegment {
            id: "right".into(),
            kind: no_flux(),
            geometry: SegmentGeometry::EdgeY { x: l, y0: 0.0, y1: h, normal_x: 1.0 },
        },
        BoundarySegment {
            id: "bottom".into(),
            kind: no_flux(),
            geometry: SegmentGeometry::EdgeX { y: 0.0, x0: 0.0, x1: l, normal_y: -1.0 },
        },
        BoundarySegment {
            id: "T1".into(),
            kind: BoundaryKind::PrescribedPressure(BoundaryData::Constant(p1)),
            geometry: SegmentGeometry::EdgeX { y: h, x0: 0.0, x1: 0.25 * l, normal_y: 1.0 },
        },
        BoundarySegment {
            id: "T2".into(),
            kind: no_flux(),
            geometry: SegmentGeometry::EdgeX { y: h, x0: 0.25 * l, x1: 0.75 * l, normal_y: 1.0 },
        },
        BoundarySegment {
            id: "T3".into(),
            kind: BoundaryKind::PrescribedPressure(BoundaryData::Constant(p3)),
            geometry: SegmentGeometry::EdgeX { y: h, x0: 0.75 * l, x1: l, normal_y: 1.0 },
        },
    ]
}

/// Layered rectangle: pressures on left/right, sealed top/bottom walls.
pub fn layered_segments(l: f64, h: f64, p_left: f64, p_right: f64) -> Vec<BoundarySegment> {
    let no_flux = || BoundaryKind::PrescribedFlux(BoundaryData::Constant(0.0));
    vec![
        BoundarySegment {
            id: "left".into(),
            kind: BoundaryKind::PrescribedPressure(BoundaryData::Constant(p_left)),
            geometry: SegmentGeometry::EdgeY { x: 0.0, y0: 0.0, y1: h, normal_x: -1.0 },
        },
        BoundarySegment {
            id: "right".into(),
            kind: BoundaryKind::PrescribedPressure(BoundaryData::Constant(p_right)),
            geometry: SegmentGeometry::EdgeY { x: l, y0: 0.0, y1: h, normal_x: 1.0 },
        },
        BoundarySegment {
            id: "bottom".into(),
            kind: no_flux(),
            geometry: SegmentGeometry::EdgeX { y: 0.0, x0: 0.0, x1: l, normal_y: -1.0 },
        },
        BoundarySegment {
            id: "top".into(),
            kind: no_flux(),
            geometry: SegmentGeometry::EdgeX { y: h, x0: 0.0, x1: l, normal_y: 1.0 },
        },
    ]
}

/// Half spherical shell: pressures on the inner/outer hemispheres, sealed cut plane.
pub fn half_shell_segments(r_i: f64, r_o: f64, p_i: f64, p_o: f64) -> Vec<BoundarySegment> {
    vec![
        BoundarySegment {
            id: "inner".into(),
            kind: BoundaryKind::PrescribedPressure(BoundaryData::Constant(p_i)),
            geometry: SegmentGeometry::Hemisphere { radius: r_i, outward: -1.0 },
        },
        BoundarySegment {
            id: "outer".into(),
            kind: BoundaryKind::PrescribedPressure(BoundaryData::Constant(p_o)),
            geometry: SegmentGeometry::Hemisphere { radius: r_o, outward: 1.0 },
        },
        BoundarySegment {
            id: "cut".into(),
            kind: BoundaryKind::PrescribedFlux(BoundaryData::Constant(0.0)),
            geometry: SegmentGeometry::CutAnnulus { r_i, r_o },
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_cases() {
        let a = Domain::Annulus { r_i: 0.3, r_o: 1.0 };
        assert!(a.contains(&[0.5, 0.0, 0.0]));
        assert!(!a.contains(&[0.1, 0.0, 0.0]));
        let s = Domain::HalfSphericalShell { r_i: 0.3, r_o: 1.0 };
        assert!(!s.contains(&[0.0, 0.0, -0.5]));
        assert!(s.contains(&[0.0, 0.0, 0.5]));
    }

    #[test]
    fn interior_sampling_annulus_moment() {
        let d = Domain::Annulus { r_i: 0.3, r_o: 1.0 };
        let n = 10_000;
        let pts = d.sample_interior(n, 7).unwrap();
        let mut mean_r2 = 0.0;
        for p in &pts {
            let r2 = p[0] * p[0] + p[1] * p[1];
            assert!((0.3..=1.0).contains(&r2.sqrt()));
            mean_r2 += r2;
        }
        mean_r2 /= n as f64;
        // analytic moment of the uniform measure on the annulus
        let (ri2, ro2) = (0.09f64, 1.0f64);
        let expect = (ro2 * ro2 - ri2 * ri2) / (2.0 * (ro2 - ri2));
        // var(r^2) <= E[r^4]; loose 3-sigma band
        let sigma = ((ro2.powi(3) - ri2.powi(3)) / (3.0 * (ro2 - ri2)) - expect * expect).sqrt()
            / (n as f64).sqrt();
        assert!(
            (mean_r2 - expect).abs() < 3.0 * sigma,
            "mean r^2 {mean_r2} vs {expect} (sigma {sigma})"
        );
        assert!((expect - 0.545).abs() < 1e-12);
    }

    #[test]
    fn sampling_deterministic_and_single_point() {
        let d = Domain::Rectangle { l: 10.0, h: 5.0 };
        let a = d.sample_interior(1, 3).unwrap();
        assert!(d.contains(&a[0]));
        let b = d.sample_interior(100, 42).unwrap();
        let c = d.sample_interior(100, 42).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn degenerate_domain_rejected() {
        let d = Domain::Annulus { r_i: 1.0, r_o: 1.0 };
        assert!(d.sample_interior(10, 0).is_err());
    }

    #[test]
    fn boundary_normals() {
        let inner = SegmentGeometry::Circle { radius: 0.3, outward: -1.0 };
        let (pts, nrm) = inner.sample(32, 5).unwrap();
        for (p, n) in pts.iter().zip(&nrm) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((r - 0.3).abs() < 1e-12);
            // normal points toward the center, outward from the annulus
            assert!((n[0] + p[0] / r).abs() < 1e-12 && (n[1] + p[1] / r).abs() < 1e-12);
            let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            assert!((len - 1.0).abs() < 1e-12);
        }

        let top = SegmentGeometry::EdgeX { y: 5.0, x0: 0.0, x1: 10.0, normal_y: 1.0 };
        let (_, nrm) = top.sample(4, 1).unwrap();
        assert_eq!(nrm[0], [0.0, 1.0, 0.0]);

        let cut = SegmentGeometry::CutAnnulus { r_i: 0.3, r_o: 1.0 };
        let (_, nrm) = cut.sample(4, 1).unwrap();
        assert_eq!(nrm[0], [0.0, 0.0, -1.0]);
    }

    #[test]
    fn segment_measures_cover_boundary() {
        let d = Domain::Annulus { r_i: 0.3, r_o: 1.0 };
        let segs = annulus_segments(0.3, 1.0, 10.0, 1.0);
        let total: f64 = segs.iter().map(|s| s.measure()).sum();
        assert!((total - d.boundary_measure()).abs() < 1e-12);
        assert!((total - TAU * 1.3).abs() < 1e-12);

        let d = Domain::Rectangle { l: 10.0, h: 5.0 };
        let segs = footing_segments(10.0, 5.0, 10.0, 1.0);
        let total: f64 = segs.iter().map(|s| s.measure()).sum();
        assert!((total - d.boundary_measure()).abs() < 1e-12);

        let d = Domain::HalfSphericalShell { r_i: 0.3, r_o: 1.0 };
        let segs = half_shell_segments(0.3, 1.0, 10.0, 1.0);
        let total: f64 = segs.iter().map(|s| s.measure()).sum();
        assert!((total - d.boundary_measure()).abs() < 1e-10);
    }

    #[test]
    fn compatibility_check() {
        let d = Domain::Rectangle { l: 1.0, h: 1.0 };
        let flux = |v: f64| BoundaryKind::PrescribedFlux(BoundaryData::Constant(v));
        let square = |v_left: f64, v_right: f64, v_tb: f64| {
            vec![
                BoundarySegment {
                    id: "left".into(),
                    kind: flux(v_left),
                    geometry: SegmentGeometry::EdgeY { x: 0.0, y0: 0.0, y1: 1.0, normal_x: -1.0 },
                },
                BoundarySegment {
                    id: "right".into(),
                    kind: flux(v_right),
                    geometry: SegmentGeometry::EdgeY { x: 1.0, y0: 0.0, y1: 1.0, normal_x: 1.0 },
                },
                BoundarySegment {
                    id: "bottom".into(),
                    kind: flux(v_tb),
                    geometry: SegmentGeometry::EdgeX { y: 0.0, x0: 0.0, x1: 1.0, normal_y: -1.0 },
                },
                BoundarySegment {
                    id: "top".into(),
                    kind: flux(v_tb),
                    geometry: SegmentGeometry::EdgeX { y: 1.0, x0: 0.0, x1: 1.0, normal_y: 1.0 },
                },
            ]
        };
        assert!(validate_boundary_data(&d, &square(1.0, -1.0, 0.0)).is_ok());
        assert!(matches!(
            validate_boundary_data(&d, &square(1.0, 1.0, 1.0)),
            Err(Error::IncompatibleBoundaryData(_))
        ));
        // footing has pressure segments: no integral check needed
        let d = Domain::Rectangle { l: 10.0, h: 5.0 };
        assert!(validate_boundary_data(&d, &footing_segments(10.0, 5.0, 10.0, 1.0)).is_ok());
    }

    #[test]
    fn sampling_uniformity_chi_squared() {
        // 40 equal-measure bins (8 angular x 5 equal-area radial); fixed seed
        let d = Domain::Annulus { r_i: 0.3, r_o: 1.0 };
        let n = 100_000;
        let pts = d.sample_interior(n, 1234).unwrap();
        let (na, nr) = (8usize, 5usize);
        let mut counts = vec![0usize; na * nr];
        let (ri2, ro2) = (0.09f64, 1.0f64);
        for p in &pts {
            let th = p[1].atan2(p[0]).rem_euclid(TAU);
            let r2 = p[0] * p[0] + p[1] * p[1];
            let ia = ((th / TAU * na as f64) as usize).min(na - 1);
            let ir = (((r2 - ri2) / (ro2 - ri2) * nr as f64) as usize).min(nr - 1);
            counts[ia * nr + ir] += 1;
        }
        let expect = n as f64 / (na * nr) as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // chi^2 critical value at p = 0.001 for 39 dof (Wilson-Hilferty)
        let dof = (na * nr - 1) as f64;
        let z = 3.0902;
        let crit = dof * (1.0 - 2.0 / (9.0 * dof) + z * (2.0 / (9.0 * dof)).sqrt()).powi(3);
        assert!(chi2 < crit, "chi2 {chi2} >= critical {crit}");
    }

    #[test]
    fn normals_point_away_from_centroid() {
        // convex pieces: (x_boundary - interior centroid) . n > 0
        let segs = footing_segments(10.0, 5.0, 10.0, 1.0);
        let centroid = [5.0, 2.5, 0.0];
        for seg in &segs {
            let (pts, nrm) = seg.geometry.sample(16, 9).unwrap();
            for (p, n) in pts.iter().zip(&nrm) {
                let dot: f64 = (0..3).map(|i| (p[i] - centroid[i]) * n[i]).sum();
                assert!(dot > 0.0, "segment {}", seg.id);
            }
        }
    }

    #[test]
    fn quadrature_weights_sum_to_measure() {
        for geom in [
            SegmentGeometry::Circle { radius: 0.7, outward: 1.0 },
            SegmentGeometry::Hemisphere { radius: 1.0, outward: 1.0 },
            SegmentGeometry::CutAnnulus { r_i: 0.3, r_o: 1.0 },
        ] {
            let (_, _, w) = geom.quadrature(1000);
            let total: f64 = w.iter().sum();
            assert!((total - geom.measure()).abs() < 1e-9 * geom.measure());
        }
    }
}
