//! JSON run configuration: schema structs, cross-validation, resolution into
//! solver objects, and the built-in benchmark presets. All quantities are in
//! the nondimensional units used throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    validate_boundary_data, BoundaryData, BoundaryKind, BoundarySegment, Domain, SegmentGeometry,
};
use crate::loss::{coercivity_weights, ResidualWeights, WeightMode};
use crate::network::{Activation, Network, NetworkConfig};
use crate::optimize::{AdamConfig, LbfgsConfig, TrainConfig};
use crate::transform::{MaterialModel, Permeability};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainSpec {
    Annulus { r_i: f64, r_o: f64 },
    Rectangle { l: f64, h: f64 },
    LayeredRectangle {
        l: f64,
        h: f64,
        layer_breaks: Vec<f64>,
        layer_k0s: Vec<f64>,
    },
    HalfSphericalShell { r_i: f64, r_o: f64 },
}

impl DomainSpec {
    pub fn to_domain(&self) -> Domain {
        match self {
            DomainSpec::Annulus { r_i, r_o } => Domain::Annulus { r_i: *r_i, r_o: *r_o },
            DomainSpec::Rectangle { l, h } => Domain::Rectangle { l: *l, h: *h },
            DomainSpec::LayeredRectangle { l, h, layer_breaks, layer_k0s } => {
                Domain::LayeredRectangle {
                    l: *l,
                    h: *h,
                    layer_breaks: layer_breaks.clone(),
                    layer_k0s: layer_k0s.clone(),
                }
            }
            DomainSpec::HalfSphericalShell { r_i, r_o } => {
                Domain::HalfSphericalShell { r_i: *r_i, r_o: *r_o }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum K0Spec {
    Scalar { value: f64 },
    LayeredY { breaks: Vec<f64>, values: Vec<f64> },
    Diagonal { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub k0: K0Spec,
    pub beta: f64,
    pub mu: f64,
    pub p_atm: f64,
    /// Admissibility threshold for absolute pressures.
    #[serde(default = "default_p_min")]
    pub p_min: f64,
}

fn default_p_min() -> f64 {
    1e-8
}

impl MaterialSpec {
    pub fn to_material(&self) -> Result<MaterialModel> {
        let k0 = match &self.k0 {
            K0Spec::Scalar { value } => Permeability::Scalar(*value),
            K0Spec::LayeredY { breaks, values } => Permeability::LayeredY {
                breaks: breaks.clone(),
                values: values.clone(),
            },
            K0Spec::Diagonal { values } => Permeability::Diagonal(values.clone()),
        };
        let mut m = MaterialModel::new(k0, self.beta, self.p_atm, self.mu)?;
        m.datum = crate::transform::PressureDatum::new(self.p_min)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum GeometrySpec {
    Circle { radius: f64, outward: f64 },
    EdgeX { y: f64, x0: f64, x1: f64, normal_y: f64 },
    EdgeY { x: f64, y0: f64, y1: f64, normal_x: f64 },
    Hemisphere { radius: f64, outward: f64 },
    CutAnnulus { r_i: f64, r_o: f64 },
}

impl GeometrySpec {
    fn to_geometry(&self) -> SegmentGeometry {
        match *self {
            GeometrySpec::Circle { radius, outward } => SegmentGeometry::Circle { radius, outward },
            GeometrySpec::EdgeX { y, x0, x1, normal_y } => {
                SegmentGeometry::EdgeX { y, x0, x1, normal_y }
            }
            GeometrySpec::EdgeY { x, y0, y1, normal_x } => {
                SegmentGeometry::EdgeY { x, y0, y1, normal_x }
            }
            GeometrySpec::Hemisphere { radius, outward } => {
                SegmentGeometry::Hemisphere { radius, outward }
            }
            GeometrySpec::CutAnnulus { r_i, r_o } => SegmentGeometry::CutAnnulus { r_i, r_o },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Pressure,
    Flux,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub id: String,
    pub kind: SegmentKind,
    /// Prescribed p_p (pressure segments) or u_n (flux segments); constant.
    pub value: f64,
    pub geometry: GeometrySpec,
}

impl SegmentSpec {
    fn to_segment(&self) -> BoundarySegment {
        let data = BoundaryData::Constant(self.value);
        BoundarySegment {
            id: self.id.clone(),
            kind: match self.kind {
                SegmentKind::Pressure => BoundaryKind::PrescribedPressure(data),
                SegmentKind::Flux => BoundaryKind::PrescribedFlux(data),
            },
            geometry: self.geometry.to_geometry(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub depth: usize,
    pub width: usize,
    /// Fourier feature count; frequencies default to k*pi/diagonal.
    pub n_f: usize,
    pub activation: Activation,
    pub seed: u64,
    /// Explicit frequencies override the default ladder when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub n_interior: usize,
    /// Points per boundary segment.
    pub n_boundary: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsSpec {
    pub mode: WeightMode,
    /// Explicit lambdas for fixed mode and the starting point otherwise.
    #[serde(default = "default_lambdas")]
    pub lambdas: [f64; 4],
    #[serde(default = "one")]
    pub c_div: f64,
    #[serde(default = "one")]
    pub c_p: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_trigger")]
    pub trigger_ratio: f64,
}

fn default_lambdas() -> [f64; 4] {
    [1.0; 4]
}
fn one() -> f64 {
    1.0
}
fn default_eps() -> f64 {
    1e-8
}
fn default_window() -> usize {
    50
}
fn default_trigger() -> f64 {
    5.0
}

impl Default for WeightsSpec {
    fn default() -> Self {
        WeightsSpec {
            mode: WeightMode::Adaptive,
            lambdas: default_lambdas(),
            c_div: 1.0,
            c_p: 1.0,
            alpha: 1.0,
            epsilon: default_eps(),
            window: default_window(),
            trigger_ratio: default_trigger(),
        }
    }
}

impl WeightsSpec {
    pub fn to_weights(&self, material: &MaterialModel) -> Result<ResidualWeights> {
        let mut w = match self.mode {
            WeightMode::Coercivity => {
                coercivity_weights(material.mu, material.k_min, self.c_div, self.c_p)?
            }
            _ => ResidualWeights {
                lambda: self.lambdas,
                mode: self.mode,
                ..Default::default()
            },
        };
        w.alpha = self.alpha;
        w.epsilon = self.epsilon;
        w.window = self.window;
        w.trigger_ratio = self.trigger_ratio;
        w.validate()?;
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OptimizerSpec {
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub lbfgs: LbfgsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<usize>,
    /// Tensor-product export grid resolution per axis.
    #[serde(default = "default_grid")]
    pub export_grid: usize,
}

fn default_grid() -> usize {
    64
}

/// Complete run description; the JSON schema of the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub material: MaterialSpec,
    pub boundaries: Vec<SegmentSpec>,
    pub network: NetworkSpec,
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub weights: WeightsSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Validated solver objects built from a [`RunConfig`].
pub struct Resolved {
    pub domain: Domain,
    pub material: MaterialModel,
    pub segments: Vec<BoundarySegment>,
    pub network: Network,
    pub weights: ResidualWeights,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Cross-validate and build the solver objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let domain = self.domain.to_domain();
        domain.validate()?;
        let material = self.material.to_material()?;
        let segments: Vec<BoundarySegment> = self.boundaries.iter().map(|s| s.to_segment()).collect();
        validate_boundary_data(&domain, &segments)?;
        for spec in &self.boundaries {
            if spec.kind == SegmentKind::Pressure && spec.value < material.datum.p_min {
                return Err(Error::InadmissiblePressure {
                    pressure: spec.value,
                    p_min: material.datum.p_min,
                });
            }
        }
        let frequencies = match &self.network.frequencies {
            Some(f) => f.clone(),
            None => NetworkConfig::default_frequencies(
                self.network.n_f,
                domain.bounding_box_diagonal(),
            ),
        };
        let network = Network::new(NetworkConfig {
            depth: self.network.depth,
            width: self.network.width,
            frequencies,
            activation: self.network.activation,
            nd: domain.dim(),
            seed: self.network.seed,
        })?;
        let weights = self.weights.to_weights(&material)?;
        let train = TrainConfig {
            adam: self.optimizer.adam.clone(),
            lbfgs: self.optimizer.lbfgs.clone(),
            checkpoint_every: self.output.checkpoint_every,
            out_dir: self.output.out_dir.as_ref().map(Into::into),
        };
        if self.sampling.n_interior == 0 {
            return Err(Error::Config("n_interior must be >= 1".into()));
        }
        Ok(Resolved {
            domain,
            material,
            segments,
            network,
            weights,
            train,
        })
    }
}

fn pressure_edge_y(id: &str, x: f64, h: f64, normal_x: f64, p: f64) -> SegmentSpec {
    SegmentSpec {
        id: id.into(),
        kind: SegmentKind::Pressure,
        value: p,
        geometry: GeometrySpec::EdgeY { x, y0: 0.0, y1: h, normal_x },
    }
}

fn flux_edge_x(id: &str, y: f64, x0: f64, x1: f64, normal_y: f64) -> SegmentSpec {
    SegmentSpec {
        id: id.into(),
        kind: SegmentKind::Flux,
        value: 0.0,
        geometry: GeometrySpec::EdgeX { y, x0, x1, normal_y },
    }
}

/// Concentric-cylinder benchmark at desk scale: unit material, beta = 1,
/// radii 0.3/1.0, pressures 10 -> 1.
pub fn cylinder_config() -> RunConfig {
    RunConfig {
        domain: DomainSpec::Annulus { r_i: 0.3, r_o: 1.0 },
        material: MaterialSpec {
            k0: K0Spec::Scalar { value: 1.0 },
            beta: 1.0,
            mu: 1.0,
            p_atm: 1.0,
            p_min: default_p_min(),
        },
        boundaries: vec![
            SegmentSpec {
                id: "inner".into(),
                kind: SegmentKind::Pressure,
                value: 10.0,
                geometry: GeometrySpec::Circle { radius: 0.3, outward: -1.0 },
            },
            SegmentSpec {
                id: "outer".into(),
                kind: SegmentKind::Pressure,
                value: 1.0,
                geometry: GeometrySpec::Circle { radius: 1.0, outward: 1.0 },
            },
        ],
        network: NetworkSpec {
            depth: 4,
            width: 32,
            n_f: 4,
            activation: Activation::Tanh,
            seed: 0,
            frequencies: None,
        },
        sampling: SamplingSpec {
            n_interior: 2000,
            n_boundary: 200,
            seed: 0,
        },
        weights: WeightsSpec::default(),
        optimizer: OptimizerSpec {
            adam: AdamConfig {
                epochs: 2000,
                ..Default::default()
            },
            lbfgs: LbfgsConfig {
                max_iters: 500,
                ..Default::default()
            },
        },
        output: OutputSpec::default(),
    }
}

/// Concentric-sphere benchmark on the half shell (no-flux cut plane).
pub fn sphere_config() -> RunConfig {
    let mut cfg = cylinder_config();
    cfg.domain = DomainSpec::HalfSphericalShell { r_i: 0.3, r_o: 1.0 };
    cfg.boundaries = vec![
        SegmentSpec {
            id: "inner".into(),
            kind: SegmentKind::Pressure,
            value: 10.0,
            geometry: GeometrySpec::Hemisphere { radius: 0.3, outward: -1.0 },
        },
        SegmentSpec {
            id: "outer".into(),
            kind: SegmentKind::Pressure,
            value: 1.0,
            geometry: GeometrySpec::Hemisphere { radius: 1.0, outward: 1.0 },
        },
        SegmentSpec {
            id: "cut".into(),
            kind: SegmentKind::Flux,
            value: 0.0,
            geometry: GeometrySpec::CutAnnulus { r_i: 0.3, r_o: 1.0 },
        },
    ];
    cfg.sampling.n_interior = 4000;
    // the 3-D shell trains noticeably slower at the 2-D rate and budget; the
    // velocity peak at the inner radius needs the extra refinement iterations
    cfg.optimizer.adam.learning_rate = 3e-3;
    cfg.optimizer.adam.epochs = 3000;
    cfg.optimizer.lbfgs.max_iters = 600;
    cfg
}

/// Default layer stack for the layered benchmark: five horizontal layers of
/// alternating contrast 1 / 10 on [0, 4].
pub fn default_layers() -> (Vec<f64>, Vec<f64>) {
    (vec![0.8, 1.6, 2.4, 3.2], vec![1.0, 10.0, 1.0, 10.0, 1.0])
}

/// Layered-medium benchmark: L = 5, H = 4, pressure drop 10 -> 1, sealed walls.
pub fn layered_config() -> RunConfig {
    let (breaks, values) = default_layers();
    RunConfig {
        domain: DomainSpec::LayeredRectangle {
            l: 5.0,
            h: 4.0,
            layer_breaks: breaks.clone(),
            layer_k0s: values.clone(),
        },
        material: MaterialSpec {
            k0: K0Spec::LayeredY { breaks, values },
            beta: 1.0,
            mu: 1.0,
            p_atm: 1.0,
            p_min: default_p_min(),
        },
        boundaries: vec![
            pressure_edge_y("left", 0.0, 4.0, -1.0, 10.0),
            pressure_edge_y("right", 5.0, 4.0, 1.0, 1.0),
            flux_edge_x("bottom", 0.0, 0.0, 5.0, -1.0),
            flux_edge_x("top", 4.0, 0.0, 5.0, 1.0),
        ],
        network: NetworkSpec {
            depth: 4,
            width: 32,
            n_f: 4,
            activation: Activation::Tanh,
            seed: 0,
            frequencies: None,
        },
        sampling: SamplingSpec {
            n_interior: 3000,
            n_boundary: 150,
            seed: 0,
        },
        weights: WeightsSpec::default(),
        optimizer: OptimizerSpec {
            adam: AdamConfig {
                epochs: 2000,
                ..Default::default()
            },
            lbfgs: LbfgsConfig {
                max_iters: 500,
                ..Default::default()
            },
        },
        output: OutputSpec::default(),
    }
}

/// Strip-footing benchmark on [0, 10] x [0, 5]: pressure `p1` on T1 = [0, L/4],
/// sealed T2, pressure `p3` on T3 = [3L/4, L], all other walls sealed.
pub fn footing_config(p1: f64, p3: f64) -> RunConfig {
    let (l, h) = (10.0, 5.0);
    RunConfig {
        domain: DomainSpec::Rectangle { l, h },
        material: MaterialSpec {
            k0: K0Spec::Scalar { value: 1.0 },
            beta: 1.0,
            mu: 1.0,
            p_atm: 1.0,
            p_min: default_p_min(),
        },
        boundaries: vec![
            SegmentSpec {
                id: "left".into(),
                kind: SegmentKind::Flux,
                value: 0.0,
                geometry: GeometrySpec::EdgeY { x: 0.0, y0: 0.0, y1: h, normal_x: -1.0 },
            },
            SegmentSpec {
                id: "right".into(),
                kind: SegmentKind::Flux,
                value: 0.0,
                geometry: GeometrySpec::EdgeY { x: l, y0: 0.0, y1: h, normal_x: 1.0 },
            },
            flux_edge_x("bottom", 0.0, 0.0, l, -1.0),
            SegmentSpec {
                id: "T1".into(),
                kind: SegmentKind::Pressure,
                value: p1,
                geometry: GeometrySpec::EdgeX { y: h, x0: 0.0, x1: 0.25 * l, normal_y: 1.0 },
            },
            flux_edge_x("T2", h, 0.25 * l, 0.75 * l, 1.0),
            SegmentSpec {
                id: "T3".into(),
                kind: SegmentKind::Pressure,
                value: p3,
                geometry: GeometrySpec::EdgeX { y: h, x0: 0.75 * l, x1: l, normal_y: 1.0 },
            },
        ],
        network: NetworkSpec {
            depth: 4,
            width: 32,
            n_f: 4,
            activation: Activation::Tanh,
            seed: 0,
            frequencies: None,
        },
        sampling: SamplingSpec {
            n_interior: 3000,
            n_boundary: 100,
            seed: 0,
        },
        weights: WeightsSpec::default(),
        optimizer: OptimizerSpec {
            adam: AdamConfig {
                epochs: 3000,
                learning_rate: 3e-3,
                ..Default::default()
            },
            // the reciprocity indicator keeps improving deep into stage 2;
            // the tract fluxes it integrates converge much later than the loss
            lbfgs: LbfgsConfig {
                max_iters: 2000,
                ..Default::default()
            },
        },
        output: OutputSpec::default(),
    }
}

/// The named benchmark presets accepted by the CLI.
pub fn benchmark_config(name: &str) -> Result<RunConfig> {
    match name {
        "cylinder" => Ok(cylinder_config()),
        // primary footing load pattern: pressure 10 on T1, vented (p = 1) on T3
        "footing" => Ok(footing_config(10.0, 1.0)),
        "layered" => Ok(layered_config()),
        "sphere" => Ok(sphere_config()),
        other => Err(Error::Config(format!(
            "unknown benchmark '{other}' (expected cylinder, sphere, layered, footing)"
        ))),
    }
}
