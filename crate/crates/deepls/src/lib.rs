//! DeepLS: steady gas flow through porous media under the pressure-dependent
//! Klinkenberg permeability model.
//!
//! The pipeline: the Hopf–Cole change of variables turns the nonlinear
//! pressure equation into a linear system in the transformed pressure and
//! velocity; a weighted least-squares residual functional over a shared-trunk
//! network is minimized in two stages (Adam, then L-BFGS); the physical
//! pressure is recovered through the principal Lambert-W branch. Closed-form
//! radial and layered solutions and a Betti reciprocity indicator provide
//! verification.

pub mod analytic;
pub mod autodiff;
pub mod config;
pub mod error;
pub mod geometry;
pub mod loss;
pub mod network;
pub mod optimize;
pub mod tensor;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{BoundarySegment, CollocationBatch, Domain, Point};
pub use loss::{Field, LossBreakdown, LossHistory, NetworkField, ResidualWeights, WeightMode};
pub use network::{Activation, FieldEval, Network, NetworkConfig, ParameterVector};
pub use optimize::{train, AdamConfig, LbfgsConfig, TrainConfig, TrainerState};
pub use transform::{
    apparent_permeability, hopf_cole_forward, hopf_cole_inverse, lambert_w0, MaterialModel,
    Permeability,
};
pub use verify::{BettiReport, ErrorReport};
