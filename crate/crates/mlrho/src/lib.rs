//! Spectral simulation of rigid extended charges coupled to the Maxwell field
//! on a periodic box, with exact free propagation, Picard time stepping and a
//! diagnostics suite.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod initial_data;
pub mod io;
pub mod random;
pub mod reduce;
pub mod source_operator;
pub mod spectral_field;
pub mod vec3;
pub mod weights_norms;

pub use error::{Error, Result};
pub use evolution::{evolve, picard_step, strang_step, EvolveConfig, Model, Scheme, StepReport, Trajectory};
pub use grid::Grid;
pub use source_operator::{ChargeShape, CouplingMatrix, GridShape, ParticleState, TangentState};
pub use spectral_field::{FieldPair, PhaseSpacePoint, VectorField};
pub use vec3::Vec3;
pub use weights_norms::{make_weight, NormReport, WeightKind, WeightSource, WeightSpec};
