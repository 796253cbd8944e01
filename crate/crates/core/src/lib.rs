//! Ground-state preparation of a digitized free scalar field on a 1+1D lattice.
//!
//! Each site holds `n_q` qubits sampling `φ ∈ [−φ_max, φ_max]`. The Gaussian
//! ground state is loaded qubit by qubit with multi-controlled `R_y`
//! rotations. Exact angles come from marginals of the full statevector;
//! fixed-point angles integrate the unprepared sites out analytically, so
//! that each rotation depends only on a few neighbouring sites.

// `!(x > 0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angles;
pub mod circuit;
pub mod cli;
pub mod digitization;
pub mod digitization_error;
pub mod elliptic;
pub mod error;
pub mod fixed_point;
pub mod lattice;
pub mod linalg;
pub mod scalar;

pub use angles::{AlphaTable, LocalAngleTable, SiteAngles, ThetaAngles, ThetaTable};
pub use circuit::{Circuit, Control, ControlledRotation};
pub use digitization::{DigitizationSpec, FieldAddress, Statevector};
pub use error::{Error, Result};
pub use fixed_point::{KMode, MarginalizedSites, SweepMode};
pub use lattice::{Boundary, KMatrix, LatticeSpec};
pub use linalg::Matrix;
pub use scalar::Real;

pub type KMatrix64 = KMatrix<f64>;
pub type LatticeSpec64 = LatticeSpec<f64>;
pub type DigitizationSpec64 = DigitizationSpec<f64>;
pub type Statevector64 = Statevector<f64>;
pub type ThetaTable64 = ThetaTable<f64>;
pub type LocalAngleTable64 = LocalAngleTable<f64>;
pub type AlphaTable64 = AlphaTable<f64>;
pub type Circuit64 = Circuit<f64>;

pub type KMatrix32 = KMatrix<f32>;
pub type Statevector32 = Statevector<f32>;
