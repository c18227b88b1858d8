//! Electric quantum walks on the line: coins and walk steps, transfer-matrix
//! cocycles and Lyapunov exponents, CMV forms, finite unitary restrictions with
//! their resolvents, long-time dynamics, and continued-fraction tools for the
//! field.
//!
//! The walk machinery is generic over [`Real`] (`f32`/`f64`); the dense
//! eigen-solves in [`restrict`] run in `f64`.

pub mod cmv;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod numtheory;
pub mod restrict;
pub mod scalar;
pub mod walk;
pub mod xfer;

pub use error::{Result, WalkError};
pub use linalg::{Banded, Mat2};
pub use scalar::Real;
pub use numtheory::{ContinuedFraction, Field, FieldClass, LiouvilleSchedule};
pub use walk::{apply_electric_step, apply_shift, dense_window_matrix, Coin, StateVector, WalkSpec};

pub use dynamics::{evolve, EvolveOptions, RecordSchedule, Trajectory};
pub use xfer::{Cocycle2x2, LyapunovEstimate};

pub type Coin64 = Coin<f64>;
pub type WalkSpec64 = WalkSpec<f64>;
pub type StateVector64 = StateVector<f64>;
pub type Banded64 = Banded<f64>;
pub type Mat2f64 = Mat2<f64>;
pub type Coin32 = Coin<f32>;
pub type WalkSpec32 = WalkSpec<f32>;
pub type Cocycle64 = Cocycle2x2<f64>;
pub type LyapunovEstimate64 = LyapunovEstimate<f64>;
pub type Trajectory64 = Trajectory<f64>;
