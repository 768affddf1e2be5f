//! Verification of entangled states known only up to a subspace and a blind
//! local-phase channel: nonlinear witnesses, paradox batteries, noise
//! thresholds, network reductions and a zero-knowledge verification game.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); aliases with a
//! `64` suffix fix the scalar to `f64`.

pub mod error;
pub mod networks;
pub mod oracle;
pub mod qmat;
pub mod scalar;
pub mod states;
pub mod witnesses;
pub mod zkp;

pub use error::{Error, Result};
pub use qmat::{ComplexMatrix, DensityMatrix, LocalOp, ObservableExpr};
pub use scalar::{Real, C};
pub use states::{BlindChannel, Family, KrausChannel, StateSpec};

pub type ComplexMatrix64 = ComplexMatrix<f64>;
pub type ComplexMatrix32 = ComplexMatrix<f32>;
pub type DensityMatrix64 = DensityMatrix<f64>;
pub type DensityMatrix32 = DensityMatrix<f32>;
