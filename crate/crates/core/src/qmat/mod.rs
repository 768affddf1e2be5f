//! Dense complex-matrix kernel.

mod density;
mod eigen;
mod local;
mod matrix;
mod measure;
mod ops;

pub use density::{DensityMatrix, InvariantReport, Layout, HERMITIAN_TOL, PSD_TOL, TRACE_TOL};
pub use eigen::{hermitian_eigenvalues, min_hermitian_eigenvalue};
pub use local::{apply_local_unitaries, expectation, expectation_of_product, UNITARY_TOL};
pub use matrix::{tensor_product, ComplexMatrix};
pub use measure::{
    bell_basis, computational_basis, joint_measure_two_sites, measure_sites, orthonormality_deviation,
    plus_minus_basis, projective_measure, Branch, ORTHONORMAL_TOL, ZERO_PROBABILITY,
};
pub use ops::{equatorial, LocalOp, ObservableExpr};
