//! Energy-momentum tensors of Yang-Mills, Higgs and twisted Dirac fields on
//! Lorentzian backgrounds, the identities they satisfy, and exact pointwise
//! decisions of the null, weak, strong and dominant energy conditions.
//!
//! All tensors are expressed in a semi-orthonormal frame whose first vector is
//! the future unit normal of the constant-time slices. Signature is
//! `(-, +, ..., +)` and the Clifford relation is `e_a e_b + e_b e_a = -2 g_ab`.

pub mod clifford;
pub mod emt;
pub mod energycond;
pub mod error;
pub mod gauge;
pub mod geometry;
pub mod numerics;
pub mod scene;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
