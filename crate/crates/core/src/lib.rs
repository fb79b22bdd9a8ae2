//! Multiple orthogonal polynomials along nested paths of multi-indices, their
//! lower-Hessenberg recurrence matrices, Christoffel–Darboux kernels and the
//! asymptotic diagnostics built on them.
//!
//! Everything numeric is generic over [`Scalar`]: use [`Exact`] for
//! certified identities and [`Real`] (MPFR at [`scalar::precision_bits`]) for
//! larger sizes.

pub mod asymptotics;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod hessenberg;
pub mod kernel;
pub mod linalg;
pub mod measures;
pub mod mop;
pub mod paths;
pub mod poly;
pub mod quadrature;
pub mod roots;
pub mod scalar;

pub use error::{Error, Result};
pub use hessenberg::{build_j, build_j_from_nnrr, HessenbergMatrix};
pub use kernel::CDKernel;
pub use measures::{Interval, MeasureSystem, ReferenceRule, SystemKind, WeightComponent};
pub use mop::{Mop, PathFamily};
pub use paths::{MultiIndex, Path};
pub use poly::Poly;
pub use scalar::{BigReal, Scalar};

/// Exact rational arithmetic.
pub type Exact = num_rational::BigRational;

/// Multiple-precision binary floats.
pub type Real = BigReal;
