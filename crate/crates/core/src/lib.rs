//! Computational toolkit for Hilbert modular forms over real quadratic
//! fields of narrow class number one.
//!
//! The crate provides exact arithmetic in `Q(sqrt(m))` and its ring of
//! integers, integral-ideal arithmetic in Hermite normal form, ideal-indexed
//! Dirichlet series with Hecke action, truncated Fourier expansions with
//! Rankin-Cohen brackets, Poincare series (both the explicit
//! Kloosterman/Bessel coefficient formula and the direct coset-sum
//! evaluation), and the kernel constructions built from them, together with
//! machine-checkable verification reports for the identities that tie all of
//! these together.
//!
//! All decisions (total positivity, orbit windows, ideal equality, series
//! identities) are made in exact rational arithmetic; big floats enter only
//! for final numeric output, always with an explicit precision in bits.

pub mod error;
pub mod ideals;
pub mod kernels;
pub mod lseries;
pub mod modforms;
pub mod numeric;
pub mod qexp;
pub mod quadfield;

pub use error::Error;
pub use ideals::{Ideal, PrimeIdealData, SplitKind};
pub use lseries::IdealCoeffSeries;
pub use qexp::{Coeff, QExpansion};
pub use quadfield::{FieldContext, FieldElem};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
