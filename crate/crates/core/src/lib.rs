//! Numerical laboratory for edge asymptotics of sums of unitarily invariant
//! random matrices and of tensor products of unitary-group representations.

pub mod edge;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod observables;
pub mod quad;
pub mod simulate;
pub mod subordination;
pub mod symfn;

pub use error::{Result, SpecError};
pub use measure::{Atom, Measure, MeasureSpec, Spectrum};
pub use quad::C64;
pub use symfn::Signature;
