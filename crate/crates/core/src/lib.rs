//! Validated numerics for the inner equation of the restricted planar
//! three-body problem.

pub mod cbox;
pub mod certificate;
pub mod error;
pub mod extended;
pub mod gamma;
pub mod inner;
pub mod integrator;
pub mod interval;
pub mod lohner;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod stokes;
pub mod taylor;

pub use cbox::ComplexBox;
pub use interval::RealInterval;
