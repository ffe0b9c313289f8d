//! Directional boundary measures and directional traces on bounded open
//! domains, with numerical checks of the associated identities and bounds.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod field;
pub mod gallery;
pub mod geometry;
pub mod measure;
pub mod point;
pub mod quadrature;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
pub use field::{ExprField, FnField, Polynomial, ScalarField};
pub use geometry::{project, Domain, DomainKind, DomainSpec, ExitRecord, Fiber};
pub use point::{Direction, Point};
