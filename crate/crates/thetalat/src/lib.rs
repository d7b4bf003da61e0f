//! Geometry of numbers and lattice thermodynamics with exact rational Gram matrices.
//!
//! Modules, bottom-up: [`lattice`] (exact lattice algebra), [`enumeration`] (point
//! censuses and minima), [`reduction`] (Korkin–Zolotarev bases), [`theta`] (certified
//! theta series and inequality audits), [`thermo`] (partition functions, entropy and
//! exact counting oracles) and [`asymptotics`] (saddle-point estimates and contour
//! integrals).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod audit;
pub mod corpus;
pub mod enumeration;
pub mod error;
pub mod lattice;
pub mod matrix;
pub mod numeric;
pub mod rational;
pub mod reduction;
pub mod theta;
pub mod thermo;

pub use audit::{AuditVerdict, Verdict};
pub use error::{Error, Result};
pub use lattice::{make_lattice, AdmissibleSequence, Lattice, OrthogonalLattice};
