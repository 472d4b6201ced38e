//! Computational tools for SL(2,C) representations of the free group of rank two.
//!
//! The crate is organised bottom-up:
//!
//! * [`farey`] addresses primitive conjugacy classes by rationals and builds
//!   their words, mod-2 types and palindromic representatives.
//! * [`markoff`] labels the Farey tree with traces, orients its edges and
//!   walks it (sinks, plugholes, wakes, descending paths).
//! * [`bq`] decides the BQ-condition up to a budget, producing certificates
//!   that can be re-validated independently.
//! * [`h3geom`] lifts trace triples to matrices and does upper half-space
//!   geometry: distances, axes, complex lengths, common perpendiculars.
//! * [`pscheck`] estimates quasigeodesic constants of primitive broken
//!   geodesics and the bounded intersection property.

pub mod bq;
pub mod farey;
pub mod h3geom;
pub mod markoff;
pub mod pscheck;

pub use num_complex::Complex64;

/// Version tag carried by every serialised report.
pub const SCHEMA_VERSION: u32 = 1;

pub use bq::{bq_test, validate_certificate, AttractingTree, BqConfig, BqVerdict, BqWitness};
pub use farey::{BasicPair, Letter, Mod2Type, Rational, Word};
pub use h3geom::{Geodesic, H3Point, MoebiusMatrix};
pub use markoff::{RegionRef, Trace, TraceTriple, Vertex};
pub use pscheck::{bip_report, ps_estimate, ps_verdict, PsConfig, PsVerdict};
