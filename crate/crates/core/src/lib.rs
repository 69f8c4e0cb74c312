//! Continuum-deformation coordination of leader–follower multi-agent teams,
//! with temporal-logic trace monitoring and sufficient safety certificates.
//!
//! * [`geometry`]: points, simplexes, barycentric coordinates.
//! * [`continuum`]: homogeneous transforms and communication weights.
//! * [`dynamics`]: leader paths, follower consensus law, RK4 traces.
//! * [`ltl`]: formulas, parser, monitor and the standard requirements.
//! * [`safety`]: separation margins and the eigenvalue certificate.
//! * [`scenario`], [`trace_io`], [`verify`]: files and the verification pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuum;
pub mod dynamics;
pub mod geometry;
pub mod ltl;
mod par;
pub mod safety;
pub mod scenario;
pub mod trace_io;
pub mod verify;

pub use par::Exec;
