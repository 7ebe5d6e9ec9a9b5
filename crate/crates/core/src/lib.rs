//! Minimal discs in hyperbolic 3-space spanning quasicircles at infinity.
//!
//! The crate is organised bottom-up:
//!
//! * [`geom`] - hyperboloid-model geometry (distances, planes, charts).
//! * [`teich`] - Laurent-series univalent maps, Schwarzian derivative, Bers
//!   norm and dilatation algebra.
//! * [`infinity`] - fundamental forms at infinity and the width of the
//!   equidistant foliation.
//! * [`disc`] - triangulated minimal discs: seeding, area descent, curvature
//!   extraction and residual diagnostics.
//! * [`harness`] - sweeps, bound verification and report export.

pub mod geom;
pub mod teich;
pub mod infinity;
pub mod disc;
pub mod harness;
