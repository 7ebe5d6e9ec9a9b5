//! Discrete minimal discs in hyperbolic space spanning a quasicircle, and the
//! measurements taken on them.

mod chart;
mod curvature;
mod fit;
mod hull;
mod mesh;
mod solver;
mod sparse;

pub use mesh::{
    boundary_loop, edge_length, face_area, face_area_grad, seed_mesh, seed_mesh_from_map,
    SolverConfig, TriMesh,
};
pub use chart::{conformal_factor_bounds, harmonic_residual, ConformalChart, CHART_TOLERANCE};
pub use curvature::{
    ball_fit_curvatures, mesh_distances, pde_residual, plane_function, principal_curvatures,
    schauder_ratio, CurvatureReport, ProbeStrategy, VertexFlag,
};
pub use hull::{hull_containment, ConvexHullProxy, HullReport};
pub use fit::{sym_eigenvalues, PolyFit};
pub use solver::{mean_curvature_residual, minimize_area, normal_gradient, Minimized};
pub use sparse::{conjugate_gradient, Csr};

use thiserror::Error;

use crate::geom::GeomError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("seeding failed: {0}")]
    Seeding(String),
    #[error("mesh topology: {0}")]
    Topology(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("minimum angle {0:.3} degrees is below the 1 degree floor; remesh required")]
    RemeshRequired(f64),
    #[error("hull proxy construction failed: {0}")]
    Resolution(String),
    #[error("chart violates conformality: defect {0}")]
    Chart(f64),
    #[error("geodesic ball around vertex {0} reaches the boundary")]
    OutOfDomain(usize),
}
