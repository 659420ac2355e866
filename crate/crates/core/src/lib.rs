//! Fundamental-coordinate model for statistical shape analysis of triangulated
//! surfaces in correspondence.
//!
//! A surface is encoded relative to a reference mesh by per-edge transition
//! rotations and per-triangle tangential stretches. The encoding is invariant
//! under rigid motion, lives in a Lie group with a bi-invariant metric, and is
//! decoded back to vertex positions by a local/global solver.

pub mod align;
pub mod error;
pub mod eval;
pub mod flatten;
pub mod io;
pub mod lie;
pub mod mesh;
pub mod reconstruction;
pub mod reference;
pub mod representation;
pub mod statistics;
pub mod synthetic;

pub use error::{FcmError, Result};
pub use mesh::{load_mesh, load_mesh_auto, save_mesh, MeshFormat, Point, TriangleMesh};
pub use reconstruction::{reconstruct, EnergyReport, ReconstructOptions, Reconstructor};
pub use reference::{build_reference, ReferencePrecomp};
pub use representation::{
    encode, geodesic, rep_distance, rep_exp, rep_inner, rep_log, DistanceParams, ShapeRep, TangentRep,
};
