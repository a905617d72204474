//! P1 finite elements on graded meshes of the two-inclusion domain.

pub mod delaunay;
pub mod mesh;
pub mod mesher;
pub mod problem;
pub mod sparse;

pub use mesh::{tag, Mesh, MeshReport};
pub use mesher::{gap_layers, mesh_domain, min_gap_layers, MeshOptions, MIN_ANGLE_FLOOR};
pub use problem::{assemble, FeProblem, Field, Physics, SolverKind};
