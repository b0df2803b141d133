//! Graded mesh refinement and Lagrange finite elements for the Poisson
//! problem on polygons and polyhedra with corner and edge singularities.
//!
//! The crate is organised bottom-up: [`domain`] describes the geometry and
//! its singular set, [`refine2d`] and [`refine3d`] build graded mesh
//! sequences, [`fem`] solves and measures errors, [`weighted`] evaluates
//! weighted norms and Hardy constants, and [`study`] ties them together.

pub mod domain;
pub mod error;
pub mod fem;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod refine2d;
pub mod refine3d;
pub mod study;
pub mod weighted;

pub use domain::{BoundaryFlag, Domain, Feature, GradingSpec, VertexType};
pub use error::{Error, Result};
