//! Prediction with expert advice when outcomes live in a non-positively curved
//! (NPC, CAT(0), Hadamard) geodesic space.
//!
//! The classical exponentially weighted average forecaster averages expert
//! advice linearly. Here the average is replaced by the barycenter of the
//! Gibbs-weighted advice, which makes sense in any NPC space and keeps the
//! `ln K / beta` regret guarantee for exp-concave losses.
//!
//! Crate layout:
//!
//! * [`space`], [`measure`]: space handles, points, distance, geodesics and
//!   finitely supported measures.
//! * [`spaces`]: formulas for Euclidean space, the hyperboloid model, SPD
//!   matrices (Log-Euclidean and Log-Cholesky), spiders and weighted products.
//! * [`barycenter`]: closed-form, cyclic proximal point, inductive and
//!   brute-force barycenter solvers.
//! * [`forecaster`]: the generalized EWA forecaster and regret accounting.
//! * [`batch`]: online-to-batch conversion and barycenter estimation.
//! * [`verify`]: randomized checkers for the geometric inequalities the
//!   guarantees rest on.
//! * [`sampling`]: region samplers and data distributions.

pub mod barycenter;
pub mod batch;
pub mod error;
pub mod forecaster;
pub mod measure;
pub mod sampling;
pub mod space;
pub mod spaces;
pub mod text;
pub mod verify;

pub use barycenter::{BarycenterResult, Solver, SolverConfig, SolverKind};
pub use error::{Error, Result};
pub use measure::WeightedAtoms;
pub use space::{Geometry, Point, Space, SpaceKind};
