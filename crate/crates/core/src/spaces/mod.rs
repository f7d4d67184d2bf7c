//! Closed-form distance and geodesic formulas for the concrete spaces.
//!
//! Every function here works on raw coordinates; [`crate::space::Space`]
//! handles dispatch, shape checks and the product construction.

pub mod euclidean;
pub mod hyperboloid;
pub mod spd;
pub mod spider;

pub use spider::SpiderPoint;
