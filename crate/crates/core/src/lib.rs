//! Best-approximation dynamics for primal-dual monotone inclusions.
//!
//! The projection field `F(x) = Q(w̄, x, T x) - x` of a Kuhn-Tucker map `T`
//! is integrated by its discrete scheme or by Euler steps. The `diagnostics`
//! module checks the standing assumptions on sampled caps.

pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod operators;
pub mod problems;
pub mod space;
pub mod splitting;

pub use dynamics::{solve, solve_field, EulerPath, Mode, StopCriteria, Termination, Trajectory, VectorField};
pub use error::{Error, Result};
pub use geometry::{haugazeau_projection, haugazeau_q, Cap, HalfSpace, HaugazeauCase};
pub use problems::{builtin, NamedInstance};
pub use space::{PDPoint, Vector};
pub use splitting::{build_field, HaugazeauField, ProblemInstance};
