//! Numerical laboratory for gradient estimates of the weighted heat equation
//! `∂ₜu − q u − Δ_f u = Σ(t, x, u)` on model smooth metric measure spaces.
//!
//! The core is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`); the aliases at the crate root fix it to `f64`.

pub mod estimates;
pub mod expr;
pub mod geometry;
pub mod nonlinearity;
pub mod scalar;
pub mod solver;

pub use expr::{Expr, Var};
pub use geometry::{BakryEmery, Family, Normalization, WarpTopology};
pub use scalar::{lit, Real};

pub type Geometry = geometry::GeometryState<f64>;
pub type Bounds = geometry::FlowBounds<f64>;
pub type SpaceTimeRegion = geometry::Region<f64>;
