//! Specular billiard dynamics in periodic cylinders whose cross section is an
//! analytic, possibly non-convex planar domain.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! immutable inputs, so callers may fan work out over threads freely.
//!
//! Conventions used throughout:
//! - cross-section vectors are [`Vec2`] with components `(x1, x3)` stored as
//!   `(x, y)`; full phase vectors are [`Vec3`] `(x1, x2, x3)` with `x2` axial;
//! - the outer boundary runs counterclockwise and holes clockwise, so the
//!   normal `(a'_3, -a'_1)/|a'|` always points out of the domain;
//! - signed curvature is negative on convex arcs and positive on concave ones.
#![no_std]
// `!(x > 0.0)` rejects NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod geometry;
pub mod grazing;
pub mod jacobians;
pub mod kinetic;
pub mod tolerances;
pub mod trajectory;

mod math;

pub use math::{axial_cross, cross, Vec2, Vec3};
