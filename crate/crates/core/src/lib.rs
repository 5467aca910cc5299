//! Equilibrium finder and verification toolkit for a rigid four-legged
//! table standing on continuous ground of bounded slope.
//!
//! The table is settled on three feet, the fourth foot's signed height is
//! tracked along a continuous motion that keeps three feet on the ground,
//! and the sign change of that height gives a placement with all four feet
//! down. Two motions are provided: a march along the intersection of a
//! sphere with the ground ([`motion::run_motion_a`]) and a
//! rotate-then-translate motion ([`motion::run_motion_b`]). The
//! [`conjecture`] module explores tables whose feet lie on a circle.

pub mod campaign;
pub mod conjecture;
pub mod contact;
pub mod error;
pub mod exec;
pub mod gamma;
pub mod geometry;
pub mod motion;
pub mod root;
pub mod terrain;
pub mod warnings;

pub use error::{Condition, Result, WobbleError};
pub use exec::Exec;
pub use geometry::{Point3, SphereS, Thresholds, Vec3};
pub use terrain::{Extent, Terrain};
