//! Contact reasoning for quasi-static planar pushing.
//!
//! The pipeline: an object [`geometry::ShapeContour`] and a belief over its
//! physical state feed dense push [`affordance`] maps; the [`planner`]
//! samples promising contact points from them and optimizes a straight push
//! at each by rolling out the limit-surface [`dynamics`]. The [`sim`]
//! module executes pushes on a ground-truth object and the [`estimation`]
//! EKF tracks pose and latent properties from noisy pose observations.

pub mod affordance;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod planner;
pub mod sim;

pub use error::{Error, Result};
