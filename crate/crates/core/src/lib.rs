//! Hyperbolic ordinal embedding (HOE) and Euclidean ordinal embedding (EOE).
//!
//! The crate is organised bottom-up:
//!
//! - [`hypgeo`]: hyperboloid geometry (Minkowski form, distance, tangent
//!   projection, exponential map, radius-ball projection).
//! - [`dataset`]: weighted trees, dissimilarities, the triplet universe and
//!   noisy comparison sampling.
//! - [`embed`]: losses, transforms, empirical/expected risk and the
//!   projected gradient minimisers for both geometries.
//! - [`gramian`]: Gramian and Lorentz-Gramian algebra, including the
//!   decomposition into a rank-one time part and a spatial part.
//! - [`bounds`]: closed-form excess-risk bounds and Monte Carlo estimators
//!   used to check them.
//! - [`treeembed`]: margin-scaled tree embeddings into the hyperbolic plane.
//! - [`formats`]: the plain-text and CSV file formats shared with the CLI.

pub mod bounds;
pub mod dataset;
pub mod embed;
pub mod error;
pub mod formats;
pub mod gramian;
pub mod hypgeo;
pub mod rng;
pub mod treeembed;

pub use error::{Error, Result};
