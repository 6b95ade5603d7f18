//! Multi-view subspace clustering on the Product Grassmann Manifold.
//!
//! Each sample (e.g. a multi-camera video clip) is represented as one point
//! per view on a Grassmann manifold; the bundle of views is a point on the
//! product manifold. Clustering proceeds by solving a low-rank representation
//! problem over the product-manifold Gram matrix, optionally with a Laplacian
//! regularizer tying together samples that are close in geodesic distance,
//! and then running normalized-cut spectral clustering on the resulting
//! affinity matrix.
//!
//! Pipeline stages map onto the modules:
//!
//! 1. [`manifold`] — build Grassmann points from raw frame matrices via SVD.
//! 2. [`gram`] — reduce the dataset to the per-view kernel matrices Δᵐ and
//!    their sum Δ, the only statistic the solvers need.
//! 3. [`solvers`] — closed-form PGLRR and the ALM solver for LapPGLRR.
//! 4. [`clustering`] — affinity symmetrization, NCut, accuracy scoring.
//! 5. [`data_io`] — dataset manifests, matrix files, artifacts, synthetic data.

pub mod clustering;
pub mod data_io;
pub mod error;
pub mod gram;
pub mod manifold;
pub mod solvers;

pub use error::{Error, Result};
pub use manifold::{EmbeddedPoint, GrassmannPoint, ProductGrassmannPoint};
