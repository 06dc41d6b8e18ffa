//! Monte Carlo laboratory for two-dimensional random spanning trees.
//!
//! Three tree models are sampled on finite planar graphs with free or wired
//! boundary conditions:
//!
//! * UST, the uniform spanning tree, via Wilson's loop-erased random walks ([`ust`]);
//! * MST, the minimal spanning tree for i.i.d. uniform edge call numbers ([`mst`]);
//! * EST, the Euclidean minimal spanning tree on Poisson points ([`est`]).
//!
//! The measurement kernel ([`crossings`]) counts vertex-disjoint traversals of
//! annuli and rectangles by max-flow; [`analysis`] turns those counts into
//! crossing probabilities, exponent fits and the statistical property checks,
//! and [`fractal`] holds the geometric observables of branches.

pub mod analysis;
pub mod crossings;
pub mod error;
pub mod est;
pub mod fractal;
pub mod geom;
pub mod grid;
pub mod mst;
pub mod record;
pub mod rng;
pub mod stats;
pub mod unionfind;
pub mod ust;

pub use error::{Error, Result};
pub use geom::Point;
pub use grid::{AnnulusSpec, Boundary, RegionGraph};
pub use record::{EstimateRecord, ExponentFit, Model};
pub use ust::{Curve, SpanningTree};
