//! Polyominoes on random Voronoi tilings.
//!
//! The crate builds Poisson–Voronoi/Delaunay geometry in the plane, the
//! lattice-animal and site-percolation machinery used by block arguments,
//! and a Monte Carlo harness that checks tail bounds and deterministic
//! lemmas about lattice covers of Voronoi polyominoes.
//!
//! Module map:
//!
//! | module        | contents                                                   |
//! |---------------|------------------------------------------------------------|
//! | [`ppp`]       | Poisson point processes on rectangular windows             |
//! | [`geometry`]  | exact-predicate Delaunay, Voronoi cells, box covers        |
//! | [`lattice`]   | lattice animals, boundaries, box unions, greedy animals     |
//! | [`percolation`] | site fields, closed clusters, cluster hulls              |
//! | [`blocks`]    | full boxes, the block field, tile confinement              |
//! | [`polyomino`] | Voronoi polyominoes, lattice covers, segment paths         |
//! | [`modified`]  | the capped/padded point process `N(n)`                     |
//! | [`bondperc`]  | Bernoulli edge rewards and good boxes                      |
//! | [`experiments`] | tail estimation harness, decay fits, CSV output          |

pub mod blocks;
pub mod bondperc;
pub mod connected;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod geometry;
pub mod lattice;
pub mod modified;
pub mod percolation;
pub mod polyomino;
pub mod ppp;
pub mod rng;
pub mod stats;
pub mod unionfind;

pub use error::{Error, Result};
pub use estimate::TailEstimate;
pub use geometry::{Tessellation, Triangulation, VoronoiCell};
pub use lattice::{LatticeAnimal, Site};
pub use ppp::{IntensityModel, PointSet, Window};
