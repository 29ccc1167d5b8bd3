//! Simulation and verification toolkit for the critical geometric random
//! graph on the discrete 2-torus.
//!
//! Edges join `u` and `v` independently with probability
//! `min{c / (N rho(u, v)), 1}`; the model is critical at `c = 1 / (4 ln 2)`.
//! The crate generates the graph lazily, runs the breadth-first walk that
//! reveals its components, and compares the rescaled walk and component sizes
//! with the reflected parabolic-drift Brownian motion that describes the
//! critical window.

pub mod branching;
pub mod cli;
pub mod error;
pub mod exploration;
pub mod geometry;
pub mod limit;
pub mod mixing;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use error::{Error, Result};
pub use exploration::{component_sizes, explore, rescale_walk, tree_distance, ExplorationTrace, NeighborSource};
pub use geometry::{edge_probability, enumerate_ring, ring_size, torus_distance, Torus, TorusPoint};
pub use model::{critical_coupling, expected_degree_sum, materialize_graph, second_moment_sum, AdjacencyGraph, GraphParams, RevealOracle};
