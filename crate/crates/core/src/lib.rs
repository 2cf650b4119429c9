//! Pebble-graph embedding and multi-agent path planning on triangle meshes.
//!
//! The pipeline turns a polygonal workspace into a triangle mesh whose cells
//! each host a 3-robot loop, optimizes the mesh so that as many cells as
//! possible admit collision-free loop and inter-cell moves, and then plans
//! and schedules permutations of robots on the resulting pebble graph.

pub mod geometry;
pub mod trimesh;
pub mod workspace;
pub mod constrained_opt;
pub mod pebble_graph;
pub mod optimizer;
pub mod shapes;
pub mod planner;
pub mod scheduler;
pub mod verifier;
pub mod cli;
