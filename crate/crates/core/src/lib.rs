pub mod barycenter;
pub mod cli;
pub mod coreset;
pub mod distribution;
pub mod error;
pub mod instances;
pub mod projection;
pub mod seed;
pub mod solution;
pub mod transport;

pub use barycenter::{solve_barycenter, BarycenterResult, SolverOptions};
pub use distribution::{pooled_atoms, DiscreteDistribution, PooledAtoms};
pub use error::{Error, Result};
pub use projection::{jl_dimension, reduce_solve_reconstruct, DimensionPolicy, MapKind, ProjectionMap};
pub use solution::{validate_solution, CostReport, Solution, SolutionCheck};
