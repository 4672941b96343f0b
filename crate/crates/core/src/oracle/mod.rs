//! Brute-force references: Fourier Hill matrices for band edges, and a finite-difference
//! discretization of `H_{ζ,ε}` on a box with an optional complex absorbing potential.

pub mod tridiag;
pub mod hill_matrix;
pub mod grid;

pub use grid::{build_grid_hamiltonian, oracle_spectrum, GridHamiltonian, OracleConfig, OracleEigenpair, Region};
pub use hill_matrix::{hill_matrix_band_edges, HillEdges};
