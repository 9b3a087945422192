//! Moments of the number of perfect matchings in random `n`-lifts of a
//! connected loop-free multigraph.
//!
//! The crate covers the whole computational pipeline:
//!
//! * [`graph`]: multigraphs, incidence matrices and adjacency spectra;
//! * [`exact`] and [`lattice`]: big-integer lattice algebra (kernels,
//!   covolumes, quotient orders) and the first/second moment lattices;
//! * [`laplace`]: maximization on affine sections, restricted Hessian
//!   determinants, the lattice Laplace estimate and exact coset sums;
//! * [`first_moment`] and [`second_moment`]: exact and asymptotic `E[X]`, `E[X²]`;
//! * [`nb_walks`]: non-backtracking walk counts, cycle statistics and the
//!   small subgraph conditioning constant;
//! * [`sim`]: random lifts, exact matching and cycle counters, exhaustive
//!   oracles and Monte Carlo estimation.

pub mod error;
pub mod exact;
pub mod first_moment;
pub mod graph;
pub mod laplace;
pub mod lattice;
pub mod nb_walks;
pub mod report;
pub mod second_moment;
pub mod sim;
pub mod stats;
pub mod streams;

pub use error::{Error, Result};
pub use graph::{build_matrices, families, symmetric_eigenvalues, GraphMatrices, Multigraph};
pub use laplace::{AsymptoticEstimate, LaplaceProblem, MaximizeOptions};
pub use lattice::{ExactLattice, LatticeDuality, PairIndex};
pub use nb_walks::CycleSpectrum;
pub use report::SymbolicConstant;
pub use sim::{Lift, SimReport, UGraph};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
