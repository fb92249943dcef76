//! Boundary value problems on finite strongly connected weighted networks.
//!
//! The library models a network as its normalized random walk and exposes
//! the classical potential-theoretic apparatus: restricted Green kernels,
//! hitting distributions, the induced boundary chain, and solvers for the
//! Laplace and bi-Laplace problem families (Poisson, Neumann, Dirichlet,
//! mixed, Robin, plate problems, and the associated boundary-data maps),
//! together with Monte Carlo estimators for cross-checking the linear
//! algebra against the walk itself.

pub mod bilaplace;
pub mod error;
pub mod field;
pub mod laplace;
pub mod linalg;
pub mod markov;
pub mod network;
pub mod simulate;
pub mod tol;

pub use bilaplace::{
    bi_blocks, bi_d2n, bi_n2d, biharmonic_green, plate1_condition, solve_bidirichlet,
    solve_bineumann, solve_iterated_dirichlet, solve_iterated_poisson, solve_plate1, solve_plate2,
    transfer_matrix, BiLaplaceBlocks, BiharmonicGreen, BiharmonicKind, PlateCondition,
};
pub use error::{Error, Result};
pub use field::{Cx, FieldFunction, FieldMeasure};
pub use laplace::{
    apply_laplacian, balayage, dirichlet_to_neumann, normal_derivative, solve_dirichlet,
    solve_dirichlet_potential, solve_mixed, solve_neumann, solve_poisson, solve_poisson_potential,
    solve_robin, BalayageResult, NormalDerivativeKind, PotentialTransform, Solution,
};
pub use markov::{
    boundary_chain, green_restricted, hitting_matrix, BoundaryApparatus, GreenKernel, Partition,
    TransitionSystem,
};
pub use network::Network;
pub use simulate::{
    estimate_boundary_chain, estimate_green, estimate_hitting, sample_step, walk_out_of,
    walk_to_target, EstimateReport, Rng, Trajectory,
};
