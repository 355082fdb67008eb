//! Coarse-grained field solver: concentrations `(n_A, n_B)` on a periodic
//! grid, coupled through the disk-averaged order parameter `μ`.

mod boundary;
mod dynamics;
mod equilibria;
mod grid;
mod io;
mod layer;
mod stencil;

pub use boundary::{boundary_speed_prediction, interface_mean_field, predicted_alpha};
pub use dynamics::{
    rhs, rhs_cell, Integrator, MeanFieldSolver, SolverOptions, SolverStats, MAX_DT,
};
pub use equilibria::{
    committed_fixed_points, committed_mu, convergence_eigenvalues, critical_committed_fraction,
    equilibrium_field, local_equilibrium, reaction_term, slow_manifold_s, FixedPoint,
    FixedPointReport, ReactionModel, Stability, COMMITTED_MAX_SWEEPS,
};
pub use grid::{validate_grid, FieldGrid, MIN_CELLS_PER_RADIUS};
pub use io::{read_field_csv, snapshot_name, write_field_csv, write_pgm};
pub use layer::{
    chord_kernel_weights, stationary_layer_profile, LayerProfile, LAYER_DAMPING, LAYER_HALF_WIDTH,
    LAYER_MAX_ITERATIONS,
};
pub use stencil::{disk_average, Averager, Convolution, DiskStencil, SpectralAverager};
