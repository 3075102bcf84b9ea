//! Exact optimal allocation and selection for finite-support models.
//!
//! Posteriors depend on the history only through the outcome counts per
//! alternative, so states are count vectors. [`solve_bellman`] runs backward
//! induction over the reachable count states; [`brute_force_value`] is an
//! independent exhaustive oracle over raw histories.

mod brute;
mod count;
mod discretize;
mod model;
mod solver;

pub use brute::{brute_force_value, DEFAULT_PATH_CAP};
pub use count::{bernoulli_upper_bound, floor_lower_bound, paper_bounds, state_space_size};
pub use discretize::{discretize_prior, quantile_grid, ContinuousSpec, MAX_GRID_POINTS};
pub use model::{posterior_pmf, predictive_pmf, terminal_value, DiscreteModel, DiscreteState, Reward};
pub use solver::{solve_bellman, Level, SolvedPolicy, SolverConfig};
