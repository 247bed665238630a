//! Worked identification problems, each with a closed form and an
//! enumeration or linear-programming oracle.

mod causal;
mod frechet;
mod missing_data;
mod mixture;
mod population;

pub use causal::{
    causal_ate_bounds, causal_ate_bounds_exact, causal_ate_reduced_form, causal_bounded, causal_cell, causal_polytope,
    causal_simplex, pre_observation_envelope, randomization, randomized_ate, CausalPoint,
};
pub use frechet::{
    frechet_bounds, frechet_bounds_exact, gaussian_copula_grid, joint_cdf_lp, joint_cdf_region, table_residual,
    DiscreteCdf, JointCdfBounds, JointCdfOracle,
};
pub use missing_data::{
    bounded_outcome, manski_bounds, manski_bounds_exact, manski_reduced_form, missing_data_cell, missing_data_grid,
    missing_data_polytope, missing_data_simplex, uniform_support, MissingDataPoint,
};
pub use mixture::{default_mixture_grid, mixture_grid, mixture_region, swap_labels, MixtureRegions};
pub use population::finite_pop_ate_region;
