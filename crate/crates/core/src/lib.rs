//! Lattice discretization of pure-jump Markov processes: conductance
//! matrices on (1/n)Z^d, exact chain simulation, Dirichlet-form and
//! semimartingale functionals, convergence condition checkers, and
//! semigroup comparison against reference stable laws.

pub mod chain;
pub mod conditions;
pub mod config;
pub mod diagnostics;
pub mod discretize;
pub mod error;
pub mod expr;
pub mod forms;
pub mod geom;
pub mod kernel;
pub mod lattice;
pub mod pipeline;
pub mod quad;
pub mod semigroup;

pub use chain::{
    simulate_ensemble, simulate_path, EnsembleSummary, InitialDistribution, PathSample,
    SimulationConfig,
};
pub use conditions::{ConditionReport, ConditionValue, TrendReport};
pub use config::RunConfig;
pub use diagnostics::{empirical_cf, empirical_cf_censored, ks_against_cauchy, CFReport, KsResult};
pub use discretize::{ConductanceMatrix, Scheme, SplitConductance};
pub use error::{Error, Result};
pub use forms::{alpha0_n, apply_generator, comparison_check, dirichlet_form_e, form_h};
pub use kernel::{
    cauchy_field, cauchy_kernel, levy_mix_kernel, stable_like_kernel, JumpKernel,
    LevyMeasureField, TruncationFunction,
};
pub use lattice::{restrict, Lattice, LatticeFunction};
pub use pipeline::{build_matrix, convergence_sweep, SweepRow, SweepTable};
pub use quad::QuadratureSpec;
pub use semigroup::{apply_semigroup, strong_semigroup_error, ReferenceSemigroup};
