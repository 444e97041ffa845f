//! Degree values, the resolvent solver, the brute-force oracle and the
//! existence pipeline.

pub mod annulus;
pub mod formulas;
pub mod oracle;
pub mod pipeline;
pub mod primitive;
pub mod solver;
pub mod unfold;

pub use annulus::{AnnulusConfig, RadiusBound};
pub use formulas::{
    degree_at_infinity, degree_at_zero, degree_eigen_ray, degree_linear, degree_normalization, ls2_condition_check,
    DegreeReport, Hypothesis, Ls2Report, Rule, SweepRun, Window,
};
pub use oracle::{brouwer_degree_bruteforce, iteration_map, OracleConfig, OracleReport, OracleZero};
pub use pipeline::{existence_pipeline, Attempt, ExistenceReport, Outcome, PipelineConfig};
pub use primitive::{primitive_solution_check, PrimitiveReport, PrimitiveVerdict};
pub use solver::{
    best_report, coincidence_residual, default_starts, multistart_solve, resolvent_fixed_point_solve, SolveReport,
    SolverConfig,
};
pub use unfold::Unfolding;
