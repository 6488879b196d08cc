//! Chance-constrained DC optimal power flow under wind uncertainty.
//!
//! The crate formulates and solves the standard chance-constrained OPF and
//! its weighted variants (linear and quadratic overload weighting) for
//! affine and piecewise-affine generation-control policies, and validates
//! solutions by Monte-Carlo sampling of the wind fluctuations.
//!
//! Module map:
//! - [`netmodel`]: grid data model, JSON case files, DC flow matrix
//! - [`gaussmath`]: scalar Gaussian special functions and truncated moments
//! - [`policy`]: recourse policies and the fluctuation model
//! - [`chance`]: chance-constraint construction and evaluation
//! - [`solver`]: cutting-plane solve loop over an LP core
//! - [`montecarlo`]: sampling, empirical violation statistics, comparisons

pub mod chance;
pub mod error;
pub mod gaussmath;
pub mod montecarlo;
pub mod netmodel;
pub mod policy;
pub mod quad;
pub mod solver;

pub use chance::{
    build_constraint_set, ConstraintContext, ConstraintEval, ConstraintKind, ConstraintSpec,
    FormulationConfig, PolicyForm, Target,
};
pub use error::{CoreError, Result};
pub use gaussmath::{
    std_cdf, std_pdf, std_quantile, trunc_mean, trunc_mean_grad, trunc_second_moment,
    trunc_second_moment_grad, Gauss1D,
};
pub use montecarlo::{
    compare, sample_fluctuations, validate, ComparisonTable, ConstraintStats, ValidationConfig,
    ViolationReport,
};
pub use netmodel::{
    build_flow_matrix, line_flow, load_case_path, load_case_str, FlowMatrix, Generator, Line,
    NetworkCase, WindSource,
};
pub use policy::{
    check_balance, conditional_moments_gen, conditional_moments_line, AffinePolicy, BalanceReport,
    BasisFn, FluctuationModel, GeneralPolicy, PiecewiseAffinePolicy, Policy, Side,
};
pub use solver::{
    lp_solve, solve, DecisionVector, Formulation, LinearProgram, LpRow, LpSense, LpSolution,
    LpStatus, SolutionReport, SolveOptions, SolveStatus,
};
