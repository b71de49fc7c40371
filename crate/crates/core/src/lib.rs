//! Exact computation of Melnikov derivatives for quadratic time-reversible systems in R^3.

pub mod engine;
pub mod error;
pub mod exact;
pub mod hermite;
pub mod identities;
pub mod oracle;
pub mod systems;
pub mod weber;

pub use engine::{
    branch_side, classify_bifurcation, compute_derivatives, d2_dv2, d2_dv_dalpha, d3_dv3, second_variation,
    Bifurcation, BranchSide, MelnikovReport, SecondDerivative,
};
pub use error::{MelnikovError, Result};
pub use exact::{RadicalValue, Rational};
pub use hermite::{HermiteSeries, Parity};
pub use oracle::{closed_form_oracle, coefficient_table, CoefficientTable, Derivative, OracleSource};
pub use systems::{AdjointSolution, PerturbedSystem, SystemName, VariationTriple};
pub use weber::{solve_weber, KernelPolicy, WeberProblem};
