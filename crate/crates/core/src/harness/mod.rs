//! Scenario registry, quadrature oracles, sweeps, identity checks and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod identity;
pub mod output;
pub mod quadrature;
pub mod scenario;
pub mod sweep;

pub use quadrature::{
    composite_legendre, gauss_hermite, gauss_legendre_unit, quadrature_expectation,
    quadrature_expectation_with, AxisRule, GaussRule, MAX_ORACLE_DIM, MAX_ORDER,
};
pub use scenario::{DensityTheorem, JetModel, Scenario, SCENARIO_NAMES};
