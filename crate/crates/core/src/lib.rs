//! Penalized variable selection for Weibull multi-parameter regression
//! survival models.
//!
//! Covariates enter both the Weibull scale (`log tau = x' beta`) and shape
//! (`log gamma = z' alpha`). Coefficients are estimated by maximizing a
//! penalized log-likelihood (LASSO, SCAD or adaptive LASSO, with a smoothed
//! absolute value) via Newton-Raphson; tuning parameters are chosen by
//! minimizing BIC with differential evolution; standard errors come from the
//! sandwich formula.
//!
//! ```no_run
//! use mprsel::{select_and_fit, DEConfig, PenaltyFamily, PenaltySpec, SolverConfig, TuningMode};
//! # fn run(data: &mprsel::SurvivalDataset) -> mprsel::Result<()> {
//! let penalty = PenaltySpec::new(PenaltyFamily::Alasso, TuningMode::SingleAdaptive);
//! let result = select_and_fit(data, &penalty, &SolverConfig::default(), &DEConfig::default())?;
//! println!("lambda* = {:?}, BIC = {}", result.lambda_star, result.bic_star);
//! # Ok(())
//! # }
//! ```

pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod likelihood;
pub mod penalty;
pub mod selection;
pub mod simulation;
pub mod solver;

pub use data::{destandardize_theta, standardize, StandardizationRecord, SurvivalDataset, ThetaVector};
pub use error::{Error, Result};
pub use penalty::{LambdaVector, PenaltyFamily, PenaltySpec, TuningMode};
pub use selection::{select_and_fit, DEConfig, SelectionResult};
pub use simulation::{run_scenario, SimReport, SimScenario};
pub use solver::{fit_penalized, fit_unpenalized, FitResult, SolverConfig};
