//! Branching processes in varying environment.
//!
//! The library builds an environment `v = (f_1, f_2, ...)` of offspring
//! distributions — one per generation — and computes exact finite-horizon
//! quantities of the population process `Z_0 = 1`,
//! `Z_n = sum_{i=1}^{Z_{n-1}} Y_{i,n}`:
//!
//! * moment tables (`mu_n`, `nu_n`, `rho_n` and their normalized sums),
//! * survival probabilities by backward pgf recursion,
//! * shape-function values with sharp bound certificates,
//! * regularity-condition constants and a four-way criticality verdict,
//! * rescaled conditional laws with exponential-limit diagnostics,
//! * reproducible Monte Carlo cross-checks for all of the above.
//!
//! All analytic code is generic over the scalar (`f32` or `f64`) through
//! [`num::Real`]; the aliases below fix `f64`, which is what the CLI and the
//! test suite use.

pub mod num;
pub mod offspring;

pub use num::Real;
pub use offspring::{OffspringDistribution, OffspringError, TruncatedPmf};

/// f64 offspring distribution, the standard instantiation.
pub type Offspring = offspring::OffspringDistribution<f64>;
