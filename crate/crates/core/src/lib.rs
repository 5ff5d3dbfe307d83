//! Angles of lattice points on circles `x^2 + y^2 = n`.
//!
//! The crate computes the angles from the factorization of `n` in the
//! Gaussian integers, measures their spacing and smoothed `r`-level
//! correlations, and checks the combinatorial and arithmetic predictions
//! for these statistics against brute-force oracles.

pub mod cells;
pub mod circle;
pub mod error;
pub mod family;
pub mod gaussian;
pub mod kernels;
pub mod random_model;
pub mod spacing;

pub use cells::{alpha, enumerate_cells, k_s, CellTable, KVector, KernelCell, SubsetClass};
pub use circle::{angles, brute_force_angles, lambda, lambda_exact, r_of, AngleSet, FactoredRadius};
pub use error::{Error, Result};
pub use family::{EulerProductConfig, Family, FamilySpec, PrimeTable};
pub use gaussian::{
    check_repulsion, is_sum_of_two_squares, sieve_split_primes, split_prime, PrecisionContext,
    Repulsion, SplitPrime,
};
pub use kernels::{correlation_direct, correlation_distinct, correlation_fourier, SmoothingKernel};
pub use random_model::{MCEstimate, RandomRealization};
pub use spacing::{gaps, ks_exponential, star_discrepancy, GapMode, GapSample};
