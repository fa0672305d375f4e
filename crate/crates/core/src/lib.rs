//! `nonlocal-spectrum`
//!
//! Eigenvalues and algebraic multiplicities of second-order diffusion operators
//! `b0(x) y'' + b1(x) y'` on (0, 1) whose boundary values are averages of the
//! solution, `y(0) = ∫ y dν0` and `y(1) = ∫ y dν1`. An eigenvalue is a zero of
//! a 2×2 characteristic determinant Δ(λ) and its multiplicity is the order of
//! that zero, so the spectrum is found by counting and refining zeros of Δ.
//!
//! The crate is organised around runnable examples, one per capability.
//!
//! ## Directory Structure
//!
//! ```text
//! examples/
//! ├── basics/               # Problems, solutions and the determinant
//! │   ├── problem_file.rs
//! │   ├── fundamental_solutions.rs
//! │   └── delta_grid.rs
//! ├── spectra/              # Eigenvalues, multiplicities and the gap
//! │   ├── dexin_multiplicity.rs
//! │   ├── drift_spectrum.rs
//! │   ├── variable_coefficients.rs
//! │   └── spectral_gap.rs
//! ├── resolvent/            # Solving (L - λ) u = f
//! │   └── resolvent.rs
//! └── operations/           # The command-line front end
//!     └── cli_session.rs
//! ```
//!
//! ## Basic Examples
//!
//! - **`problem_file`** - Build a problem, save it, reload it and validate it
//! - **`fundamental_solutions`** - Adaptive integration against the exact solutions
//! - **`delta_grid`** - Sample Δ on a grid and write plot data
//!
//! ```bash
//! cargo run --release --example problem_file
//! cargo run --release --example fundamental_solutions
//! cargo run --release --example delta_grid
//! ```
//!
//! ## Spectrum Examples
//!
//! - **`dexin_multiplicity`** - Triple eigenvalues for rational jump points
//! - **`drift_spectrum`** - Complex-conjugate eigenvalues caused by a drift
//! - **`variable_coefficients`** - Piecewise coefficients and mixed measures
//! - **`spectral_gap`** - The gap as a function of the drift, against its closed form
//!
//! ```bash
//! cargo run --release --example dexin_multiplicity
//! cargo run --release --example drift_spectrum
//! cargo run --release --example variable_coefficients
//! cargo run --release --example spectral_gap
//! ```
//!
//! ## Resolvent Example
//!
//! - **`resolvent`** - Apply the nonlocal, Dirichlet and initial-value resolvents
//!
//! ```bash
//! cargo run --release --example resolvent
//! ```
//!
//! ## Operational Example
//!
//! - **`cli_session`** - Drive the `nlspec` subcommands from code
//!
//! ```bash
//! cargo run --release --example cli_session
//! cargo run --release --bin nlspec -- eigs crates/core/problems/dexin_half.json --region 1 400 -1 1
//! ```
//!
//! ## Modules
//!
//! - [`problem`]: coefficients, boundary measures and validation
//! - [`ode`]: fundamental solutions and their λ-derivatives
//! - [`characteristic`]: the characteristic matrix, Δ and Δ'
//! - [`rootfinder`]: zero counting, localisation and refinement
//! - [`resolvent`]: resolvents of the nonlocal and auxiliary problems
//! - [`oracles`]: closed-form spectra of two solvable families
//! - [`io`] and [`cli`]: problem files, result formats and the command line

pub mod characteristic;
pub mod cli;
pub mod error;
pub mod io;
pub mod ode;
pub mod oracles;
pub mod problem;
pub mod quadrature;
pub mod region;
pub mod resolvent;
pub mod rootfinder;

pub use error::{Error, Result};
