//! Linear models and linear mixed-effects models driven by a model-formula
//! language, with the assumption diagnostics that go with them.
//!
//! The crate is `no_std` and only needs an allocator. File IO, the command
//! line, report rendering and plotting live in the companion `lmkit` crate.
//!
//! Pipeline:
//!
//! - [`dataframe`]: CSV ingestion, missing-value accounting, derived columns
//! - [`formula`]: the `y ~ a*b + (1 + a | g)` language
//! - [`design`]: complete-case model frames, treatment coding, random-effect blocks
//! - [`ols`]: closed-form least squares with the usual summary surface
//! - [`lmm`]: profiled ML/REML mixed-model fitting, BLUPs, per-group coefficients
//! - [`inference`]: likelihood-ratio comparison of nested mixed fits
//! - [`diagnostics`]: residual plots, Q-Q, histogram, DFbeta, leave-one-out, collinearity
//! - [`numstat`]: distribution tails, normal quantile, seeded normal generator
//!
//! ```
//! use lmkit_core::{dataframe::read_csv, formula::parse_formula, design::build_model_frame, ols::fit_ols};
//!
//! let csv = b"sex,pitch\nfemale,233\nfemale,204\nfemale,242\nmale,130\nmale,112\nmale,142\n";
//! let df = read_csv(csv)?;
//! let frame = build_model_frame(&df, &parse_formula("pitch ~ sex")?)?;
//! let fit = fit_ols(&frame)?;
//! assert!((fit.coefficients[1] + 98.3333).abs() < 1e-3);
//! # Ok::<(), lmkit_core::Error>(())
//! ```
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataframe;
pub mod design;
pub mod diagnostics;
pub mod formula;
pub mod inference;
pub mod linalg;
pub mod lmm;
pub mod numstat;
pub mod ols;
mod optim;

mod error;

pub use error::Error;
