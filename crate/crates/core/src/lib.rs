//! Search and exact certification of nonnegative step functions for the
//! autoconvolution ratio `||f*f||_2^2 / (||f*f||_1 ||f*f||_inf)`.

pub mod adam;
pub mod certify;
pub mod coeffs;
pub mod error;
pub mod fixtures;
pub mod gradient;
pub mod plot;
pub mod refine;
pub mod search;
pub mod stepfn;

pub use certify::{exact_objective, verify_claim, Certificate, RationalHeights};
pub use error::{Error, Result};
pub use gradient::{finite_difference_gradient, grad_objective, GradientReport};
pub use refine::{ascend, refine_pipeline, trim_zeros, upsample, upsample_2x, RefineConfig};
pub use search::{run_search, SearchConfig, SearchOutcome};
pub use stepfn::{autoconvolve, objective_c, ConvolutionProfile, NormTriple, StepFunction};
