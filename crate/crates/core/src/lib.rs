//! Spectral splitting schemes for the Vlasov-HMF equation and the analysis
//! tools around Landau damping: damping-rate fits, the Penrose criterion,
//! linear Volterra solvers and convergence studies.

pub mod error;
pub mod numerics;
pub mod penrose;
pub mod convergence;
pub mod damping;
pub mod dynamics;
pub mod spectral;
pub mod volterra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
