//! Nonconforming discrete Stokes complex on uniform rectangular meshes.
//!
//! The complex is `W_h --curl_h--> V_h --div_h--> P_h` where `W_h` is built
//! from a 12-DoF nonconforming plate element, `V_h` from a 12-DoF
//! divergence-free-compatible velocity element and `P_h` from piecewise
//! constants. The crate provides the elements, global spaces, solvers for the
//! biharmonic and Stokes problems, error evaluation in broken norms and the
//! convergence harness used by the `ncstokes` CLI.

pub mod analysis;
pub mod assembly;
pub mod cases;
pub mod convergence;
pub mod elements;
pub mod error;
pub mod functions;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod spaces;
pub mod sparse;

pub use error::{Error, Result};
