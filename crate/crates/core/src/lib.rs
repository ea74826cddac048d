//! Numerical laboratory for translating solitons of mean curvature flow
//! given as invariant graphs over compact symmetric spaces.
pub mod error;
pub mod exec;
pub mod flow;
pub mod hermann;
pub mod ode;
pub mod rank1;
pub mod spaces;
pub use error::{LabError, Result};
