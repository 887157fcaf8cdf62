//! Symbolic calculus on jet spaces: total derivatives, universal
//! linearization, formal adjoints, the Euler operator, variationality and
//! symplectic-operator checks, extended Kovalevskaya forms and differential
//! coverings of continuum-mechanics systems.

pub mod cli;
pub mod context;
pub mod coverings;
pub mod error;
pub mod expr;
pub mod jet;
pub mod kovalevskaya;
pub mod operators;
pub mod oracle;
pub mod random;
pub mod report;
pub mod syslang;
pub mod variational;

pub use context::Context;
pub use error::{Error, Result};
pub use expr::{equals, Expr, Verdict};
pub use jet::{JetCoord, MultiIndex, PdeSystem};
