//! Constraint satisfaction over templates of semilattices of Mal'cev blocks.
//!
//! The crate covers the algebra layer (tables, congruences, SMB structure,
//! regularization, unary polynomials), a multisorted instance model with
//! consistency enforcement and a brute-force oracle, the Mal'cev engine and
//! the linear, flat, elimination and general solvers.

pub mod algebra;
pub mod config;
pub mod congruence;
pub mod consistency;
pub mod error;
pub mod generate;
pub mod graphs;
pub mod instance;
pub mod malcev;
pub mod named;
pub mod oracle;
pub mod outcome;
pub mod polynomial;
pub mod smb;
pub mod solvers;
pub mod sorts;

pub use algebra::FiniteAlgebra;
pub use config::Caps;
pub use congruence::Congruence;
pub use error::{Error, Result};
pub use instance::{Instance, InstanceBuilder};
pub use outcome::{SolveOutcome, Trace, TraceEvent};
pub use smb::{detect_smb, regularize, OrderShape, SmbStructure};
pub use solvers::{solve, Method, SolveOptions};
