//! Library half of the `debias` binary: run execution, causal checks, and
//! report emission as callable functions, so integration tests can drive the
//! same code paths the CLI dispatches to.

pub mod causal;
pub mod config;
pub mod report;
pub mod run;
