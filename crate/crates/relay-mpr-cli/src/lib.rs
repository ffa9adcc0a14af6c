//! Library side of the command-line front end: scenario files, parameter
//! sweeps, and report rendering. The binary in `main.rs` is a thin argument
//! parser over these.

pub mod report;
pub mod scenario;
pub mod sweep;
