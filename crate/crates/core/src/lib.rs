pub mod dg;
pub mod error;
pub mod grid;
pub mod spline;
pub mod sweep;
pub mod field;
pub mod eval;
pub mod snapshot;
pub mod problem;
pub mod driver;
pub mod bench;
pub mod config;
pub mod cli;
