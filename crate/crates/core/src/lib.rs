//! Worst-case delay analysis for time-sensitive networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`minplus`]: concave/convex piecewise-linear curve algebra.
//! * [`model`]: physical and output-port network models, units, conversion.
//! * [`formats`]: the XML physical-network and JSON output-port formats.
//! * [`analysis`]: TFA and SFA delay bounds, with fixed-point iteration
//!   for networks with cyclic dependencies.
//! * [`generators`]: interleave, ring, mesh and fixed-topology networks.
//! * [`report`]: machine (JSON) and human (Markdown) reports.
//!
//! Per-server and per-flow work is spread over a rayon pool when the
//! `parallel` feature is enabled (the default); [`Executor::Sequential`]
//! forces a single-threaded run either way.

pub mod analysis;
mod exec;
pub mod formats;
pub mod generators;
pub mod minplus;
pub mod model;
pub mod report;

pub use exec::Executor;
