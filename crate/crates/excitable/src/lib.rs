//! Echo state networks on k-bit flip-flop tasks, and the machinery to explain
//! what a trained network is doing: fixed-point finding by kinetic-energy
//! minimisation, excitable network attractor (ENA) extraction from
//! trajectories, and a bifurcation toolbox for hand-built low-dimensional
//! reservoirs.
//!
//! The crate is organised around the stages of the extraction procedure:
//!
//! - [`esn`] — model representation, open-loop / closed-loop / autonomous maps
//! - [`task`] — k-bit flip-flop input and target generation, scoring
//! - [`train`] — ridge-regression read-out fitting with teacher forcing
//! - [`fixed_points`] — BFGS energy minimisation, Jacobian classification,
//!   clustering-based aggregation of duplicate solutions
//! - [`ena`] — pulse difference vectors, local switching subspaces, grid
//!   search for excitability thresholds, graph assembly
//! - [`design`] — manual 2D and 2k-D flip-flop reservoirs plus 1D/2D
//!   bifurcation analysis of tanh maps
//! - [`experiments`] — noise-robustness sweeps and error diagnosis
//! - [`pipeline`] — end-to-end runs driven by a serialisable config
//!
//! Runnable walkthroughs of each capability live under `examples/`.

pub mod bfgs;
pub mod cluster;
pub mod design;
pub mod ena;
pub mod error;
pub mod esn;
pub mod experiments;
pub mod fixed_points;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod task;
pub mod train;

pub use error::{EnaError, Result};
pub use esn::{EsnModel, TrainedReservoir, Trajectory};
pub use fixed_points::FixedPoint;
