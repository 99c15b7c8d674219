//! Simulation lab for sliding-mode controllers with a hybrid switching gain.
//!
//! The hybrid gain uses a saturating outer law far from the sliding surface
//! and a fixed-time inner law inside a boundary layer `|s| ≤ ε`. The crate
//! provides the plants, the control laws, closed-form entry-time bounds, a
//! deterministic fixed-step simulator, metrics and bound audits, plus the
//! `hgsmc` command-line front end.
//!
//! ```
//! use hgsmc::{analysis, presets, sim};
//!
//! let cfg = presets::load("fo-hybrid-poly").unwrap();
//! let traj = sim::simulate(&cfg).unwrap();
//! let m = analysis::metrics(&traj, 0.08, 1e-3).unwrap();
//! assert!(m.t_entry.unwrap() < 3.0);
//! ```

pub mod analysis;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod controllers;
pub mod dynamics;
pub mod error;
pub mod presets;
pub mod sim;
pub mod sweep;

pub use bounds::{BoundMode, BoundReport};
pub use config::SimConfig;
pub use error::{Error, Result};
pub use sim::{simulate, Trajectory};
