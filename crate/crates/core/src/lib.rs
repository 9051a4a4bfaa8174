//! Two-phase data aggregation for wireless body area networks.
//!
//! Sensors push data to their WBAN hub (the LMU, Phase I); LMUs forward to
//! the nearest base station (Phase II). Each epoch an optimizer picks how
//! much of every node's backlog to move, trading a quality-weighted traffic
//! term and per-bit prices against energy, delay, buffer, service and cost
//! limits. The simulator runs that policy, or a baseline, over a moving
//! population of WBANs and reports per-epoch metrics.
//!
//! * [`model`], [`phase`], [`channel`]: formulas and link/energy models.
//! * [`mobility`]: group mobility of whole WBANs.
//! * [`optimizer`]: per-epoch problem, dual-ascent solver, brute-force oracle.
//! * [`sim`]: scenarios, the epoch engine, summaries.
//! * [`config`], [`csv`]: scenario files and CSV output.

pub mod channel;
pub mod config;
pub mod csv;
pub mod error;
pub mod lp;
pub mod mobility;
pub mod model;
pub mod optimizer;
pub mod par;
pub mod phase;
pub mod sim;
