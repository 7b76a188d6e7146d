//! Hybrid indoor localization from BLE received signal strength and laser
//! time-of-flight proximity sensors.
//!
//! The crate is `no_std` (it needs `alloc`) and holds the whole numerical
//! pipeline:
//!
//! * [`estimation`]: constant-velocity extended Kalman filter driven by RSS
//!   samples through a log-distance path-loss model.
//! * [`proximity`]: ranging bias correction, the cubic standard-deviation
//!   model and the per-sensor boresight position estimate.
//! * [`fusion`]: inverse-variance combination of partial estimates and the
//!   per-tick orchestration of the two localization branches.
//! * [`simulator`]: synthetic RSS and range measurements along a reference
//!   trajectory.
//! * [`evaluation`]: distance-to-trajectory errors, empirical CDFs and
//!   summary statistics.
//!
//! File formats and the command-line workflow live in the `hybridloc` crate.
#![cfg_attr(not(test), no_std)]
#![deny(missing_debug_implementations, unsafe_code)]

extern crate alloc;

mod error;
pub mod estimation;
pub mod evaluation;
pub mod fusion;
pub mod geometry;
pub mod math;
pub mod measurement;
pub mod proximity;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use geometry::{distance_to_polyline, Point2, Polyline};
pub use measurement::{Measurement, MeasurementKind, PositionEstimate};
pub use rng::SimRng;
