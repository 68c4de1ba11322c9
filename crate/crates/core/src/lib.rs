//! Planar tilt-vehicle model, feedback-linearization controller with
//! zero-lower-bound rotor saturation, and the phase-plane machinery used to
//! bound the lateral tracking error under the large "penguin" gait.
//!
//! The crate is `no_std` and only needs `alloc` for trajectories and grids.
//! IO, configuration files and the command-line front end live in the
//! companion `tiltgait` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod controller;
pub mod gait;
pub mod linalg;
pub mod plant;
pub mod sim;

mod sign;

pub use sign::Sign;

pub use analysis::{ErrorState, LateralLoop};
pub use controller::{DesiredAccel, RawCommand, SwitchMatrix};
pub use gait::{GaitSchedule, ReferenceSample};
pub use plant::{ModelParams, ParamError, RotorCommand, VehicleState};
pub use sim::{SimConfig, Trajectory};
