//! Multi-region spatial general-equilibrium engine.

pub mod calibration;
pub mod ces;
pub mod dynamics;
pub mod economy;
pub mod error;
pub mod fixtures;
pub mod goods;
pub mod household;
pub mod io;
pub mod production;
pub mod public;
pub mod equilibrium;
