//! Mobility-parameter calibration for Ga₂O₃ Schottky barrier diodes.
//!
//! The crate covers the whole loop: a compact thermionic-emission diode
//! surrogate driven by Philips-unified mobility parameters, Latin hypercube
//! data generation, a small dense-network engine, the autoencoder plus
//! physics-penalized regression head, and closed-loop verification of
//! calibrated parameters by re-simulation and R² scoring.

pub mod calib;
pub mod config;
pub mod datagen;
pub mod error;
pub mod formats;
pub mod nn;
pub mod phumob;
pub mod pinn;
pub mod rng;
pub mod sbd_sim;

pub use error::{Error, Result};
