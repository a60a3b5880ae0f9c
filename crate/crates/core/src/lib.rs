//! Simulation and analysis of spatially entangled photon pairs passing a
//! double slit.
//!
//! * [`optics`]: biphoton amplitude at the crystal, its image on the slit
//!   plane for the two lens configurations, and the engineering parameter.
//! * [`state`] and [`map`]: the slit-qubit state `(α, φ)`, entanglement
//!   measures and analytic coincidence maps.
//! * [`diffraction`]: effective single-slit diffraction coefficients.
//! * [`detection`]: pulse-level Monte Carlo of the four-detector setup and
//!   the source estimators.
//! * [`analysis`]: accidental subtraction, visibility and state fitting.
//! * [`config`] and [`io`]: configuration files and CSV formats.
//! * [`cli`]: the subcommands of the `slitpairs` binary.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod detection;
pub mod diffraction;
pub mod error;
pub mod io;
pub mod map;
pub mod numerics;
pub mod optics;
pub mod state;

pub use error::{Error, Result};
