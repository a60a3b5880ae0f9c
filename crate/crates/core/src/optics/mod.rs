//! Biphoton amplitude, lens configurations and the engineering parameter.

mod amplitude;
mod calibrate;
mod config;

pub use amplitude::{
    engineering_parameter, phase_matching_first_zero, slit_plane_amplitude, slit_plane_amplitude_on, Biphoton,
    BiphotonAmplitude, EngineeringParameter, SlitGrid, SlitPlaneModel, DEGENERACY_TOLERANCE,
};
pub use calibrate::{calibrate, Calibration, CalibrationTargets};
pub use config::{LensConfiguration, OpticalConfig};
