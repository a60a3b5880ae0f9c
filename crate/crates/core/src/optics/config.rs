//! Geometry and source parameters of the optical setup.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Which degree of freedom the lens system maps onto the double slit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LensConfiguration {
    /// Magnified image of the crystal center on the slits (position correlations).
    CrystalImage,
    /// Fourier plane of the crystal on the slits (momentum correlations).
    CrystalFarField,
}

impl LensConfiguration {
    pub fn name(self) -> &'static str {
        match self {
            LensConfiguration::CrystalImage => "crystal_image",
            LensConfiguration::CrystalFarField => "crystal_far_field",
        }
    }
}

/// Optical setup in SI units (metres, radians).
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalConfig {
    pub pump_wavelength: f64,
    pub spdc_wavelength: f64,
    /// Pump waist `w_p` at the crystal center.
    pub pump_waist: f64,
    pub crystal_length: f64,
    pub n1: f64,
    pub n2: f64,
    pub phase_mismatch_phi0: f64,
    pub configuration: LensConfiguration,
    pub f_cylindrical: f64,
    pub f_spherical: f64,
    pub slit_half_width: f64,
    pub slit_half_separation: f64,
    pub f_detection: f64,
}

impl OpticalConfig {
    /// Setup with the nominal component values and an uncalibrated pump
    /// waist of 60 µm. The calibrated defaults live in the bundled config
    /// files, see [`crate::config::ExperimentConfig::bundled`].
    pub fn nominal(configuration: LensConfiguration) -> Self {
        OpticalConfig {
            pump_wavelength: 413e-9,
            spdc_wavelength: 826e-9,
            pump_waist: 60e-6,
            crystal_length: 10e-3,
            n1: 1.7637,
            n2: 1.8471,
            phase_mismatch_phi0: 0.0,
            configuration,
            f_cylindrical: 0.05,
            f_spherical: 0.20,
            slit_half_width: 40e-6,
            slit_half_separation: 120e-6,
            f_detection: 0.30,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("pump_wavelength", self.pump_wavelength),
            ("spdc_wavelength", self.spdc_wavelength),
            ("pump_waist", self.pump_waist),
            ("crystal_length", self.crystal_length),
            ("f_cylindrical", self.f_cylindrical),
            ("f_spherical", self.f_spherical),
            ("slit_half_width", self.slit_half_width),
            ("slit_half_separation", self.slit_half_separation),
            ("f_detection", self.f_detection),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be a positive length, got {v}")));
            }
        }
        for (name, v) in [("n1", self.n1), ("n2", self.n2)] {
            if !(v.is_finite() && v >= 1.0) {
                return Err(Error::Config(format!("{name} must be >= 1, got {v}")));
            }
        }
        if !self.phase_mismatch_phi0.is_finite() {
            return Err(Error::Config("phase_mismatch_phi0 must be finite".into()));
        }
        if self.slit_half_width >= self.slit_half_separation {
            return Err(Error::Config(format!(
                "slits overlap: 2a = {:e} m is not below 2d = {:e} m",
                2.0 * self.slit_half_width,
                2.0 * self.slit_half_separation
            )));
        }
        Ok(())
    }

    pub fn n_eff(&self) -> f64 {
        2.0 * self.n1 * self.n2 / (self.n1 + self.n2)
    }

    /// Vacuum wavenumber of the down-converted photons, ω/c.
    pub fn k_spdc(&self) -> f64 {
        2.0 * PI / self.spdc_wavelength
    }

    /// Coefficient `b` of the phase-matching argument `φ0 + b q²`.
    pub fn phase_matching_coefficient(&self) -> f64 {
        self.crystal_length / (8.0 * self.n_eff() * self.k_spdc())
    }

    /// Telescope magnification of the crystal image.
    pub fn magnification(&self) -> f64 {
        self.f_spherical / self.f_cylindrical
    }

    /// Fringe wavenumber at the detection plane, `2 k d / f` (per metre).
    pub fn beta(&self) -> f64 {
        2.0 * self.k_spdc() * self.slit_half_separation / self.f_detection
    }

    /// Diffraction coefficient of a single slit under uniform illumination,
    /// `k a / f` (per metre).
    pub fn reference_diffraction_coefficient(&self) -> f64 {
        self.k_spdc() * self.slit_half_width / self.f_detection
    }
}
