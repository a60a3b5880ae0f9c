//! Flat key-value experiment configuration (TOML syntax, unit in each key).

use crate::analysis::UncertaintyMethod;
use crate::detection::{PairDistribution, PairFamily, SourceStats};
use crate::error::{Error, Result};
use crate::optics::{LensConfiguration, OpticalConfig};
use crate::state::SlitQubitState;
use serde::{Deserialize, Serialize};
use std::path::Path;

const CRYSTAL_IMAGE: &str = include_str!("../configs/crystal_image.toml");
const CRYSTAL_FAR_FIELD: &str = include_str!("../configs/crystal_far_field.toml");

/// Every key of a configuration file. Missing keys take the values of the
/// bundled crystal-image file; unknown keys are rejected by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub configuration: LensConfiguration,
    pub pump_wavelength_nm: f64,
    pub spdc_wavelength_nm: f64,
    pub pump_waist_um: f64,
    pub crystal_length_mm: f64,
    pub n1: f64,
    pub n2: f64,
    pub phase_mismatch_phi0: f64,
    pub f_cylindrical_cm: f64,
    pub f_spherical_cm: f64,
    pub slit_half_width_um: f64,
    pub slit_half_separation_um: f64,
    pub f_detection_cm: f64,

    pub alpha_deg: f64,
    pub phi_deg: f64,

    pub pair_distribution: PairFamily,
    /// Single-pass parametric gain; sets the mean pair number to sinh²(g).
    pub parametric_gain: Option<f64>,
    /// Explicit mean pair number; overrides the gain when present.
    pub mean_pairs_per_pulse: Option<f64>,
    pub thermal_modes: f64,
    /// Optional truncation of the pair-number law (renormalized).
    pub max_pairs: Option<u32>,
    pub detector_efficiency: f64,
    pub repetition_rate_mhz: f64,
    pub duration_per_point_s: f64,
    pub coincidence_window_ns: f64,
    pub pinhole_width_um: f64,

    pub fit_uncertainty: UncertaintyMethod,
    pub bootstrap_resamples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            configuration: LensConfiguration::CrystalImage,
            pump_wavelength_nm: 413.0,
            spdc_wavelength_nm: 826.0,
            pump_waist_um: 64.7663,
            crystal_length_mm: 1.65174,
            n1: 1.7637,
            n2: 1.8471,
            phase_mismatch_phi0: 0.0,
            f_cylindrical_cm: 5.0,
            f_spherical_cm: 20.0,
            slit_half_width_um: 40.0,
            slit_half_separation_um: 120.0,
            f_detection_cm: 30.0,
            alpha_deg: 176.0,
            phi_deg: 170.0,
            pair_distribution: PairFamily::Thermal,
            parametric_gain: Some(0.65),
            mean_pairs_per_pulse: None,
            thermal_modes: 15.0,
            max_pairs: None,
            detector_efficiency: 0.0369,
            repetition_rate_mhz: 76.0,
            duration_per_point_s: 25.0,
            coincidence_window_ns: 1.0,
            pinhole_width_um: 200.0,
            fit_uncertainty: UncertaintyMethod::Curvature,
            bootstrap_resamples: 200,
        }
    }
}

impl ExperimentConfig {
    /// One of the two bundled, calibrated setups.
    pub fn bundled(configuration: LensConfiguration) -> Self {
        let text = match configuration {
            LensConfiguration::CrystalImage => CRYSTAL_IMAGE,
            LensConfiguration::CrystalFarField => CRYSTAL_FAR_FIELD,
        };
        Self::from_toml_str(text).expect("bundled configuration parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::Parse { line, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.optics().validate()?;
        self.source()?;
        self.state()?;
        if self.pinhole_width_um <= 0.0 || !self.pinhole_width_um.is_finite() {
            return Err(Error::Config(format!("pinhole_width_um must be positive, got {}", self.pinhole_width_um)));
        }
        if self.bootstrap_resamples < 2 {
            return Err(Error::Config("bootstrap_resamples must be at least 2".into()));
        }
        Ok(())
    }

    pub fn optics(&self) -> OpticalConfig {
        OpticalConfig {
            pump_wavelength: self.pump_wavelength_nm * 1e-9,
            spdc_wavelength: self.spdc_wavelength_nm * 1e-9,
            pump_waist: self.pump_waist_um * 1e-6,
            crystal_length: self.crystal_length_mm * 1e-3,
            n1: self.n1,
            n2: self.n2,
            phase_mismatch_phi0: self.phase_mismatch_phi0,
            configuration: self.configuration,
            f_cylindrical: self.f_cylindrical_cm * 1e-2,
            f_spherical: self.f_spherical_cm * 1e-2,
            slit_half_width: self.slit_half_width_um * 1e-6,
            slit_half_separation: self.slit_half_separation_um * 1e-6,
            f_detection: self.f_detection_cm * 1e-2,
        }
    }

    pub fn state(&self) -> Result<SlitQubitState> {
        SlitQubitState::new(self.alpha_deg, self.phi_deg)
    }

    pub fn pair_distribution(&self) -> Result<PairDistribution> {
        let mean = match (self.mean_pairs_per_pulse, self.parametric_gain) {
            (Some(m), _) => m,
            (None, Some(g)) => g.sinh().powi(2),
            (None, None) => {
                return Err(Error::Config("set either parametric_gain or mean_pairs_per_pulse".into()))
            }
        };
        PairDistribution::new(self.pair_distribution, mean, self.thermal_modes, self.max_pairs)
    }

    pub fn source(&self) -> Result<SourceStats> {
        SourceStats::new(
            self.pair_distribution()?,
            self.detector_efficiency,
            self.repetition_rate_mhz * 1e6,
            self.duration_per_point_s,
            self.coincidence_window_ns * 1e-9,
        )
    }

    /// Pinhole half-width in mm.
    pub fn pinhole_half_width_mm(&self) -> f64 {
        0.5 * self.pinhole_width_um * 1e-3
    }
}
