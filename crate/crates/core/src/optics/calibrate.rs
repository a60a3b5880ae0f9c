//! Joint calibration of the pump waist and the effective phase-matching
//! length against target engineering angles of both lens configurations.

use super::amplitude::{EngineeringParameter, SlitPlaneModel};
use super::config::{LensConfiguration, OpticalConfig};
use crate::error::{Error, Result};

/// Target angles and the search ranges for the two calibrated parameters.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationTargets {
    pub far_field_alpha_deg: f64,
    pub image_alpha_deg: f64,
    pub waist_range: (f64, f64),
    /// The image-plane angle oscillates with the crystal length; this range
    /// selects one `φ = 180°` branch on which it is unimodal.
    pub length_range: (f64, f64),
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        CalibrationTargets {
            far_field_alpha_deg: 85.0,
            image_alpha_deg: 173.0,
            waist_range: (10e-6, 500e-6),
            length_range: (1.55e-3, 1.75e-3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub pump_waist: f64,
    pub crystal_length: f64,
    pub far_field: EngineeringParameter,
    pub image: EngineeringParameter,
}

/// Engineering parameter evaluated directly from the amplitude model.
pub(crate) fn model_parameter(cfg: &OpticalConfig) -> Result<EngineeringParameter> {
    let d = cfg.slit_half_separation;
    let model = SlitPlaneModel::new(cfg, 2.0 * d)?;
    let den = model.eval(d, -d);
    if den.norm() <= 1e-300 {
        return Err(Error::DegenerateRatio { denominator: den.norm(), alpha_deg: 180.0 });
    }
    Ok(EngineeringParameter::from_ratio(model.eval(d, d) / den))
}

fn bisect<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, fhi) = (f(lo)?, f(hi)?);
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!("calibration target not bracketed in [{lo:e}, {hi:e}]")));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimization on `[lo, hi]`.
fn golden_min<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a) > 1e-12 * b {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Squared angle mismatch on the `φ = 180°` branch; ratios of the wrong sign
/// are pushed away with a large penalty.
fn image_mismatch(cfg: &OpticalConfig, target: f64) -> Result<f64> {
    let e = model_parameter(cfg)?;
    Ok(if e.p.re < 0.0 { (e.alpha_deg - target).powi(2) } else { 1e6 + e.alpha_deg })
}

/// Alternates a root search for the waist (far field) with a bounded
/// minimization of the image-angle mismatch over the length until both
/// settle. `base`
/// supplies every other setting; its configuration field is ignored.
pub fn calibrate(base: &OpticalConfig, targets: &CalibrationTargets) -> Result<Calibration> {
    let mut far = base.clone();
    far.configuration = LensConfiguration::CrystalFarField;
    let mut img = base.clone();
    img.configuration = LensConfiguration::CrystalImage;

    let mut waist = base.pump_waist;
    let mut length = base.crystal_length.clamp(targets.length_range.0, targets.length_range.1);
    for _ in 0..20 {
        far.crystal_length = length;
        let new_waist = bisect(
            |w| {
                let mut c = far.clone();
                c.pump_waist = w;
                Ok(model_parameter(&c)?.alpha_deg - targets.far_field_alpha_deg)
            },
            targets.waist_range.0,
            targets.waist_range.1,
        )?;
        img.pump_waist = new_waist;
        let new_length = golden_min(
            |l| {
                let mut c = img.clone();
                c.crystal_length = l;
                image_mismatch(&c, targets.image_alpha_deg)
            },
            targets.length_range.0,
            targets.length_range.1,
        )?;
        let settled = (new_waist - waist).abs() < 1e-12 && (new_length - length).abs() < 1e-12;
        waist = new_waist;
        length = new_length;
        if settled {
            break;
        }
    }
    far.pump_waist = waist;
    far.crystal_length = length;
    img.pump_waist = waist;
    img.crystal_length = length;
    Ok(Calibration {
        pump_waist: waist,
        crystal_length: length,
        far_field: model_parameter(&far)?,
        image: model_parameter(&img)?,
    })
}
