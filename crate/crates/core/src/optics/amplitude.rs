//! Two-photon amplitude at the crystal and its image on the double slit.

use super::config::{LensConfiguration, OpticalConfig};
use crate::error::{Error, Result};
use crate::numerics::{sinc, UniformTable};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Momentum-space biphoton amplitude for a validated configuration.
#[derive(Debug, Clone)]
pub struct Biphoton {
    cfg: OpticalConfig,
}

impl Biphoton {
    pub fn new(cfg: &OpticalConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Biphoton { cfg: cfg.clone() })
    }

    pub fn config(&self) -> &OpticalConfig {
        &self.cfg
    }

    /// Angular spectrum of a Gaussian pump of waist `w_p` evaluated at the
    /// transverse momentum sum, peak-normalized: `exp(-q² w_p² / 4)`.
    pub fn pump_angular_spectrum(&self, q_sum: f64) -> Complex64 {
        let w = self.cfg.pump_waist;
        Complex64::new((-(q_sum * w).powi(2) / 4.0).exp(), 0.0)
    }

    /// Phase-matching function `sinc(φ0 + L q² / (8 n_eff ω/c))`.
    pub fn phase_matching(&self, q_diff: f64) -> f64 {
        sinc(self.cfg.phase_mismatch_phi0 + self.cfg.phase_matching_coefficient() * q_diff * q_diff)
    }

    pub fn momentum_amplitude(&self, q1: f64, q2: f64) -> Complex64 {
        self.pump_angular_spectrum(q1 + q2) * self.phase_matching(q1 - q2)
    }
}

/// Momentum magnitude of the first zero of the phase-matching function with
/// `φ0 = 0`, `sqrt(π / b)`.
pub fn phase_matching_first_zero(cfg: &OpticalConfig) -> f64 {
    (PI / cfg.phase_matching_coefficient()).sqrt()
}

/// Regular square sampling of the slit plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitGrid {
    /// Half-range per axis (m).
    pub extent: f64,
    /// Samples per axis, odd.
    pub n: usize,
}

impl SlitGrid {
    /// 513 samples over ±4·(2d).
    pub fn default_for(cfg: &OpticalConfig) -> Self {
        SlitGrid { extent: 8.0 * cfg.slit_half_separation, n: 513 }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.n - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 || self.n % 2 == 0 {
            return Err(Error::Config(format!("slit grid needs an odd sample count >= 3, got {}", self.n)));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(Error::Config(format!("slit grid extent must be positive, got {}", self.extent)));
        }
        Ok(())
    }
}

/// Complex two-photon amplitude sampled on a [`SlitGrid`], row-major with
/// index `i1 * n + i2`, normalized to `max |A| = 1`.
#[derive(Debug, Clone)]
pub struct BiphotonAmplitude {
    pub grid: SlitGrid,
    pub values: Vec<Complex64>,
}

impl BiphotonAmplitude {
    pub fn get(&self, i1: usize, i2: usize) -> Complex64 {
        self.values[i1 * self.grid.n + i2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        BiphotonAmplitude { grid: self.grid, values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Bilinear interpolation at `(xi1, xi2)` in metres.
    pub fn interpolate(&self, xi1: f64, xi2: f64) -> Result<Complex64> {
        let h = self.grid.spacing();
        let n = self.grid.n;
        let t1 = (xi1 + self.grid.extent) / h;
        let t2 = (xi2 + self.grid.extent) / h;
        let top = (n - 1) as f64;
        let tol = 1e-9;
        if !(t1 >= -tol && t1 <= top + tol && t2 >= -tol && t2 <= top + tol) {
            return Err(Error::Config(format!(
                "point ({xi1:e}, {xi2:e}) m lies outside the amplitude grid of half-range {:e} m",
                self.grid.extent
            )));
        }
        let t1 = t1.clamp(0.0, top);
        let t2 = t2.clamp(0.0, top);
        let i1 = (t1.floor() as usize).min(n - 2);
        let i2 = (t2.floor() as usize).min(n - 2);
        let f1 = t1 - i1 as f64;
        let f2 = t2 - i2 as f64;
        Ok(self.get(i1, i2) * ((1.0 - f1) * (1.0 - f2))
            + self.get(i1 + 1, i2) * (f1 * (1.0 - f2))
            + self.get(i1, i2 + 1) * ((1.0 - f1) * f2)
            + self.get(i1 + 1, i2 + 1) * (f1 * f2))
    }
}

/// Even 1-D kernel tabulated for non-negative arguments.
#[derive(Debug, Clone)]
struct EvenKernel {
    table: UniformTable<Complex64>,
}

impl EvenKernel {
    fn eval(&self, x: f64) -> Complex64 {
        self.table.eval(x.abs()).unwrap_or(Complex64::new(0.0, 0.0))
    }
}

/// Inverse Fourier transform `∫ f(q) e^{iqx} dq / 2π` of an even function,
/// tabulated on `0 ≤ x ≤ n/2 · dx`.
fn fourier_kernel<F: Fn(f64) -> f64>(f: F, n: usize, dx: f64) -> EvenKernel {
    let dq = 2.0 * PI / (n as f64 * dx);
    let half = n / 2;
    // Centered sampling: the (-1)^j pre- and (-1)^m post-factors shift both
    // grids to the origin (n is a multiple of 4).
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let q = (j as f64 - half as f64) * dq;
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(s * f(q), 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let norm = dq / (2.0 * PI);
    let values = (half..n)
        .map(|m| {
            let s = if m % 2 == 0 { 1.0 } else { -1.0 };
            buf[m] * (s * norm)
        })
        .collect();
    EvenKernel { table: UniformTable { x0: 0.0, dx, values } }
}

/// Evaluates the slit-plane amplitude at arbitrary points.
#[derive(Debug, Clone)]
pub struct SlitPlaneModel {
    source: Biphoton,
    kernels: Option<(EvenKernel, EvenKernel)>,
}

impl SlitPlaneModel {
    /// Prepares the model for points with `|ξ| ≤ reach`.
    pub fn new(cfg: &OpticalConfig, reach: f64) -> Result<Self> {
        let source = Biphoton::new(cfg)?;
        let kernels = match cfg.configuration {
            LensConfiguration::CrystalFarField => None,
            LensConfiguration::CrystalImage => {
                let b = cfg.phase_matching_coefficient();
                let needed = reach / cfg.magnification();
                let box_len = 16.0 * needed.max(4.0 * cfg.pump_waist).max(40.0 * b.sqrt());
                let target_dx = (b.sqrt() / 20.0).min(cfg.pump_waist / 50.0);
                let n = ((box_len / target_dx).ceil() as usize).next_power_of_two().clamp(1 << 12, 1 << 21);
                let dx = box_len / n as f64;
                let s = source.clone();
                let pump = fourier_kernel(|q| s.pump_angular_spectrum(q).re, n, dx);
                let s = source.clone();
                let pm = fourier_kernel(|q| s.phase_matching(q), n, dx);
                Some((pump, pm))
            }
        };
        Ok(SlitPlaneModel { source, kernels })
    }

    pub fn config(&self) -> &OpticalConfig {
        self.source.config()
    }

    /// Unnormalized amplitude at slit-plane coordinates (m).
    pub fn eval(&self, xi1: f64, xi2: f64) -> Complex64 {
        let cfg = self.source.config();
        match &self.kernels {
            None => {
                let s = cfg.k_spdc() / cfg.f_spherical;
                self.source.momentum_amplitude(s * xi1, s * xi2)
            }
            Some((pump, pm)) => {
                let m = cfg.magnification();
                let (x1, x2) = (xi1 / m, xi2 / m);
                pump.eval(0.5 * (x1 + x2)) * pm.eval(0.5 * (x1 - x2)) * 0.5
            }
        }
    }

    /// Smallest length scale of the amplitude at the slit plane.
    pub fn structure_scale(&self) -> f64 {
        let cfg = self.source.config();
        let b = cfg.phase_matching_coefficient();
        match cfg.configuration {
            LensConfiguration::CrystalImage => cfg.magnification() * (2.0 * b.sqrt()).min(cfg.pump_waist),
            LensConfiguration::CrystalFarField => {
                let per_q = cfg.f_spherical / cfg.k_spdc();
                per_q * (PI / b).sqrt().min(2.0 / cfg.pump_waist)
            }
        }
    }
}

/// Samples the slit-plane amplitude on the default grid.
pub fn slit_plane_amplitude(cfg: &OpticalConfig) -> Result<BiphotonAmplitude> {
    slit_plane_amplitude_on(cfg, SlitGrid::default_for(cfg))
}

/// Samples the slit-plane amplitude on `grid`, normalized to `max |A| = 1`.
/// Fails with a resolution error when the spacing cannot resolve the slit
/// width or the amplitude structure.
pub fn slit_plane_amplitude_on(cfg: &OpticalConfig, grid: SlitGrid) -> Result<BiphotonAmplitude> {
    grid.validate()?;
    let model = SlitPlaneModel::new(cfg, grid.extent * 2f64.sqrt())?;
    let h = grid.spacing();
    let scale = model.structure_scale();
    if h > scale / 4.0 || h > cfg.slit_half_width / 4.0 {
        return Err(Error::Resolution(format!(
            "grid spacing {h:e} m is too coarse for structure scale {scale:e} m and slit half-width {:e} m",
            cfg.slit_half_width
        )));
    }
    let n = grid.n;
    let mut values: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|idx| model.eval(grid.coordinate(idx / n), grid.coordinate(idx % n)))
        .collect();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::Numerical("slit-plane amplitude vanishes on the whole grid".into()));
    }
    for v in &mut values {
        *v /= peak;
    }
    Ok(BiphotonAmplitude { grid, values })
}

/// The engineering parameter `p = A(d,d)/A(d,-d)` and the state angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineeringParameter {
    pub p: Complex64,
    pub alpha_deg: f64,
    /// Canonical relative phase in `[0°, 180°]`.
    pub phi_deg: f64,
}

impl EngineeringParameter {
    pub fn from_ratio(p: Complex64) -> Self {
        EngineeringParameter {
            p,
            alpha_deg: 2.0 * p.norm().atan().to_degrees(),
            phi_deg: p.arg().to_degrees().abs(),
        }
    }
}

/// Relative threshold on `|A(d,-d)|` below which the ratio is degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

pub fn engineering_parameter(a: &BiphotonAmplitude, d: f64) -> Result<EngineeringParameter> {
    let num = a.interpolate(d, d)?;
    let den = a.interpolate(d, -d)?;
    let scale = a.max_abs();
    if den.norm() <= DEGENERACY_TOLERANCE * scale {
        return Err(Error::DegenerateRatio { denominator: den.norm(), alpha_deg: 180.0 });
    }
    Ok(EngineeringParameter::from_ratio(num / den))
}
