//! Effective single-slit diffraction coefficients of the biphoton.
//!
//! The two-photon far-field amplitude of one slit aperture is integrated
//! along the lines `x1 = x2` and `x1 = -x2` and its modulus is fitted with
//! `sinc²(a x)` over the main lobe. For same-branch detection one photon is
//! traced out first and the square root of the product of the two
//! single-photon patterns is fitted instead. Under uniform illumination
//! both profiles equal `sinc²(k a x / f)` exactly.

use crate::error::{Error, Result};
use crate::map::Envelope;
use crate::numerics::{levenberg_marquardt, simpson_weights, sinc};
use crate::optics::{slit_plane_amplitude_on, BiphotonAmplitude, OpticalConfig, SlitGrid};
use crate::state::Branch;
use num_complex::Complex64;
use rayon::prelude::*;

/// Simpson nodes across the aperture used by [`aperture_amplitude`].
pub const APERTURE_NODES: usize = 1001;
/// Profile samples across the main lobe.
pub const PROFILE_SAMPLES: usize = 64;
/// RMS fit residual (relative to the peak) above which a warning is issued.
pub const RESIDUAL_WARNING: f64 = 0.02;

/// Amplitude sampled directly on the aperture `|ξ| ≤ a` of a slit centered
/// at the origin.
pub fn aperture_amplitude(cfg: &OpticalConfig) -> Result<BiphotonAmplitude> {
    slit_plane_amplitude_on(cfg, SlitGrid { extent: cfg.slit_half_width, n: APERTURE_NODES })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SincFit {
    /// Fitted coefficient (per metre).
    pub coefficient: f64,
    pub amplitude: f64,
    pub rms_residual: f64,
    /// Positions along the line (m) and the normalized profile.
    pub profile: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffractionCoefficients {
    pub branch: Branch,
    /// Uniform-illumination coefficient `k a / f` (per metre).
    pub reference: f64,
    pub plus: SincFit,
    pub minus: SincFit,
    pub warnings: Vec<String>,
}

impl DiffractionCoefficients {
    pub fn ratio_plus(&self) -> f64 {
        self.plus.coefficient / self.reference
    }

    pub fn ratio_minus(&self) -> f64 {
        self.minus.coefficient / self.reference
    }

    /// Map envelope with coefficients per mm.
    pub fn envelope(&self) -> Envelope {
        Envelope { a_plus: self.plus.coefficient * 1e-3, a_minus: self.minus.coefficient * 1e-3 }
    }
}

/// Aperture nodes and the amplitude on them. Grids that already place an
/// odd number of nodes on `[-a, a]` are used as they are; others are
/// resampled bilinearly onto [`APERTURE_NODES`] nodes.
fn aperture_samples(a: &BiphotonAmplitude, half_width: f64) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let h = a.grid.spacing();
    let steps = half_width / h;
    let aligned = (steps - steps.round()).abs() < 1e-9 && steps.round() >= 500.0;
    if aligned {
        let m = steps.round() as usize;
        let centre = (a.grid.n - 1) / 2;
        if m <= centre {
            let idx: Vec<usize> = (centre - m..=centre + m).collect();
            let xs = idx.iter().map(|&i| a.grid.coordinate(i)).collect();
            let mut v = Vec::with_capacity(idx.len() * idx.len());
            for &i in &idx {
                for &j in &idx {
                    v.push(a.get(i, j));
                }
            }
            return Ok((xs, v));
        }
    }
    if h > half_width / 8.0 {
        return Err(Error::Resolution(format!(
            "amplitude spacing {h:e} m is too coarse to integrate across a slit of half-width {half_width:e} m"
        )));
    }
    let n = APERTURE_NODES;
    let xs: Vec<f64> = (0..n).map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64).collect();
    let mut v = Vec::with_capacity(n * n);
    for &x1 in &xs {
        for &x2 in &xs {
            v.push(a.interpolate(x1, x2)?);
        }
    }
    Ok((xs, v))
}

fn fit_sinc2(profile: &[(f64, f64)], start: f64) -> (f64, f64, f64) {
    let sol = levenberg_marquardt(&[1.0, start], &[0.0, 0.0], &[10.0, 100.0 * start], 500, |p| {
        let mut r = Vec::with_capacity(profile.len());
        let mut j = Vec::with_capacity(2 * profile.len());
        for &(t, y) in profile {
            let x = p[1] * t;
            let s = sinc(x);
            let ds = if x.abs() < 1e-6 { -x / 3.0 } else { (x.cos() - s) / x };
            r.push(p[0] * s * s - y);
            j.push(s * s);
            j.push(p[0] * 2.0 * s * ds * t);
        }
        (r, j)
    });
    let rms = (sol.ssr / profile.len() as f64).sqrt();
    (sol.params[0], sol.params[1], rms)
}

/// Integrates the far field of one slit of the amplitude `a` and fits the
/// diffraction coefficients along both diagonals.
pub fn diffraction_coefficients(
    a: &BiphotonAmplitude,
    cfg: &OpticalConfig,
    branch: Branch,
) -> Result<DiffractionCoefficients> {
    cfg.validate()?;
    let half = cfg.slit_half_width;
    let (xs, amp) = aperture_samples(a, half)?;
    let n = xs.len();
    let w = simpson_weights(n, xs[1] - xs[0]);
    let c = cfg.k_spdc() / cfg.f_detection;
    let reference = cfg.reference_diffraction_coefficient();
    let t_max = std::f64::consts::PI / reference;
    let ts: Vec<f64> = (0..PROFILE_SAMPLES).map(|j| t_max * j as f64 / PROFILE_SAMPLES as f64).collect();

    // rows(t)[j] = Σ_i W_i A(ξ_i, ξ_j) e^{-i c t ξ_i}
    let rows = |t: f64| -> Vec<Complex64> {
        let phase: Vec<Complex64> = xs.iter().zip(&w).map(|(x, wi)| Complex64::from_polar(*wi, -c * t * x)).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let row = &amp[i * n..(i + 1) * n];
            let p = phase[i];
            for (o, v) in out.iter_mut().zip(row) {
                *o += p * v;
            }
        }
        out
    };
    let values: Vec<(f64, f64)> = ts
        .par_iter()
        .map(|&t| match branch {
            Branch::Dbc => {
                let r = rows(t);
                let along = |sign: f64| -> f64 {
                    r.iter()
                        .zip(xs.iter().zip(&w))
                        .map(|(v, (x, wj))| v * Complex64::from_polar(*wj, -c * sign * t * x))
                        .sum::<Complex64>()
                        .norm()
                };
                (along(1.0), along(-1.0))
            }
            Branch::Sbc => {
                let trace = |r: Vec<Complex64>| -> f64 { r.iter().zip(&w).map(|(v, wj)| wj * v.norm_sqr()).sum() };
                let fwd = trace(rows(t));
                let back = trace(rows(-t));
                // Along x1 = x2 both photons see I1(t); along x1 = -x2 one sees I1(-t).
                (fwd, (fwd * back).sqrt())
            }
        })
        .collect();
    let (p0, m0) = values[0];
    if !(p0 > 0.0 && m0 > 0.0) {
        return Err(Error::Numerical("diffraction integral vanishes at the origin".into()));
    }
    let mut warnings = Vec::new();
    let mut fit_line = |label: &str, pick: &dyn Fn(&(f64, f64)) -> f64, peak: f64| -> SincFit {
        let profile: Vec<(f64, f64)> = ts.iter().zip(&values).map(|(t, v)| (*t, pick(v) / peak)).collect();
        let (amplitude, coefficient, rms) = fit_sinc2(&profile, reference);
        if rms > RESIDUAL_WARNING {
            let msg = format!("{label} sinc^2 fit residual {rms:.4} exceeds {RESIDUAL_WARNING}");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        SincFit { coefficient, amplitude, rms_residual: rms, profile }
    };
    let plus = fit_line("x+", &|v| v.0, p0);
    let minus = fit_line("x-", &|v| v.1, m0);
    Ok(DiffractionCoefficients { branch, reference, plus, minus, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::LensConfiguration;

    fn uniform(cfg: &OpticalConfig) -> BiphotonAmplitude {
        let grid = SlitGrid { extent: cfg.slit_half_width, n: APERTURE_NODES };
        BiphotonAmplitude { grid, values: vec![Complex64::new(1.0, 0.0); grid.n * grid.n] }
    }

    #[test]
    fn uniform_illumination_reproduces_the_reference() {
        let cfg = OpticalConfig::nominal(LensConfiguration::CrystalFarField);
        for branch in [Branch::Dbc, Branch::Sbc] {
            let d = diffraction_coefficients(&uniform(&cfg), &cfg, branch).unwrap();
            assert!((d.ratio_plus() - 1.0).abs() < 1e-6, "{branch:?} {}", d.ratio_plus());
            assert!((d.ratio_minus() - 1.0).abs() < 1e-6, "{branch:?} {}", d.ratio_minus());
            assert!(d.plus.rms_residual < 1e-6 && d.warnings.is_empty());
        }
    }

    #[test]
    fn coarse_amplitude_is_a_resolution_error() {
        let cfg = OpticalConfig::nominal(LensConfiguration::CrystalFarField);
        let grid = SlitGrid { extent: 1e-3, n: 11 };
        let a = BiphotonAmplitude { grid, values: vec![Complex64::new(1.0, 0.0); 121] };
        assert!(matches!(diffraction_coefficients(&a, &cfg, Branch::Dbc), Err(Error::Resolution(_))));
    }

    #[test]
    fn resampled_grid_agrees_with_aligned_grid() {
        let cfg = OpticalConfig::nominal(LensConfiguration::CrystalFarField);
        let grid = SlitGrid { extent: 3.0 * cfg.slit_half_width, n: 801 };
        let a = slit_plane_amplitude_on(&cfg, grid).unwrap();
        let r = diffraction_coefficients(&a, &cfg, Branch::Dbc).unwrap();
        let direct = diffraction_coefficients(&aperture_amplitude(&cfg).unwrap(), &cfg, Branch::Dbc).unwrap();
        assert!((r.ratio_plus() - direct.ratio_plus()).abs() < 1e-3);
        assert!((r.ratio_minus() - direct.ratio_minus()).abs() < 1e-3);
    }
}
