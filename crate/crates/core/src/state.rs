//! The two-qubit slit state `(α, φ)` and the coincidence probabilities.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Pure state `cos(α/2)|ψ⁺⟩ + e^{iφ} sin(α/2)|φ⁺⟩` with angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitQubitState {
    alpha_deg: f64,
    phi_deg: f64,
}

impl SlitQubitState {
    /// Both angles must lie in `[0°, 180°]`.
    pub fn new(alpha_deg: f64, phi_deg: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha_deg), ("phi", phi_deg)] {
            if !(0.0..=180.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} deg is outside [0, 180]")));
            }
        }
        Ok(SlitQubitState { alpha_deg, phi_deg })
    }

    /// Maps any angles onto the canonical range: `α` is reflected into
    /// `[0°, 180°]` (only `|sin α|` and `cos² α/2` enter) and `φ` is folded
    /// using `cos φ = cos(-φ)`.
    pub fn canonical(alpha_deg: f64, phi_deg: f64) -> Self {
        let a = alpha_deg.rem_euclid(360.0);
        let a = if a > 180.0 { 360.0 - a } else { a };
        let p = phi_deg.rem_euclid(360.0);
        let p = if p > 180.0 { 360.0 - p } else { p };
        SlitQubitState { alpha_deg: a, phi_deg: p }
    }

    pub fn alpha_deg(&self) -> f64 {
        self.alpha_deg
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi_deg
    }

    /// `s = sin α cos φ`, the only combination visible in single-branch maps.
    pub fn s(&self) -> f64 {
        self.alpha_deg.to_radians().sin() * self.phi_deg.to_radians().cos()
    }

    pub fn concurrence(&self) -> f64 {
        concurrence_from_s(self.s())
    }

    pub fn partial_purity(&self) -> f64 {
        purity_from_s(self.s())
    }
}

pub fn concurrence_from_s(s: f64) -> f64 {
    (1.0 - s * s).max(0.0).sqrt()
}

pub fn purity_from_s(s: f64) -> f64 {
    0.25 * (1.0 + s * s).powi(2)
}

pub fn concurrence(state: &SlitQubitState) -> f64 {
    state.concurrence()
}

pub fn partial_purity(state: &SlitQubitState) -> f64 {
    state.partial_purity()
}

/// Purity implied by a concurrence value, `¼(2 − C²)²`.
pub fn purity_from_concurrence(c: f64) -> f64 {
    0.25 * (2.0 - c * c).powi(2)
}

/// Polarization branch pairing of a coincidence measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Same branch: both photons with the same polarization.
    Sbc,
    /// Different branches.
    Dbc,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Sbc => "sbc",
            Branch::Dbc => "dbc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sbc" => Ok(Branch::Sbc),
            "dbc" => Ok(Branch::Dbc),
            other => Err(Error::Config(format!("unknown branch '{other}', expected sbc or dbc"))),
        }
    }
}

/// Different-branch coincidence probability (unnormalized). `beta` and the
/// positions must use reciprocal units.
pub fn dbc_probability(x1: f64, x2: f64, state: &SlitQubitState, beta: f64) -> f64 {
    let a = state.alpha_deg.to_radians();
    let c2 = (0.5 * a).cos().powi(2);
    let s2 = (0.5 * a).sin().powi(2);
    let cross = a.sin().abs() * state.phi_deg.to_radians().cos();
    let v = 1.0
        + c2 * (beta * (x1 - x2)).cos()
        + cross * ((beta * x1).cos() + (beta * x2).cos())
        + s2 * (beta * (x1 + x2)).cos();
    v.max(0.0)
}

/// Same-branch coincidence probability (unnormalized).
pub fn sbc_probability(x1: f64, x2: f64, state: &SlitQubitState, beta: f64) -> f64 {
    let s = state.s();
    let (c1, c2) = ((beta * x1).cos(), (beta * x2).cos());
    (1.0 + s * s * c1 * c2 + s * (c1 + c2)).max(0.0)
}

pub fn probability(branch: Branch, x1: f64, x2: f64, state: &SlitQubitState, beta: f64) -> f64 {
    match branch {
        Branch::Dbc => dbc_probability(x1, x2, state, beta),
        Branch::Sbc => sbc_probability(x1, x2, state, beta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_and_maximally_entangled_limits() {
        let sep = SlitQubitState::new(90.0, 0.0).unwrap();
        assert!(sep.concurrence().abs() < 1e-7);
        assert!((sep.partial_purity() - 1.0).abs() < 1e-12);
        for phi in [0.0, 33.0, 180.0] {
            let me = SlitQubitState::new(0.0, phi).unwrap();
            assert!((me.concurrence() - 1.0).abs() < 1e-15);
            assert!((me.partial_purity() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn pure_phi_plus_fringes_run_along_antidiagonals() {
        let st = SlitQubitState::new(180.0, 0.0).unwrap();
        let beta: f64 = 6.0;
        for &(x1, x2) in &[(0.3f64, -0.3f64), (0.1, 0.4), (-0.7, 0.2)] {
            let expected = 1.0 + (beta * (x1 + x2)).cos();
            assert!((dbc_probability(x1, x2, &st, beta) - expected.max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_folds_phase() {
        let s = SlitQubitState::canonical(176.0, -170.0);
        assert_eq!(s.phi_deg(), 170.0);
        let s = SlitQubitState::canonical(190.0, 350.0);
        assert!((s.alpha_deg() - 170.0).abs() < 1e-12);
        assert!((s.phi_deg() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_angles_are_rejected() {
        assert!(SlitQubitState::new(181.0, 0.0).is_err());
        assert!(SlitQubitState::new(10.0, -1.0).is_err());
    }

    #[test]
    fn branch_names_parse() {
        assert_eq!(Branch::parse("DBC").unwrap(), Branch::Dbc);
        assert!(Branch::parse("xbc").is_err());
    }
}
