//! Coincidence maps on a grid of detector positions.

use crate::error::{Error, Result};
use crate::numerics::sinc;
use crate::optics::OpticalConfig;
use crate::state::{probability, Branch, SlitQubitState};
use rayon::prelude::*;

/// Square grid of detector positions centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub step_mm: f64,
}

impl GridSpec {
    /// 21 × 21 points, 100 µm apart.
    pub const FINE: GridSpec = GridSpec { n: 21, step_mm: 0.1 };
    /// 21 × 21 points, 500 µm apart.
    pub const BROAD: GridSpec = GridSpec { n: 21, step_mm: 0.5 };

    pub fn new(n: usize, step_mm: f64) -> Result<Self> {
        let g = GridSpec { n, step_mm };
        g.validate()?;
        Ok(g)
    }

    /// Accepts `fine`, `broad` or `custom:<n>x<step_um>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "fine" => Ok(Self::FINE),
            "broad" => Ok(Self::BROAD),
            _ => {
                let bad = || Error::Config(format!("invalid grid '{s}', expected fine, broad or custom:<n>x<step_um>"));
                let body = s.strip_prefix("custom:").ok_or_else(bad)?;
                let (n, step) = body.split_once('x').ok_or_else(bad)?;
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                let step_um: f64 = step.trim().parse().map_err(|_| bad())?;
                Self::new(n, step_um * 1e-3)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("grid needs at least one point per axis".into()));
        }
        if !(self.step_mm.is_finite() && self.step_mm > 0.0) {
            return Err(Error::Config(format!("grid step must be positive, got {} mm", self.step_mm)));
        }
        Ok(())
    }

    pub fn positions(&self) -> Vec<f64> {
        let c = (self.n as f64 - 1.0) / 2.0;
        (0..self.n).map(|i| (i as f64 - c) * self.step_mm).collect()
    }

    pub fn label(&self) -> String {
        if *self == Self::FINE {
            "fine".into()
        } else if *self == Self::BROAD {
            "broad".into()
        } else {
            format!("custom:{}x{}", self.n, self.step_mm * 1e3)
        }
    }
}

/// Phenomenological diffraction envelope `sinc²(a₊x₊)·sinc²(a₋x₋)` with
/// `x± = (x1 ± x2)/2`, coefficients per mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub a_plus: f64,
    pub a_minus: f64,
}

impl Envelope {
    pub fn at(&self, x1: f64, x2: f64) -> f64 {
        let p = sinc(self.a_plus * 0.5 * (x1 + x2));
        let m = sinc(self.a_minus * 0.5 * (x1 - x2));
        p * p * m * m
    }
}

/// Everything needed to evaluate an analytic map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapModel {
    pub state: SlitQubitState,
    pub beta_per_mm: f64,
    pub envelope: Option<Envelope>,
}

impl MapModel {
    pub fn from_optics(state: SlitQubitState, cfg: &OpticalConfig, envelope: Option<Envelope>) -> Self {
        MapModel { state, beta_per_mm: cfg.beta() * 1e-3, envelope }
    }

    pub fn value(&self, branch: Branch, x1: f64, x2: f64) -> f64 {
        let p = probability(branch, x1, x2, &self.state, self.beta_per_mm);
        match self.envelope {
            Some(e) => p * e.at(x1, x2),
            None => p,
        }
    }
}

/// Free-form annotations carried in the CSV preamble.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MapMetadata {
    pub alpha_deg: Option<f64>,
    pub phi_deg: Option<f64>,
    pub beta_per_mm: Option<f64>,
    pub a_plus: Option<f64>,
    pub a_minus: Option<f64>,
    /// Additional key/value pairs, e.g. acquisition settings.
    pub extra: Vec<(String, String)>,
}

/// Values on an `(x1, x2)` grid, row-major with index `i1 * n2 + i2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMap {
    pub x1_mm: Vec<f64>,
    pub x2_mm: Vec<f64>,
    pub values: Vec<f64>,
    pub branch: Branch,
    pub normalized: bool,
    pub step_mm: f64,
    pub metadata: MapMetadata,
}

impl CoincidenceMap {
    pub fn from_grid(grid: &GridSpec, branch: Branch, values: Vec<f64>, normalized: bool) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n * grid.n {
            return Err(Error::Shape(format!("{} values for a {}x{} grid", values.len(), grid.n, grid.n)));
        }
        Ok(CoincidenceMap {
            x1_mm: grid.positions(),
            x2_mm: grid.positions(),
            values,
            branch,
            normalized,
            step_mm: grid.step_mm,
            metadata: MapMetadata::default(),
        })
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.x2_mm.len() + i2]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid index of the largest value (first in row-major order).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        (best / self.x2_mm.len(), best % self.x2_mm.len())
    }

    pub fn same_grid(&self, other: &CoincidenceMap) -> bool {
        self.x1_mm == other.x1_mm && self.x2_mm == other.x2_mm
    }

    /// Copy divided by its maximum so that the peak equals 1.
    pub fn normalized_copy(&self) -> Result<Self> {
        let m = self.max();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Numerical("cannot normalize a map without a positive maximum".into()));
        }
        let mut out = self.clone();
        out.values = self.values.iter().map(|v| v / m).collect();
        out.normalized = true;
        Ok(out)
    }

    /// Negative entries replaced by zero, for display.
    pub fn clipped(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v = v.max(0.0);
        }
        out
    }
}

/// Evaluates the analytic map on `grid` and normalizes its maximum to 1.
pub fn coincidence_map(model: &MapModel, branch: Branch, grid: &GridSpec) -> Result<CoincidenceMap> {
    grid.validate()?;
    if !(model.beta_per_mm.is_finite() && model.beta_per_mm > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {}", model.beta_per_mm)));
    }
    let xs = grid.positions();
    let n = grid.n;
    let values: Vec<f64> = (0..n * n).into_par_iter().map(|k| model.value(branch, xs[k / n], xs[k % n])).collect();
    let raw = CoincidenceMap::from_grid(grid, branch, values, false)?;
    let mut map = raw.normalized_copy()?;
    map.metadata = MapMetadata {
        alpha_deg: Some(model.state.alpha_deg()),
        phi_deg: Some(model.state.phi_deg()),
        beta_per_mm: Some(model.beta_per_mm),
        a_plus: model.envelope.map(|e| e.a_plus),
        a_minus: model.envelope.map(|e| e.a_minus),
        extra: Vec::new(),
    };
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_labels_parse() {
        assert_eq!(GridSpec::parse("fine").unwrap(), GridSpec::FINE);
        assert_eq!(GridSpec::parse("broad").unwrap(), GridSpec::BROAD);
        let g = GridSpec::parse("custom:17x500").unwrap();
        assert_eq!(g.n, 17);
        assert!((g.step_mm - 0.5).abs() < 1e-15);
        let p = g.positions();
        assert!((p[0] + 4.0).abs() < 1e-12 && (p[16] - 4.0).abs() < 1e-12);
        for bad in ["custom:0x100", "custom:5x-1", "coarse", "custom:5"] {
            assert!(GridSpec::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn single_point_grid_is_valid() {
        let st = SlitQubitState::new(30.0, 40.0).unwrap();
        let m = MapModel { state: st, beta_per_mm: 6.0, envelope: None };
        let map = coincidence_map(&m, Branch::Dbc, &GridSpec::new(1, 0.1).unwrap()).unwrap();
        assert_eq!(map.values, vec![1.0]);
    }

    #[test]
    fn normalized_maximum_is_exactly_one() {
        let st = SlitQubitState::new(120.0, 150.0).unwrap();
        let env = Envelope { a_plus: 1.1, a_minus: 0.6 };
        let m = MapModel { state: st, beta_per_mm: 6.0856, envelope: Some(env) };
        for b in [Branch::Dbc, Branch::Sbc] {
            let map = coincidence_map(&m, b, &GridSpec::FINE).unwrap();
            assert_eq!(map.max(), 1.0);
            assert!(map.values.iter().all(|v| *v >= 0.0 && v.is_finite()));
        }
    }
}
