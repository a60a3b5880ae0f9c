//! Processing of measured or simulated maps: accidental subtraction,
//! visibility and state fitting.

mod fit;

pub use fit::{fit_state, FitOptions, FitResult, FitStatus, UncertaintyMethod};

use crate::error::{Error, Result};
use crate::map::CoincidenceMap;

/// Removes the expected accidental coincidences `N1 N2 / (R τ)` point by
/// point, where `singles_1` and `singles_2` hold the singles of the two
/// detectors recorded at each grid point. Negative results are kept.
pub fn subtract_accidentals(
    map: &CoincidenceMap,
    singles_1: &CoincidenceMap,
    singles_2: &CoincidenceMap,
    repetition_rate: f64,
    tau: f64,
) -> Result<CoincidenceMap> {
    if !map.same_grid(singles_1) || !map.same_grid(singles_2) {
        return Err(Error::Shape("singles maps do not share the coincidence map grid".into()));
    }
    let denom = repetition_rate * tau;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::UndefinedEstimate(format!("R tau = {denom} is not positive")));
    }
    let mut out = map.clone();
    for (k, v) in out.values.iter_mut().enumerate() {
        *v -= singles_1.values[k] * singles_2.values[k] / denom;
    }
    out.metadata.extra.push(("accidentals_subtracted".into(), "true".into()));
    Ok(out)
}

/// Line through the grid along which a visibility is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    /// `x1 = x2`.
    Diagonal,
    /// `x1 = -x2`.
    AntiDiagonal,
    /// Fixed `x1` index.
    Row(usize),
    /// Fixed `x2` index.
    Column(usize),
}

pub fn cut_values(map: &CoincidenceMap, cut: Cut) -> Result<Vec<f64>> {
    let (n1, n2) = (map.x1_mm.len(), map.x2_mm.len());
    let v = match cut {
        Cut::Diagonal | Cut::AntiDiagonal if n1 != n2 => {
            return Err(Error::Shape("diagonal cuts need a square grid".into()));
        }
        Cut::Diagonal => (0..n1).map(|i| map.get(i, i)).collect(),
        Cut::AntiDiagonal => (0..n1).map(|i| map.get(i, n1 - 1 - i)).collect(),
        Cut::Row(i) if i < n1 => (0..n2).map(|j| map.get(i, j)).collect(),
        Cut::Column(j) if j < n2 => (0..n1).map(|i| map.get(i, j)).collect(),
        _ => return Err(Error::Shape(format!("cut {cut:?} lies outside the grid"))),
    };
    Ok(v)
}

/// `(max − min) / (max + min)` along `cut`.
pub fn visibility(map: &CoincidenceMap, cut: Cut) -> Result<f64> {
    let v = cut_values(map, cut)?;
    if v.len() < 3 {
        return Err(Error::Shape(format!("cut {cut:?} has only {} points", v.len())));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max + min > 0.0) {
        return Err(Error::Numerical(format!("visibility undefined along {cut:?}: max + min = {}", max + min)));
    }
    Ok((max - min) / (max + min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::GridSpec;
    use crate::state::Branch;

    fn map_from(f: impl Fn(f64, f64) -> f64) -> CoincidenceMap {
        let g = GridSpec::FINE;
        let xs = g.positions();
        let v = (0..g.n * g.n).map(|k| f(xs[k / g.n], xs[k % g.n])).collect();
        CoincidenceMap::from_grid(&g, Branch::Dbc, v, false).unwrap()
    }

    #[test]
    fn constant_and_full_contrast_visibility() {
        assert_eq!(visibility(&map_from(|_, _| 3.0), Cut::Diagonal).unwrap(), 0.0);
        let beta = std::f64::consts::PI / 0.5;
        let m = map_from(|x1, _| (0.5 * beta * x1).cos().powi(2));
        assert!((visibility(&m, Cut::Column(4)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cuts_fail() {
        let m = map_from(|_, _| 0.0);
        assert!(visibility(&m, Cut::Diagonal).is_err());
        let g = GridSpec::new(1, 0.1).unwrap();
        let one = CoincidenceMap::from_grid(&g, Branch::Dbc, vec![1.0], false).unwrap();
        assert!(visibility(&one, Cut::Diagonal).is_err());
        assert!(visibility(&m, Cut::Row(40)).is_err());
    }

    #[test]
    fn zero_singles_leave_map_unchanged() {
        let m = map_from(|x1, x2| 10.0 + x1 - x2);
        let z = map_from(|_, _| 0.0);
        let out = subtract_accidentals(&m, &z, &z, 76e6, 25.0).unwrap();
        assert_eq!(out.values, m.values);
    }

    #[test]
    fn grid_mismatch_is_a_shape_error() {
        let m = map_from(|_, _| 1.0);
        let g = GridSpec::BROAD;
        let other = CoincidenceMap::from_grid(&g, Branch::Dbc, vec![0.0; 441], false).unwrap();
        assert!(matches!(subtract_accidentals(&m, &other, &m, 1.0, 1.0), Err(Error::Shape(_))));
    }
}
