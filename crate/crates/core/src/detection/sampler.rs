//! Piecewise-constant 2-D densities with inverse-transform sampling and
//! exact rectangle masses.

use crate::error::{Error, Result};
use crate::map::MapModel;
use crate::state::Branch;
use rand::Rng;
use rayon::prelude::*;

/// Density constant on each cell of a regular grid. The first coordinate
/// is the position of the V photon, the second that of the H photon (mm).
#[derive(Debug, Clone)]
pub struct JointDensity {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    /// CDF over x cells of the marginal.
    marginal: Vec<f64>,
    /// Per x row, CDF over y cells.
    conditional: Vec<f64>,
    /// Normalized mass below and left of each grid line intersection.
    cumulative: Vec<f64>,
}

impl JointDensity {
    /// Evaluates `f` at the cell midpoints of `[x0, x0 + nx·dx) × [y0, y0 + ny·dy)`.
    pub fn from_fn<F>(x0: f64, y0: f64, dx: f64, dy: f64, nx: usize, ny: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        if nx == 0 || ny == 0 || !(dx > 0.0 && dy > 0.0) {
            return Err(Error::Config("density grid needs positive cell sizes and counts".into()));
        }
        let w: Vec<f64> = (0..nx * ny)
            .into_par_iter()
            .map(|k| f(x0 + (k / ny) as f64 * dx + 0.5 * dx, y0 + (k % ny) as f64 * dy + 0.5 * dy))
            .collect();
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Config(format!("density has an invalid value {bad}")));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(Error::Config("density is zero everywhere".into()));
        }
        let mut marginal = Vec::with_capacity(nx);
        let mut conditional = vec![0.0; nx * ny];
        let mut acc = 0.0;
        for i in 0..nx {
            let row = &w[i * ny..(i + 1) * ny];
            let rs: f64 = row.iter().sum();
            acc += rs;
            marginal.push(acc / total);
            let mut c = 0.0;
            for j in 0..ny {
                c += row[j];
                conditional[i * ny + j] = if rs > 0.0 { c / rs } else { (j + 1) as f64 / ny as f64 };
            }
        }
        *marginal.last_mut().unwrap() = 1.0;
        let mut cumulative = vec![0.0; (nx + 1) * (ny + 1)];
        for i in 0..nx {
            let mut run = 0.0;
            for j in 0..ny {
                run += w[i * ny + j] / total;
                cumulative[(i + 1) * (ny + 1) + j + 1] = cumulative[i * (ny + 1) + j + 1] + run;
            }
        }
        Ok(JointDensity { x0, y0, dx, dy, nx, ny, marginal, conditional, cumulative })
    }

    /// Analytic map density (with its envelope) over `[-half, half)²` in
    /// square cells of `cell` mm.
    pub fn from_map_model(model: &MapModel, branch: Branch, half_range_mm: f64, cell_mm: f64) -> Result<Self> {
        let n = (2.0 * half_range_mm / cell_mm).round() as usize;
        Self::from_fn(-half_range_mm, -half_range_mm, cell_mm, cell_mm, n, n, |x1, x2| model.value(branch, x1, x2))
    }

    pub fn uniform(x0: f64, y0: f64, width: f64, height: f64) -> Result<Self> {
        Self::from_fn(x0, y0, width, height, 1, 1, |_, _| 1.0)
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (self.x0, self.x0 + self.nx as f64 * self.dx, self.y0, self.y0 + self.ny as f64 * self.dy)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let u: f64 = rng.random();
        let i = self.marginal.partition_point(|c| *c <= u).min(self.nx - 1);
        let v: f64 = rng.random();
        let row = &self.conditional[i * self.ny..(i + 1) * self.ny];
        let j = row.partition_point(|c| *c <= v).min(self.ny - 1);
        let (jx, jy): (f64, f64) = (rng.random(), rng.random());
        (self.x0 + (i as f64 + jx) * self.dx, self.y0 + (j as f64 + jy) * self.dy)
    }

    /// Cumulative distribution at an arbitrary point (bilinear inside cells,
    /// exact for a piecewise-constant density).
    fn cdf(&self, x: f64, y: f64) -> f64 {
        let tx = ((x - self.x0) / self.dx).clamp(0.0, self.nx as f64);
        let ty = ((y - self.y0) / self.dy).clamp(0.0, self.ny as f64);
        let i = (tx.floor() as usize).min(self.nx - 1);
        let j = (ty.floor() as usize).min(self.ny - 1);
        let (fx, fy) = (tx - i as f64, ty - j as f64);
        let s = self.ny + 1;
        let c = |a: usize, b: usize| self.cumulative[a * s + b];
        c(i, j) * (1.0 - fx) * (1.0 - fy)
            + c(i + 1, j) * fx * (1.0 - fy)
            + c(i, j + 1) * (1.0 - fx) * fy
            + c(i + 1, j + 1) * fx * fy
    }

    /// Probability of `x ∈ [x_lo, x_hi]` and `y ∈ [y_lo, y_hi]`.
    pub fn mass(&self, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> f64 {
        (self.cdf(x_hi, y_hi) - self.cdf(x_lo, y_hi) - self.cdf(x_hi, y_lo) + self.cdf(x_lo, y_lo)).max(0.0)
    }

    pub fn mass_x(&self, lo: f64, hi: f64) -> f64 {
        let (_, _, y0, y1) = self.bounds();
        self.mass(lo, hi, y0, y1)
    }

    pub fn mass_y(&self, lo: f64, hi: f64) -> f64 {
        let (x0, x1, _, _) = self.bounds();
        self.mass(x0, x1, lo, hi)
    }
}

/// Draws one pair of transverse positions `(x_V, x_H)` in mm.
pub fn sample_pair_positions<R: Rng + ?Sized>(density: &JointDensity, rng: &mut R) -> (f64, f64) {
    density.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn masses_are_exact_for_cells() {
        let d = JointDensity::from_fn(0.0, 0.0, 1.0, 1.0, 2, 2, |x, y| if x < 1.0 && y < 1.0 { 3.0 } else { 1.0 })
            .unwrap();
        assert!((d.mass(0.0, 1.0, 0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((d.mass(0.0, 0.5, 0.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((d.mass(-5.0, 5.0, -5.0, 5.0) - 1.0).abs() < 1e-15);
        assert!((d.mass_x(1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_density_is_rejected() {
        assert!(matches!(JointDensity::from_fn(0.0, 0.0, 1.0, 1.0, 3, 3, |_, _| 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn uniform_samples_stay_inside() {
        let d = JointDensity::uniform(-1.0, 2.0, 0.5, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (x, y) = d.sample(&mut rng);
            assert!((-1.0..-0.5).contains(&x) && (2.0..2.25).contains(&y));
        }
    }
}
