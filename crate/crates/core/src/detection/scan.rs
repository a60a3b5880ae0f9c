//! Two-fixed, two-moving detector scans over a grid.

use super::pairs::SourceStats;
use super::sim::{derive_seed, simulate_run, DetectorLayout, Engine, RunCounts, SpatialSource};
use crate::error::Result;
use crate::map::{CoincidenceMap, GridSpec, MapMetadata};
use crate::state::Branch;
use rayon::prelude::*;

/// Detector roles in a scan: D1 (V) and D4 (H) sit at `x1`, D2 (V) and
/// D3 (H) at `x2`.
pub fn scan_positions(x1: f64, x2: f64) -> [f64; 4] {
    [x1, x2, x2, x1]
}

/// Counts of every grid point of a scan, row-major in `(x1, x2)`.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub grid: GridSpec,
    pub runs: Vec<RunCounts>,
    pub seed: u64,
}

impl ScanResult {
    fn map_of(&self, branch: Branch, f: impl Fn(&RunCounts) -> f64) -> CoincidenceMap {
        let values = self.runs.iter().map(f).collect();
        let mut m = CoincidenceMap::from_grid(&self.grid, branch, values, false).expect("scan grid matches runs");
        m.metadata = MapMetadata { extra: vec![("seed".into(), self.seed.to_string())], ..MapMetadata::default() };
        m
    }

    /// Raw coincidences of detectors `i` and `j` as a map.
    pub fn coincidence_map(&self, branch: Branch, i: usize, j: usize) -> CoincidenceMap {
        self.map_of(branch, |r| r.coincidence(i, j) as f64)
    }

    /// D1 (V at x1) with D3 (H at x2).
    pub fn dbc_map(&self) -> CoincidenceMap {
        self.coincidence_map(Branch::Dbc, 0, 2)
    }

    /// D1 (V at x1) with D2 (V at x2).
    pub fn sbc_map(&self) -> CoincidenceMap {
        self.coincidence_map(Branch::Sbc, 0, 1)
    }

    pub fn singles_map(&self, detector: usize) -> CoincidenceMap {
        self.map_of(Branch::Dbc, |r| r.singles[detector] as f64)
    }
}

/// Simulates every grid point; point `k` uses the seed derived from
/// `(seed, k)`.
pub fn simulate_scan(
    source: &SourceStats,
    spatial: &SpatialSource,
    grid: &GridSpec,
    pinhole_half_width_mm: f64,
    seed: u64,
    engine: Engine,
) -> Result<ScanResult> {
    grid.validate()?;
    let xs = grid.positions();
    let n = grid.n;
    let runs = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let layout = DetectorLayout::standard(scan_positions(xs[k / n], xs[k % n]), pinhole_half_width_mm);
            simulate_run(source, spatial, &layout, derive_seed(seed, k as u64), engine)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult { grid: *grid, runs, seed })
}
