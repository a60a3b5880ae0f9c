//! Analytic coincidence maps of a separable and an entangled state in both
//! branches, with the fringe spacing read off the maps.
//!
//! `cargo run --release --example coincidence_maps`

use slitpairs::analysis::{cut_values, Cut};
use slitpairs::config::ExperimentConfig;
use slitpairs::io::map_to_ascii;
use slitpairs::map::{coincidence_map, GridSpec, MapModel};
use slitpairs::optics::LensConfiguration;
use slitpairs::state::{Branch, SlitQubitState};

fn main() -> slitpairs::Result<()> {
    let optics = ExperimentConfig::bundled(LensConfiguration::CrystalImage).optics();
    let grid = GridSpec::new(201, 0.01)?;
    for (label, st) in [("separable (90, 0)", SlitQubitState::new(90.0, 0.0)?), ("entangled (176, 170)", SlitQubitState::new(176.0, 170.0)?)] {
        let model = MapModel::from_optics(st, &optics, None);
        for branch in [Branch::Dbc, Branch::Sbc] {
            let map = coincidence_map(&model, branch, &grid)?;
            let diag = cut_values(&map, Cut::Diagonal)?;
            let peaks: Vec<String> = (1..diag.len() - 1)
                .filter(|&k| diag[k] > diag[k - 1] && diag[k] >= diag[k + 1] && diag[k] > 0.5 * map.max())
                .map(|k| format!("{:+.2}", map.x1_mm[k]))
                .collect();
            println!("{label}, {}: maxima along x1 = x2 at {} mm", branch.name(), peaks.join(" "));
        }
        let coarse = coincidence_map(&model, Branch::Dbc, &GridSpec::FINE)?;
        print!("{}", map_to_ascii(&coarse));
    }
    println!("fringe period 2π/β = {:.3} mm", 2.0 * std::f64::consts::PI / (optics.beta() * 1e-3));
    Ok(())
}
