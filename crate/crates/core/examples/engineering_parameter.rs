//! Two-photon amplitude on the slit plane for both lens setups and the
//! resulting slit-qubit angles.
//!
//! `cargo run --release --example engineering_parameter`

use slitpairs::config::ExperimentConfig;
use slitpairs::optics::{engineering_parameter, slit_plane_amplitude, LensConfiguration};

fn main() -> slitpairs::Result<()> {
    for conf in [LensConfiguration::CrystalImage, LensConfiguration::CrystalFarField] {
        let optics = ExperimentConfig::bundled(conf).optics();
        let amp = slit_plane_amplitude(&optics)?;
        let d = optics.slit_half_separation;
        let e = engineering_parameter(&amp, d)?;
        println!(
            "{:<17} grid {}x{} over ±{:.0} µm   p = {:+.4} {:+.4}i   alpha = {:7.3}°   phi = {:7.3}°",
            conf.name(),
            amp.grid.n,
            amp.grid.n,
            amp.grid.extent * 1e6,
            e.p.re,
            e.p.im,
            e.alpha_deg,
            e.phi_deg
        );
        let peak = amp.interpolate(0.0, 0.0)?.norm();
        let mut slits = Vec::new();
        for (x1, x2) in [(d, d), (d, -d), (-d, d), (-d, -d)] {
            slits.push(format!("{:.4}", amp.interpolate(x1, x2)?.norm()));
        }
        println!("{:<17} |A(0,0)| = {peak:.4}   |A(±d,±d)| = {}", "", slits.join(" "));
    }
    Ok(())
}
