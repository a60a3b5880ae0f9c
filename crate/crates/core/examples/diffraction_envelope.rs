//! Effective single-slit diffraction coefficients along x1 + x2 and
//! x1 − x2 for the far-field and crystal-image setups.
//!
//! `cargo run --release --example diffraction_envelope`

use slitpairs::config::ExperimentConfig;
use slitpairs::diffraction::{aperture_amplitude, diffraction_coefficients};
use slitpairs::optics::LensConfiguration;
use slitpairs::state::Branch;
use std::time::Instant;

fn main() -> slitpairs::Result<()> {
    for (conf, branch) in [
        (LensConfiguration::CrystalFarField, Branch::Dbc),
        (LensConfiguration::CrystalFarField, Branch::Sbc),
        (LensConfiguration::CrystalImage, Branch::Dbc),
        (LensConfiguration::CrystalImage, Branch::Sbc),
    ] {
        let optics = ExperimentConfig::bundled(conf).optics();
        let t = Instant::now();
        let d = diffraction_coefficients(&aperture_amplitude(&optics)?, &optics, branch)?;
        println!(
            "{:<17} {}   a+/a = {:.4} (rms {:.4})   a-/a = {:.4} (rms {:.4})   {:.0} ms",
            conf.name(),
            branch.name(),
            d.ratio_plus(),
            d.plus.rms_residual,
            d.ratio_minus(),
            d.minus.rms_residual,
            t.elapsed().as_secs_f64() * 1e3
        );
        for w in &d.warnings {
            println!("    warning: {w}");
        }
    }
    Ok(())
}
