//! Re-derives the pump waist and effective crystal length frozen in the
//! bundled configurations.
//!
//! `cargo run --release --example calibrate`

use slitpairs::config::ExperimentConfig;
use slitpairs::optics::{calibrate, CalibrationTargets, LensConfiguration};

fn main() -> slitpairs::Result<()> {
    let base = ExperimentConfig::bundled(LensConfiguration::CrystalImage).optics();
    let targets = CalibrationTargets::default();
    let c = calibrate(&base, &targets)?;
    println!("pump_waist_um = {:.4}", c.pump_waist * 1e6);
    println!("crystal_length_mm = {:.5}", c.crystal_length * 1e3);
    println!(
        "far field: alpha = {:.3} (target {}), phi = {:.3}",
        c.far_field.alpha_deg, targets.far_field_alpha_deg, c.far_field.phi_deg
    );
    println!(
        "crystal image: alpha = {:.3} (target {}), phi = {:.3}",
        c.image.alpha_deg, targets.image_alpha_deg, c.image.phi_deg
    );
    println!(
        "bundled: pump_waist_um = {:.4}, crystal_length_mm = {:.5}",
        base.pump_waist * 1e6,
        base.crystal_length * 1e3
    );
    Ok(())
}
