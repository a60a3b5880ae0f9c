//! Detector efficiency and mean pair number recovered from singles and
//! coincidences of an uncorrelated single-pair source.
//!
//! `cargo run --release --example estimators`

use slitpairs::detection::{
    estimate_gamma, estimate_pair_number, simulate_run, DetectorLayout, Engine, PairDistribution, PairFamily,
    SourceStats, SpatialSource,
};

fn main() -> slitpairs::Result<()> {
    let (p, eta, rate) = (0.3, 0.2, 76e6);
    let pulses = 1e7;
    let source = SourceStats::new(PairDistribution::new(PairFamily::SinglePair, p, 1.0, None)?, eta, rate, pulses / rate, 1e-9)?;
    let layout = DetectorLayout::standard([0.0; 4], 0.1);
    let run = simulate_run(&source, &SpatialSource::Fixed { x_v: 0.0, x_h: 0.0 }, &layout, 11, Engine::PulseByPulse)?;
    let gamma = estimate_gamma(&run, 0, 2)?;
    let pair = estimate_pair_number(&run, 0, gamma.value)?;
    println!("pulses {}, singles {:?}", run.pulses, run.singles);
    println!("gamma: truth {:.4}, estimate {:.5} ± {:.5}", source.overall_efficiency(), gamma.value, gamma.sigma);
    println!("p:     truth {p:.4}, estimate {:.5} ± {:.5}", pair.value, pair.sigma);
    Ok(())
}
