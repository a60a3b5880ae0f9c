//! Pair-number distributions per pulse: multimode thermal at the two gains
//! of the setups, compared with Poisson statistics of equal mean.
//!
//! `cargo run --release --example pair_statistics`

use slitpairs::detection::{PairDistribution, PairFamily};

fn main() -> slitpairs::Result<()> {
    for g in [0.65f64, 0.87] {
        let mean = g.sinh().powi(2);
        println!("g = {g}: mean pairs per pulse sinh^2 g = {mean:.4}");
        println!("  {:>6} {:>10} {:>10} {:>10} {:>10}", "n", "K=1", "K=15", "K=100", "Poisson");
        let dists = [
            PairDistribution::new(PairFamily::Thermal, mean, 1.0, None)?,
            PairDistribution::new(PairFamily::Thermal, mean, 15.0, None)?,
            PairDistribution::new(PairFamily::Thermal, mean, 100.0, None)?,
            PairDistribution::new(PairFamily::Poisson, mean, 1.0, None)?,
        ];
        for n in 0..=5 {
            let row: Vec<String> = dists.iter().map(|d| format!("{:>10.4}", d.pmf(n))).collect();
            println!("  {n:>6} {}", row.join(" "));
        }
    }
    Ok(())
}
