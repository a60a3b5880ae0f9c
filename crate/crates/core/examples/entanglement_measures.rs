//! Concurrence and partial purity of the slit-qubit family, and the
//! closed-form relation between them.
//!
//! `cargo run --release --example entanglement_measures`

use slitpairs::state::{purity_from_concurrence, SlitQubitState};

fn main() -> slitpairs::Result<()> {
    println!("{:>8} {:>8} {:>12} {:>12}", "alpha", "phi", "concurrence", "purity");
    for (a, p) in [(176.0, 170.0), (86.0, 5.0), (90.0, 0.0), (90.0, 90.0), (0.0, 0.0), (180.0, 45.0)] {
        let st = SlitQubitState::new(a, p)?;
        println!("{a:>8.1} {p:>8.1} {:>12.5} {:>12.5}", st.concurrence(), st.partial_purity());
    }
    let mut worst = 0.0f64;
    for a in 0..=180 {
        for p in 0..=180 {
            let st = SlitQubitState::new(a as f64, p as f64)?;
            worst = worst.max((purity_from_concurrence(st.concurrence()) - st.partial_purity()).abs());
        }
    }
    println!("max |(2 - C^2)^2 / 4 - P| over the 181x181 degree grid: {worst:.2e}");
    Ok(())
}
