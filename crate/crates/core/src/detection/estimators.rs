//! Source-characterization estimators.

use super::sim::RunCounts;
use crate::error::{Error, Result};

/// Point estimate with its 1σ statistical uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// `γ = N_tp / N_t` for trigger detector `t` and partner `p`, with the
/// binomial standard error.
pub fn estimate_gamma(counts: &RunCounts, trigger: usize, partner: usize) -> Result<Estimate> {
    let n1 = counts.singles[trigger];
    if n1 == 0 {
        return Err(Error::UndefinedEstimate(format!("detector D{} registered no counts", trigger + 1)));
    }
    let g = counts.coincidence(trigger, partner) as f64 / n1 as f64;
    Ok(Estimate { value: g, sigma: (g * (1.0 - g) / n1 as f64).sqrt() })
}

/// `p = N1 / (γ R τ)` with the Poisson error of `N1`; `τ` is the
/// integration time of the run.
pub fn estimate_pair_number(counts: &RunCounts, detector: usize, gamma: f64) -> Result<Estimate> {
    let denom = gamma * counts.repetition_rate * counts.duration;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::UndefinedEstimate(format!("gamma R tau = {denom} is not positive")));
    }
    let n1 = counts.singles[detector] as f64;
    Ok(Estimate { value: n1 / denom, sigma: n1.sqrt() / denom })
}

/// Expected accidental coincidences `N1 N2 / (R τ)`.
pub fn accidental_coincidences(n1: f64, n2: f64, repetition_rate: f64, tau: f64) -> Result<f64> {
    let denom = repetition_rate * tau;
    if !(denom > 0.0 && denom.is_finite()) {
        return Err(Error::UndefinedEstimate(format!("R tau = {denom} is not positive")));
    }
    Ok(n1 * n2 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(n1: u64, n13: u64) -> RunCounts {
        RunCounts {
            pulses: 1000,
            singles: [n1, 0, n1, 0],
            coincidences: [0, n13, 0, 0, 0, 0],
            cross_pair_coincidences: [0; 6],
            fourfolds: 0,
            same_branch_by_pairs: vec![],
            detector_positions_mm: [0.0; 4],
            duration: 1e-3,
            repetition_rate: 1e6,
            coincidence_window: 1e-9,
        }
    }

    #[test]
    fn gamma_edge_cases() {
        assert_eq!(estimate_gamma(&counts(50, 50), 0, 2).unwrap().value, 1.0);
        assert_eq!(estimate_gamma(&counts(50, 0), 0, 2).unwrap().value, 0.0);
        assert!(matches!(estimate_gamma(&counts(0, 0), 0, 2), Err(Error::UndefinedEstimate(_))));
    }

    #[test]
    fn pair_number_scaling() {
        let c = counts(100, 10);
        assert_eq!(estimate_pair_number(&counts(0, 0), 0, 0.1).unwrap().value, 0.0);
        let p = estimate_pair_number(&c, 0, 0.1).unwrap().value;
        assert!((p - 1.0).abs() < 1e-12);
        let mut c2 = c.clone();
        c2.duration *= 2.0;
        assert!((estimate_pair_number(&c2, 0, 0.1).unwrap().value - 0.5).abs() < 1e-12);
        assert!(estimate_pair_number(&c, 0, 0.0).is_err());
    }

    #[test]
    fn accidentals_formula() {
        assert_eq!(accidental_coincidences(0.0, 0.0, 76e6, 1.0).unwrap(), 0.0);
        let rt = 76e6 * 25.0;
        assert!((accidental_coincidences(rt, rt, 76e6, 25.0).unwrap() - rt).abs() < 1e-3);
        assert!(accidental_coincidences(1.0, 1.0, 0.0, 1.0).is_err());
    }
}
