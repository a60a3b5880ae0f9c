//! Pair-number statistics of the pulsed source.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Family of the per-pulse pair-number law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairFamily {
    Poisson,
    /// Multimode thermal (negative binomial) law over `modes` modes.
    Thermal,
    /// At most one pair per pulse, emitted with probability `mean`.
    SinglePair,
}

impl PairFamily {
    pub fn name(self) -> &'static str {
        match self {
            PairFamily::Poisson => "poisson",
            PairFamily::Thermal => "thermal",
            PairFamily::SinglePair => "single_pair",
        }
    }
}

/// Tail mass below which the pair-number table is cut.
const TAIL: f64 = 1e-16;

/// Tabulated pair-number distribution with inverse-CDF sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistribution {
    pub family: PairFamily,
    pub mean: f64,
    pub modes: f64,
    pub max_pairs: Option<u32>,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

fn ln_pmf(family: PairFamily, mean: f64, modes: f64, n: u32) -> f64 {
    let nf = n as f64;
    match family {
        PairFamily::Poisson => nf * mean.ln() - mean - ln_factorial(n),
        PairFamily::Thermal => {
            ln_gamma(nf + modes) - ln_gamma(modes) - ln_factorial(n)
                + nf * (mean / (mean + modes)).ln()
                + modes * (modes / (mean + modes)).ln()
        }
        PairFamily::SinglePair => match n {
            0 => (1.0 - mean).ln(),
            1 => mean.ln(),
            _ => f64::NEG_INFINITY,
        },
    }
}

fn ln_factorial(n: u32) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

impl PairDistribution {
    pub fn new(family: PairFamily, mean: f64, modes: f64, max_pairs: Option<u32>) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::Config(format!("mean pair number must be positive, got {mean}")));
        }
        if family == PairFamily::Thermal && !(modes.is_finite() && modes > 0.0) {
            return Err(Error::Config(format!("thermal_modes must be positive, got {modes}")));
        }
        if family == PairFamily::SinglePair && mean > 1.0 {
            return Err(Error::Config(format!("single_pair emission probability {mean} exceeds 1")));
        }
        let limit = max_pairs.unwrap_or(u32::MAX);
        let mut pmf = Vec::new();
        let mut acc = 0.0;
        for n in 0..=limit {
            let p = ln_pmf(family, mean, modes, n).exp();
            pmf.push(p);
            acc += p;
            if n as f64 > mean && (1.0 - acc < TAIL || p < TAIL * 1e-3) {
                break;
            }
            if n > 10_000 {
                return Err(Error::Numerical("pair-number table does not converge".into()));
            }
        }
        let total: f64 = pmf.iter().sum();
        for p in &mut pmf {
            *p /= total;
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut c = 0.0;
        for p in &pmf {
            c += p;
            cdf.push(c);
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(PairDistribution { family, mean, modes, max_pairs, pmf, cdf })
    }

    /// Thermal law whose mean is set by the parametric gain, `sinh²(g)`.
    pub fn thermal_from_gain(gain: f64, modes: f64) -> Result<Self> {
        Self::new(PairFamily::Thermal, gain.sinh().powi(2), modes, None)
    }

    pub fn pmf(&self, n: u32) -> f64 {
        self.pmf.get(n as usize).copied().unwrap_or(0.0)
    }

    /// Largest tabulated pair number.
    pub fn support_max(&self) -> u32 {
        (self.pmf.len() - 1) as u32
    }

    /// Mean of the tabulated (possibly truncated) law.
    pub fn tabulated_mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        self.cdf.partition_point(|c| *c <= u).min(self.pmf.len() - 1) as u32
    }
}

/// Acquisition parameters of one scan point.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceStats {
    pub pairs: PairDistribution,
    /// Per-photon detection efficiency behind the beam splitter.
    pub detector_efficiency: f64,
    /// Repetition rate (Hz).
    pub repetition_rate: f64,
    /// Integration time per scan point (s).
    pub duration: f64,
    /// Coincidence window (s).
    pub coincidence_window: f64,
}

impl SourceStats {
    pub fn new(
        pairs: PairDistribution,
        detector_efficiency: f64,
        repetition_rate: f64,
        duration: f64,
        coincidence_window: f64,
    ) -> Result<Self> {
        if !(detector_efficiency > 0.0 && detector_efficiency <= 1.0) {
            return Err(Error::Config(format!("detector_efficiency must lie in (0, 1], got {detector_efficiency}")));
        }
        if !(repetition_rate.is_finite() && repetition_rate > 0.0) {
            return Err(Error::Config(format!("repetition rate must be positive, got {repetition_rate}")));
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::Config(format!("duration must be non-negative, got {duration}")));
        }
        if !(coincidence_window > 0.0 && coincidence_window < 1.0 / repetition_rate) {
            return Err(Error::Config(format!(
                "coincidence window {coincidence_window:e} s must be positive and shorter than the pulse spacing {:e} s",
                1.0 / repetition_rate
            )));
        }
        Ok(SourceStats { pairs, detector_efficiency, repetition_rate, duration, coincidence_window })
    }

    /// Pulses in one acquisition, `round(R τ)`.
    pub fn pulses(&self) -> u64 {
        (self.repetition_rate * self.duration).round() as u64
    }

    /// Overall efficiency of one detector, including the ½ of its beam
    /// splitter: the quantity recovered by the `N12 / N1` estimator.
    pub fn overall_efficiency(&self) -> f64 {
        0.5 * self.detector_efficiency
    }

    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        Self::new(self.pairs.clone(), self.detector_efficiency, self.repetition_rate, duration, self.coincidence_window)
    }
}
