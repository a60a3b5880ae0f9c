//! Monte Carlo of the four-detector coincidence apparatus.
//!
//! A polarizing beam splitter sends the V photon of every pair to the V
//! branch and the H photon to the H branch; a 50:50 beam splitter in each
//! branch picks one of its detectors. A photon clicks its detector when it
//! falls inside the pinhole and survives a Bernoulli efficiency trial.
//! Detectors do not resolve photon number. Coincidences are counted only
//! within a pulse.

use super::pairs::SourceStats;
use super::sampler::JointDensity;
use crate::error::{Error, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    H,
    V,
}

/// Detector index pairs in the order used by [`RunCounts::coincidences`].
pub const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Position of `(i, j)` (any order) in [`PAIRS`].
pub fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    PAIRS.iter().position(|&p| p == (a, b)).expect("distinct detector indices below 4")
}

/// Four detectors with their branches and pinhole positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorLayout {
    pub positions_mm: [f64; 4],
    pub branches: [Polarization; 4],
    pub pinhole_half_width_mm: f64,
}

impl DetectorLayout {
    /// D1, D2 on the V branch and D3, D4 on the H branch.
    pub fn standard(positions_mm: [f64; 4], pinhole_half_width_mm: f64) -> Self {
        DetectorLayout {
            positions_mm,
            branches: [Polarization::V, Polarization::V, Polarization::H, Polarization::H],
            pinhole_half_width_mm,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.pinhole_half_width_mm > 0.0) {
            return Err(Error::Config("pinhole half-width must be positive".into()));
        }
        for pol in [Polarization::H, Polarization::V] {
            if !self.branches.contains(&pol) {
                return Err(Error::Config(format!("no detector on the {pol:?} branch")));
            }
        }
        Ok(())
    }

    fn branch(&self, pol: Polarization) -> Vec<usize> {
        (0..4).filter(|&d| self.branches[d] == pol).collect()
    }

    fn accepts(&self, det: usize, x: f64) -> bool {
        (x - self.positions_mm[det]).abs() <= self.pinhole_half_width_mm
    }

    fn window(&self, det: usize) -> (f64, f64) {
        let p = self.positions_mm[det];
        (p - self.pinhole_half_width_mm, p + self.pinhole_half_width_mm)
    }
}

/// Transverse positions of the pairs.
#[derive(Debug, Clone)]
pub enum SpatialSource {
    /// Independent draws from a joint density of `(x_V, x_H)`.
    Density(JointDensity),
    /// Every pair at the same positions.
    Fixed { x_v: f64, x_h: f64 },
}

impl SpatialSource {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            SpatialSource::Density(d) => d.sample(rng),
            SpatialSource::Fixed { x_v, x_h } => (*x_v, *x_h),
        }
    }

    fn mass(&self, v: (f64, f64), h: (f64, f64)) -> f64 {
        match self {
            SpatialSource::Density(d) => d.mass(v.0, v.1, h.0, h.1),
            SpatialSource::Fixed { x_v, x_h } => {
                let inside = |x: f64, w: (f64, f64)| x >= w.0 && x <= w.1;
                if inside(*x_v, v) && inside(*x_h, h) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Tallies of one acquisition at fixed detector positions.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCounts {
    pub pulses: u64,
    pub singles: [u64; 4],
    /// Indexed like [`PAIRS`].
    pub coincidences: [u64; 6],
    /// Coincidences in which no single pair fired both detectors.
    pub cross_pair_coincidences: [u64; 6],
    pub fourfolds: u64,
    /// Same-branch coincidences indexed by the pair number of their pulse.
    pub same_branch_by_pairs: Vec<u64>,
    pub detector_positions_mm: [f64; 4],
    pub duration: f64,
    pub repetition_rate: f64,
    pub coincidence_window: f64,
}

impl RunCounts {
    pub fn empty(layout: &DetectorLayout, source: &SourceStats) -> Self {
        RunCounts {
            pulses: 0,
            singles: [0; 4],
            coincidences: [0; 6],
            cross_pair_coincidences: [0; 6],
            fourfolds: 0,
            same_branch_by_pairs: Vec::new(),
            detector_positions_mm: layout.positions_mm,
            duration: source.duration,
            repetition_rate: source.repetition_rate,
            coincidence_window: source.coincidence_window,
        }
    }

    pub fn coincidence(&self, i: usize, j: usize) -> u64 {
        self.coincidences[pair_index(i, j)]
    }

    pub fn cross_pair(&self, i: usize, j: usize) -> u64 {
        self.cross_pair_coincidences[pair_index(i, j)]
    }

    fn merge(mut self, other: RunCounts) -> RunCounts {
        self.pulses += other.pulses;
        for d in 0..4 {
            self.singles[d] += other.singles[d];
        }
        for k in 0..6 {
            self.coincidences[k] += other.coincidences[k];
            self.cross_pair_coincidences[k] += other.cross_pair_coincidences[k];
        }
        self.fourfolds += other.fourfolds;
        if self.same_branch_by_pairs.len() < other.same_branch_by_pairs.len() {
            self.same_branch_by_pairs.resize(other.same_branch_by_pairs.len(), 0);
        }
        for (a, b) in self.same_branch_by_pairs.iter_mut().zip(&other.same_branch_by_pairs) {
            *a += b;
        }
        self
    }

    /// Records one pulse with `n` pairs from its clicks `(detector, pair)`.
    fn record(&mut self, n: u32, clicks: &[(usize, u32)], layout: &DetectorLayout) {
        let mut fired = [false; 4];
        for &(d, _) in clicks {
            fired[d] = true;
        }
        for d in 0..4 {
            self.singles[d] += fired[d] as u64;
        }
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            if !(fired[i] && fired[j]) {
                continue;
            }
            self.coincidences[k] += 1;
            let same_pair = clicks
                .iter()
                .any(|&(di, pi)| di == i && clicks.iter().any(|&(dj, pj)| dj == j && pj == pi));
            if !same_pair {
                self.cross_pair_coincidences[k] += 1;
            }
            if layout.branches[i] == layout.branches[j] {
                let n = n as usize;
                if self.same_branch_by_pairs.len() <= n {
                    self.same_branch_by_pairs.resize(n + 1, 0);
                }
                self.same_branch_by_pairs[n] += 1;
            }
        }
        if fired.iter().all(|f| *f) {
            self.fourfolds += 1;
        }
    }
}

/// Simulation strategy. Both sample the same model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Every pulse and every photon is drawn explicitly.
    PulseByPulse,
    /// Only pulses containing at least one pair that can click a detector
    /// are drawn individually; the rest are accounted for in aggregate.
    Thinned,
}

/// Pulses per independently seeded block of the pulse-by-pulse engine.
pub const BLOCK_PULSES: u64 = 1 << 16;

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Seed of item `index` derived from a master seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    block_rng(seed, index).next_u64()
}

/// Simulates `source.pulses()` pulses. Block `b` of [`BLOCK_PULSES`] pulses
/// draws from ChaCha8 stream `b` of `seed`, so the tallies are independent
/// of the number of worker threads.
pub fn simulate_run(
    source: &SourceStats,
    spatial: &SpatialSource,
    layout: &DetectorLayout,
    seed: u64,
    engine: Engine,
) -> Result<RunCounts> {
    layout.validate()?;
    if let SpatialSource::Density(d) = spatial {
        let (x0, x1, y0, y1) = d.bounds();
        for det in 0..4 {
            let (lo, hi) = layout.window(det);
            let (a, b) = if layout.branches[det] == Polarization::V { (x0, x1) } else { (y0, y1) };
            if lo < a || hi > b {
                log::warn!("detector D{} at {} mm reaches outside the source density", det + 1, layout.positions_mm[det]);
            }
        }
    }
    match engine {
        Engine::PulseByPulse => Ok(pulse_by_pulse(source, spatial, layout, seed)),
        Engine::Thinned => thinned(source, spatial, layout, seed),
    }
}

fn pulse_by_pulse(source: &SourceStats, spatial: &SpatialSource, layout: &DetectorLayout, seed: u64) -> RunCounts {
    let total = source.pulses();
    let blocks = total.div_ceil(BLOCK_PULSES);
    let v_dets = layout.branch(Polarization::V);
    let h_dets = layout.branch(Polarization::H);
    let eta = source.detector_efficiency;
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let mut counts = RunCounts::empty(layout, source);
            let len = BLOCK_PULSES.min(total - b * BLOCK_PULSES);
            let mut clicks = Vec::new();
            for _ in 0..len {
                let n = source.pairs.sample(&mut rng);
                clicks.clear();
                for pair in 0..n {
                    let (x_v, x_h) = spatial.sample(&mut rng);
                    for (x, dets) in [(x_v, &v_dets), (x_h, &h_dets)] {
                        let det = dets[rng.random_range(0..dets.len())];
                        if layout.accepts(det, x) && rng.random::<f64>() < eta {
                            clicks.push((det, pair));
                        }
                    }
                }
                counts.pulses += 1;
                if !clicks.is_empty() {
                    counts.record(n, &clicks, layout);
                }
            }
            counts
        })
        .reduce(|| RunCounts::empty(layout, source), RunCounts::merge)
}

/// Per-pair outcome probabilities over `(V detector or none, H detector or none)`.
struct Outcomes {
    /// `(v, h, probability)` with `None` for no click; excludes the all-miss outcome.
    categories: Vec<(Option<usize>, Option<usize>, f64)>,
    relevant: f64,
}

fn outcomes(source: &SourceStats, spatial: &SpatialSource, layout: &DetectorLayout) -> Outcomes {
    let v_dets = layout.branch(Polarization::V);
    let h_dets = layout.branch(Polarization::H);
    let eta = source.detector_efficiency;
    let (nv, nh) = (v_dets.len() as f64, h_dets.len() as f64);
    let everywhere = (f64::NEG_INFINITY, f64::INFINITY);
    let mut categories = Vec::new();
    let mut joint = vec![vec![0.0; h_dets.len()]; v_dets.len()];
    for (a, &v) in v_dets.iter().enumerate() {
        for (b, &h) in h_dets.iter().enumerate() {
            joint[a][b] = eta * eta / (nv * nh) * spatial.mass(layout.window(v), layout.window(h));
            categories.push((Some(v), Some(h), joint[a][b]));
        }
    }
    for (a, &v) in v_dets.iter().enumerate() {
        let single = eta / nv * spatial.mass(layout.window(v), everywhere);
        categories.push((Some(v), None, (single - joint[a].iter().sum::<f64>()).max(0.0)));
    }
    for (b, &h) in h_dets.iter().enumerate() {
        let single = eta / nh * spatial.mass(everywhere, layout.window(h));
        categories.push((None, Some(h), (single - joint.iter().map(|r| r[b]).sum::<f64>()).max(0.0)));
    }
    categories.retain(|c| c.2 > 0.0);
    let relevant = categories.iter().map(|c| c.2).sum();
    Outcomes { categories, relevant }
}

fn ln_choose(n: u32, k: u32) -> f64 {
    use statrs::function::factorial::ln_factorial;
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

/// Inverse-CDF draw from unnormalized weights.
fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("valid binomial").sample(rng)
    }
}

/// Splits `n` trials over `weights` (summing to at most 1 of the remaining
/// mass) by sequential binomials.
fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    let mut out = Vec::with_capacity(probs.len());
    for p in probs {
        let k = if mass > 0.0 { binomial(left, (p / mass).min(1.0), rng) } else { 0 };
        out.push(k);
        left -= k;
        mass -= p;
    }
    out
}

fn thinned(source: &SourceStats, spatial: &SpatialSource, layout: &DetectorLayout, seed: u64) -> Result<RunCounts> {
    let pulses = source.pulses();
    let mut counts = RunCounts::empty(layout, source);
    counts.pulses = pulses;
    let out = outcomes(source, spatial, layout);
    let r = out.relevant;
    let n_max = source.pairs.support_max();
    if pulses == 0 || r <= 0.0 {
        return Ok(counts);
    }
    if r > 1.0 + 1e-12 {
        return Err(Error::Numerical(format!("per-pair click probability {r} exceeds 1")));
    }
    let r = r.min(1.0);
    // P(k relevant pairs in a pulse) and P(n | k).
    let ln_r = r.ln();
    let ln_q = (-r).ln_1p();
    let mut joint = vec![vec![0.0; n_max as usize + 1]; n_max as usize + 1];
    let mut pk = vec![0.0; n_max as usize + 1];
    for n in 0..=n_max {
        let pn = source.pairs.pmf(n);
        if pn == 0.0 {
            continue;
        }
        for k in 0..=n {
            let lq = if n > k { (n - k) as f64 * ln_q } else { 0.0 };
            let lr = if k > 0 { k as f64 * ln_r } else { 0.0 };
            let w = pn * (ln_choose(n, k) + lr + lq).exp();
            joint[k as usize][n as usize] = w;
            pk[k as usize] += w;
        }
    }
    let mut rng = block_rng(seed, 0);
    let per_k = multinomial(pulses, &pk, &mut rng);
    let weights: Vec<f64> = out.categories.iter().map(|c| c.2).collect();

    // Pulses with one relevant pair: aggregate over outcome categories.
    if per_k.len() > 1 && per_k[1] > 0 {
        let per_cat = multinomial(per_k[1], &weights.iter().map(|w| w / r).collect::<Vec<_>>(), &mut rng);
        for ((v, h, _), c) in out.categories.iter().zip(per_cat) {
            if let Some(v) = v {
                counts.singles[*v] += c;
            }
            if let Some(h) = h {
                counts.singles[*h] += c;
            }
            if let (Some(v), Some(h)) = (v, h) {
                counts.coincidences[pair_index(*v, *h)] += c;
            }
        }
    }
    // Pulses with several relevant pairs: drawn one by one.
    let mut clicks = Vec::new();
    for (k, &m) in per_k.iter().enumerate().skip(2) {
        for _ in 0..m {
            let n = draw(&joint[k], &mut rng) as u32;
            clicks.clear();
            for pair in 0..k as u32 {
                let (v, h, _) = out.categories[draw(&weights, &mut rng)];
                if let Some(v) = v {
                    clicks.push((v, pair));
                }
                if let Some(h) = h {
                    clicks.push((h, pair));
                }
            }
            counts.record(n, &clicks, layout);
        }
    }
    Ok(counts)
}
