//! Monte Carlo detection checked against exact enumeration, analytic
//! expectations and goodness-of-fit tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slitpairs::config::ExperimentConfig;
use slitpairs::detection::*;
use slitpairs::map::{Envelope, MapModel};
use slitpairs::optics::LensConfiguration;
use slitpairs::state::{Branch, SlitQubitState};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const R: f64 = 76e6;

fn source(family: PairFamily, mean: f64, eta: f64, pulses: f64) -> SourceStats {
    SourceStats::new(PairDistribution::new(family, mean, 1.0, None).unwrap(), eta, R, pulses / R, 1e-9).unwrap()
}

fn all_at_origin() -> DetectorLayout {
    DetectorLayout::standard([0.0; 4], 0.1)
}

const ORIGIN: SpatialSource = SpatialSource::Fixed { x_v: 0.0, x_h: 0.0 };

#[test]
fn sampled_positions_follow_the_entangled_density() {
    let optics = ExperimentConfig::bundled(LensConfiguration::CrystalImage).optics();
    let env = Envelope { a_plus: 1.15, a_minus: 0.76 };
    let model = MapModel::from_optics(SlitQubitState::new(176.0, 170.0).unwrap(), &optics, Some(env));
    let density = JointDensity::from_fn(-1.05, -1.05, 0.01, 0.01, 210, 210, |x, y| model.value(Branch::Dbc, x, y)).unwrap();

    let (nb, bin, n) = (21usize, 0.1, 1_000_000usize);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut hist = vec![0u64; nb * nb];
    for _ in 0..n {
        let (x, y) = sample_pair_positions(&density, &mut rng);
        let i = (((x + 1.05) / bin) as usize).min(nb - 1);
        let j = (((y + 1.05) / bin) as usize).min(nb - 1);
        hist[i * nb + j] += 1;
    }
    // Expected bin contents from the analytic density, integrated here on a
    // 20 x 20 midpoint rule per bin.
    let sub = 20;
    let mut expected = vec![0.0; nb * nb];
    for i in 0..nb {
        for j in 0..nb {
            let mut s = 0.0;
            for a in 0..sub {
                for b in 0..sub {
                    let x = -1.05 + i as f64 * bin + (a as f64 + 0.5) * bin / sub as f64;
                    let y = -1.05 + j as f64 * bin + (b as f64 + 0.5) * bin / sub as f64;
                    s += model.value(Branch::Dbc, x, y);
                }
            }
            expected[i * nb + j] = s;
        }
    }
    let total: f64 = expected.iter().sum();
    let chi2: f64 = hist
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| {
            let e = e / total * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let p = 1.0 - ChiSquared::new((nb * nb - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 = {chi2:.1}, p = {p:.4}");
}

#[test]
fn uniform_density_gives_a_flat_histogram() {
    let density = JointDensity::uniform(-1.0, -1.0, 2.0, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut hist = [0u64; 16];
    let n = 160_000;
    for _ in 0..n {
        let (x, y) = density.sample(&mut rng);
        hist[(((x + 1.0) * 2.0) as usize).min(3) * 4 + (((y + 1.0) * 2.0) as usize).min(3)] += 1;
    }
    let e = n as f64 / 16.0;
    let chi2: f64 = hist.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    assert!(1.0 - ChiSquared::new(15.0).unwrap().cdf(chi2) > 0.01, "chi2 = {chi2}");
}

#[test]
fn seeded_sampling_is_reproducible() {
    let density = JointDensity::uniform(0.0, 0.0, 1.0, 3.0).unwrap();
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..1000).map(|_| density.sample(&mut rng)).collect::<Vec<_>>()
    };
    assert_eq!(draw(9), draw(9));
    assert_ne!(draw(9), draw(10));
}

/// With unit efficiency and one pair per pulse the two beam splitters give
/// four equally likely outcomes: (D1 or D2) x (D3 or D4).
#[test]
fn beam_splitter_enumeration_with_unit_efficiency() {
    for engine in [Engine::PulseByPulse, Engine::Thinned] {
        let src = source(PairFamily::SinglePair, 1.0, 1.0, 1e6);
        let run = simulate_run(&src, &ORIGIN, &all_at_origin(), 3, engine).unwrap();
        let n = run.pulses as f64;
        assert_eq!(run.pulses, 1_000_000);
        assert_eq!(run.coincidence(0, 1), 0);
        assert_eq!(run.coincidence(2, 3), 0);
        let cross = run.coincidence(0, 2) + run.coincidence(0, 3) + run.coincidence(1, 2) + run.coincidence(1, 3);
        assert_eq!(cross, run.pulses);
        // D1 D3 and D2 D4 are the same detector pairing with x1 and x2 exchanged.
        let dbc = (run.coincidence(0, 2) + run.coincidence(1, 3)) as f64 / n;
        let sigma = (0.25 / n).sqrt();
        assert!((dbc - 0.5).abs() < 5.0 * sigma, "{engine:?}: DBC fraction {dbc}");
        assert_eq!(run.singles[0] + run.singles[1], run.pulses);
        assert_eq!(run.fourfolds, 0);
    }
}

#[test]
fn vacuum_pulses_produce_no_counts() {
    let src = SourceStats::new(PairDistribution::new(PairFamily::Poisson, 1e-300, 1.0, Some(0)).unwrap(), 1.0, R, 1e5 / R, 1e-9)
        .unwrap();
    let run = simulate_run(&src, &ORIGIN, &all_at_origin(), 1, Engine::PulseByPulse).unwrap();
    assert_eq!(run.pulses, 100_000);
    assert_eq!(run.singles, [0; 4]);
    assert_eq!(run.coincidences, [0; 6]);
}

/// Exact tallies for Poisson pairs with every photon inside the pinholes:
/// `n` photons per branch, each reaching a given detector with probability
/// `η/2`.
fn expected_rates(mean: f64, eta: f64) -> (f64, f64) {
    let pairs = PairDistribution::new(PairFamily::Poisson, mean, 1.0, None).unwrap();
    let (mut four, mut two) = (0.0, 0.0);
    for n in 0..=pairs.support_max() {
        let miss = (1.0 - eta / 2.0).powi(n as i32);
        let both = 1.0 - 2.0 * miss + (1.0 - eta).powi(n as i32);
        four += pairs.pmf(n) * both * both;
        two += pairs.pmf(n) * (1.0 - miss) * (1.0 - miss);
    }
    (four, two)
}

#[test]
fn fourfold_and_pairwise_rates_follow_the_efficiency_scaling() {
    let (mean, pulses) = (1.0, 1e7);
    let mut observed = Vec::new();
    for (k, eta) in [0.4, 0.2].into_iter().enumerate() {
        let run = simulate_run(&source(PairFamily::Poisson, mean, eta, pulses), &ORIGIN, &all_at_origin(), 40 + k as u64, Engine::Thinned)
            .unwrap();
        let (four, two) = expected_rates(mean, eta);
        let f = run.fourfolds as f64 / pulses;
        let c = run.coincidence(0, 2) as f64 / pulses;
        assert!((f / four - 1.0).abs() < 0.05, "eta {eta}: fourfold {f:e} vs {four:e}");
        assert!((c / two - 1.0).abs() < 0.05, "eta {eta}: D1D3 {c:e} vs {two:e}");
        observed.push((f, c));
    }
    let (four_hi, two_hi) = expected_rates(mean, 0.4);
    let (four_lo, two_lo) = expected_rates(mean, 0.2);
    let four_ratio = observed[0].0 / observed[1].0;
    let two_ratio = observed[0].1 / observed[1].1;
    assert!((four_ratio / (four_hi / four_lo) - 1.0).abs() < 0.05, "fourfold ratio {four_ratio}");
    assert!((two_ratio / (two_hi / two_lo) - 1.0).abs() < 0.05, "pairwise ratio {two_ratio}");
    // In the weak-detection limit the ratios approach 2^4 and 2^2.
    let (f1, _) = expected_rates(mean, 0.02);
    let (f2, _) = expected_rates(mean, 0.01);
    assert!((f1 / f2 / 16.0 - 1.0).abs() < 0.05);
}

#[test]
fn engines_agree_statistically() {
    let optics = ExperimentConfig::bundled(LensConfiguration::CrystalImage).optics();
    let model = MapModel::from_optics(SlitQubitState::new(176.0, 170.0).unwrap(), &optics, Some(Envelope { a_plus: 1.15, a_minus: 0.76 }));
    let spatial = SpatialSource::Density(JointDensity::from_map_model(&model, Branch::Dbc, 4.0, 0.02).unwrap());
    let layout = DetectorLayout::standard(scan_positions(0.3, -0.2), 0.1);
    let src = source(PairFamily::Poisson, 0.8, 0.5, 4e6);
    let a = simulate_run(&src, &spatial, &layout, 1, Engine::PulseByPulse).unwrap();
    let b = simulate_run(&src, &spatial, &layout, 2, Engine::Thinned).unwrap();
    for d in 0..4 {
        let (x, y) = (a.singles[d] as f64, b.singles[d] as f64);
        assert!((x - y).abs() < 5.0 * (x + y).sqrt(), "D{}: {x} vs {y}", d + 1);
    }
    for k in 0..6 {
        let (x, y) = (a.coincidences[k] as f64, b.coincidences[k] as f64);
        assert!((x - y).abs() < 5.0 * (x + y).sqrt().max(1.0), "pair {k}: {x} vs {y}");
    }
}

#[test]
fn same_branch_coincidences_need_two_pairs() {
    let optics = ExperimentConfig::bundled(LensConfiguration::CrystalImage).optics();
    let model = MapModel::from_optics(SlitQubitState::new(176.0, 170.0).unwrap(), &optics, None);
    let spatial = SpatialSource::Density(JointDensity::from_map_model(&model, Branch::Dbc, 2.0, 0.02).unwrap());
    let src = source(PairFamily::Poisson, 1.0, 0.6, 1e6);
    let run = simulate_run(&src, &spatial, &DetectorLayout::standard([0.0, 0.0, 0.0, 0.0], 0.5), 8, Engine::PulseByPulse).unwrap();
    assert!(run.coincidence(0, 1) > 0);
    assert_eq!(run.same_branch_by_pairs.get(1).copied().unwrap_or(0), 0);
    assert_eq!(run.same_branch_by_pairs.first().copied().unwrap_or(0), 0);
    let total: u64 = run.same_branch_by_pairs.iter().sum();
    assert_eq!(total, run.coincidence(0, 1) + run.coincidence(2, 3));
}

#[test]
fn cross_pair_coincidences_match_the_accidental_formula() {
    // Independent photon positions: the two photons of a pair are
    // uncorrelated, so every D1 D3 coincidence is accidental in nature.
    let spatial = SpatialSource::Density(JointDensity::uniform(-2.0, -2.0, 4.0, 4.0).unwrap());
    let src = source(PairFamily::Poisson, 6.0, 0.2, 2e7);
    let run = simulate_run(&src, &spatial, &all_at_origin(), 17, Engine::Thinned).unwrap();
    let acc = accidental_coincidences(run.singles[0] as f64, run.singles[2] as f64, R, src.duration).unwrap();
    let cross = run.cross_pair(0, 2) as f64;
    assert!((cross - acc).abs() < 3.0 * acc.sqrt(), "cross {cross} vs N_acc {acc:.1}");
}

#[test]
fn estimators_recover_the_configured_source() {
    let src = source(PairFamily::SinglePair, 0.49, 0.2, 1e7);
    let run = simulate_run(&src, &ORIGIN, &all_at_origin(), 99, Engine::PulseByPulse).unwrap();
    let gamma = estimate_gamma(&run, 0, 2).unwrap();
    let truth = src.overall_efficiency();
    assert!((gamma.value - truth).abs() < 3.0 * gamma.sigma, "gamma {gamma:?} vs {truth}");
    let p = estimate_pair_number(&run, 0, truth).unwrap();
    assert!((p.value - 0.49).abs() < 3.0 * p.sigma, "p {p:?}");
}

#[test]
fn runs_are_bit_identical_for_a_seed() {
    let spatial = SpatialSource::Density(JointDensity::uniform(-1.0, -1.0, 2.0, 2.0).unwrap());
    let layout = DetectorLayout::standard([0.1, -0.2, 0.3, 0.0], 0.1);
    let src = source(PairFamily::Poisson, 0.5, 0.3, 3e5);
    for engine in [Engine::PulseByPulse, Engine::Thinned] {
        let a = simulate_run(&src, &spatial, &layout, 12, engine).unwrap();
        let b = simulate_run(&src, &spatial, &layout, 12, engine).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn scans_follow_the_two_fixed_two_moving_protocol() {
    let spatial = SpatialSource::Density(JointDensity::uniform(-1.0, -1.0, 2.0, 2.0).unwrap());
    let src = source(PairFamily::Poisson, 0.5, 0.3, 1e4);
    let grid = slitpairs::map::GridSpec::new(3, 0.2).unwrap();
    let scan = simulate_scan(&src, &spatial, &grid, 0.1, 4, Engine::Thinned).unwrap();
    assert_eq!(scan.runs.len(), 9);
    let r = &scan.runs[2 * 3];
    assert_eq!(r.detector_positions_mm, [0.2, -0.2, -0.2, 0.2]);
    let again = simulate_scan(&src, &spatial, &grid, 0.1, 4, Engine::Thinned).unwrap();
    assert_eq!(scan.dbc_map(), again.dbc_map());
}
