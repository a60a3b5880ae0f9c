//! Optics checked against independent quadrature, closed forms and root
//! finding implemented here rather than in the library.

use approx::assert_relative_eq;
use num_complex::Complex64;
use slitpairs::config::ExperimentConfig;
use slitpairs::optics::*;
use slitpairs::Error;
use std::f64::consts::PI;

fn bundled(c: LensConfiguration) -> OpticalConfig {
    ExperimentConfig::bundled(c).optics()
}

/// Composite Simpson rule, written out independently of the library.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn pump_spectrum_matches_quadrature_of_the_gaussian_beam() {
    let cfg = bundled(LensConfiguration::CrystalImage);
    let b = Biphoton::new(&cfg).unwrap();
    let w = cfg.pump_waist;
    // Field exp(-((x1 + x2) / (2 w))^2) as a function of X = x1 + x2; the
    // conjugate phase of q1 + q2 is q X / 2.
    let spectrum = |q: f64| {
        let f = |x: f64| (-(x / (2.0 * w)).powi(2)).exp() * (q * x / 2.0).cos();
        simpson(f, -40.0 * w, 40.0 * w, 20_000) / simpson(|x| (-(x / (2.0 * w)).powi(2)).exp(), -40.0 * w, 40.0 * w, 20_000)
    };
    for q in [0.0, 0.5 / w, 1.0 / w, 2.0 / w, 3.0 / w] {
        let v = b.pump_angular_spectrum(q);
        assert!(v.im.abs() < 1e-15);
        assert_relative_eq!(v.re, spectrum(q), epsilon = 1e-9);
        assert_relative_eq!(v.re, b.pump_angular_spectrum(-q).re, epsilon = 1e-15);
    }
    assert_relative_eq!(b.pump_angular_spectrum(1.0 / w).re, (-0.25f64).exp(), epsilon = 1e-12);
}

#[test]
fn first_phase_matching_zero_matches_bisection() {
    for c in [LensConfiguration::CrystalImage, LensConfiguration::CrystalFarField] {
        let cfg = bundled(c);
        let b = Biphoton::new(&cfg).unwrap();
        let n_eff = 2.0 * cfg.n1 * cfg.n2 / (cfg.n1 + cfg.n2);
        let omega_over_c = 2.0 * PI / cfg.spdc_wavelength;
        let g = |q: f64| cfg.crystal_length * q * q / (8.0 * n_eff * omega_over_c) - PI;
        let (mut lo, mut hi) = (1.0, 1e7);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let q0 = 0.5 * (lo + hi);
        assert_relative_eq!(phase_matching_first_zero(&cfg), q0, max_relative = 1e-10);
        assert!(b.phase_matching(q0).abs() < 1e-9);
        assert!(b.phase_matching(0.99 * q0) > 0.0 && b.phase_matching(1.01 * q0) < 0.0);
        assert_relative_eq!(b.phase_matching(0.0), 1.0);
    }
}

#[test]
fn momentum_amplitude_factorizes_on_the_diagonals() {
    let b = Biphoton::new(&bundled(LensConfiguration::CrystalImage)).unwrap();
    for q in [1e3, 1e4, 3e4, 1e5] {
        assert_relative_eq!(b.momentum_amplitude(q, q).re, b.pump_angular_spectrum(2.0 * q).re, epsilon = 1e-15);
        assert_relative_eq!(b.momentum_amplitude(q, -q).re, b.phase_matching(2.0 * q), epsilon = 1e-15);
        assert_eq!(b.momentum_amplitude(q, 0.3 * q), b.momentum_amplitude(0.3 * q, q));
    }
}

/// Position-space transform of `sinc(b q²)` normalized at the origin, from
/// its second derivative (a Fresnel-type integral) integrated twice.
fn phase_matching_kernel(v: f64, b: f64) -> f64 {
    let nu = v.abs() / (2.0 * b.sqrt());
    1.0 - 2.0 * 2f64.sqrt() * simpson(|s| (nu - s) * (PI / 4.0 - s * s).sin(), 0.0, nu, 4000)
}

#[test]
fn crystal_image_antidiagonal_matches_closed_form_kernel() {
    let cfg = bundled(LensConfiguration::CrystalImage);
    let model = SlitPlaneModel::new(&cfg, 2.0 * cfg.slit_half_separation).unwrap();
    let b = cfg.phase_matching_coefficient();
    let m = cfg.magnification();
    let a0 = model.eval(0.0, 0.0);
    for k in 0..=30 {
        let xi = k as f64 * 5e-6;
        // x1 = xi / M, x2 = -xi / M: centroid 0, half difference xi / M.
        let ratio = model.eval(xi, -xi) / a0;
        assert!(ratio.im.abs() < 1e-6, "imaginary part {} at {xi}", ratio.im);
        let expected = phase_matching_kernel(xi / m, b);
        assert!((ratio.re - expected).abs() < 2e-3, "xi = {xi:e}: model {} vs closed form {expected}", ratio.re);
    }
}

#[test]
fn far_field_amplitude_is_the_scaled_momentum_amplitude() {
    let cfg = bundled(LensConfiguration::CrystalFarField);
    let model = SlitPlaneModel::new(&cfg, 2.0 * cfg.slit_half_separation).unwrap();
    let (k, f, w, b) = (2.0 * PI / cfg.spdc_wavelength, cfg.f_spherical, cfg.pump_waist, cfg.phase_matching_coefficient());
    let a0 = model.eval(0.0, 0.0);
    for xi in [10e-6, 50e-6, 120e-6, 200e-6] {
        let q = 2.0 * k * xi / f;
        let diag = (model.eval(xi, xi) / a0).re;
        let anti = (model.eval(xi, -xi) / a0).re;
        assert_relative_eq!(diag, (-q * q * w * w / 4.0).exp(), max_relative = 1e-9);
        let x = b * q * q;
        assert_relative_eq!(anti, x.sin() / x, max_relative = 1e-9);
    }
}

#[test]
fn origin_is_the_global_maximum_on_the_sampled_grid() {
    for c in [LensConfiguration::CrystalImage, LensConfiguration::CrystalFarField] {
        let a = slit_plane_amplitude(&bundled(c)).unwrap();
        let mid = a.grid.n / 2;
        assert_relative_eq!(a.get(mid, mid).norm(), 1.0, epsilon = 1e-12);
        let max = a.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(max <= 1.0 + 1e-12, "{}: max {max}", c.name());
    }
}

#[test]
fn amplitude_is_exchange_and_parity_symmetric() {
    for c in [LensConfiguration::CrystalImage, LensConfiguration::CrystalFarField] {
        let a = slit_plane_amplitude(&bundled(c)).unwrap();
        let n = a.grid.n;
        for i in (0..n).step_by(7) {
            for j in (0..n).step_by(5) {
                let v = a.get(i, j);
                let tol = 1e-9 * v.norm().max(1e-12);
                assert!((v - a.get(j, i)).norm() <= tol.max(1e-15), "exchange at ({i}, {j})");
                assert!((v - a.get(n - 1 - i, n - 1 - j)).norm() <= tol.max(1e-15), "parity at ({i}, {j})");
            }
        }
    }
}

#[test]
fn doubling_the_grid_moves_the_angles_by_less_than_half_a_degree() {
    for c in [LensConfiguration::CrystalImage, LensConfiguration::CrystalFarField] {
        let cfg = bundled(c);
        let d = cfg.slit_half_separation;
        let base = SlitGrid::default_for(&cfg);
        let fine = SlitGrid { extent: base.extent, n: 2 * base.n - 1 };
        let e1 = engineering_parameter(&slit_plane_amplitude_on(&cfg, base).unwrap(), d).unwrap();
        let e2 = engineering_parameter(&slit_plane_amplitude_on(&cfg, fine).unwrap(), d).unwrap();
        assert!((e1.alpha_deg - e2.alpha_deg).abs() < 0.5, "{}: {e1:?} vs {e2:?}", c.name());
        assert!((e1.phi_deg - e2.phi_deg).abs() < 0.5, "{}: {e1:?} vs {e2:?}", c.name());
    }
}

#[test]
fn engineering_parameter_ignores_global_scale_and_phase() {
    let cfg = bundled(LensConfiguration::CrystalImage);
    let a = slit_plane_amplitude(&cfg).unwrap();
    let d = cfg.slit_half_separation;
    let e = engineering_parameter(&a, d).unwrap();
    for s in [Complex64::new(3.7, 0.0), Complex64::from_polar(0.01, 1.3), Complex64::new(-2.0, 5.0)] {
        let e2 = engineering_parameter(&a.scaled(s), d).unwrap();
        assert_relative_eq!(e.alpha_deg, e2.alpha_deg, epsilon = 1e-9);
        assert_relative_eq!(e.phi_deg, e2.phi_deg, epsilon = 1e-9);
    }
}

#[test]
fn engineering_parameter_of_hand_built_amplitudes() {
    let grid = SlitGrid { extent: 1.0, n: 5 };
    let make = |dd: Complex64, da: Complex64| {
        let mut values = vec![Complex64::new(1.0, 0.0); 25];
        // d = 0.5 sits on nodes 1 and 3.
        values[3 * 5 + 3] = dd;
        values[3 * 5 + 1] = da;
        BiphotonAmplitude { grid, values }
    };
    let one = Complex64::new(1.0, 0.0);
    let e = engineering_parameter(&make(one, one), 0.5).unwrap();
    assert_relative_eq!(e.alpha_deg, 90.0, epsilon = 1e-12);
    assert_relative_eq!(e.phi_deg, 0.0, epsilon = 1e-12);
    let e = engineering_parameter(&make(-one, one), 0.5).unwrap();
    assert_relative_eq!(e.alpha_deg, 90.0, epsilon = 1e-12);
    assert_relative_eq!(e.phi_deg, 180.0, epsilon = 1e-12);
    match engineering_parameter(&make(one, Complex64::new(0.0, 0.0)), 0.5) {
        Err(Error::DegenerateRatio { alpha_deg, .. }) => assert_eq!(alpha_deg, 180.0),
        other => panic!("expected a degenerate ratio, got {other:?}"),
    }
}

/// The amplitude over the apertures in the far field: the phase-matching
/// factor is flat there, while the pump factor alone sets the spread to
/// `1 − |p|` between the (d, d) and (d, −d) corners.
#[test]
fn far_field_amplitude_over_the_apertures() {
    let cfg = bundled(LensConfiguration::CrystalFarField);
    let b = Biphoton::new(&cfg).unwrap();
    let model = SlitPlaneModel::new(&cfg, 2.0 * cfg.slit_half_separation).unwrap();
    let (d, a) = (cfg.slit_half_separation, cfg.slit_half_width);
    let k_over_f = 2.0 * PI / cfg.spdc_wavelength / cfg.f_spherical;
    let centers = [-d, d];
    let n = 41;
    let mut pm = (f64::INFINITY, f64::NEG_INFINITY);
    let mut amp = (f64::INFINITY, f64::NEG_INFINITY);
    for &c1 in &centers {
        for &c2 in &centers {
            for i in 0..n {
                for j in 0..n {
                    let x1 = c1 - a + 2.0 * a * i as f64 / (n - 1) as f64;
                    let x2 = c2 - a + 2.0 * a * j as f64 / (n - 1) as f64;
                    let f = b.phase_matching(k_over_f * (x1 - x2));
                    pm = (pm.0.min(f), pm.1.max(f));
                    let v = model.eval(x1, x2).norm();
                    amp = (amp.0.min(v), amp.1.max(v));
                }
            }
        }
    }
    assert!((pm.1 - pm.0) / pm.1 < 0.05, "phase-matching spread {:?}", pm);
    let p = engineering_parameter(&slit_plane_amplitude(&cfg).unwrap(), d).unwrap().p.norm();
    assert!((amp.1 - amp.0) / amp.1 >= 1.0 - p - 1e-9, "amplitude spread {:?} vs 1 - |p| = {}", amp, 1.0 - p);
}

#[test]
fn coarse_grids_are_rejected() {
    let cfg = bundled(LensConfiguration::CrystalImage);
    let coarse = SlitGrid { extent: 8.0 * cfg.slit_half_separation, n: 9 };
    assert!(matches!(slit_plane_amplitude_on(&cfg, coarse), Err(Error::Resolution(_))));
}
