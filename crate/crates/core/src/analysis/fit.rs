//! Least-squares estimation of `(α, φ)` from a coincidence map.
//!
//! The overall scale is profiled out analytically, which makes the
//! objective independent of the map normalization. A 1° grid search over
//! `[0°, 180°]²` is followed by a bounded Levenberg-Marquardt refinement
//! of the best candidates.

use crate::error::{Error, Result};
use crate::map::{CoincidenceMap, Envelope};
use crate::numerics::{invert, levenberg_marquardt, sinc};
use crate::state::{concurrence_from_s, purity_from_s, Branch};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMethod {
    /// Residual-scaled inverse curvature of the objective.
    Curvature,
    /// Spread over fits of Poisson-resampled count maps.
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub uncertainty: UncertaintyMethod,
    pub bootstrap_resamples: usize,
    pub seed: u64,
    /// Half width (mm) of the detector apertures the counts were integrated
    /// over; fringe terms are averaged across it. `None` for point samples.
    pub aperture_half_width_mm: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { uncertainty: UncertaintyMethod::Curvature, bootstrap_resamples: 200, seed: 0, aperture_half_width_mm: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    /// Both angles determined (different-branch maps).
    Identified,
    /// Only `s = sin α cos φ` is determined (same-branch maps); the angles
    /// are reported as `α = 90°`, `φ = acos s`.
    ConcurrenceOnly,
    /// The map carries no structure to fit.
    Unidentifiable,
}

impl FitStatus {
    pub fn name(self) -> &'static str {
        match self {
            FitStatus::Identified => "identified",
            FitStatus::ConcurrenceOnly => "concurrence_only",
            FitStatus::Unidentifiable => "unidentifiable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub status: FitStatus,
    pub alpha_deg: f64,
    pub alpha_sigma: f64,
    pub phi_deg: f64,
    pub phi_sigma: f64,
    pub concurrence: f64,
    pub concurrence_sigma: f64,
    pub purity: f64,
    pub purity_sigma: f64,
    /// Square root of the weighted residual sum of squares.
    pub residual_norm: f64,
    /// Fitted map scale.
    pub scale: f64,
    pub branch_used: Branch,
    pub n_points: usize,
    pub uncertainty: UncertaintyMethod,
}

impl FitResult {
    /// Flat `key = value` report.
    pub fn report(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn csv_header() -> String {
        Self::empty_fields().join(",")
    }

    pub fn csv_row(&self) -> String {
        self.fields().into_iter().map(|(_, v)| v).collect::<Vec<_>>().join(",")
    }

    fn empty_fields() -> Vec<&'static str> {
        vec![
            "status",
            "branch",
            "alpha_deg",
            "alpha_sigma_deg",
            "phi_deg",
            "phi_sigma_deg",
            "concurrence",
            "concurrence_sigma",
            "purity",
            "purity_sigma",
            "residual_norm",
            "scale",
            "n_points",
            "uncertainty",
        ]
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let vals = vec![
            self.status.name().to_string(),
            self.branch_used.name().to_string(),
            self.alpha_deg.to_string(),
            self.alpha_sigma.to_string(),
            self.phi_deg.to_string(),
            self.phi_sigma.to_string(),
            self.concurrence.to_string(),
            self.concurrence_sigma.to_string(),
            self.purity.to_string(),
            self.purity_sigma.to_string(),
            self.residual_norm.to_string(),
            self.scale.to_string(),
            self.n_points.to_string(),
            match self.uncertainty {
                UncertaintyMethod::Curvature => "curvature".to_string(),
                UncertaintyMethod::Bootstrap => "bootstrap".to_string(),
            },
        ];
        Self::empty_fields().into_iter().zip(vals).collect()
    }
}

/// Per-point basis functions: the map model is linear in them.
struct Basis {
    /// DBC: `[E, E cos β(x1−x2), E (cos βx1 + cos βx2), E cos β(x1+x2)]`;
    /// SBC: `[E, E cos βx1, E cos βx2, E cos βx1 cos βx2]`.
    f: Vec<[f64; 4]>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Basis {
    fn new(map: &CoincidenceMap, beta: f64, env: Option<Envelope>, aperture: Option<f64>) -> Self {
        // Averaging cos(βu) over u ∈ [x − h, x + h] multiplies it by sinc(βh).
        let d = aperture.map_or(1.0, |h| sinc(beta * h));
        let mut f = Vec::new();
        let mut y = Vec::new();
        let mut w = Vec::new();
        for (i, &x1) in map.x1_mm.iter().enumerate() {
            for (j, &x2) in map.x2_mm.iter().enumerate() {
                let e = env.map_or(1.0, |e| e.at(x1, x2));
                let (c1, c2) = ((beta * x1).cos(), (beta * x2).cos());
                f.push(match map.branch {
                    Branch::Dbc => [
                        e,
                        e * d * d * (beta * (x1 - x2)).cos(),
                        e * d * (c1 + c2),
                        e * d * d * (beta * (x1 + x2)).cos(),
                    ],
                    Branch::Sbc => [e, e * d * c1, e * d * c2, e * d * d * c1 * c2],
                });
                let v = map.get(i, j);
                y.push(v);
                w.push(if map.normalized { 1.0 } else { 1.0 / v.abs().max(1.0) });
            }
        }
        Basis { f, y, w }
    }

    fn with_values(&self, y: Vec<f64>) -> Self {
        let w = y.iter().map(|v| 1.0 / v.abs().max(1.0)).collect();
        Basis { f: self.f.clone(), y, w }
    }

    /// Model coefficients for the basis, and their derivatives with respect
    /// to the two parameters (radians, or `s` for SBC).
    fn coefficients(branch: Branch, p: &[f64]) -> ([f64; 4], [f64; 4], [f64; 4]) {
        match branch {
            Branch::Dbc => {
                let (a, ph) = (p[0].to_radians(), p[1].to_radians());
                let sa = a.sin();
                let x = sa * ph.cos();
                (
                    [1.0, (0.5 * a).cos().powi(2), x, (0.5 * a).sin().powi(2)],
                    [0.0, -0.5 * sa, a.cos() * ph.cos(), 0.5 * sa],
                    [0.0, 0.0, -sa * ph.sin(), 0.0],
                )
            }
            Branch::Sbc => {
                let s = p[0];
                ([1.0, s, s, s * s], [0.0, 1.0, 1.0, 2.0 * s], [0.0; 4])
            }
        }
    }

    /// Profiled objective: minimum over the scale `k ≥ 0`.
    fn profiled(&self, c: &[f64; 4]) -> (f64, f64) {
        let (mut syy, mut smy, mut smm) = (0.0, 0.0, 0.0);
        for ((f, y), w) in self.f.iter().zip(&self.y).zip(&self.w) {
            let m = f[0] * c[0] + f[1] * c[1] + f[2] * c[2] + f[3] * c[3];
            syy += w * y * y;
            smy += w * m * y;
            smm += w * m * m;
        }
        if smm <= 0.0 || smy <= 0.0 {
            return (syy, 0.0);
        }
        (syy - smy * smy / smm, smy / smm)
    }
}

struct Solution {
    params: Vec<f64>,
    scale: f64,
    ssr: f64,
    jtj: Vec<f64>,
}

fn refine(basis: &Basis, branch: Branch, start: &[f64]) -> Solution {
    let np = if branch == Branch::Dbc { 2 } else { 1 };
    let c0 = Basis::coefficients(branch, start).0;
    let k0 = basis.profiled(&c0).1.max(1e-300);
    let mut p0 = start[..np].to_vec();
    p0.push(k0);
    let (mut lo, mut hi) = if branch == Branch::Dbc {
        (vec![0.0, 0.0], vec![180.0, 180.0])
    } else {
        (vec![-1.0], vec![1.0])
    };
    lo.push(0.0);
    hi.push(f64::INFINITY);
    let to_rad = if branch == Branch::Dbc { std::f64::consts::PI / 180.0 } else { 1.0 };
    let sol = levenberg_marquardt(&p0, &lo, &hi, 500, |p| {
        let (c, da, dp) = Basis::coefficients(branch, p);
        let k = p[np];
        let np1 = np + 1;
        let mut r = Vec::with_capacity(basis.y.len());
        let mut j = Vec::with_capacity(basis.y.len() * np1);
        for ((f, y), w) in basis.f.iter().zip(&basis.y).zip(&basis.w) {
            let sw = w.sqrt();
            let dot = |c: &[f64; 4]| f[0] * c[0] + f[1] * c[1] + f[2] * c[2] + f[3] * c[3];
            let m = dot(&c);
            r.push(sw * (k * m - y));
            j.push(sw * k * dot(&da) * to_rad);
            if np == 2 {
                j.push(sw * k * dot(&dp) * to_rad);
            }
            j.push(sw * m);
        }
        (r, j)
    });
    Solution { scale: sol.params[np], params: sol.params[..np].to_vec(), ssr: sol.ssr, jtj: sol.jtj }
}

fn grid_candidates(basis: &Basis, branch: Branch, step: f64, keep: usize) -> Vec<Vec<f64>> {
    let pts: Vec<Vec<f64>> = match branch {
        Branch::Dbc => {
            let n = (180.0 / step).round() as usize;
            (0..=n).flat_map(|i| (0..=n).map(move |j| vec![i as f64 * step, j as f64 * step])).collect()
        }
        Branch::Sbc => {
            let n = (2.0 / (step / 180.0)).round() as usize;
            (0..=n).map(|i| vec![-1.0 + 2.0 * i as f64 / n as f64]).collect()
        }
    };
    let mut scored: Vec<(f64, Vec<f64>)> = pts
        .into_par_iter()
        .map(|p| (basis.profiled(&Basis::coefficients(branch, &p).0).0, p))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    scored.into_iter().take(keep).map(|(_, p)| p).collect()
}

fn best_fit(basis: &Basis, branch: Branch, grid_step: f64) -> Solution {
    grid_candidates(basis, branch, grid_step, 6)
        .into_iter()
        .map(|start| refine(basis, branch, &start))
        .min_by(|a, b| a.ssr.total_cmp(&b.ssr))
        .expect("at least one candidate")
}

fn is_flat(map: &CoincidenceMap) -> bool {
    let (max, min) = (map.max(), map.min());
    (max - min).abs() <= 1e-9 * max.abs().max(min.abs()) || !(max.is_finite() && min.is_finite())
}

/// Inverse of `JᵀJ` restricted to the parameters with non-vanishing
/// curvature; the others get infinite variance and no covariance. A fit
/// pinned at `φ = 0` or `180°` has no curvature in `φ` but a usable `α`.
fn reduced_inverse(jtj: &[f64], n: usize) -> Option<Vec<f64>> {
    let dmax = (0..n).map(|i| jtj[i * n + i]).fold(0.0, f64::max);
    let free: Vec<usize> = (0..n).filter(|&i| jtj[i * n + i] > 1e-14 * dmax).collect();
    let m = free.len();
    let sub: Vec<f64> = free.iter().flat_map(|&i| free.iter().map(move |&j| jtj[i * n + j])).collect();
    let inv = invert(&sub, m)?;
    if !inv.iter().all(|v| v.is_finite()) {
        return None;
    }
    let mut full = vec![0.0; n * n];
    for i in 0..n {
        full[i * n + i] = f64::INFINITY;
    }
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            full[i * n + j] = inv[a * m + b];
        }
    }
    Some(full)
}

/// `(C, P, dC/ds, dP/ds)` at `s`.
fn measures(s: f64) -> (f64, f64, f64, f64) {
    let c = concurrence_from_s(s);
    let dc = if c > 0.0 { -s / c } else { f64::INFINITY };
    (c, purity_from_s(s), dc, (1.0 + s * s) * s)
}

/// Fits the model of the map's branch (with `envelope`, if any) to `map`.
/// `beta_per_mm` must match the position units of the map.
pub fn fit_state(
    map: &CoincidenceMap,
    beta_per_mm: f64,
    envelope: Option<Envelope>,
    options: &FitOptions,
) -> Result<FitResult> {
    if !(beta_per_mm.is_finite() && beta_per_mm > 0.0) {
        return Err(Error::Config(format!("beta must be positive, got {beta_per_mm}")));
    }
    if map.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("map contains non-finite values".into()));
    }
    let branch = map.branch;
    let n_points = map.values.len();
    let np = if branch == Branch::Dbc { 2 } else { 1 };
    if is_flat(map) {
        return Ok(FitResult {
            status: FitStatus::Unidentifiable,
            alpha_deg: f64::NAN,
            alpha_sigma: f64::INFINITY,
            phi_deg: f64::NAN,
            phi_sigma: f64::INFINITY,
            concurrence: f64::NAN,
            concurrence_sigma: f64::INFINITY,
            purity: f64::NAN,
            purity_sigma: f64::INFINITY,
            residual_norm: 0.0,
            scale: map.max(),
            branch_used: branch,
            n_points,
            uncertainty: options.uncertainty,
        });
    }
    if n_points <= np + 1 {
        return Err(Error::Shape(format!("{n_points} points cannot constrain {} parameters", np + 1)));
    }
    let basis = Basis::new(map, beta_per_mm, envelope, options.aperture_half_width_mm);
    let sol = best_fit(&basis, branch, 1.0);

    // Parameters in degrees (DBC) or s (SBC), then the measures.
    let s_of = |p: &[f64]| match branch {
        Branch::Dbc => p[0].to_radians().sin() * p[1].to_radians().cos(),
        Branch::Sbc => p[0],
    };
    let s = s_of(&sol.params);
    let (c, pur, dc, dp) = measures(s);

    let mut method = options.uncertainty;
    if method == UncertaintyMethod::Bootstrap && map.normalized {
        log::warn!("bootstrap needs raw counts; using the curvature estimate for a normalized map");
        method = UncertaintyMethod::Curvature;
    }
    let (sig_p, sig_c, sig_pur) = match method {
        UncertaintyMethod::Curvature => {
            let dof = (n_points - np - 1) as f64;
            let s2 = sol.ssr / dof;
            match reduced_inverse(&sol.jtj, np + 1) {
                Some(inv) => {
                    let var = |i: usize| (s2 * inv[i * (np + 1) + i]).max(0.0);
                    let sig_p: Vec<f64> = (0..np).map(|i| var(i).sqrt()).collect();
                    // ds/dparam (per degree for DBC)
                    let g: Vec<f64> = match branch {
                        Branch::Dbc => {
                            let (a, ph) = (sol.params[0].to_radians(), sol.params[1].to_radians());
                            let k = std::f64::consts::PI / 180.0;
                            vec![a.cos() * ph.cos() * k, -a.sin() * ph.sin() * k]
                        }
                        Branch::Sbc => vec![1.0],
                    };
                    let mut vs = 0.0;
                    for i in 0..np {
                        for j in 0..np {
                            if g[i].abs() > 1e-12 && g[j].abs() > 1e-12 {
                                vs += g[i] * g[j] * s2 * inv[i * (np + 1) + j];
                            }
                        }
                    }
                    let ss = vs.max(0.0).sqrt();
                    let sc = if dc.is_finite() { dc.abs() * ss } else { (2.0 * ss).sqrt() };
                    (sig_p, sc, dp.abs() * ss)
                }
                _ => (vec![f64::INFINITY; np], f64::INFINITY, f64::INFINITY),
            }
        }
        UncertaintyMethod::Bootstrap => {
            let b = options.bootstrap_resamples.max(2);
            let fits: Vec<Vec<f64>> = (0..b)
                .into_par_iter()
                .map(|k| {
                    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                    rng.set_stream(k as u64);
                    let y: Vec<f64> = basis
                        .y
                        .iter()
                        .map(|v| if *v > 0.0 { Poisson::new(*v).unwrap().sample(&mut rng) } else { 0.0 })
                        .collect();
                    let bb = basis.with_values(y);
                    let st = refine(&bb, branch, &sol.params);
                    let alt = best_fit(&bb, branch, 2.0);
                    let best = if alt.ssr < st.ssr { alt } else { st };
                    let (cb, pb, _, _) = measures(s_of(&best.params));
                    let mut out = best.params.clone();
                    out.push(cb);
                    out.push(pb);
                    out
                })
                .collect();
            let sd = |i: usize| {
                let m = fits.iter().map(|f| f[i]).sum::<f64>() / b as f64;
                (fits.iter().map(|f| (f[i] - m).powi(2)).sum::<f64>() / (b - 1) as f64).sqrt()
            };
            ((0..np).map(sd).collect(), sd(np), sd(np + 1))
        }
    };

    let residual_norm = sol.ssr.max(0.0).sqrt();
    let result = match branch {
        Branch::Dbc => FitResult {
            status: FitStatus::Identified,
            alpha_deg: sol.params[0],
            alpha_sigma: sig_p[0],
            phi_deg: sol.params[1],
            phi_sigma: sig_p[1],
            concurrence: c,
            concurrence_sigma: sig_c,
            purity: pur,
            purity_sigma: sig_pur,
            residual_norm,
            scale: sol.scale,
            branch_used: branch,
            n_points,
            uncertainty: method,
        },
        Branch::Sbc => {
            let phi = s.clamp(-1.0, 1.0).acos();
            let sin_phi = phi.sin();
            FitResult {
                status: FitStatus::ConcurrenceOnly,
                alpha_deg: 90.0,
                alpha_sigma: f64::INFINITY,
                phi_deg: phi.to_degrees(),
                phi_sigma: if sin_phi > 0.0 { (sig_p[0] / sin_phi).to_degrees() } else { f64::INFINITY },
                concurrence: c,
                concurrence_sigma: sig_c,
                purity: pur,
                purity_sigma: sig_pur,
                residual_norm,
                scale: sol.scale,
                branch_used: branch,
                n_points,
                uncertainty: method,
            }
        }
    };
    Ok(result)
}
