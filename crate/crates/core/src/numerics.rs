//! Small numerical kernels: sinc, Simpson weights, dense linear algebra and
//! a bounded Levenberg-Marquardt solver.

/// Unnormalized sinc, sin(x)/x.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Composite Simpson weights for `n` equally spaced samples with spacing `h`.
/// `n` must be odd and at least 3.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "Simpson's rule needs an odd sample count >= 3");
    (0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect()
}

/// Integrates samples of `f` on `[a, b]` with `n` (odd) Simpson nodes.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (n - 1) as f64;
    simpson_weights(n, h)
        .iter()
        .enumerate()
        .map(|(i, w)| w * f(a + i as f64 * h))
        .sum()
}

/// Solves the dense system `m x = b` (row-major, `n × n`) by Gaussian
/// elimination with partial pivoting. Returns `None` when singular.
pub fn solve(m: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut a = m.to_vec();
    let mut x = b.to_vec();
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return None;
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        if a[piv * n + col].abs() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                x[row] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= a[col * n + k] * x[k];
        }
        x[col] = s / a[col * n + col];
    }
    Some(x)
}

/// Inverse of a dense `n × n` matrix, or `None` when singular.
pub fn invert(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve(m, &e)?;
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Some(inv)
}

/// Outcome of [`levenberg_marquardt`].
#[derive(Debug, Clone)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub ssr: f64,
    /// `JᵀJ` at `params`, row-major.
    pub jtj: Vec<f64>,
    pub n_residuals: usize,
    pub iterations: usize,
}

/// Bounded Levenberg-Marquardt. `model` returns residuals and the row-major
/// Jacobian (`n_residuals × n_params`). Steps are projected onto the box.
pub fn levenberg_marquardt<F>(
    p0: &[f64],
    lower: &[f64],
    upper: &[f64],
    max_iter: usize,
    model: F,
) -> LmSolution
where
    F: Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
{
    let m = p0.len();
    let clamp = |p: &mut [f64]| {
        for i in 0..m {
            p[i] = p[i].clamp(lower[i], upper[i]);
        }
    };
    let normal = |r: &[f64], j: &[f64]| {
        let mut jtj = vec![0.0; m * m];
        let mut jtr = vec![0.0; m];
        for (k, rk) in r.iter().enumerate() {
            let row = &j[k * m..(k + 1) * m];
            for a in 0..m {
                jtr[a] += row[a] * rk;
                for b in 0..m {
                    jtj[a * m + b] += row[a] * row[b];
                }
            }
        }
        (jtj, jtr)
    };
    let ssr_of = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut p = p0.to_vec();
    clamp(&mut p);
    let (mut r, mut j) = model(&p);
    let mut ssr = ssr_of(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (jtj, jtr) = normal(&r, &j);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[i * m + i] += lambda * jtj[i * m + i].max(1e-300) + 1e-300;
            }
            let neg: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(step) = solve(&a, &neg) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            clamp(&mut trial);
            let (rt, jt) = model(&trial);
            let st = ssr_of(&rt);
            if st.is_finite() && st <= ssr {
                let moved = trial
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b).abs() / (1e-12 + b.abs()))
                    .fold(0.0, f64::max);
                let gain = ssr - st;
                p = trial;
                r = rt;
                j = jt;
                ssr = st;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                if moved < 1e-13 || gain <= 1e-15 * ssr.max(1e-300) {
                    let (jtj, _) = normal(&r, &j);
                    return LmSolution { params: p, ssr, jtj, n_residuals: r.len(), iterations };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let (jtj, _) = normal(&r, &j);
    LmSolution { params: p, ssr, jtj, n_residuals: r.len(), iterations }
}

/// Linear interpolation on a uniform grid starting at `x0` with step `dx`.
#[derive(Debug, Clone)]
pub struct UniformTable<T> {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<T>,
}

impl<T> UniformTable<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    /// Interpolated value, or `None` outside the tabulated range.
    pub fn eval(&self, x: f64) -> Option<T> {
        let t = (x - self.x0) / self.dx;
        if !(t >= 0.0) || t > (self.values.len() - 1) as f64 {
            return None;
        }
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let f = t - i as f64;
        Some(self.values[i] * (1.0 - f) + self.values[i + 1] * f)
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.dx * (self.values.len() - 1) as f64
    }
}
