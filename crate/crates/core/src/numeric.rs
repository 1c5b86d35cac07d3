//! Shared numerical building blocks: deterministic summation, quadrature,
//! a fixed-step RK4 driver with a graded start for forcings that are
//! singular at the initial time, a tridiagonal solver, and small statistics
//! helpers.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Deterministic reductions
// ---------------------------------------------------------------------------

/// Pairwise summation: accurate and independent of thread count because it
/// is always applied to an ordered slice with a fixed recursion structure.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n if n <= 32 => xs.iter().sum(),
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Pairwise sum of `f(x)` over the slice without materialising the mapped
/// values.
pub fn pairwise_map_sum(xs: &[f64], f: &impl Fn(f64) -> f64) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => f(xs[0]),
        n if n <= 32 => xs.iter().map(|&x| f(x)).sum(),
        n => {
            let mid = n / 2;
            pairwise_map_sum(&xs[..mid], f) + pairwise_map_sum(&xs[mid..], f)
        }
    }
}

pub fn sample_mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    assert!(n > 1);
    let mean = sample_mean(xs);
    pairwise_map_sum(xs, &|x| (x - mean) * (x - mean)) / (n - 1) as f64
}

/// k-th sample central moment (population normalisation).
pub fn sample_central_moment(xs: &[f64], order: u32) -> f64 {
    let mean = sample_mean(xs);
    pairwise_map_sum(xs, &|x| (x - mean).powi(order as i32)) / xs.len() as f64
}

/// Standardised sample skewness m3 / m2^{3/2}.
pub fn sample_skewness(xs: &[f64]) -> f64 {
    let m2 = sample_central_moment(xs, 2);
    let m3 = sample_central_moment(xs, 3);
    m3 / m2.powf(1.5)
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Gauss-Legendre rule on [-1, 1]; nodes found by Newton iteration on the
/// Legendre recurrence.
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Composite rule over equal panels; use when the integrand has length
    /// scales shorter than the interval.
    pub fn integrate_panels(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            sum += self.integrate(&f, lo, lo + h);
        }
        sum
    }
}

/// Legendre P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Adaptive Simpson quadrature with relative tolerance.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    let scale = whole.abs().max(1e-12);
    recurse(f, a, b, fa, fm, fb, whole, rel_tol * scale, 48)
}

// ---------------------------------------------------------------------------
// ODE integration
// ---------------------------------------------------------------------------

/// Step policy for the fixed-step RK4 driver.
///
/// The step is `min(dt, ramp * t)`, so integrations that start near a
/// forcing singularity at t = 0 take geometrically growing steps until the
/// nominal `dt` is reached. For starts at exactly t = 0 the first step is
/// `dt * ramp^2`.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub dt: f64,
    pub ramp: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            dt: 1e-3,
            ramp: 0.05,
        }
    }
}

impl StepControl {
    pub fn with_dt(dt: f64) -> Self {
        StepControl {
            dt,
            ..Default::default()
        }
    }

    /// Smallest step the ramp is allowed to take for an integration that
    /// starts (or ends, going backward) at `t_origin`: proportional to the
    /// origin when it is positive, a small fixed kick when it is zero.
    #[inline]
    pub(crate) fn step_floor(&self, t_origin: f64) -> f64 {
        if t_origin > 0.0 {
            self.ramp * t_origin
        } else {
            self.dt * self.ramp * self.ramp
        }
    }

    #[inline]
    pub(crate) fn step_at(&self, t: f64, floor: f64) -> f64 {
        self.dt.min((self.ramp * t).max(floor))
    }
}

/// Classical RK4 from `t0` to `t_end` (last step shortened to land exactly).
pub fn rk4_integrate<const N: usize>(
    rhs: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    ctrl: StepControl,
) -> Result<[f64; N]> {
    assert!(t_end >= t0, "rk4_integrate requires t_end >= t0");
    let floor = ctrl.step_floor(t0);
    let mut t = t0;
    let mut y = y0;
    while t < t_end {
        let h = ctrl.step_at(t, floor).min(t_end - t);
        y = rk4_step(rhs, t, &y, h);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowup { t });
        }
        t += h;
        if h < 1e-300 {
            return Err(Error::NumericalBlowup { t });
        }
    }
    Ok(y)
}

/// RK4 that records the state at each of the strictly increasing `times`
/// (all >= t0), hitting each sample time exactly.
pub fn rk4_sample<const N: usize>(
    rhs: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    times: &[f64],
    ctrl: StepControl,
) -> Result<Vec<[f64; N]>> {
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0;
    for &target in times {
        assert!(target >= t - 1e-15, "sample times must be non-decreasing");
        y = rk4_integrate(rhs, t, y, target.max(t), ctrl)?;
        t = target.max(t);
        out.push(y);
    }
    Ok(out)
}

#[inline]
fn rk4_step<const N: usize>(
    rhs: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = rhs(t, y);
    let mut y2 = *y;
    for i in 0..N {
        y2[i] += 0.5 * h * k1[i];
    }
    let k2 = rhs(t + 0.5 * h, &y2);
    let mut y3 = *y;
    for i in 0..N {
        y3[i] += 0.5 * h * k2[i];
    }
    let k3 = rhs(t + 0.5 * h, &y3);
    let mut y4 = *y;
    for i in 0..N {
        y4[i] += h * k3[i];
    }
    let k4 = rhs(t + h, &y4);
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

/// Thomas algorithm for tridiagonal systems; `sub` and `sup` have length
/// n-1. Reusable scratch avoids per-step allocation in time loops.
pub struct TridiagSolver {
    cp: Vec<f64>,
    dp: Vec<f64>,
}

impl TridiagSolver {
    pub fn new(n: usize) -> Self {
        TridiagSolver {
            cp: vec![0.0; n],
            dp: vec![0.0; n],
        }
    }

    pub fn solve(&mut self, sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], out: &mut [f64]) {
        let n = diag.len();
        assert!(sub.len() == n - 1 && sup.len() == n - 1 && rhs.len() == n && out.len() == n);
        self.cp[0] = sup[0] / diag[0];
        self.dp[0] = rhs[0] / diag[0];
        for i in 1..n {
            let m = diag[i] - sub[i - 1] * self.cp[i - 1];
            self.cp[i] = if i < n - 1 { sup[i] / m } else { 0.0 };
            self.dp[i] = (rhs[i] - sub[i - 1] * self.dp[i - 1]) / m;
        }
        out[n - 1] = self.dp[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = self.dp[i] - self.cp[i] * out[i + 1];
        }
    }
}

// ---------------------------------------------------------------------------
// Regression and root finding
// ---------------------------------------------------------------------------

/// Ordinary least squares y = slope * x + intercept, with R^2.
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Bisection for f(x) = 0 on [lo, hi] with f(lo) and f(hi) of opposite sign
/// (or zero). Converges to absolute tolerance on x.
pub fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::OutOfRange(format!(
            "bisection bracket [{lo}, {hi}] does not straddle a root"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < tol {
            return Ok(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// n values spaced evenly on [lo, hi], endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * h).collect()
}

/// n values spaced evenly in log between lo and hi (both > 0).
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    linspace(a, b, n).into_iter().map(f64::exp).collect()
}
