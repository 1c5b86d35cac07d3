//! Fluidized homogeneous heating system: forcing, granular temperature,
//! source/sink decomposition, the derived diffusion coefficient, and
//! calibration of (sigma_xi, c1) against temperature time series.

use serde::Serialize;

use crate::dist::CoefficientDistribution;
use crate::error::{Error, Result};
use crate::models::{one_minus_exp_neg, FhhsModel};
use crate::numeric::{bisect, linear_regression};
use crate::pdf::{CurveMeta, Grid1d, PdfCurve};
use crate::rng::{streams, Stream};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Forcing amplitude
/// (1/tau_p) (1 - e^{-c1 t/tau_p})^{c2-1} [1 + (c1 c2 - 1) e^{-c1 t/tau_p}].
///
/// Bounded at t = 0 for c2 >= 1 (it vanishes for c2 > 1 and equals c1/tau_p
/// at c2 = 1); for c2 < 1 it would diverge, which model validation rules
/// out.
pub(crate) fn forcing_value(tau_p: f64, c1: f64, c2: f64, t: f64) -> f64 {
    let e = (-c1 * t / tau_p).exp();
    let w = one_minus_exp_neg(c1 * t / tau_p);
    w.powf(c2 - 1.0) * (1.0 + (c1 * c2 - 1.0) * e) / tau_p
}

impl FhhsModel {
    /// Forcing amplitude at time t >= 0.
    pub fn forcing(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("forcing needs t >= 0, got {t}")));
        }
        Ok(forcing_value(self.tau_p, self.c1, self.c2, t))
    }

    /// Growth factor eta(t) = (1 - e^{-c1 t/tau_p})^{c2} of the velocity
    /// fluctuation amplitude; rises monotonically from 0 to 1.
    pub fn growth_factor(&self, t: f64) -> f64 {
        one_minus_exp_neg(self.c1 * t / self.tau_p).powf(self.c2)
    }

    /// Velocity fluctuation variance sigma_U^2(t) = sigma_xi^2 eta(t)^2.
    pub fn velocity_variance(&self, t: f64) -> f64 {
        let eta = self.growth_factor(t);
        self.sigma_xi * self.sigma_xi * eta * eta
    }

    /// Granular temperature T(t) = sigma_U^2(t) / 3.
    pub fn granular_temperature(&self, t: f64) -> f64 {
        self.velocity_variance(t) / 3.0
    }

    /// Steady-state temperature sigma_xi^2 / 3.
    pub fn steady_temperature(&self) -> f64 {
        self.sigma_xi * self.sigma_xi / 3.0
    }

    /// Mean velocity decay of an ensemble released with mean u0.
    pub fn mean_velocity(&self, u0: f64, t: f64) -> f64 {
        u0 * (-t / self.tau_p).exp()
    }

    /// Inverts the monotone T(t) by bisection (T strictly below the steady
    /// value; the steady value itself maps to infinity).
    pub fn time_at_temperature(&self, temperature: f64) -> Result<f64> {
        let steady = self.steady_temperature();
        if temperature < 0.0 || temperature > steady {
            return Err(Error::OutOfRange(format!(
                "temperature {temperature} outside [0, {steady}]"
            )));
        }
        if temperature == 0.0 {
            return Ok(0.0);
        }
        let target = (3.0 * temperature).sqrt() / self.sigma_xi;
        if target >= 1.0 - 1e-14 {
            return Ok(f64::INFINITY);
        }
        let mut hi = self.tau_p / self.c1;
        while self.growth_factor(hi) < target {
            hi *= 2.0;
        }
        // Zero tolerance: bisection runs until the bracket collapses to
        // adjacent floats, well past the 1e-12 the callers need.
        bisect(&|t| self.growth_factor(t) - target, 0.0, hi, 0.0)
    }

    /// Production and dissipation of granular temperature,
    /// S = (2/sqrt 3) sigma_xi phi(t(T)) sqrt(T) and Gamma = 2T/tau_p, so
    /// that dT/dt = S - Gamma. Both vanish at T = 0.
    pub fn source_sink(&self, temperature: f64) -> Result<(f64, f64)> {
        let t = self.time_at_temperature(temperature)?;
        let phi = if t.is_finite() {
            forcing_value(self.tau_p, self.c1, self.c2, t)
        } else {
            1.0 / self.tau_p
        };
        let source = 2.0 / SQRT_3 * self.sigma_xi * phi * temperature.sqrt();
        let sink = 2.0 * temperature / self.tau_p;
        Ok((source, sink))
    }

    /// Velocity marginal density at time t > 0:
    /// f_U(u) = f_c(u / eta(t)) / eta(t) with f_c the physical coefficient
    /// law. Its standard deviation must match the model's sigma_xi, which
    /// ties the marginal's variance to the granular temperature.
    pub fn pdf(&self, dist: &CoefficientDistribution, u: f64, t: f64) -> Result<f64> {
        let scale = self.pdf_scale(dist, t)?;
        Ok(dist.density(u / scale) / scale)
    }

    fn pdf_scale(&self, dist: &CoefficientDistribution, t: f64) -> Result<f64> {
        if dist.mean().abs() > 1e-9 * self.sigma_xi
            || (dist.std() - self.sigma_xi).abs() > 1e-9 * self.sigma_xi
        {
            return Err(Error::InvalidParameter(format!(
                "the coefficient law must have mean 0 and standard deviation sigma_xi = {}, got ({}, {})",
                self.sigma_xi,
                dist.mean(),
                dist.std()
            )));
        }
        if t <= 0.0 {
            return Err(Error::Domain(
                "velocity density at t = 0 is a point mass at u = 0".into(),
            ));
        }
        Ok(self.growth_factor(t))
    }

    /// Velocity marginal sampled on a grid.
    pub fn pdf_curve(
        &self,
        dist: &CoefficientDistribution,
        t: f64,
        grid: Grid1d,
    ) -> Result<PdfCurve> {
        let scale = self.pdf_scale(dist, t)?;
        let meta = CurveMeta {
            model: "fhhs".into(),
            time: t,
            provenance: "analytic".into(),
            ..Default::default()
        };
        Ok(PdfCurve::from_fn(
            grid,
            |u| dist.density(u / scale) / scale,
            meta,
        ))
    }

    /// Grid spanning the support of the velocity marginal at time t.
    pub fn default_grid(&self, dist: &CoefficientDistribution, t: f64, n: usize) -> Result<Grid1d> {
        let scale = self.pdf_scale(dist, t)?;
        let (lo, hi) = dist.quadrature_support();
        Grid1d::new(lo * scale, hi * scale, n)
    }

    /// Diffusion coefficient of the equivalent Wiener-driven model as a
    /// function of time: D(t) = eta(t) phi(t) sigma_xi^2.
    pub fn diffusion_of_time(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("diffusion needs t >= 0, got {t}")));
        }
        Ok(self.growth_factor(t)
            * forcing_value(self.tau_p, self.c1, self.c2, t)
            * self.sigma_xi.powi(2))
    }

    /// The same coefficient expressed through the granular temperature:
    /// D = (3/tau_p) [ (1 - c1 c2) T
    ///     + c1 c2 sigma_xi^{1/c2} 3^{-1/(2 c2)} T^{1 - 1/(2 c2)} ].
    pub fn diffusion_of_temperature(&self, temperature: f64) -> Result<f64> {
        let steady = self.steady_temperature();
        if temperature < 0.0 || temperature > steady * (1.0 + 1e-12) {
            return Err(Error::OutOfRange(format!(
                "temperature {temperature} outside [0, {steady}]"
            )));
        }
        let c12 = self.c1 * self.c2;
        let corr = c12
            * self.sigma_xi.powf(1.0 / self.c2)
            * 3.0_f64.powf(-0.5 / self.c2)
            * temperature.powf(1.0 - 0.5 / self.c2);
        Ok(3.0 / self.tau_p * ((1.0 - c12) * temperature + corr))
    }

    /// The general solution of the compatibility condition carries an extra
    /// velocity-dependent term with free constant `k`; it is singular at
    /// u = 0 and is exposed for inspection only, never used by the solvers.
    pub fn diffusion_with_offset(&self, u: f64, t: f64, k: f64) -> Result<f64> {
        let base = self.diffusion_of_time(t)?;
        if k == 0.0 {
            return Ok(base);
        }
        if u == 0.0 {
            return Err(Error::Domain(
                "offset diffusion term is singular at u = 0".into(),
            ));
        }
        let eta = self.growth_factor(t);
        let s2 = self.sigma_xi * self.sigma_xi * eta * eta;
        Ok(base + k / u * (u * u / (2.0 * s2)).exp())
    }
}

/// Thermal Reynolds number scale * sqrt(T); `scale` bundles the fluid
/// density, particle diameter and fluid viscosity prefactor.
pub fn thermal_reynolds(temperature: f64, scale: f64) -> Result<f64> {
    if temperature < 0.0 || scale <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "thermal reynolds needs T >= 0 and scale > 0, got ({temperature}, {scale})"
        )));
    }
    Ok(scale * temperature.sqrt())
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// Settings for fitting a temperature series.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub tau_p: f64,
    /// Late-time exponent; fixed unless `refine_c2` is set.
    pub c2: f64,
    pub refine_c2: bool,
}

impl FitOptions {
    pub fn new(tau_p: f64) -> Self {
        FitOptions {
            tau_p,
            c2: 1.2,
            refine_c2: false,
        }
    }
}

/// Calibrated parameters for one dataset.
#[derive(Debug, Clone, Serialize)]
pub struct SingleFit {
    pub sigma_xi: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReEntry {
    pub re_m: f64,
    pub sigma_xi: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    pub rms: f64,
}

/// Full calibration report. For multi-Reynolds fits the top-level values
/// are those of the first dataset and `loglog` carries the power-law
/// regressions of sigma_xi and c1 against the mean Reynolds number.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub sigma_xi: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub rms: f64,
    pub loglog: Option<LogLogReport>,
    pub per_re_m: Vec<ReEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogLogReport {
    pub sigma: LogLogFit,
    pub c1: LogLogFit,
}

/// Two-stage fit of (sigma_xi, c1) to a monotone-plateauing T(t) series:
/// sigma_xi from the plateau level, c1 from the log-linearised rising
/// branch, then a damped Gauss-Newton refinement of both (and of c2 when
/// requested).
pub fn fit_temperature_series(data: &[(f64, f64)], opts: &FitOptions) -> Result<SingleFit> {
    if data.len() < 10 {
        return Err(Error::FitDegenerate(format!(
            "need at least 10 samples, got {}",
            data.len()
        )));
    }
    if opts.tau_p <= 0.0 || opts.c2 < 1.0 {
        return Err(Error::InvalidParameter(
            "fit needs tau_p > 0 and c2 >= 1".into(),
        ));
    }
    if data
        .iter()
        .any(|&(t, temp)| !t.is_finite() || !temp.is_finite() || temp < 0.0)
    {
        return Err(Error::FitDegenerate(
            "non-finite or negative samples".into(),
        ));
    }

    // Stage 1: plateau level from the tail.
    let tail_len = (data.len() / 4).max(5);
    let tail = &data[data.len() - tail_len..];
    let t_ss: f64 = tail.iter().map(|&(_, temp)| temp).sum::<f64>() / tail_len as f64;
    if t_ss <= 0.0 {
        return Err(Error::FitDegenerate("plateau level is not positive".into()));
    }
    let (ts_tail, temps_tail): (Vec<f64>, Vec<f64>) = tail.iter().copied().unzip();
    let (tail_slope, _, _) = linear_regression(&ts_tail, &temps_tail);
    let tail_span = ts_tail[ts_tail.len() - 1] - ts_tail[0];
    if (tail_slope * tail_span).abs() > 0.05 * t_ss {
        return Err(Error::FitDegenerate(
            "series does not plateau over its final quarter".into(),
        ));
    }
    let sigma0 = (3.0 * t_ss).sqrt();

    // Stage 2: c1 from log(1 - (T/T_ss)^{1/(2 c2)}) = -c1 t / tau_p on the
    // rising branch.
    let mut num = 0.0;
    let mut den = 0.0;
    for &(t, temp) in data {
        if t <= 0.0 || temp <= 0.0 {
            continue;
        }
        let ratio = (temp / t_ss).powf(0.5 / opts.c2);
        if !(1e-12..=1.0 - 1e-9).contains(&ratio) {
            continue;
        }
        if temp > 0.95 * t_ss {
            continue;
        }
        let y = (1.0 - ratio).ln();
        num += y * t;
        den += t * t;
    }
    if den == 0.0 {
        return Err(Error::FitDegenerate(
            "no usable samples on the rising branch".into(),
        ));
    }
    let c1_0 = -opts.tau_p * num / den;
    if !(c1_0.is_finite() && c1_0 > 0.0) {
        return Err(Error::FitDegenerate(format!(
            "rising-branch regression gave c1 = {c1_0}"
        )));
    }

    // Stage 3: damped Gauss-Newton on the full series.
    let mut p = [sigma0, c1_0, opts.c2];
    let n_free = if opts.refine_c2 { 3 } else { 2 };
    let mut sse = sse_of(data, opts.tau_p, &p);
    let mut lambda = 1e-6;
    for _ in 0..80 {
        let (jtj, jtr) = normal_equations(data, opts.tau_p, &p, n_free);
        let mut improved = false;
        for _ in 0..14 {
            let mut a = jtj;
            for (d, row) in a.iter_mut().enumerate().take(n_free) {
                row[d] += lambda * jtj[d][d].max(1e-30);
            }
            let Some(step) = solve_small(a, jtr, n_free) else {
                lambda *= 10.0;
                continue;
            };
            let mut cand = p;
            for d in 0..n_free {
                cand[d] -= step[d];
            }
            if cand[0] <= 0.0 || cand[1] <= 0.0 || cand[2] < 1.0 {
                lambda *= 10.0;
                continue;
            }
            let cand_sse = sse_of(data, opts.tau_p, &cand);
            if cand_sse <= sse {
                let rel_step = (0..n_free)
                    .map(|d| (step[d] / p[d].abs().max(1e-30)).abs())
                    .fold(0.0_f64, f64::max);
                p = cand;
                let gain = sse - cand_sse;
                sse = cand_sse;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel_step < 1e-12 || gain < 1e-18 * sse.max(1e-30) {
                    return Ok(finish(data, opts, &p, sse));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(finish(data, opts, &p, sse))
}

fn finish(data: &[(f64, f64)], opts: &FitOptions, p: &[f64; 3], sse: f64) -> SingleFit {
    SingleFit {
        sigma_xi: p[0],
        c1: p[1],
        c2: if opts.refine_c2 { p[2] } else { opts.c2 },
        rms: (sse / data.len() as f64).sqrt(),
    }
}

fn model_temperature(tau_p: f64, p: &[f64; 3], t: f64) -> f64 {
    let eta = one_minus_exp_neg(p[1] * t / tau_p).powf(p[2]);
    p[0] * p[0] * eta * eta / 3.0
}

fn sse_of(data: &[(f64, f64)], tau_p: f64, p: &[f64; 3]) -> f64 {
    data.iter()
        .map(|&(t, temp)| {
            let r = model_temperature(tau_p, p, t) - temp;
            r * r
        })
        .sum()
}

fn normal_equations(
    data: &[(f64, f64)],
    tau_p: f64,
    p: &[f64; 3],
    n_free: usize,
) -> ([[f64; 3]; 3], [f64; 3]) {
    let mut jtj = [[0.0; 3]; 3];
    let mut jtr = [0.0; 3];
    for &(t, temp) in data {
        let x = p[1] * t / tau_p;
        let w = one_minus_exp_neg(x);
        let eta = w.powf(p[2]);
        let model = p[0] * p[0] * eta * eta / 3.0;
        let r = model - temp;
        let mut j = [0.0; 3];
        j[0] = 2.0 * p[0] * eta * eta / 3.0;
        let deta_dc1 = if w > 0.0 {
            p[2] * w.powf(p[2] - 1.0) * (t / tau_p) * (-x).exp()
        } else {
            0.0
        };
        j[1] = 2.0 * p[0] * p[0] * eta * deta_dc1 / 3.0;
        if n_free == 3 {
            let deta_dc2 = if w > 0.0 { eta * w.ln() } else { 0.0 };
            j[2] = 2.0 * p[0] * p[0] * eta * deta_dc2 / 3.0;
        }
        for a in 0..n_free {
            jtr[a] += j[a] * r;
            for b in 0..n_free {
                jtj[a][b] += j[a] * j[b];
            }
        }
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting for the (at most 3x3) normal
/// equations; returns None when the system is singular.
fn solve_small(mut a: [[f64; 3]; 3], mut b: [f64; 3], n: usize) -> Option<[f64; 3]> {
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            #[allow(clippy::needless_range_loop)]
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Fits each (re_m, series) dataset independently, then regresses
/// ln(sigma_xi) and ln(c1) against ln(re_m).
pub fn fit_across_reynolds(
    datasets: &[(f64, Vec<(f64, f64)>)],
    opts: &FitOptions,
) -> Result<FitReport> {
    if datasets.is_empty() {
        return Err(Error::FitDegenerate("no datasets".into()));
    }
    let mut entries = Vec::with_capacity(datasets.len());
    for (re_m, series) in datasets {
        let fit = fit_temperature_series(series, opts)?;
        entries.push(ReEntry {
            re_m: *re_m,
            sigma_xi: fit.sigma_xi,
            c1: fit.c1,
            rms: fit.rms,
        });
    }
    let loglog = if entries.len() >= 2 {
        let lx: Vec<f64> = entries.iter().map(|e| e.re_m.ln()).collect();
        let ls: Vec<f64> = entries.iter().map(|e| e.sigma_xi.ln()).collect();
        let lc: Vec<f64> = entries.iter().map(|e| e.c1.ln()).collect();
        let (s_slope, s_int, s_r2) = linear_regression(&lx, &ls);
        let (c_slope, c_int, c_r2) = linear_regression(&lx, &lc);
        Some(LogLogReport {
            sigma: LogLogFit {
                slope: s_slope,
                intercept: s_int,
                r2: s_r2,
            },
            c1: LogLogFit {
                slope: c_slope,
                intercept: c_int,
                r2: c_r2,
            },
        })
    } else {
        None
    };
    let first = &entries[0];
    Ok(FitReport {
        sigma_xi: first.sigma_xi,
        c1: first.c1,
        c2: opts.c2,
        rms: first.rms,
        loglog,
        per_re_m: entries,
    })
}

/// Synthetic T(t) series from a model, with optional multiplicative
/// Gaussian noise of relative amplitude `noise`.
pub fn synthetic_temperature_series(
    model: &FhhsModel,
    times: &[f64],
    noise: f64,
    seed: u64,
) -> Vec<(f64, f64)> {
    let stream = Stream::new(seed, streams::SYNTHETIC_NOISE);
    times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let clean = model.granular_temperature(t);
            let factor = if noise > 0.0 {
                (1.0 + noise * stream.normal(k as u64)).max(0.0)
            } else {
                1.0
            };
            (t, clean * factor)
        })
        .collect()
}
