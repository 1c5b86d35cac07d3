//! Deterministic characteristics of the random-coefficient models: ODE
//! integration at frozen coefficients, flow-map Jacobians, density
//! transport by the method of transformations, and Monte Carlo marginals
//! over the coefficient law.

use crate::dist::CoefficientDistribution;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::models::Model;
use crate::numeric::{rk4_integrate, GaussLegendre, StepControl};
use crate::pdf::{freedman_diaconis_grid, histogram, CurveMeta, Grid1d, PdfCurve};
use crate::rng::{streams, Stream};

/// State carried along one characteristic: time, phase coordinates (second
/// slot unused for 1-D models), the frozen coefficient values, and the
/// accumulated log of the density amplification factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CharState {
    pub t: f64,
    pub state: [f64; 2],
    pub coeffs: Vec<f64>,
    pub log_density: f64,
}

impl CharState {
    pub fn new(t: f64, state: [f64; 2], coeffs: Vec<f64>) -> Self {
        CharState {
            t,
            state,
            coeffs,
            log_density: 0.0,
        }
    }

    /// The single coefficient of a canonical model.
    pub fn xi(&self) -> f64 {
        self.coeffs[0]
    }
}

/// Which phase coordinate a marginal refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateCoord {
    Position,
    Velocity,
}

impl StateCoord {
    pub fn index(self) -> usize {
        match self {
            StateCoord::Position => 0,
            StateCoord::Velocity => 1,
        }
    }

    pub(crate) fn check(self, model: &Model) -> Result<()> {
        if self.index() >= model.dim() {
            return Err(Error::InvalidParameter(
                "velocity coordinate requested from a one-dimensional model".into(),
            ));
        }
        Ok(())
    }
}

/// Exact characteristic state at time `t >= from.t` for the canonical
/// models (None for generic forcing models). Also the oracle the RK4 path
/// is tested against.
pub fn exact_state(model: &Model, from: &CharState, t: f64) -> Option<CharState> {
    let dt = t - from.t;
    debug_assert!(dt >= 0.0);
    let xi = from.coeffs[0];
    let state = match model {
        Model::Position(m) => {
            let x = from.state[0]
                + m.drift_velocity * dt
                + xi * (m.dispersion_scale(t) - m.dispersion_scale(from.t));
            [x, 0.0]
        }
        Model::Velocity(m) => {
            let w0 = from.state[1] - xi * m.velocity_std(from.t);
            let decay = (-dt).exp();
            let u = w0 * decay + xi * m.velocity_std(t);
            let x = from.state[0]
                + m.tau_p * w0 * (1.0 - decay)
                + xi * (m.position_std(t) - m.position_std(from.t));
            [x, u]
        }
        Model::Fhhs(m) => {
            let w0 = from.state[0] - xi * m.growth_factor(from.t);
            let u = w0 * (-dt / m.tau_p).exp() + xi * m.growth_factor(t);
            [u, 0.0]
        }
        Model::Forcing(_) => return None,
    };
    Some(CharState {
        t,
        state,
        coeffs: from.coeffs.clone(),
        log_density: from.log_density - model.drift_divergence() * dt,
    })
}

/// Characteristic launched from the model's deterministic initial condition
/// at t = 0, advanced exactly to the start time of numerical integration.
/// For the models whose forcing is singular at t = 0 this sidesteps the
/// singular impulse while keeping the state exact.
pub fn seeded_state(model: &Model, coeffs: Vec<f64>, t0: Option<f64>) -> CharState {
    match model {
        Model::Forcing(m) => CharState::new(m.start_time, m.initial_state, coeffs),
        _ => {
            let t0 = t0.unwrap_or_else(|| model.default_start_time());
            let origin = CharState::new(0.0, model.initial_state(), coeffs);
            exact_state(model, &origin, t0).expect("canonical models have closed forms")
        }
    }
}

/// RK4 integration of the characteristic ODE from `init` to `t_end`. The
/// log density factor advances exactly: every registry drift has a
/// state-independent divergence.
pub fn integrate_characteristic(
    model: &Model,
    init: &CharState,
    t_end: f64,
    ctrl: StepControl,
) -> Result<CharState> {
    if t_end < init.t {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} precedes the initial time {}",
            init.t
        )));
    }
    let rhs = |t: f64, y: &[f64; 2]| model.rhs(t, y, &init.coeffs);
    let state = rk4_integrate(&rhs, init.t, init.state, t_end, ctrl)?;
    Ok(CharState {
        t: t_end,
        state,
        coeffs: init.coeffs.clone(),
        log_density: init.log_density - model.drift_divergence() * (t_end - init.t),
    })
}

/// RK4 integration backward in time, used to pull grid points back to the
/// initial density. Steps wind down geometrically as t approaches the
/// (possibly singular) start time.
pub fn integrate_characteristic_backward(
    model: &Model,
    from: &CharState,
    t0: f64,
    ctrl: StepControl,
) -> Result<CharState> {
    if t0 > from.t {
        return Err(Error::InvalidParameter(format!(
            "backward target {t0} is past the state time {}",
            from.t
        )));
    }
    let mut t = from.t;
    let mut y = from.state;
    let floor = ctrl.step_floor(t0);
    while t > t0 {
        let h = ctrl.step_at(t, floor).min(t - t0).max(1e-300);
        // One classical step of size -h.
        let k1 = model.rhs(t, &y, &from.coeffs);
        let half = [y[0] - 0.5 * h * k1[0], y[1] - 0.5 * h * k1[1]];
        let k2 = model.rhs(t - 0.5 * h, &half, &from.coeffs);
        let half = [y[0] - 0.5 * h * k2[0], y[1] - 0.5 * h * k2[1]];
        let k3 = model.rhs(t - 0.5 * h, &half, &from.coeffs);
        let full = [y[0] - h * k3[0], y[1] - h * k3[1]];
        let k4 = model.rhs(t - h, &full, &from.coeffs);
        for i in 0..2 {
            y[i] -= h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::NumericalBlowup { t });
        }
        t -= h;
    }
    Ok(CharState {
        t: t0,
        state: y,
        coeffs: from.coeffs.clone(),
        log_density: from.log_density - model.drift_divergence() * (t0 - from.t),
    })
}

/// How to evaluate the flow-map Jacobian determinant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMethod {
    /// Integrate the tangent (variational) system alongside the
    /// characteristic.
    Variational,
    /// Central differences of perturbed characteristics, h = 1e-6.
    FiniteDifference,
}

/// Determinant of d state(t) / d state(t0) along the flow.
pub fn flow_map_jacobian(
    model: &Model,
    t0: f64,
    t: f64,
    method: JacobianMethod,
    ctrl: StepControl,
) -> Result<f64> {
    if t <= t0 {
        return Err(Error::InvalidParameter(format!(
            "jacobian needs t > t0, got ({t0}, {t})"
        )));
    }
    let dim = model.dim();
    match method {
        JacobianMethod::Variational => {
            // The tangent system M' = A M sees only the drift: every forcing
            // term is a function of time alone.
            let a = drift_jacobian(model);
            let rhs = |_t: f64, m: &[f64; 4]| {
                [
                    a[0][0] * m[0] + a[0][1] * m[2],
                    a[0][0] * m[1] + a[0][1] * m[3],
                    a[1][0] * m[0] + a[1][1] * m[2],
                    a[1][0] * m[1] + a[1][1] * m[3],
                ]
            };
            let m = rk4_integrate(&rhs, t0, [1.0, 0.0, 0.0, 1.0], t, ctrl)?;
            Ok(if dim == 1 {
                m[0]
            } else {
                m[0] * m[3] - m[1] * m[2]
            })
        }
        JacobianMethod::FiniteDifference => {
            let h = 1e-6;
            let base = seeded_state(model, vec![0.0; model.n_coeffs()], Some(t0));
            let mut cols = [[0.0; 2]; 2];
            for (j, col) in cols.iter_mut().enumerate().take(dim) {
                let mut plus = base.clone();
                plus.state[j] += h;
                let mut minus = base.clone();
                minus.state[j] -= h;
                let yp = integrate_characteristic(model, &plus, t, ctrl)?;
                let ym = integrate_characteristic(model, &minus, t, ctrl)?;
                for (i, c) in col.iter_mut().enumerate().take(dim) {
                    *c = (yp.state[i] - ym.state[i]) / (2.0 * h);
                }
            }
            Ok(if dim == 1 {
                cols[0][0]
            } else {
                cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1]
            })
        }
    }
}

fn drift_jacobian(model: &Model) -> [[f64; 2]; 2] {
    use crate::models::DriftFn;
    match model {
        Model::Position(_) => [[0.0, 0.0], [0.0, 0.0]],
        Model::Velocity(m) => [[0.0, m.tau_p], [0.0, -1.0]],
        Model::Fhhs(m) => [[-1.0 / m.tau_p, 0.0], [0.0, 0.0]],
        Model::Forcing(m) => match m.drift {
            DriftFn::Constant { .. } => [[0.0, 0.0], [0.0, 0.0]],
            DriftFn::Relaxation { rate } => [[-rate, 0.0], [0.0, 0.0]],
            DriftFn::VelocityDrag { tau_p } => [[0.0, tau_p], [0.0, -1.0]],
        },
    }
}

/// Initial condition for [`transform_pdf`].
pub enum TransformInit<'a> {
    /// The model's deterministic (point-mass) initial condition at t = 0.
    DeterministicPoint,
    /// A smooth density of the state at the model's start time, independent
    /// of the coefficient. One-dimensional models only.
    Curve(&'a PdfCurve),
}

/// Marginal density at time t by the method of transformations.
///
/// For the point initial condition the joint density is supported on the
/// affine map xi -> state, so the marginal is the exact change of variables
/// through two probe characteristics (a third probe verifies affinity).
/// For a smooth initial curve each grid point is pulled back along the
/// characteristics, the initial density is divided by the flow-map
/// Jacobian, and the coefficient is integrated out by quadrature.
#[allow(clippy::too_many_arguments)]
pub fn transform_pdf(
    model: &Model,
    dist: &CoefficientDistribution,
    init: TransformInit,
    t: f64,
    grid: Grid1d,
    coord: StateCoord,
    ctrl: StepControl,
) -> Result<PdfCurve> {
    coord.check(model)?;
    if model.n_coeffs() != 1 {
        return Err(Error::Unsupported(
            "transform_pdf handles a single random coefficient; use the Monte Carlo marginal for N-term models".into(),
        ));
    }
    let mut curve = match init {
        TransformInit::DeterministicPoint => {
            let probe = |xi: f64| -> Result<f64> {
                let s = seeded_state(model, vec![xi], None);
                Ok(integrate_characteristic(model, &s, t, ctrl)?.state[coord.index()])
            };
            let y0 = probe(0.0)?;
            let y1 = probe(1.0)?;
            let yh = probe(0.5)?;
            let scale = y1 - y0;
            if scale == 0.0 {
                return Err(Error::Domain(
                    "the coefficient does not move this coordinate; the marginal is a point mass"
                        .into(),
                ));
            }
            if (yh - 0.5 * (y0 + y1)).abs() > 1e-7 * scale.abs() {
                return Err(Error::Unsupported(
                    "terminal state is not affine in the coefficient".into(),
                ));
            }
            let meta = CurveMeta {
                model: model_tag(model).into(),
                time: t,
                provenance: "transform".into(),
                ..Default::default()
            };
            PdfCurve::from_fn(grid, |y| dist.density((y - y0) / scale) / scale.abs(), meta)
        }
        TransformInit::Curve(f0) => {
            if model.dim() != 1 {
                return Err(Error::Unsupported(
                    "smooth initial curves are supported for one-dimensional models only".into(),
                ));
            }
            let t0 = model.default_start_time();
            let jac = (model.drift_divergence() * (t - t0)).exp();
            // The drift is linear, so the pull-back is affine in (y, xi):
            // y0 = b + a (y - y_ref) + c xi. Three probes determine it and a
            // fourth checks it.
            let (ra, rb) = (grid.lo, grid.hi);
            let back = |y: f64, xi: f64| -> Result<f64> {
                let s = CharState::new(t, [y, 0.0], vec![xi]);
                Ok(integrate_characteristic_backward(model, &s, t0, ctrl)?.state[0])
            };
            let b00 = back(ra, 0.0)?;
            let b10 = back(rb, 0.0)?;
            let b01 = back(ra, 1.0)?;
            let b11 = back(rb, 1.0)?;
            let a = (b10 - b00) / (rb - ra);
            let c = b01 - b00;
            let check = b00 + a * (rb - ra) + c;
            if (check - b11).abs() > 1e-7 * (b11.abs().max(1.0)) {
                return Err(Error::Unsupported(
                    "pull-back is not affine; the drift registry should make this impossible"
                        .into(),
                ));
            }
            let (qlo, qhi) = dist.quadrature_support();
            let meta = CurveMeta {
                model: model_tag(model).into(),
                time: t,
                provenance: "transform".into(),
                ..Default::default()
            };
            // Integrate over whichever variable leaves the other factor
            // broad: over the coefficient when its image in the initial
            // coordinate is narrower than the initial support (the
            // coefficient law is then resolved exactly and the curve varies
            // slowly across the quadrature window), otherwise over the
            // initial coordinate on the curve's own grid (the curve is then
            // exact and the rescaled coefficient density is wide relative
            // to the tabulation step).
            let f0_width = f0.coords[f0.coords.len() - 1] - f0.coords[0];
            if (c * (qhi - qlo)).abs() <= f0_width {
                let gl = GaussLegendre::new(48);
                PdfCurve::from_fn(
                    grid,
                    |y| {
                        gl.integrate_panels(
                            |xi| interp_density(f0, b00 + a * (y - ra) + c * xi) * dist.density(xi),
                            qlo,
                            qhi,
                            8,
                        ) / jac
                    },
                    meta,
                )
            } else {
                let h0 = f0.spacing();
                PdfCurve::from_fn(
                    grid,
                    |y| {
                        let beta = b00 + a * (y - ra);
                        let vals: Vec<f64> = f0
                            .coords
                            .iter()
                            .zip(&f0.density)
                            .map(|(&v, &d)| d * dist.density((v - beta) / c))
                            .collect();
                        let n = vals.len();
                        h0 * (crate::numeric::pairwise_sum(&vals[1..n - 1])
                            + 0.5 * (vals[0] + vals[n - 1]))
                            / (c.abs() * jac)
                    },
                    meta,
                )
            }
        }
    };
    let mass = curve.mass();
    if mass < 0.999 {
        curve.meta.warnings.push(format!(
            "grid captures only {:.4} of the probability mass",
            mass
        ));
    }
    Ok(curve)
}

fn interp_density(curve: &PdfCurve, x: f64) -> f64 {
    let n = curve.coords.len();
    let (lo, hi) = (curve.coords[0], curve.coords[n - 1]);
    if x < lo || x > hi {
        return 0.0;
    }
    let h = curve.spacing();
    let pos = (x - lo) / h;
    let i = (pos as usize).min(n - 2);
    let w = pos - i as f64;
    curve.density[i] * (1.0 - w) + curve.density[i + 1] * w
}

pub(crate) fn model_tag(model: &Model) -> &'static str {
    match model {
        Model::Position(_) => "position",
        Model::Velocity(_) => "velocity",
        Model::Fhhs(_) => "fhhs",
        Model::Forcing(_) => "forcing",
    }
}

/// Monte Carlo marginal: sample the coefficients, integrate each
/// characteristic from the deterministic initial state, histogram the
/// terminal coordinate. Draw k of term j depends only on (seed, j, k), so
/// the result is independent of worker count.
#[allow(clippy::too_many_arguments)]
pub fn mc_marginal_pdf(
    model: &Model,
    dist: &CoefficientDistribution,
    coord: StateCoord,
    n: usize,
    t: f64,
    seed: u64,
    grid: Option<Grid1d>,
    ctrl: StepControl,
) -> Result<PdfCurve> {
    coord.check(model)?;
    if n < 100 {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo marginal needs n >= 100, got {n}"
        )));
    }
    let samples = mc_terminal_samples(model, dist, coord, n, t, seed, ctrl)?;
    let grid = match grid {
        Some(g) => g,
        None => freedman_diaconis_grid(&samples)?,
    };
    let meta = CurveMeta {
        model: model_tag(model).into(),
        time: t,
        samples: Some(n as u64),
        seed: Some(seed),
        provenance: "mc".into(),
        ..Default::default()
    };
    histogram(&samples, grid, meta)
}

/// Terminal coordinate samples of the Monte Carlo characteristics (the raw
/// material of [`mc_marginal_pdf`], useful for statistics beyond the
/// histogram). Canonical models draw their single coefficient from `dist`;
/// forcing models draw term j from its own law on stream j.
pub fn mc_terminal_samples(
    model: &Model,
    dist: &CoefficientDistribution,
    coord: StateCoord,
    n: usize,
    t: f64,
    seed: u64,
    ctrl: StepControl,
) -> Result<Vec<f64>> {
    coord.check(model)?;
    let term_streams: Vec<Stream> = (0..model.n_coeffs())
        .map(|j| {
            if j == 0 {
                Stream::new(seed, streams::COEFFICIENT)
            } else {
                Stream::new(seed, streams::COEFFICIENT_TERM + j as u64)
            }
        })
        .collect();
    let results: Vec<Result<f64>> = map_indexed(ExecMode::Auto, n, |k| {
        let coeffs: Vec<f64> = match model {
            Model::Forcing(m) => m
                .terms
                .iter()
                .enumerate()
                .map(|(j, term)| term.dist.sample_at(&term_streams[j], k as u64))
                .collect(),
            _ => vec![dist.sample_at(&term_streams[0], k as u64)],
        };
        let init = seeded_state(model, coeffs, None);
        Ok(integrate_characteristic(model, &init, t, ctrl)?.state[coord.index()])
    });
    results.into_iter().collect()
}
