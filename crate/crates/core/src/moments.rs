//! First- and second-moment systems of the random-coefficient models,
//! integrated numerically and cross-checked against their closed forms.
//!
//! The moment equations close because every registry drift is linear. When
//! the right-hand side is instead a product of nonlinear functions of the
//! state (for example a Reynolds-dependent drag correction multiplying the
//! relative velocity), each second-moment equation picks up third- and
//! higher-order moments of the state, and the hierarchy never closes. That
//! case is deliberately not integrated here; see
//! [`integrate_velocity_moments_with_drag`].

use std::io::Write;

use crate::analytic::VelocityInit;
use crate::dist::CoefficientDistribution;
use crate::error::{Error, Result};
use crate::models::{FhhsModel, PositionModel, VelocityModel};
use crate::numeric::{rk4_sample, StepControl};

/// One time record; fields absent from a model stay `None` and serialise
/// to empty CSV cells.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MomentRecord {
    pub t: f64,
    pub mean_x: Option<f64>,
    pub mean_u: Option<f64>,
    pub var_x: Option<f64>,
    pub cov_xu: Option<f64>,
    pub var_u: Option<f64>,
    pub cov_xi_x: Option<f64>,
    pub cov_xi_u: Option<f64>,
}

impl MomentRecord {
    pub fn at(t: f64) -> Self {
        MomentRecord {
            t,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MomentSeries {
    pub records: Vec<MomentRecord>,
}

impl MomentSeries {
    /// CSV columns (t, mean_x, mean_u, var_x, cov_xu, var_u, cov_xi_x,
    /// cov_xi_u); missing fields are left empty.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "t,mean_x,mean_u,var_x,cov_xu,var_u,cov_xi_x,cov_xi_u")?;
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.t,
                cell(r.mean_x),
                cell(r.mean_u),
                cell(r.var_x),
                cell(r.cov_xu),
                cell(r.var_u),
                cell(r.cov_xi_x),
                cell(r.cov_xi_u)
            )?;
        }
        Ok(())
    }

    /// Nonnegative variances and Cauchy-Schwarz bounds on every covariance
    /// (cross-coefficient bounds need the coefficient's standard
    /// deviation).
    pub fn validate_invariants(&self, sigma_xi: Option<f64>) -> Result<()> {
        for r in &self.records {
            for (name, v) in [("var_x", r.var_x), ("var_u", r.var_u)] {
                if let Some(v) = v {
                    if v < -1e-12 {
                        return Err(Error::InvalidParameter(format!(
                            "{name} = {v} < 0 at t = {}",
                            r.t
                        )));
                    }
                }
            }
            let bound_ok = |cov: f64, a: f64, b: f64| cov.abs() <= (a * b).sqrt() + 1e-9;
            if let (Some(c), Some(a), Some(b)) = (r.cov_xu, r.var_x, r.var_u) {
                if !bound_ok(c, a.max(0.0), b.max(0.0)) {
                    return Err(Error::InvalidParameter(format!(
                        "cov_xu = {c} violates Cauchy-Schwarz at t = {}",
                        r.t
                    )));
                }
            }
            if let Some(s) = sigma_xi {
                for (cov, var) in [(r.cov_xi_x, r.var_x), (r.cov_xi_u, r.var_u)] {
                    if let (Some(c), Some(v)) = (cov, var) {
                        if !bound_ok(c, v.max(0.0), s * s) {
                            return Err(Error::InvalidParameter(format!(
                                "coefficient covariance {c} violates Cauchy-Schwarz at t = {}",
                                r.t
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_times(start: f64, times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("no output times".into()));
    }
    if times[0] < start || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(format!(
            "output times must be non-decreasing and >= the start time {start}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Position model
// ---------------------------------------------------------------------------

/// Closed-form position moments for an arbitrary coefficient law:
/// mean = u_p t + mean_c s(t), var = var_c (2Dt), cov(c, X) = var_c s(t)
/// with s(t) = sqrt(2Dt).
pub fn closed_position_moments(
    model: &PositionModel,
    dist: &CoefficientDistribution,
    t: f64,
) -> MomentRecord {
    let s = model.dispersion_scale(t);
    let var_c = dist.variance();
    MomentRecord {
        t,
        mean_x: Some(model.drift_velocity * t + dist.mean() * s),
        var_x: Some(var_c * 2.0 * model.diffusion * t),
        cov_xi_x: Some(var_c * s),
        ..MomentRecord::at(t)
    }
}

/// RK4 integration of the position moment system
/// (mean' = u_p + mean_c f, var' = 2 cov f, cov' = var_c f with
/// f = sqrt(D/2t)), seeded from the closed form at `start_time` because the
/// forcing is singular at t = 0.
pub fn integrate_position_moments(
    model: &PositionModel,
    dist: &CoefficientDistribution,
    start_time: f64,
    times: &[f64],
) -> Result<MomentSeries> {
    if start_time <= 0.0 {
        return Err(Error::Domain(
            "position moments must start at t > 0; the forcing is singular at the origin".into(),
        ));
    }
    check_times(start_time, times)?;
    let seed = closed_position_moments(model, dist, start_time);
    let y0 = [
        seed.mean_x.unwrap(),
        seed.var_x.unwrap(),
        seed.cov_xi_x.unwrap(),
    ];
    let mean_c = dist.mean();
    let var_c = dist.variance();
    let rhs = |t: f64, y: &[f64; 3]| {
        let f = model.forcing_raw(t);
        [model.drift_velocity + mean_c * f, 2.0 * y[2] * f, var_c * f]
    };
    let ctrl = StepControl {
        dt: 1e-3,
        ramp: 0.02,
    };
    let states = rk4_sample(&rhs, start_time, y0, times, ctrl)?;
    Ok(MomentSeries {
        records: times
            .iter()
            .zip(states)
            .map(|(&t, y)| MomentRecord {
                t,
                mean_x: Some(y[0]),
                var_x: Some(y[1]),
                cov_xi_x: Some(y[2]),
                ..MomentRecord::at(t)
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Velocity model
// ---------------------------------------------------------------------------

/// Closed-form moments of the velocity model generalised to an arbitrary
/// coefficient mean/variance (deterministic start). The Maxwellian start
/// requires a standardized law.
pub fn closed_velocity_moments(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    t: f64,
    init: VelocityInit,
) -> Result<MomentRecord> {
    let mean_c = dist.mean();
    let var_c = dist.variance();
    let sx = model.position_std(t);
    let su = model.velocity_std(t);
    let base = crate::analytic::velocity_moments(model, t, init);
    if init == VelocityInit::Maxwellian && !dist.is_standardized() {
        return Err(Error::Unsupported(
            "the Maxwellian-start closed form assumes a standardized coefficient law".into(),
        ));
    }
    Ok(MomentRecord {
        t,
        mean_x: Some(base.mean_x + mean_c * sx),
        mean_u: Some(base.mean_u + mean_c * su),
        var_x: Some(match init {
            VelocityInit::Deterministic => var_c * sx * sx,
            VelocityInit::Maxwellian => base.var_x,
        }),
        cov_xu: Some(match init {
            VelocityInit::Deterministic => var_c * sx * su,
            VelocityInit::Maxwellian => base.cov_xu,
        }),
        var_u: Some(match init {
            VelocityInit::Deterministic => var_c * su * su,
            VelocityInit::Maxwellian => base.var_u,
        }),
        cov_xi_x: Some(var_c * sx),
        cov_xi_u: Some(var_c * su),
    })
}

/// RK4 integration of the seven-equation first/second-moment system of the
/// velocity model, seeded from the exact closed form at `start_time`.
pub fn integrate_velocity_moments(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    init: VelocityInit,
    start_time: f64,
    times: &[f64],
) -> Result<MomentSeries> {
    if start_time <= 0.0 {
        return Err(Error::Domain(
            "velocity moments must start at t > 0; the forcing is singular at the origin".into(),
        ));
    }
    check_times(start_time, times)?;
    let seed = closed_velocity_moments(model, dist, start_time, init)?;
    let y0 = [
        seed.mean_x.unwrap(),
        seed.mean_u.unwrap(),
        seed.var_x.unwrap(),
        seed.cov_xu.unwrap(),
        seed.var_u.unwrap(),
        seed.cov_xi_x.unwrap(),
        seed.cov_xi_u.unwrap(),
    ];
    let mean_c = dist.mean();
    let var_c = dist.variance();
    let tp = model.tau_p;
    let rhs = |t: f64, y: &[f64; 7]| {
        let (fx, fu) = model.forcing_pair_raw(t);
        let [mx, mu, vx, cxu, vu, cax, cau] = *y;
        let _ = (mx, vx);
        [
            tp * mu + mean_c * fx,
            -mu + mean_c * fu,
            2.0 * tp * cxu + 2.0 * fx * cax,
            tp * vu - cxu + fx * cau + fu * cax,
            -2.0 * vu + 2.0 * fu * cau,
            tp * cau + var_c * fx,
            -cau + var_c * fu,
        ]
    };
    let ctrl = StepControl {
        dt: 1e-3,
        ramp: 0.02,
    };
    let states = rk4_sample(&rhs, start_time, y0, times, ctrl)?;
    Ok(MomentSeries {
        records: times
            .iter()
            .zip(states)
            .map(|(&t, y)| MomentRecord {
                t,
                mean_x: Some(y[0]),
                mean_u: Some(y[1]),
                var_x: Some(y[2]),
                cov_xu: Some(y[3]),
                var_u: Some(y[4]),
                cov_xi_x: Some(y[5]),
                cov_xi_u: Some(y[6]),
            })
            .collect(),
    })
}

/// Drag law selector for the velocity moment system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DragCorrection {
    /// Linear Stokes drag; the moment system closes and integrates.
    Stokes,
    /// A drag coefficient that itself depends on the state (for example on
    /// a slip Reynolds number). Not integrable here: the second-moment
    /// equations then contain unclosed triple products.
    StateDependent,
}

/// The product-form moment system: integrates only under Stokes drag,
/// otherwise reports the closure problem instead of silently truncating.
pub fn integrate_velocity_moments_with_drag(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    drag: DragCorrection,
    init: VelocityInit,
    start_time: f64,
    times: &[f64],
) -> Result<MomentSeries> {
    match drag {
        DragCorrection::Stokes => integrate_velocity_moments(model, dist, init, start_time, times),
        DragCorrection::StateDependent => Err(Error::UnsupportedClosure(
            "state-dependent drag makes the right-hand side a product of nonlinear state \
             functions; every second-moment equation then involves unclosed higher moments and \
             no closure approximation is provided"
                .into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Heating system
// ---------------------------------------------------------------------------

/// Closed-form heating-system moments: cov(c, U) = sigma_xi^2 eta(t) and
/// T = sigma_xi^2 eta(t)^2 / 3.
pub fn closed_fhhs_moments(model: &FhhsModel, t: f64) -> MomentRecord {
    let eta = model.growth_factor(t);
    let s2 = model.sigma_xi * model.sigma_xi;
    MomentRecord {
        t,
        mean_u: Some(0.0),
        var_u: Some(s2 * eta * eta),
        cov_xi_u: Some(s2 * eta),
        ..MomentRecord::at(t)
    }
}

/// RK4 integration of the two-equation heating-system moment model
/// (dT/dt = -2T/tau_p + (2/3) cov f, dcov/dt = -cov/tau_p + sigma_xi^2 f).
/// Regular at t = 0, so integration starts there; the step is tied to the
/// fast early scale tau_p/c1.
pub fn integrate_fhhs_moments(model: &FhhsModel, times: &[f64]) -> Result<MomentSeries> {
    check_times(0.0, times)?;
    let s2 = model.sigma_xi * model.sigma_xi;
    let rhs = |t: f64, y: &[f64; 2]| {
        let f = crate::fhhs::forcing_value(model.tau_p, model.c1, model.c2, t);
        [
            -2.0 * y[0] / model.tau_p + 2.0 / 3.0 * y[1] * f,
            -y[1] / model.tau_p + s2 * f,
        ]
    };
    // Fine ramp: the forcing has a t^{c2-1} branch point at the origin and
    // the targets are checked to 1e-6 relative even at very early times,
    // where the ramp truncation error (~ramp^4) dominates.
    let ctrl = StepControl {
        dt: 0.02 * model.tau_p / model.c1,
        ramp: 0.003,
    };
    let states = rk4_sample(&rhs, 0.0, [0.0, 0.0], times, ctrl)?;
    Ok(MomentSeries {
        records: times
            .iter()
            .zip(states)
            .map(|(&t, y)| MomentRecord {
                t,
                mean_u: Some(0.0),
                var_u: Some(3.0 * y[0]),
                cov_xi_u: Some(y[1]),
                ..MomentRecord::at(t)
            })
            .collect(),
    })
}
