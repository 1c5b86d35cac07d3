//! Closed-form densities and statistics of the solved systems. These are
//! the exact references the characteristic, Monte Carlo and
//! finite-difference routes are all validated against.
//!
//! Both marginals share one structure: the state is an affine function of
//! the random coefficient, so its density is the coefficient density
//! rescaled,  f(y; t) = f_c((y - mean)/scale) / scale.

use crate::dist::CoefficientDistribution;
use crate::error::{Error, Result};
use crate::models::{PositionModel, VelocityModel};
use crate::pdf::{CurveMeta, Grid1d, PdfCurve};

fn check_time(t: f64) -> Result<()> {
    if t <= 0.0 {
        return Err(Error::Domain(format!(
            "analytic densities need t > 0, got {t}"
        )));
    }
    Ok(())
}

fn scaled_density(dist: &CoefficientDistribution, x: f64, mean: f64, scale: f64) -> f64 {
    dist.density((x - mean) / scale) / scale
}

/// Grid spanning mean + scale * [-8, 8], clipped to the (scaled) support of
/// a bounded coefficient law.
pub fn default_grid(
    dist: &CoefficientDistribution,
    mean: f64,
    scale: f64,
    n: usize,
) -> Result<Grid1d> {
    let (slo, shi) = dist.support();
    let lo = mean + scale * slo.max(-8.0);
    let hi = mean + scale * shi.min(8.0);
    Grid1d::new(lo, hi, n)
}

// ---------------------------------------------------------------------------
// Position model
// ---------------------------------------------------------------------------

/// Position density f_X(x; t) = f_c((x - u_p t)/sqrt(2Dt)) / sqrt(2Dt).
/// Reduces to the heat kernel for a standard-normal coefficient.
pub fn position_pdf(
    model: &PositionModel,
    dist: &CoefficientDistribution,
    x: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    Ok(scaled_density(
        dist,
        x,
        model.drift_velocity * t,
        model.dispersion_scale(t),
    ))
}

pub fn position_cdf(
    model: &PositionModel,
    dist: &CoefficientDistribution,
    x: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    Ok(dist.cdf((x - model.drift_velocity * t) / model.dispersion_scale(t)))
}

pub fn position_pdf_curve(
    model: &PositionModel,
    dist: &CoefficientDistribution,
    t: f64,
    grid: Grid1d,
) -> Result<PdfCurve> {
    check_time(t)?;
    let mean = model.drift_velocity * t;
    let scale = model.dispersion_scale(t);
    let meta = CurveMeta {
        model: "position".into(),
        time: t,
        provenance: "analytic".into(),
        ..Default::default()
    };
    Ok(PdfCurve::from_fn(
        grid,
        |x| scaled_density(dist, x, mean, scale),
        meta,
    ))
}

/// n-th central position moment, E[(X - mean)^n] = m_n(c) (2Dt)^{n/2} with
/// m_n(c) the coefficient's central moment.
pub fn position_central_moment(
    model: &PositionModel,
    dist: &CoefficientDistribution,
    order: u32,
    t: f64,
) -> Result<f64> {
    if order < 2 {
        return Err(Error::InvalidParameter(
            "central position moments start at order 2".into(),
        ));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("needs t >= 0, got {t}")));
    }
    Ok(dist.central_moment(order)? * model.dispersion_scale(t).powi(order as i32))
}

// ---------------------------------------------------------------------------
// Velocity model
// ---------------------------------------------------------------------------

/// Position marginal of the velocity model.
pub fn velocity_position_pdf(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    x: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    Ok(scaled_density(
        dist,
        x,
        model.mean_position(t),
        model.position_std(t),
    ))
}

/// Velocity marginal of the velocity model; the standard-normal case is the
/// transient Gaussian of the drag-relaxed Wiener model.
pub fn velocity_velocity_pdf(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    u: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    Ok(scaled_density(
        dist,
        u,
        model.mean_velocity(t),
        model.velocity_std(t),
    ))
}

pub fn velocity_velocity_cdf(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    u: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    Ok(dist.cdf((u - model.mean_velocity(t)) / model.velocity_std(t)))
}

pub fn velocity_position_cdf(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    x: f64,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    Ok(dist.cdf((x - model.mean_position(t)) / model.position_std(t)))
}

/// Both marginals of the velocity model on the given grids.
pub fn velocity_pdf_curves(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    t: f64,
    grid_x: Grid1d,
    grid_u: Grid1d,
) -> Result<(PdfCurve, PdfCurve)> {
    check_time(t)?;
    let meta = |coord: &str| CurveMeta {
        model: format!("velocity_{coord}"),
        time: t,
        provenance: "analytic".into(),
        ..Default::default()
    };
    let (mx, sx) = (model.mean_position(t), model.position_std(t));
    let (mu, su) = (model.mean_velocity(t), model.velocity_std(t));
    Ok((
        PdfCurve::from_fn(grid_x, |x| scaled_density(dist, x, mx, sx), meta("x")),
        PdfCurve::from_fn(grid_u, |u| scaled_density(dist, u, mu, su), meta("u")),
    ))
}

/// Central moments of either marginal through the coefficient law:
/// E[(Y - mean)^n] = m_n(c) sigma_Y^n.
pub fn velocity_central_moment(
    model: &VelocityModel,
    dist: &CoefficientDistribution,
    coord: crate::characteristics::StateCoord,
    order: u32,
    t: f64,
) -> Result<f64> {
    if order < 2 {
        return Err(Error::InvalidParameter(
            "central moments start at order 2".into(),
        ));
    }
    let sigma = match coord {
        crate::characteristics::StateCoord::Position => model.position_std(t),
        crate::characteristics::StateCoord::Velocity => model.velocity_std(t),
    };
    Ok(dist.central_moment(order)? * sigma.powi(order as i32))
}

/// Initial condition of the velocity-model moment closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityInit {
    /// Point mass at (0, v0).
    Deterministic,
    /// Velocity starts in its stationary law with variance D (position
    /// still a point mass); reproduces the classical ballistic-diffusive
    /// dispersion 2 tau_p^2 D (t - 1 + e^{-t}).
    Maxwellian,
}

/// One record of first and second moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityMoments {
    pub mean_x: f64,
    pub mean_u: f64,
    pub var_x: f64,
    pub cov_xu: f64,
    pub var_u: f64,
    pub cov_xi_x: f64,
    pub cov_xi_u: f64,
}

/// Closed-form moments of the velocity model for a standardized coefficient
/// (mean 0, variance 1); the cross-covariances with the coefficient equal
/// the state standard deviations because the single-coefficient
/// construction is perfectly correlated.
pub fn velocity_moments(model: &VelocityModel, t: f64, init: VelocityInit) -> VelocityMoments {
    let sx = model.position_std(t);
    let su = model.velocity_std(t);
    let d = model.diffusion;
    let tp = model.tau_p;
    match init {
        VelocityInit::Deterministic => VelocityMoments {
            mean_x: model.mean_position(t),
            mean_u: model.mean_velocity(t),
            var_x: sx * sx,
            cov_xu: sx * su,
            var_u: su * su,
            cov_xi_x: sx,
            cov_xi_u: su,
        },
        VelocityInit::Maxwellian => {
            let e1 = (-t).exp();
            let e2 = (-2.0 * t).exp();
            VelocityMoments {
                mean_x: model.mean_position(t),
                mean_u: model.mean_velocity(t),
                var_x: 2.0 * tp * tp * d * (f64::exp_m1(-t) + t),
                cov_xu: sx * su + tp * d * (e1 - e2),
                var_u: d,
                cov_xi_x: sx,
                cov_xi_u: su,
            }
        }
    }
}
