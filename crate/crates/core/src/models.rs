//! Model definitions: the three canonical systems and the generic N-term
//! random-forcing model, together with their closed-form coefficient
//! functions and the named basis/drift registries used by config files.

use serde::{Deserialize, Serialize};

use crate::dist::{CoefficientDistribution, DistSpec};
use crate::error::{Error, Result};

/// 1 - e^{-t} without cancellation.
#[inline]
pub(crate) fn one_minus_exp_neg(t: f64) -> f64 {
    -f64::exp_m1(-t)
}

// ---------------------------------------------------------------------------
// Position model
// ---------------------------------------------------------------------------

/// Drift-diffusion transport of a particle position: constant drift
/// velocity plus either Wiener noise of strength sqrt(2D) (Langevin form)
/// or the equivalent random-coefficient forcing (Liouville form).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionModel {
    pub drift_velocity: f64,
    pub diffusion: f64,
}

impl PositionModel {
    pub fn new(drift_velocity: f64, diffusion: f64) -> Result<Self> {
        if !(drift_velocity.is_finite() && diffusion.is_finite()) || diffusion <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "position model requires finite u_p and D > 0, got ({drift_velocity}, {diffusion})"
            )));
        }
        Ok(PositionModel {
            drift_velocity,
            diffusion,
        })
    }

    /// Forcing amplitude sqrt(D / 2t) multiplying the random coefficient.
    /// Singular at t = 0, hence the domain error for t <= 0.
    pub fn forcing(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::Domain(format!(
                "position forcing is singular at t = 0 (got t = {t})"
            )));
        }
        Ok(self.forcing_raw(t))
    }

    #[inline]
    pub(crate) fn forcing_raw(&self, t: f64) -> f64 {
        (self.diffusion / (2.0 * t)).sqrt()
    }

    /// Standard deviation scale sqrt(2 D t) of the spreading position.
    pub fn dispersion_scale(&self, t: f64) -> f64 {
        (2.0 * self.diffusion * t).sqrt()
    }
}

// ---------------------------------------------------------------------------
// Velocity model
// ---------------------------------------------------------------------------

/// Drag-relaxed particle velocity in the frame of the mean particle motion,
/// with position responding through the tau_p-scaled velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityModel {
    pub tau_p: f64,
    pub diffusion: f64,
    pub v0: f64,
}

impl VelocityModel {
    pub fn new(tau_p: f64, diffusion: f64, v0: f64) -> Result<Self> {
        if !(tau_p.is_finite() && diffusion.is_finite() && v0.is_finite())
            || tau_p <= 0.0
            || diffusion <= 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "velocity model requires tau_p > 0 and D > 0, got ({tau_p}, {diffusion})"
            )));
        }
        Ok(VelocityModel {
            tau_p,
            diffusion,
            v0,
        })
    }

    /// g(t) = 2t - 3 + 4e^{-t} - e^{-2t}, the growth function of the
    /// position variance. Evaluated as 4(expm1(-t)+t) - (expm1(-2t)+2t) to
    /// avoid the catastrophic cancellation of the direct form (g ~ 2t^3/3
    /// for small t).
    #[inline]
    pub fn dispersion_growth(&self, t: f64) -> f64 {
        4.0 * (f64::exp_m1(-t) + t) - (f64::exp_m1(-2.0 * t) + 2.0 * t)
    }

    /// sigma_X(t).
    pub fn position_std(&self, t: f64) -> f64 {
        self.tau_p * (self.diffusion * self.dispersion_growth(t)).sqrt()
    }

    /// sigma_U(t).
    pub fn velocity_std(&self, t: f64) -> f64 {
        (self.diffusion * one_minus_exp_neg(2.0 * t)).sqrt()
    }

    pub fn mean_position(&self, t: f64) -> f64 {
        self.tau_p * self.v0 * one_minus_exp_neg(t)
    }

    pub fn mean_velocity(&self, t: f64) -> f64 {
        self.v0 * (-t).exp()
    }

    /// The pair of forcing amplitudes (position equation, velocity
    /// equation):
    ///
    ///   forcing_x = d sigma_X/dt - tau_p sigma_U
    ///             = tau_p sqrt(D) [ (1-e^{-t})^2 / sqrt(g) - sqrt(1-e^{-2t}) ],
    ///   forcing_u = sqrt( D / (1-e^{-2t}) ).
    ///
    /// Both are defined for t > 0 only; forcing_u diverges like t^{-1/2} at
    /// the initial time.
    pub fn forcing_pair(&self, t: f64) -> Result<(f64, f64)> {
        if t <= 0.0 {
            return Err(Error::Domain(format!(
                "velocity forcing is singular at t = 0 (got t = {t})"
            )));
        }
        Ok(self.forcing_pair_raw(t))
    }

    #[inline]
    pub(crate) fn forcing_pair_raw(&self, t: f64) -> (f64, f64) {
        let em = one_minus_exp_neg(t);
        let em2 = one_minus_exp_neg(2.0 * t);
        let g = self.dispersion_growth(t);
        let fx = self.tau_p * self.diffusion.sqrt() * (em * em / g.sqrt() - em2.sqrt());
        let fu = (self.diffusion / em2).sqrt();
        (fx, fu)
    }
}

// ---------------------------------------------------------------------------
// Fluidized homogeneous heating system
// ---------------------------------------------------------------------------

/// Fluidized homogeneous heating system: a particle ensemble released in a
/// carrier flow whose velocity variance grows to a steady plateau. The
/// behaviour is set by the particle response time, the coefficient spread
/// `sigma_xi` (plateau level), the early-time constant `c1` and the
/// late-time exponent `c2`; the remaining fields are bookkeeping for the
/// flow condition the parameters were calibrated against.
#[derive(Debug, Clone, PartialEq)]
pub struct FhhsModel {
    pub tau_p: f64,
    pub sigma_xi: f64,
    pub c1: f64,
    pub c2: f64,
    pub re_m: Option<f64>,
    pub volume_fraction: Option<f64>,
    pub density_ratio: Option<f64>,
}

impl FhhsModel {
    pub fn new(tau_p: f64, sigma_xi: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(tau_p.is_finite() && sigma_xi.is_finite() && c1.is_finite() && c2.is_finite())
            || tau_p <= 0.0
            || sigma_xi <= 0.0
            || c1 <= 0.0
            || c2 < 1.0
        {
            return Err(Error::InvalidParameter(format!(
                "fhhs model requires tau_p > 0, sigma_xi > 0, c1 > 0 and c2 >= 1, got ({tau_p}, {sigma_xi}, {c1}, {c2})"
            )));
        }
        Ok(FhhsModel {
            tau_p,
            sigma_xi,
            c1,
            c2,
            re_m: None,
            volume_fraction: None,
            density_ratio: None,
        })
    }

    pub fn with_flow_condition(
        mut self,
        re_m: f64,
        volume_fraction: f64,
        density_ratio: f64,
    ) -> Self {
        self.re_m = Some(re_m);
        self.volume_fraction = Some(volume_fraction);
        self.density_ratio = Some(density_ratio);
        self
    }
}

// ---------------------------------------------------------------------------
// Generic random-forcing model
// ---------------------------------------------------------------------------

/// Named basis functions of time multiplying the random coefficients.
/// Coming from a registry keeps configs serialisable; there is no code
/// injection path.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisFn {
    /// coeff * t^exponent.
    PowerLaw { coeff: f64, exponent: f64 },
    /// coeff * e^{rate t}.
    Exponential { coeff: f64, rate: f64 },
    /// sqrt(D / 2t), the position-model forcing.
    PositionForcing { diffusion: f64 },
    /// Position-equation forcing of the velocity model.
    VelocityForcingX { tau_p: f64, diffusion: f64 },
    /// Velocity-equation forcing of the velocity model.
    VelocityForcingU { diffusion: f64 },
    /// The heating-system forcing.
    FhhsForcing { tau_p: f64, c1: f64, c2: f64 },
    /// Tabulated values, linearly interpolated, constant beyond the ends.
    Table { ts: Vec<f64>, values: Vec<f64> },
}

impl BasisFn {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BasisFn::PowerLaw { coeff, exponent } => coeff * t.powf(*exponent),
            BasisFn::Exponential { coeff, rate } => coeff * (rate * t).exp(),
            BasisFn::PositionForcing { diffusion } => (diffusion / (2.0 * t)).sqrt(),
            BasisFn::VelocityForcingX { tau_p, diffusion } => {
                let m = VelocityModel {
                    tau_p: *tau_p,
                    diffusion: *diffusion,
                    v0: 0.0,
                };
                m.forcing_pair_raw(t).0
            }
            BasisFn::VelocityForcingU { diffusion } => {
                (diffusion / one_minus_exp_neg(2.0 * t)).sqrt()
            }
            BasisFn::FhhsForcing { tau_p, c1, c2 } => {
                crate::fhhs::forcing_value(*tau_p, *c1, *c2, t)
            }
            BasisFn::Table { ts, values } => {
                if t <= ts[0] {
                    return values[0];
                }
                if t >= *ts.last().unwrap() {
                    return *values.last().unwrap();
                }
                let i = match ts.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                    Ok(i) => return values[i],
                    Err(i) => i - 1,
                };
                let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
        }
    }

    /// True when the basis diverges as t -> 0+, in which case the model must
    /// declare a positive start time.
    pub fn singular_at_origin(&self) -> bool {
        match self {
            BasisFn::PowerLaw { exponent, .. } => *exponent < 0.0,
            BasisFn::PositionForcing { .. } | BasisFn::VelocityForcingU { .. } => true,
            _ => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            BasisFn::Table { ts, values } => {
                if ts.len() < 2 || ts.len() != values.len() {
                    return Err(Error::InvalidParameter(
                        "table basis needs matching ts/values with at least 2 nodes".into(),
                    ));
                }
                if ts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParameter(
                        "table basis times must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            BasisFn::PositionForcing { diffusion }
            | BasisFn::VelocityForcingU { diffusion }
            | BasisFn::VelocityForcingX { diffusion, .. }
                if *diffusion <= 0.0 =>
            {
                Err(Error::InvalidParameter(
                    "basis diffusion must be > 0".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Named deterministic drifts. All registry drifts are (at most) linear in
/// the state, so characteristics stay affine in the random coefficients and
/// the drift divergence is state-independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftFn {
    /// dx/dt = velocity (one state variable).
    Constant { velocity: f64 },
    /// dx/dt = -rate * x (one state variable).
    Relaxation { rate: f64 },
    /// dx/dt = tau_p * u, du/dt = -u (two state variables).
    VelocityDrag { tau_p: f64 },
}

impl DriftFn {
    pub fn dim(&self) -> usize {
        match self {
            DriftFn::VelocityDrag { .. } => 2,
            _ => 1,
        }
    }

    #[inline]
    pub fn eval(&self, state: &[f64; 2], _t: f64) -> [f64; 2] {
        match self {
            DriftFn::Constant { velocity } => [*velocity, 0.0],
            DriftFn::Relaxation { rate } => [-rate * state[0], 0.0],
            DriftFn::VelocityDrag { tau_p } => [tau_p * state[1], -state[1]],
        }
    }

    /// Phase-space divergence of the drift (the forcing terms are functions
    /// of time only and contribute nothing).
    pub fn divergence(&self) -> f64 {
        match self {
            DriftFn::Constant { .. } => 0.0,
            DriftFn::Relaxation { rate } => -rate,
            DriftFn::VelocityDrag { .. } => -1.0,
        }
    }
}

/// One random forcing term: a coefficient law, a basis function of time and
/// the state component the product feeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingTerm {
    pub dist: CoefficientDistribution,
    pub basis: BasisFn,
    pub component: usize,
}

/// ODE system with N random-coefficient forcing terms added to a named
/// deterministic drift.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForcingModel {
    pub drift: DriftFn,
    pub terms: Vec<ForcingTerm>,
    /// Start time of integrations; must be positive when any basis is
    /// singular at the origin.
    pub start_time: f64,
    pub initial_state: [f64; 2],
}

impl RandomForcingModel {
    pub fn new(
        drift: DriftFn,
        terms: Vec<ForcingTerm>,
        start_time: f64,
        initial_state: [f64; 2],
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter(
                "random-forcing model needs at least one term".into(),
            ));
        }
        let dim = drift.dim();
        for (i, term) in terms.iter().enumerate() {
            term.basis.validate()?;
            if term.component >= dim {
                return Err(Error::InvalidParameter(format!(
                    "term {i} targets component {} of a {dim}-dimensional model",
                    term.component
                )));
            }
            if term.basis.singular_at_origin() && start_time <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "term {i} is singular at t = 0; declare start_time > 0"
                )));
            }
        }
        Ok(RandomForcingModel {
            drift,
            terms,
            start_time,
            initial_state,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }
}

// ---------------------------------------------------------------------------
// Tagged model union
// ---------------------------------------------------------------------------

/// Any of the solved systems, plus the generic forcing model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Position(PositionModel),
    Velocity(VelocityModel),
    Fhhs(FhhsModel),
    Forcing(RandomForcingModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Position(_) | Model::Fhhs(_) => 1,
            Model::Velocity(_) => 2,
            Model::Forcing(m) => m.dim(),
        }
    }

    /// Number of independent random coefficients.
    pub fn n_coeffs(&self) -> usize {
        match self {
            Model::Forcing(m) => m.terms.len(),
            _ => 1,
        }
    }

    /// Default start time for characteristic integrations: positive where
    /// the forcing is singular at the origin, zero where it is regular.
    pub fn default_start_time(&self) -> f64 {
        match self {
            Model::Position(_) | Model::Velocity(_) => 1e-6,
            Model::Fhhs(_) => 0.0,
            Model::Forcing(m) => m.start_time,
        }
    }

    /// Deterministic initial state at t = 0.
    pub fn initial_state(&self) -> [f64; 2] {
        match self {
            Model::Position(_) | Model::Fhhs(_) => [0.0, 0.0],
            Model::Velocity(m) => [0.0, m.v0],
            Model::Forcing(m) => m.initial_state,
        }
    }

    /// Right-hand side of the characteristic ODE at fixed coefficients.
    /// Assumes t is inside the valid integration window (t > 0 for the
    /// models with singular forcing).
    #[inline]
    pub(crate) fn rhs(&self, t: f64, state: &[f64; 2], coeffs: &[f64]) -> [f64; 2] {
        match self {
            Model::Position(m) => [m.drift_velocity + coeffs[0] * m.forcing_raw(t), 0.0],
            Model::Velocity(m) => {
                let (fx, fu) = m.forcing_pair_raw(t);
                [
                    m.tau_p * state[1] + coeffs[0] * fx,
                    -state[1] + coeffs[0] * fu,
                ]
            }
            Model::Fhhs(m) => [
                -state[0] / m.tau_p
                    + coeffs[0] * crate::fhhs::forcing_value(m.tau_p, m.c1, m.c2, t),
                0.0,
            ],
            Model::Forcing(m) => {
                let mut d = m.drift.eval(state, t);
                for (term, &c) in m.terms.iter().zip(coeffs) {
                    d[term.component] += c * term.basis.eval(t);
                }
                d
            }
        }
    }

    /// Divergence of the drift in phase space (state-independent for every
    /// model in the registry).
    pub fn drift_divergence(&self) -> f64 {
        match self {
            Model::Position(_) => 0.0,
            Model::Velocity(_) => -1.0,
            Model::Fhhs(m) => -1.0 / m.tau_p,
            Model::Forcing(m) => m.drift.divergence(),
        }
    }
}

// ---------------------------------------------------------------------------
// Config representations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Position {
        u_p: f64,
        #[serde(rename = "D")]
        diffusion: f64,
    },
    Velocity {
        tau_p: f64,
        #[serde(rename = "D")]
        diffusion: f64,
        v0: f64,
    },
    Fhhs {
        tau_p: f64,
        sigma_xi: f64,
        c1: f64,
        c2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        re_m: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        volume_fraction: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_ratio: Option<f64>,
    },
    Forcing {
        drift: DriftSpec,
        terms: Vec<TermSpec>,
        #[serde(default)]
        start_time: f64,
        #[serde(default)]
        initial_state: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub dist: DistSpec,
    pub basis: BasisSpec,
    #[serde(default)]
    pub component: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl TryFrom<&DriftSpec> for DriftFn {
    type Error = Error;

    fn try_from(s: &DriftSpec) -> Result<Self> {
        let one = |params: &[f64]| -> Result<f64> {
            params
                .first()
                .copied()
                .ok_or_else(|| Error::InvalidParameter(format!("drift '{}' takes 1 param", s.name)))
        };
        match s.name.as_str() {
            "constant" => Ok(DriftFn::Constant {
                velocity: one(&s.params)?,
            }),
            "relaxation" => Ok(DriftFn::Relaxation {
                rate: one(&s.params)?,
            }),
            "velocity_drag" => Ok(DriftFn::VelocityDrag {
                tau_p: one(&s.params)?,
            }),
            other => Err(Error::InvalidParameter(format!("unknown drift '{other}'"))),
        }
    }
}

impl TryFrom<&BasisSpec> for BasisFn {
    type Error = Error;

    fn try_from(s: &BasisSpec) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if s.params.len() != n {
                Err(Error::InvalidParameter(format!(
                    "basis '{}' takes {n} params, got {}",
                    s.name,
                    s.params.len()
                )))
            } else {
                Ok(())
            }
        };
        match s.name.as_str() {
            "power_law" => {
                need(2)?;
                Ok(BasisFn::PowerLaw {
                    coeff: s.params[0],
                    exponent: s.params[1],
                })
            }
            "exponential" => {
                need(2)?;
                Ok(BasisFn::Exponential {
                    coeff: s.params[0],
                    rate: s.params[1],
                })
            }
            "position_forcing" => {
                need(1)?;
                Ok(BasisFn::PositionForcing {
                    diffusion: s.params[0],
                })
            }
            "velocity_forcing_x" => {
                need(2)?;
                Ok(BasisFn::VelocityForcingX {
                    tau_p: s.params[0],
                    diffusion: s.params[1],
                })
            }
            "velocity_forcing_u" => {
                need(1)?;
                Ok(BasisFn::VelocityForcingU {
                    diffusion: s.params[0],
                })
            }
            "fhhs_forcing" => {
                need(3)?;
                Ok(BasisFn::FhhsForcing {
                    tau_p: s.params[0],
                    c1: s.params[1],
                    c2: s.params[2],
                })
            }
            "table" => match (&s.ts, &s.values) {
                (Some(ts), Some(values)) => Ok(BasisFn::Table {
                    ts: ts.clone(),
                    values: values.clone(),
                }),
                _ => Err(Error::InvalidParameter(
                    "table basis requires ts and values arrays".into(),
                )),
            },
            other => Err(Error::InvalidParameter(format!("unknown basis '{other}'"))),
        }
    }
}

impl TryFrom<&ModelSpec> for Model {
    type Error = Error;

    fn try_from(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Position { u_p, diffusion } => {
                Ok(Model::Position(PositionModel::new(*u_p, *diffusion)?))
            }
            ModelSpec::Velocity {
                tau_p,
                diffusion,
                v0,
            } => Ok(Model::Velocity(VelocityModel::new(
                *tau_p, *diffusion, *v0,
            )?)),
            ModelSpec::Fhhs {
                tau_p,
                sigma_xi,
                c1,
                c2,
                re_m,
                volume_fraction,
                density_ratio,
            } => {
                let mut m = FhhsModel::new(*tau_p, *sigma_xi, *c1, *c2)?;
                m.re_m = *re_m;
                m.volume_fraction = *volume_fraction;
                m.density_ratio = *density_ratio;
                Ok(Model::Fhhs(m))
            }
            ModelSpec::Forcing {
                drift,
                terms,
                start_time,
                initial_state,
            } => {
                let drift = DriftFn::try_from(drift)?;
                let mut built = Vec::with_capacity(terms.len());
                for t in terms {
                    built.push(ForcingTerm {
                        dist: CoefficientDistribution::try_from(&t.dist)?,
                        basis: BasisFn::try_from(&t.basis)?,
                        component: t.component,
                    });
                }
                let mut init = [0.0, 0.0];
                for (i, v) in initial_state.iter().take(2).enumerate() {
                    init[i] = *v;
                }
                Ok(Model::Forcing(RandomForcingModel::new(
                    drift,
                    built,
                    *start_time,
                    init,
                )?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn position_forcing_values() {
        let m = PositionModel::new(5.0, 2.5).unwrap();
        assert!((m.forcing(0.8).unwrap() - 1.25).abs() < 1e-12);
        assert!((m.forcing(1.25).unwrap() - 1.0).abs() < 1e-12);
        assert!(m.forcing(0.0).is_err());
        assert!(m.forcing(-1.0).is_err());
        // Monotone decay to zero.
        let mut last = f64::INFINITY;
        for t in [0.1, 1.0, 10.0, 1e3, 1e6] {
            let f = m.forcing(t).unwrap();
            assert!(f < last && f > 0.0);
            last = f;
        }
        assert!(m.forcing(1e13).unwrap() < 1e-6);
    }

    #[test]
    fn velocity_forcing_values() {
        let m = VelocityModel::new(10.0, 0.02, 1.0).unwrap();
        let (_, fu) = m.forcing_pair(1.0).unwrap();
        let direct = (0.02 / (1.0 - (-2.0_f64).exp())).sqrt();
        assert!((fu - direct).abs() < 1e-14);
        assert!((fu - 0.152_086_7).abs() < 1e-6);
        let (_, fu_inf) = m.forcing_pair(50.0).unwrap();
        assert!((fu_inf - 0.02_f64.sqrt()).abs() < 1e-9);
        assert!(m.forcing_pair(0.0).is_err());
    }

    #[test]
    fn forcing_pair_satisfies_defining_odes() {
        // d sigma_X/dt = tau_p sigma_U + forcing_x and
        // d sigma_U/dt = -sigma_U + forcing_u, by central differences.
        let m = VelocityModel::new(10.0, 0.02, 1.0).unwrap();
        let s = Stream::new(2024, 0);
        let h = 1e-5;
        for k in 0..20 {
            let t = 0.05 + 6.0 * s.uniform(k);
            let (fx, fu) = m.forcing_pair(t).unwrap();
            let dsx = (m.position_std(t + h) - m.position_std(t - h)) / (2.0 * h);
            let dsu = (m.velocity_std(t + h) - m.velocity_std(t - h)) / (2.0 * h);
            let rhs_x = m.tau_p * m.velocity_std(t) + fx;
            let rhs_u = -m.velocity_std(t) + fu;
            assert!(
                ((dsx - rhs_x) / rhs_x.abs().max(1e-12)).abs() < 1e-6,
                "t = {t}: {dsx} vs {rhs_x}"
            );
            assert!(
                ((dsu - rhs_u) / rhs_u.abs().max(1e-12)).abs() < 1e-6,
                "t = {t}: {dsu} vs {rhs_u}"
            );
        }
    }

    #[test]
    fn dispersion_growth_stable_at_small_t() {
        let m = VelocityModel::new(10.0, 0.02, 1.0).unwrap();
        for t in [1e-5, 1e-4, 1e-3, 1e-2] {
            let g = m.dispersion_growth(t);
            let leading = 2.0 / 3.0 * t * t * t;
            assert!(
                ((g - leading) / leading).abs() < t,
                "t = {t}: g = {g:e}, leading = {leading:e}"
            );
        }
    }

    #[test]
    fn forcing_model_reproduces_position_forcing() {
        let m = PositionModel::new(5.0, 2.5).unwrap();
        let basis = BasisFn::PositionForcing { diffusion: 2.5 };
        for t in [1e-4, 0.1, 0.8, 3.0] {
            assert_eq!(basis.eval(t), m.forcing(t).unwrap());
        }
    }

    #[test]
    fn forcing_model_validation() {
        let dist = CoefficientDistribution::standard_normal();
        let term = ForcingTerm {
            dist: dist.clone(),
            basis: BasisFn::PositionForcing { diffusion: 1.0 },
            component: 0,
        };
        // Singular basis with zero start time is rejected.
        assert!(RandomForcingModel::new(
            DriftFn::Constant { velocity: 1.0 },
            vec![term.clone()],
            0.0,
            [0.0, 0.0]
        )
        .is_err());
        assert!(RandomForcingModel::new(
            DriftFn::Constant { velocity: 1.0 },
            vec![term.clone()],
            1e-6,
            [0.0, 0.0]
        )
        .is_ok());
        // Component out of range for a 1-D drift.
        let bad = ForcingTerm {
            component: 1,
            ..term
        };
        assert!(RandomForcingModel::new(
            DriftFn::Constant { velocity: 1.0 },
            vec![bad],
            1e-6,
            [0.0, 0.0]
        )
        .is_err());
    }

    #[test]
    fn model_invariants_rejected() {
        assert!(PositionModel::new(5.0, 0.0).is_err());
        assert!(VelocityModel::new(0.0, 0.02, 1.0).is_err());
        assert!(FhhsModel::new(0.14, 0.9, 800.0, 0.9).is_err());
        assert!(FhhsModel::new(0.14, 0.0, 800.0, 1.2).is_err());
    }

    #[test]
    fn model_spec_round_trip() {
        let json = r#"{"type":"position","u_p":5.0,"D":2.5}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        let model = Model::try_from(&spec).unwrap();
        assert_eq!(
            model,
            Model::Position(PositionModel::new(5.0, 2.5).unwrap())
        );
        assert!(serde_json::from_str::<ModelSpec>(
            r#"{"type":"position","u_p":5.0,"D":2.5,"x":1}"#
        )
        .is_err());

        let json =
            r#"{"type":"fhhs","tau_p":0.14,"sigma_xi":0.9488,"c1":823.5,"c2":1.2,"re_m":20.0}"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        let model = Model::try_from(&spec).unwrap();
        if let Model::Fhhs(m) = &model {
            assert_eq!(m.re_m, Some(20.0));
        } else {
            panic!("wrong variant");
        }

        let json = r#"{
            "type":"forcing",
            "drift":{"name":"constant","params":[5.0]},
            "terms":[{"dist":{"family":"normal","params":[0,1]},
                      "basis":{"name":"position_forcing","params":[2.5]}}],
            "start_time":1e-6
        }"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        let model = Model::try_from(&spec).unwrap();
        assert_eq!(model.dim(), 1);
        assert_eq!(model.n_coeffs(), 1);
    }
}
