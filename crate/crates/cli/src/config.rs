//! Config-file schemas. One JSON document per invocation; unknown keys are
//! rejected so typos fail loudly instead of being ignored.

use serde::Deserialize;

use liouville_lab::dist::DistSpec;
use liouville_lab::models::ModelSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Default, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

impl TimeGridSpec {
    pub fn times(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Linear => liouville_lab::numeric::linspace(self.lo, self.hi, self.n),
            Spacing::Log => liouville_lab::numeric::log_spaced(self.lo, self.hi, self.n),
        }
    }
}

/// `pdf`: analytic marginals of a model for one or more coefficient laws.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfConfig {
    pub model: ModelSpec,
    pub distributions: Vec<DistSpec>,
    pub times: Vec<f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_pdf_prefix")]
    pub prefix: String,
}

fn default_grid_points() -> usize {
    1001
}

fn default_pdf_prefix() -> String {
    "pdf".into()
}

/// `mc`: Monte Carlo marginals along characteristics, Wiener-driven
/// ensembles, and KS comparisons against the analytic marginals.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub model: ModelSpec,
    pub distribution: DistSpec,
    pub n_samples: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub liouville: bool,
    #[serde(default = "default_true")]
    pub langevin: bool,
    #[serde(default)]
    pub coord: Option<CoordSpec>,
    #[serde(default)]
    pub dump_paths: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CoordSpec {
    Position,
    Velocity,
}

/// Named density generators used to seed and reference the
/// finite-difference solves (the coefficient law is standard normal, which
/// is the case with a Wiener-driven equivalent).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

/// `fp`: Crank-Nicolson solve of a drift-diffusion density equation.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpConfig {
    pub drift: FieldSpec,
    pub diffusion: FieldSpec,
    pub domain: [f64; 2],
    #[serde(default = "default_fp_points")]
    pub grid_points: usize,
    pub dt: f64,
    pub start_time: f64,
    pub initial: DensitySpec,
    pub times: Vec<f64>,
    #[serde(default)]
    pub reference: Option<DensitySpec>,
}

fn default_fp_points() -> usize {
    2001
}

/// `moments`: closed-form and ODE-integrated moment series.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub distribution: Option<DistSpec>,
    #[serde(default)]
    pub init: Option<String>,
    #[serde(default)]
    pub start_time: Option<f64>,
    pub times: TimeGridSpec,
    #[serde(default = "default_moments_prefix")]
    pub prefix: String,
}

fn default_moments_prefix() -> String {
    "moments".into()
}

/// `fhhs`: temperature history, source/sink decomposition and diffusion
/// tables of a heating-system model.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FhhsConfig {
    pub model: ModelSpec,
    pub times: TimeGridSpec,
    #[serde(default = "default_one")]
    pub re_t_scale: f64,
    #[serde(default = "default_table_points")]
    pub table_points: usize,
}

fn default_one() -> f64 {
    1.0
}

fn default_table_points() -> usize {
    200
}

/// `fit`: calibrate (sigma_xi, c1) against one or more (t, T) CSV files.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub tau_p: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default)]
    pub refine_c2: bool,
    pub datasets: Vec<FitDataset>,
}

fn default_c2() -> f64 {
    1.2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDataset {
    pub re_m: f64,
    pub path: String,
}
