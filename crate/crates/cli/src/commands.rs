//! The six subcommands: validate the config, run the core machinery, write
//! CSV/JSON outputs. Everything written is a pure function of the config
//! (plus explicit seed overrides), so reruns reproduce outputs byte for
//! byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use liouville_lab::analytic;
use liouville_lab::characteristics::{mc_marginal_pdf, StateCoord};
use liouville_lab::dist::CoefficientDistribution;
use liouville_lab::error::Error as CoreError;
use liouville_lab::fhhs::{self, FitOptions};
use liouville_lab::fokker_planck::{self, DiffusionField, DriftField, FpProblem};
use liouville_lab::langevin::{self, SimConfig};
use liouville_lab::models::{FhhsModel, Model, PositionModel, VelocityModel};
use liouville_lab::moments;
use liouville_lab::numeric::StepControl;
use liouville_lab::pdf::{Grid1d, PdfCurve};
use liouville_lab::special::norm_pdf_scaled;

use crate::config::*;
use crate::{CliError, CliResult};

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: CoreError) -> CliError {
    CliError::Runtime(e.to_string())
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(config_err)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_curve(path: &Path, curve: &PdfCurve) -> CliResult<()> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).map_err(runtime_err)?;
    write_file(path, &buf)
}

fn grid_from(spec: &Option<GridSpec>) -> CliResult<Option<Grid1d>> {
    match spec {
        None => Ok(None),
        Some(g) => Grid1d::new(g.lo, g.hi, g.n).map(Some).map_err(config_err),
    }
}

/// Physical coordinate name and the state slot it lives in. The 1-D models
/// keep their single coordinate in slot 0 whatever it represents.
fn coord_for(model: &Model, spec: Option<CoordSpec>) -> (String, StateCoord) {
    let requested = match spec {
        Some(CoordSpec::Position) => StateCoord::Position,
        Some(CoordSpec::Velocity) => StateCoord::Velocity,
        None => match model {
            Model::Velocity(_) | Model::Fhhs(_) => StateCoord::Velocity,
            _ => StateCoord::Position,
        },
    };
    let name = match (model, requested) {
        (Model::Position(_), _) => "position",
        (Model::Fhhs(_), _) => "velocity",
        (Model::Forcing(_), _) => "state",
        (Model::Velocity(_), StateCoord::Position) => "position",
        (Model::Velocity(_), StateCoord::Velocity) => "velocity",
    };
    let slot = match model {
        Model::Velocity(_) => requested,
        _ => StateCoord::Position,
    };
    (name.into(), slot)
}

// ---------------------------------------------------------------------------
// pdf
// ---------------------------------------------------------------------------

pub fn cmd_pdf(config_text: &str, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg: PdfConfig = parse(config_text)?;
    let model = Model::try_from(&cfg.model).map_err(config_err)?;
    if cfg.times.iter().any(|&t| t <= 0.0) {
        return Err(config_err("pdf times must be positive"));
    }
    let mut written = Vec::new();
    for (i, dist_spec) in cfg.distributions.iter().enumerate() {
        let dist = CoefficientDistribution::try_from(dist_spec).map_err(config_err)?;
        for &t in &cfg.times {
            let curves: Vec<(&str, PdfCurve)> = match &model {
                Model::Position(m) => {
                    let grid = match grid_from(&cfg.grid)? {
                        Some(g) => g,
                        None => analytic::default_grid(
                            &dist,
                            m.drift_velocity * t,
                            m.dispersion_scale(t),
                            cfg.grid_points,
                        )
                        .map_err(runtime_err)?,
                    };
                    vec![(
                        "x",
                        analytic::position_pdf_curve(m, &dist, t, grid).map_err(runtime_err)?,
                    )]
                }
                Model::Velocity(m) => {
                    let (gx, gu) = match grid_from(&cfg.grid)? {
                        Some(g) => (g, g),
                        None => (
                            analytic::default_grid(
                                &dist,
                                m.mean_position(t),
                                m.position_std(t),
                                cfg.grid_points,
                            )
                            .map_err(runtime_err)?,
                            analytic::default_grid(
                                &dist,
                                m.mean_velocity(t),
                                m.velocity_std(t),
                                cfg.grid_points,
                            )
                            .map_err(runtime_err)?,
                        ),
                    };
                    let (fx, fu) =
                        analytic::velocity_pdf_curves(m, &dist, t, gx, gu).map_err(runtime_err)?;
                    vec![("x", fx), ("u", fu)]
                }
                Model::Fhhs(m) => {
                    let grid = match grid_from(&cfg.grid)? {
                        Some(g) => g,
                        None => m.default_grid(&dist, t, cfg.grid_points).map_err(runtime_err)?,
                    };
                    vec![("u", m.pdf_curve(&dist, t, grid).map_err(runtime_err)?)]
                }
                Model::Forcing(_) => {
                    return Err(config_err(
                        "the pdf command covers the closed-form models; use mc for generic forcing models",
                    ))
                }
            };
            for (coord, curve) in curves {
                let path = out_dir.join(format!(
                    "{}_{}_{}_t{}_{}.csv",
                    cfg.prefix, i, dist_spec.family, t, coord
                ));
                write_curve(&path, &curve)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// mc
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct McReport {
    model: String,
    coord: String,
    n_samples: usize,
    dt: f64,
    seed: u64,
    times: Vec<f64>,
    /// KS of the characteristics marginal against the analytic marginal of
    /// the configured coefficient law.
    ks_liouville: Option<Vec<f64>>,
    /// KS of the Wiener-driven ensemble against the analytic marginal with
    /// a standard-normal coefficient (the matched construction).
    ks_langevin: Option<Vec<f64>>,
}

pub fn cmd_mc(
    config_text: &str,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> CliResult<Vec<PathBuf>> {
    let cfg: McConfig = parse(config_text)?;
    let model = Model::try_from(&cfg.model).map_err(config_err)?;
    let dist = CoefficientDistribution::try_from(&cfg.distribution).map_err(config_err)?;
    let seed = seed_override.unwrap_or(cfg.seed);
    let (coord_name, coord) = coord_for(&model, cfg.coord);
    let grid = grid_from(&cfg.grid)?;
    if cfg.times.is_empty() || cfg.times[0] <= 0.0 || cfg.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err(
            "mc times must be positive and strictly increasing",
        ));
    }
    if cfg.n_samples < 100 || cfg.dt <= 0.0 {
        return Err(config_err("mc needs n_samples >= 100 and dt > 0"));
    }
    let mut written = Vec::new();
    let mut ks_liouville = Vec::new();
    let mut ks_langevin = Vec::new();

    // Analytic CDF of the configured law (for the characteristics route)
    // and of the standard-normal law (for the Wiener route).
    let normal = CoefficientDistribution::standard_normal();
    let cdf_of = |dist: &CoefficientDistribution, t: f64| -> Option<Box<dyn Fn(f64) -> f64>> {
        let dist = dist.clone();
        match &model {
            Model::Position(m) => {
                let (mean, scale) = (m.drift_velocity * t, m.dispersion_scale(t));
                Some(Box::new(move |x| dist.cdf((x - mean) / scale)))
            }
            Model::Velocity(m) => {
                let (mean, scale) = match coord {
                    StateCoord::Position => (m.mean_position(t), m.position_std(t)),
                    StateCoord::Velocity => (m.mean_velocity(t), m.velocity_std(t)),
                };
                Some(Box::new(move |x| dist.cdf((x - mean) / scale)))
            }
            Model::Fhhs(m) => {
                // The characteristics carry the physical law directly.
                let scale = m.growth_factor(t);
                Some(Box::new(move |u| dist.cdf(u / scale)))
            }
            Model::Forcing(_) => None,
        }
    };

    if cfg.liouville {
        for &t in &cfg.times {
            let curve = mc_marginal_pdf(
                &model,
                &dist,
                coord,
                cfg.n_samples,
                t,
                seed,
                grid,
                StepControl::default(),
            )
            .map_err(runtime_err)?;
            if let Some(cdf) = cdf_of(&dist, t) {
                ks_liouville.push(liouville_lab::pdf::ks_distance_curve(&curve, cdf));
            }
            let path = out_dir.join(format!("mc_liouville_t{t}.csv"));
            write_curve(&path, &curve)?;
            written.push(path);
        }
    }

    let mut langevin_ran = false;
    if cfg.langevin {
        let t_end = *cfg.times.last().unwrap();
        let sim = SimConfig {
            n_paths: cfg.n_samples,
            dt: cfg.dt,
            t_end,
            record_times: cfg.times.clone(),
            seed,
            mode: Default::default(),
        };
        let ens = match &model {
            Model::Position(m) => Some(langevin::simulate_position_langevin(m, &sim)),
            Model::Velocity(m) => Some(langevin::simulate_velocity_langevin(m, &sim)),
            Model::Fhhs(m) => Some(langevin::simulate_fhhs_langevin(m, &sim)),
            Model::Forcing(_) => None,
        };
        if let Some(ens) = ens {
            let ens = ens.map_err(runtime_err)?;
            langevin_ran = true;
            let comp = match (&model, coord) {
                (Model::Velocity(_), StateCoord::Velocity) => 1,
                _ => 0,
            };
            for &t in &cfg.times {
                let curve = langevin::empirical_pdf(&ens, t, comp, grid).map_err(runtime_err)?;
                if let Some(cdf) = cdf_of(&normal, t) {
                    let samples = ens.samples_at(t, comp).map_err(runtime_err)?;
                    ks_langevin.push(
                        liouville_lab::pdf::ks_statistic_samples(&samples, cdf)
                            .map_err(runtime_err)?,
                    );
                }
                let path = out_dir.join(format!("mc_langevin_t{t}.csv"));
                write_curve(&path, &curve)?;
                written.push(path);
            }
            let series = ens.moment_series().map_err(runtime_err)?;
            let mut buf = Vec::new();
            series.write_csv(&mut buf).map_err(runtime_err)?;
            let path = out_dir.join("mc_langevin_moments.csv");
            write_file(&path, &buf)?;
            written.push(path);
            if cfg.dump_paths {
                let mut buf = Vec::new();
                ens.write_binary(&mut buf).map_err(runtime_err)?;
                let path = out_dir.join("mc_paths.bin");
                write_file(&path, &buf)?;
                written.push(path);
            }
        }
    }

    let report = McReport {
        model: model_name(&model),
        coord: coord_name,
        n_samples: cfg.n_samples,
        dt: cfg.dt,
        seed,
        times: cfg.times.clone(),
        ks_liouville: (!ks_liouville.is_empty()).then_some(ks_liouville),
        ks_langevin: (langevin_ran && !ks_langevin.is_empty()).then_some(ks_langevin),
    };
    let path = out_dir.join("mc_report.json");
    write_file(
        &path,
        serde_json::to_string_pretty(&report)
            .map_err(config_err)?
            .as_bytes(),
    )?;
    written.push(path);
    Ok(written)
}

fn model_name(model: &Model) -> String {
    match model {
        Model::Position(_) => "position",
        Model::Velocity(_) => "velocity",
        Model::Fhhs(_) => "fhhs",
        Model::Forcing(_) => "forcing",
    }
    .into()
}

// ---------------------------------------------------------------------------
// fp
// ---------------------------------------------------------------------------

fn drift_field(spec: &FieldSpec) -> CliResult<DriftField> {
    let one = || {
        spec.params
            .first()
            .copied()
            .ok_or_else(|| config_err(format!("drift '{}' takes 1 param", spec.name)))
    };
    match spec.name.as_str() {
        "zero" => Ok(DriftField::Zero),
        "constant" => Ok(DriftField::Constant { value: one()? }),
        "linear_decay" => Ok(DriftField::LinearDecay { rate: one()? }),
        other => Err(config_err(format!("unknown drift field '{other}'"))),
    }
}

fn diffusion_field(spec: &FieldSpec) -> CliResult<DiffusionField> {
    match spec.name.as_str() {
        "constant" => Ok(DiffusionField::Constant {
            value: *spec
                .params
                .first()
                .ok_or_else(|| config_err("diffusion 'constant' takes 1 param"))?,
        }),
        "fhhs" => {
            if spec.params.len() != 4 {
                return Err(config_err(
                    "diffusion 'fhhs' takes [tau_p, sigma_xi, c1, c2]",
                ));
            }
            let model = FhhsModel::new(
                spec.params[0],
                spec.params[1],
                spec.params[2],
                spec.params[3],
            )
            .map_err(config_err)?;
            Ok(DiffusionField::FhhsTime { model })
        }
        other => Err(config_err(format!("unknown diffusion field '{other}'"))),
    }
}

/// Named reference densities evaluated at a given time (standard-normal
/// coefficient where a model is involved).
fn density_at(spec: &DensitySpec, t: f64) -> CliResult<Box<dyn Fn(f64) -> f64>> {
    let p = &spec.params;
    match spec.name.as_str() {
        "gaussian" => {
            if p.len() != 2 {
                return Err(config_err("density 'gaussian' takes [mean, std]"));
            }
            let (mean, std) = (p[0], p[1]);
            if std <= 0.0 {
                return Err(config_err("gaussian std must be positive"));
            }
            Ok(Box::new(move |x| norm_pdf_scaled(x, mean, std)))
        }
        "position_model" => {
            if p.len() != 2 {
                return Err(config_err("density 'position_model' takes [u_p, D]"));
            }
            let m = PositionModel::new(p[0], p[1]).map_err(config_err)?;
            Ok(Box::new(move |x| {
                norm_pdf_scaled(x, m.drift_velocity * t, m.dispersion_scale(t))
            }))
        }
        "velocity_marginal" => {
            if p.len() != 3 {
                return Err(config_err(
                    "density 'velocity_marginal' takes [tau_p, D, v0]",
                ));
            }
            let m = VelocityModel::new(p[0], p[1], p[2]).map_err(config_err)?;
            Ok(Box::new(move |u| {
                norm_pdf_scaled(u, m.mean_velocity(t), m.velocity_std(t))
            }))
        }
        "fhhs" => {
            if p.len() != 4 {
                return Err(config_err("density 'fhhs' takes [tau_p, sigma_xi, c1, c2]"));
            }
            let m = FhhsModel::new(p[0], p[1], p[2], p[3]).map_err(config_err)?;
            let scale = m.sigma_xi * m.growth_factor(t);
            if scale <= 0.0 {
                return Err(config_err(
                    "fhhs density is degenerate at the requested time",
                ));
            }
            Ok(Box::new(move |u| norm_pdf_scaled(u, 0.0, scale)))
        }
        other => Err(config_err(format!("unknown density '{other}'"))),
    }
}

pub fn cmd_fp(config_text: &str, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg: FpConfig = parse(config_text)?;
    if cfg.dt <= 0.0 || cfg.times.is_empty() || cfg.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err(
            "fp needs dt > 0 and strictly increasing snapshot times",
        ));
    }
    let grid = Grid1d::new(cfg.domain[0], cfg.domain[1], cfg.grid_points).map_err(config_err)?;
    let initial = density_at(&cfg.initial, cfg.start_time)?;
    let problem = FpProblem::new(
        drift_field(&cfg.drift)?,
        diffusion_field(&cfg.diffusion)?,
        grid,
        cfg.start_time,
        initial,
    )
    .map_err(config_err)?;
    let snaps =
        fokker_planck::solve_with_snapshots(&problem, &cfg.times, cfg.dt).map_err(runtime_err)?;
    let mut written = Vec::new();
    let mut l1 = Vec::new();
    let mut masses = Vec::new();
    let mut variances = Vec::new();
    for curve in &snaps {
        let t = curve.meta.time;
        masses.push(curve.mass());
        variances.push(curve.variance());
        if let Some(refspec) = &cfg.reference {
            let reference = density_at(refspec, t)?;
            let refcurve = PdfCurve::from_fn(grid, reference, Default::default());
            l1.push(curve.l1_distance(&refcurve).map_err(runtime_err)?);
        }
        let path = out_dir.join(format!("fp_t{t}.csv"));
        write_curve(&path, curve)?;
        written.push(path);
    }
    let report = json!({
        "times": cfg.times,
        "mass": masses,
        "variance": variances,
        "l1_vs_reference": if cfg.reference.is_some() { Some(l1) } else { None },
    });
    let path = out_dir.join("fp_report.json");
    write_file(
        &path,
        serde_json::to_string_pretty(&report)
            .map_err(config_err)?
            .as_bytes(),
    )?;
    written.push(path);
    Ok(written)
}

// ---------------------------------------------------------------------------
// moments
// ---------------------------------------------------------------------------

pub fn cmd_moments(config_text: &str, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg: MomentsConfig = parse(config_text)?;
    let model = Model::try_from(&cfg.model).map_err(config_err)?;
    let times = cfg.times.times();
    let dist = match &cfg.distribution {
        Some(d) => CoefficientDistribution::try_from(d).map_err(config_err)?,
        None => CoefficientDistribution::standard_normal(),
    };
    let init = match cfg.init.as_deref() {
        None | Some("deterministic") => analytic::VelocityInit::Deterministic,
        Some("maxwellian") => analytic::VelocityInit::Maxwellian,
        Some(other) => return Err(config_err(format!("unknown init '{other}'"))),
    };
    let (ode, closed) = match &model {
        Model::Position(m) => {
            let t0 = cfg.start_time.unwrap_or(1e-6);
            let ode =
                moments::integrate_position_moments(m, &dist, t0, &times).map_err(runtime_err)?;
            let closed = moments::MomentSeries {
                records: times
                    .iter()
                    .map(|&t| moments::closed_position_moments(m, &dist, t))
                    .collect(),
            };
            (ode, closed)
        }
        Model::Velocity(m) => {
            let t0 = cfg.start_time.unwrap_or(1e-6);
            let ode = moments::integrate_velocity_moments(m, &dist, init, t0, &times)
                .map_err(runtime_err)?;
            let mut records = Vec::with_capacity(times.len());
            for &t in &times {
                records.push(
                    moments::closed_velocity_moments(m, &dist, t, init).map_err(runtime_err)?,
                );
            }
            (ode, moments::MomentSeries { records })
        }
        Model::Fhhs(m) => {
            let ode = moments::integrate_fhhs_moments(m, &times).map_err(runtime_err)?;
            let closed = moments::MomentSeries {
                records: times
                    .iter()
                    .map(|&t| moments::closed_fhhs_moments(m, t))
                    .collect(),
            };
            (ode, closed)
        }
        Model::Forcing(_) => {
            return Err(config_err(
                "moment integration covers the closed-form models only",
            ))
        }
    };
    let mut written = Vec::new();
    for (name, series) in [("ode", &ode), ("closed", &closed)] {
        let mut buf = Vec::new();
        series.write_csv(&mut buf).map_err(runtime_err)?;
        let path = out_dir.join(format!("{}_{name}.csv", cfg.prefix));
        write_file(&path, &buf)?;
        written.push(path);
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// fhhs
// ---------------------------------------------------------------------------

pub fn cmd_fhhs(config_text: &str, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg: FhhsConfig = parse(config_text)?;
    let model = match Model::try_from(&cfg.model).map_err(config_err)? {
        Model::Fhhs(m) => m,
        _ => return Err(config_err("the fhhs command takes a model of type 'fhhs'")),
    };
    let times = cfg.times.times();
    let mut written = Vec::new();

    // Temperature and thermal Reynolds number history.
    let mut buf = Vec::new();
    writeln!(buf, "t,temperature,re_t").map_err(|e| CliError::Runtime(e.to_string()))?;
    for &t in &times {
        let temp = model.granular_temperature(t);
        let re_t = fhhs::thermal_reynolds(temp, cfg.re_t_scale).map_err(runtime_err)?;
        writeln!(buf, "{t},{temp},{re_t}").map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let path = out_dir.join("fhhs_temperature.csv");
    write_file(&path, &buf)?;
    written.push(path);

    // Source/sink decomposition across the reachable temperature range.
    let steady = model.steady_temperature();
    let mut buf = Vec::new();
    writeln!(buf, "temperature,source,sink").map_err(|e| CliError::Runtime(e.to_string()))?;
    for k in 0..cfg.table_points {
        let temp = steady * (1.0 - 1e-9) * k as f64 / (cfg.table_points - 1) as f64;
        let (s, g) = model.source_sink(temp).map_err(runtime_err)?;
        writeln!(buf, "{temp},{s},{g}").map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let path = out_dir.join("fhhs_source_sink.csv");
    write_file(&path, &buf)?;
    written.push(path);

    // Diffusion coefficient, both routes.
    let mut buf = Vec::new();
    writeln!(
        buf,
        "t,temperature,diffusion_of_time,diffusion_of_temperature"
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    for &t in &times {
        let temp = model.granular_temperature(t);
        let d_t = model.diffusion_of_time(t).map_err(runtime_err)?;
        let d_temp = model.diffusion_of_temperature(temp).map_err(runtime_err)?;
        writeln!(buf, "{t},{temp},{d_t},{d_temp}").map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let path = out_dir.join("fhhs_diffusion.csv");
    write_file(&path, &buf)?;
    written.push(path);
    Ok(written)
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn parse_temperature_csv(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let (a, b) = (cells.next(), cells.next());
        match (
            a.and_then(|v| v.trim().parse::<f64>().ok()),
            b.and_then(|v| v.trim().parse::<f64>().ok()),
        ) {
            (Some(t), Some(temp)) => out.push((t, temp)),
            _ if ln == 0 => continue, // optional header row
            _ => {
                return Err(config_err(format!(
                    "{}: line {} is not 't,T'",
                    path.display(),
                    ln + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn cmd_fit(config_text: &str, out_dir: &Path, config_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg: FitConfig = parse(config_text)?;
    if cfg.datasets.is_empty() {
        return Err(config_err("fit needs at least one dataset"));
    }
    let opts = FitOptions {
        tau_p: cfg.tau_p,
        c2: cfg.c2,
        refine_c2: cfg.refine_c2,
    };
    let mut datasets = Vec::with_capacity(cfg.datasets.len());
    for d in &cfg.datasets {
        let mut path = PathBuf::from(&d.path);
        if path.is_relative() {
            path = config_dir.join(path);
        }
        datasets.push((d.re_m, parse_temperature_csv(&path)?));
    }
    let report = fhhs::fit_across_reynolds(&datasets, &opts).map_err(runtime_err)?;
    let path = out_dir.join("fit_report.json");
    write_file(
        &path,
        serde_json::to_string_pretty(&report)
            .map_err(config_err)?
            .as_bytes(),
    )?;
    Ok(vec![path])
}
