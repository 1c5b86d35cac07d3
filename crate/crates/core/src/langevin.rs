//! Euler-Maruyama ensembles of the Wiener-driven model counterparts.
//!
//! Wiener increments are counter-based per (path, step), so an ensemble is
//! a pure function of (model, seed, dt, n_paths) no matter how paths are
//! distributed over threads.

use std::io::Write;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::models::{FhhsModel, PositionModel, VelocityModel};
use crate::moments::{MomentRecord, MomentSeries};
use crate::numeric::{pairwise_map_sum, pairwise_sum};
use crate::pdf::{freedman_diaconis_grid, histogram, CurveMeta, Grid1d, PdfCurve};
use crate::rng::{streams, NormalSeq, Stream};

/// Ensemble settings shared by all simulators.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Snapshot times; must lie on the step grid. Empty means `[t_end]`.
    pub record_times: Vec<f64>,
    pub seed: u64,
    pub mode: ExecMode,
}

impl SimConfig {
    pub fn new(n_paths: usize, dt: f64, t_end: f64, seed: u64) -> Self {
        SimConfig {
            n_paths,
            dt,
            t_end,
            record_times: Vec::new(),
            seed,
            mode: ExecMode::Auto,
        }
    }

    pub fn record_at(mut self, times: &[f64]) -> Self {
        self.record_times = times.to_vec();
        self
    }

    fn validate(&self) -> Result<(usize, Vec<usize>)> {
        if self.n_paths == 0 || self.dt <= 0.0 || self.t_end <= 0.0 {
            return Err(Error::InvalidParameter(
                "simulation needs n_paths >= 1, dt > 0 and t_end > 0".into(),
            ));
        }
        let n_steps = (self.t_end / self.dt).round() as usize;
        if n_steps == 0
            || ((n_steps as f64 * self.dt) - self.t_end).abs() > 1e-9 * self.t_end.max(1.0)
        {
            return Err(Error::InvalidParameter(format!(
                "t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        let times = if self.record_times.is_empty() {
            vec![self.t_end]
        } else {
            self.record_times.clone()
        };
        let mut indices = Vec::with_capacity(times.len());
        let mut last = 0usize;
        for &t in &times {
            let k = (t / self.dt).round() as usize;
            if (k as f64 * self.dt - t).abs() > 1e-9 * t.max(1.0) || k > n_steps {
                return Err(Error::InvalidParameter(format!(
                    "record time {t} is not on the step grid (dt = {})",
                    self.dt
                )));
            }
            if !indices.is_empty() && k <= last {
                return Err(Error::InvalidParameter(
                    "record times must be strictly increasing".into(),
                ));
            }
            indices.push(k);
            last = k;
        }
        Ok((n_steps, indices))
    }
}

/// States of an ensemble at the recorded times, laid out per path, per
/// time, per component.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub dim: usize,
    pub seed: u64,
    pub dt: f64,
    states: Vec<f64>,
}

/// First and second moments of an ensemble snapshot (unbiased variances).
#[derive(Debug, Clone, Copy)]
pub struct EnsembleMoments {
    pub mean: [f64; 2],
    pub var: [f64; 2],
    pub cov_xu: f64,
}

impl PathEnsemble {
    fn from_snapshots(
        cfg: &SimConfig,
        dim: usize,
        times: Vec<f64>,
        per_path: Vec<Vec<f64>>,
    ) -> Self {
        let n_times = times.len();
        let mut states = Vec::with_capacity(per_path.len() * n_times * dim);
        for p in per_path {
            debug_assert_eq!(p.len(), n_times * dim);
            states.extend_from_slice(&p);
        }
        PathEnsemble {
            times,
            n_paths: cfg.n_paths,
            dim,
            seed: cfg.seed,
            dt: cfg.dt,
            states,
        }
    }

    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "time {t} was not recorded (times: {:?})",
                    self.times
                ))
            })
    }

    #[inline]
    fn value(&self, path: usize, time_idx: usize, comp: usize) -> f64 {
        self.states[(path * self.times.len() + time_idx) * self.dim + comp]
    }

    /// All path values of one component at a recorded time, in path order.
    pub fn samples_at(&self, t: f64, comp: usize) -> Result<Vec<f64>> {
        if self.n_paths == 0 {
            return Err(Error::EmptyEnsemble);
        }
        if comp >= self.dim {
            return Err(Error::InvalidParameter(format!(
                "component {comp} of a {}-dimensional ensemble",
                self.dim
            )));
        }
        let idx = self.time_index(t)?;
        Ok((0..self.n_paths)
            .map(|p| self.value(p, idx, comp))
            .collect())
    }

    /// Snapshot moments with order-independent (pairwise) reductions.
    pub fn moments_at(&self, t: f64) -> Result<EnsembleMoments> {
        let idx = self.time_index(t)?;
        if self.n_paths < 2 {
            return Err(Error::EmptyEnsemble);
        }
        let n = self.n_paths as f64;
        let mut mean = [0.0; 2];
        let mut var = [0.0; 2];
        let mut cols: Vec<Vec<f64>> = Vec::new();
        for c in 0..self.dim {
            let col: Vec<f64> = (0..self.n_paths).map(|p| self.value(p, idx, c)).collect();
            mean[c] = pairwise_sum(&col) / n;
            let m = mean[c];
            var[c] = pairwise_map_sum(&col, &|x| (x - m) * (x - m)) / (n - 1.0);
            cols.push(col);
        }
        let cov_xu = if self.dim == 2 {
            let (mx, mu) = (mean[0], mean[1]);
            let prods: Vec<f64> = cols[0]
                .iter()
                .zip(&cols[1])
                .map(|(x, u)| (x - mx) * (u - mu))
                .collect();
            pairwise_sum(&prods) / (n - 1.0)
        } else {
            0.0
        };
        Ok(EnsembleMoments { mean, var, cov_xu })
    }

    /// Moment records at every recorded time, in the shared series format.
    pub fn moment_series(&self) -> Result<MomentSeries> {
        let mut records = Vec::with_capacity(self.times.len());
        for &t in &self.times {
            let m = self.moments_at(t)?;
            records.push(if self.dim == 2 {
                MomentRecord {
                    t,
                    mean_x: Some(m.mean[0]),
                    mean_u: Some(m.mean[1]),
                    var_x: Some(m.var[0]),
                    cov_xu: Some(m.cov_xu),
                    var_u: Some(m.var[1]),
                    cov_xi_x: None,
                    cov_xi_u: None,
                }
            } else {
                MomentRecord {
                    t,
                    mean_x: Some(m.mean[0]),
                    var_x: Some(m.var[0]),
                    ..MomentRecord::at(t)
                }
            });
        }
        Ok(MomentSeries { records })
    }

    /// Binary dump: header {n_paths u64, n_times u64}, then the recorded
    /// times, then the states row-major (path-major, time, component), all
    /// little-endian f64/u64.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&(self.n_paths as u64).to_le_bytes())?;
        w.write_all(&(self.times.len() as u64).to_le_bytes())?;
        for &t in &self.times {
            w.write_all(&t.to_le_bytes())?;
        }
        for &s in &self.states {
            w.write_all(&s.to_le_bytes())?;
        }
        Ok(())
    }
}

fn noise_stream(seed: u64, path: usize) -> Stream {
    Stream::new(seed, streams::WIENER_PATH + path as u64)
}

/// X_{k+1} = X_k + u_p dt + sqrt(2 D dt) eta_k.
pub fn simulate_position_langevin(model: &PositionModel, cfg: &SimConfig) -> Result<PathEnsemble> {
    let (n_steps, rec) = cfg.validate()?;
    let drift = model.drift_velocity * cfg.dt;
    let amp = (2.0 * model.diffusion * cfg.dt).sqrt();
    let per_path = map_indexed(cfg.mode, cfg.n_paths, |p| {
        let mut noise = NormalSeq::new(noise_stream(cfg.seed, p));
        let mut x = 0.0;
        let mut out = Vec::with_capacity(rec.len());
        let mut next = 0;
        record_if(&rec, &mut next, 0, &mut out, &[x]);
        for k in 0..n_steps {
            x += drift + amp * noise.next();
            record_if(&rec, &mut next, k + 1, &mut out, &[x]);
        }
        out
    });
    Ok(PathEnsemble::from_snapshots(
        cfg,
        1,
        rec.iter().map(|&k| k as f64 * cfg.dt).collect(),
        per_path,
    ))
}

/// dX = tau_p U dt, dU = -U dt + sqrt(2D) dW, explicit Euler-Maruyama.
pub fn simulate_velocity_langevin(model: &VelocityModel, cfg: &SimConfig) -> Result<PathEnsemble> {
    let (n_steps, rec) = cfg.validate()?;
    let amp = (2.0 * model.diffusion * cfg.dt).sqrt();
    let tau_dt = model.tau_p * cfg.dt;
    let per_path = map_indexed(cfg.mode, cfg.n_paths, |p| {
        let mut noise = NormalSeq::new(noise_stream(cfg.seed, p));
        let mut x = 0.0;
        let mut u = model.v0;
        let mut out = Vec::with_capacity(2 * rec.len());
        let mut next = 0;
        record_if(&rec, &mut next, 0, &mut out, &[x, u]);
        for k in 0..n_steps {
            let u_old = u;
            x += tau_dt * u_old;
            u += -u_old * cfg.dt + amp * noise.next();
            record_if(&rec, &mut next, k + 1, &mut out, &[x, u]);
        }
        out
    });
    Ok(PathEnsemble::from_snapshots(
        cfg,
        2,
        rec.iter().map(|&k| k as f64 * cfg.dt).collect(),
        per_path,
    ))
}

/// dU = -U/tau_p dt + sqrt(2 D(t)) dW with the time-dependent diffusion of
/// the heating-system model, evaluated at the step midpoint (the early-time
/// D varies quickly; midpoint sampling removes the leading bias).
pub fn simulate_fhhs_langevin(model: &FhhsModel, cfg: &SimConfig) -> Result<PathEnsemble> {
    if cfg.dt > model.tau_p / 50.0 {
        return Err(Error::InvalidParameter(format!(
            "fhhs ensemble needs dt <= tau_p/50 = {:.3e}, got {}",
            model.tau_p / 50.0,
            cfg.dt
        )));
    }
    let (n_steps, rec) = cfg.validate()?;
    // Precompute the per-step noise amplitudes sqrt(2 D(t_k + dt/2) dt).
    let amps: Vec<f64> = (0..n_steps)
        .map(|k| {
            let tm = (k as f64 + 0.5) * cfg.dt;
            (2.0 * model.diffusion_of_time(tm).unwrap_or(0.0) * cfg.dt).sqrt()
        })
        .collect();
    let decay = cfg.dt / model.tau_p;
    let per_path = map_indexed(cfg.mode, cfg.n_paths, |p| {
        let mut noise = NormalSeq::new(noise_stream(cfg.seed, p));
        let mut u = 0.0;
        let mut out = Vec::with_capacity(rec.len());
        let mut next = 0;
        record_if(&rec, &mut next, 0, &mut out, &[u]);
        for (k, amp) in amps.iter().enumerate() {
            u += -u * decay + amp * noise.next();
            record_if(&rec, &mut next, k + 1, &mut out, &[u]);
        }
        out
    });
    Ok(PathEnsemble::from_snapshots(
        cfg,
        1,
        rec.iter().map(|&k| k as f64 * cfg.dt).collect(),
        per_path,
    ))
}

#[inline]
fn record_if(rec: &[usize], next: &mut usize, k: usize, out: &mut Vec<f64>, state: &[f64]) {
    if *next < rec.len() && rec[*next] == k {
        out.extend_from_slice(state);
        *next += 1;
    }
}

/// Normalised histogram of one component at a recorded time.
pub fn empirical_pdf(
    ens: &PathEnsemble,
    t: f64,
    comp: usize,
    grid: Option<Grid1d>,
) -> Result<PdfCurve> {
    let samples = ens.samples_at(t, comp)?;
    let grid = match grid {
        Some(g) => g,
        None => freedman_diaconis_grid(&samples)?,
    };
    let meta = CurveMeta {
        model: "langevin".into(),
        time: t,
        samples: Some(ens.n_paths as u64),
        seed: Some(ens.seed),
        provenance: "mc".into(),
        ..Default::default()
    };
    histogram(&samples, grid, meta)
}

/// Exact two-sided KS statistic of an ensemble snapshot against an analytic
/// CDF.
pub fn ks_to_cdf(ens: &PathEnsemble, t: f64, comp: usize, cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let samples = ens.samples_at(t, comp)?;
    crate::pdf::ks_statistic_samples(&samples, cdf)
}
