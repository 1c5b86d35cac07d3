//! Distributions of the time-invariant random coefficients that drive the
//! forcing terms.
//!
//! Four families are supported:
//!
//! | Family     | Parameters        | Notes                                  |
//! |------------|-------------------|----------------------------------------|
//! | normal     | mean, std         | unbounded support                      |
//! | uniform    | lo, hi            |                                        |
//! | triangular | lo, mode, hi      | mode may coincide with an endpoint     |
//! | custom     | xs, fs            | tabulated density, linear interpolation|
//!
//! All families expose exact densities, CDFs, inverse CDFs and central
//! moments; sampling is inverse-transform on counter-indexed uniforms so
//! draw `k` depends only on `(seed, k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::rng::{streams, Stream};
use crate::special::{inv_norm_cdf, norm_cdf, norm_pdf_scaled};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, PartialEq)]
enum Family {
    Normal {
        mean: f64,
        std: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Triangular {
        lo: f64,
        mode: f64,
        hi: f64,
    },
    Custom {
        xs: Vec<f64>,
        fs: Vec<f64>,
        /// Exact CDF at each node (the density is piecewise linear, so the
        /// trapezoid accumulation is exact).
        cdf: Vec<f64>,
    },
}

/// Law of a time-invariant random coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientDistribution {
    family: Family,
}

impl CoefficientDistribution {
    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        if !(mean.is_finite() && std.is_finite()) || std <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "normal requires finite mean and std > 0, got ({mean}, {std})"
            )));
        }
        Ok(Self {
            family: Family::Normal { mean, std },
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "uniform requires lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(Self {
            family: Family::Uniform { lo, hi },
        })
    }

    pub fn triangular(lo: f64, mode: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && mode.is_finite() && hi.is_finite())
            || lo >= hi
            || mode < lo
            || mode > hi
        {
            return Err(Error::InvalidParameter(format!(
                "triangular requires lo < hi and lo <= mode <= hi, got ({lo}, {mode}, {hi})"
            )));
        }
        Ok(Self {
            family: Family::Triangular { lo, mode, hi },
        })
    }

    /// Tabulated density on a strictly increasing grid. The table is
    /// normalised exactly on construction.
    pub fn custom(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != fs.len() {
            return Err(Error::InvalidParameter(
                "custom distribution needs matching xs/fs with at least 2 nodes".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "custom distribution grid must be strictly increasing".into(),
            ));
        }
        if fs.iter().any(|&f| !f.is_finite() || f < 0.0) {
            return Err(Error::InvalidParameter(
                "custom distribution density must be finite and nonnegative".into(),
            ));
        }
        let mut mass = 0.0;
        for i in 1..xs.len() {
            mass += 0.5 * (fs[i - 1] + fs[i]) * (xs[i] - xs[i - 1]);
        }
        if mass <= 0.0 {
            return Err(Error::InvalidParameter(
                "custom distribution has zero mass".into(),
            ));
        }
        let fs: Vec<f64> = fs.into_iter().map(|f| f / mass).collect();
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (fs[i - 1] + fs[i]) * (xs[i] - xs[i - 1]);
        }
        let last = *cdf.last().unwrap();
        cdf.iter_mut().for_each(|c| *c /= last);
        Ok(Self {
            family: Family::Custom { xs, fs, cdf },
        })
    }

    /// Standard normal.
    pub fn standard_normal() -> Self {
        Self::normal(0.0, 1.0).unwrap()
    }

    /// Uniform with mean 0 and variance 1.
    pub fn standard_uniform() -> Self {
        Self::uniform(-SQRT_3, SQRT_3).unwrap()
    }

    /// The left-skewed triangular law with mean 0 and variance 1: endpoints
    /// (-2*sqrt(2), sqrt(2)) with the mode at the upper endpoint. Its third
    /// central moment is -(sqrt 2)^5/10 ~ -0.5657.
    pub fn standard_triangular() -> Self {
        Self::triangular(-2.0 * SQRT_2, SQRT_2, SQRT_2).unwrap()
    }

    /// The law of `factor * X`: same shape, standard deviation multiplied by
    /// `factor`. Turns the standardized families into physical coefficient
    /// laws of a given spread.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        match &self.family {
            Family::Normal { mean, std } => Self::normal(mean * factor, std * factor),
            Family::Uniform { lo, hi } => Self::uniform(lo * factor, hi * factor),
            Family::Triangular { lo, mode, hi } => {
                Self::triangular(lo * factor, mode * factor, hi * factor)
            }
            Family::Custom { xs, fs, .. } => Self::custom(
                xs.iter().map(|x| x * factor).collect(),
                fs.iter().map(|f| f / factor).collect(),
            ),
        }
    }

    /// Probability density.
    pub fn density(&self, x: f64) -> f64 {
        match &self.family {
            Family::Normal { mean, std } => norm_pdf_scaled(x, *mean, *std),
            Family::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Triangular { lo, mode, hi } => {
                if x < *lo || x > *hi {
                    0.0
                } else if x < *mode {
                    2.0 * (x - lo) / ((hi - lo) * (mode - lo))
                } else if x > *mode {
                    2.0 * (hi - x) / ((hi - lo) * (hi - mode))
                } else {
                    2.0 / (hi - lo)
                }
            }
            Family::Custom { xs, fs, .. } => {
                if x < xs[0] || x > *xs.last().unwrap() {
                    return 0.0;
                }
                let i = segment_index(xs, x);
                let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
                fs[i] + w * (fs[i + 1] - fs[i])
            }
        }
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.family {
            Family::Normal { mean, std } => norm_cdf((x - mean) / std),
            Family::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Triangular { lo, mode, hi } => {
                if x <= *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else if x < *mode {
                    (x - lo) * (x - lo) / ((hi - lo) * (mode - lo))
                } else {
                    1.0 - (hi - x) * (hi - x) / ((hi - lo) * (hi - mode))
                }
            }
            Family::Custom { xs, fs, cdf } => {
                if x <= xs[0] {
                    return 0.0;
                }
                if x >= *xs.last().unwrap() {
                    return 1.0;
                }
                let i = segment_index(xs, x);
                let d = x - xs[i];
                let slope = (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i]);
                (cdf[i] + fs[i] * d + 0.5 * slope * d * d).clamp(0.0, 1.0)
            }
        }
    }

    /// Inverse CDF on [0, 1]; exact (up to round-off) for the bounded
    /// families, Newton-polished for the normal.
    pub fn inverse_cdf(&self, p: f64) -> f64 {
        assert!((0.0..=1.0).contains(&p), "inverse_cdf requires p in [0,1]");
        match &self.family {
            Family::Normal { mean, std } => {
                let p = p.clamp(1e-300, 1.0 - 1e-16);
                mean + std * inv_norm_cdf(p)
            }
            Family::Uniform { lo, hi } => lo + p * (hi - lo),
            Family::Triangular { lo, mode, hi } => {
                let fm = (mode - lo) / (hi - lo);
                if p <= fm {
                    lo + (p * (hi - lo) * (mode - lo)).sqrt()
                } else {
                    hi - ((1.0 - p) * (hi - lo) * (hi - mode)).sqrt()
                }
            }
            Family::Custom { xs, fs, cdf } => {
                if p <= 0.0 {
                    return xs[0];
                }
                if p >= 1.0 {
                    return *xs.last().unwrap();
                }
                let i = match cdf.binary_search_by(|c| c.partial_cmp(&p).unwrap()) {
                    Ok(i) => return xs[i],
                    Err(i) => i - 1,
                };
                let q = p - cdf[i];
                let slope = (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i]);
                let denom = fs[i] + (fs[i] * fs[i] + 2.0 * slope * q).max(0.0).sqrt();
                let d = if denom > 0.0 { 2.0 * q / denom } else { 0.0 };
                (xs[i] + d).min(xs[i + 1])
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.family {
            Family::Normal { mean, .. } => *mean,
            Family::Uniform { lo, hi } => 0.5 * (lo + hi),
            Family::Triangular { lo, mode, hi } => (lo + mode + hi) / 3.0,
            Family::Custom { xs, fs, .. } => piecewise_linear_moment(xs, fs, 0.0, 1),
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.family {
            Family::Normal { std, .. } => std * std,
            Family::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Family::Triangular { lo, mode, hi } => {
                (lo * lo + mode * mode + hi * hi - lo * mode - lo * hi - mode * hi) / 18.0
            }
            Family::Custom { .. } => self.central_moment(2).unwrap(),
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }

    /// n-th central moment, exact per family (closed form for the named
    /// families, exact piecewise integration for tabulated densities).
    pub fn central_moment(&self, order: u32) -> Result<f64> {
        if order == 0 {
            return Err(Error::InvalidParameter(
                "central moment order must be >= 1".into(),
            ));
        }
        let n = order;
        Ok(match &self.family {
            Family::Normal { std, .. } => {
                if n % 2 == 1 {
                    0.0
                } else {
                    // sigma^n (n-1)!!
                    let mut v = 1.0;
                    let mut k = n as i64 - 1;
                    while k > 0 {
                        v *= k as f64;
                        k -= 2;
                    }
                    v * std.powi(n as i32)
                }
            }
            Family::Uniform { lo, hi } => {
                if n % 2 == 1 {
                    0.0
                } else {
                    let half = 0.5 * (hi - lo);
                    half.powi(n as i32) / (n + 1) as f64
                }
            }
            Family::Triangular { lo, mode, hi } => {
                let mu = self.mean();
                triangular_raw_moment(lo - mu, mode - mu, hi - mu, n)
            }
            Family::Custom { xs, fs, .. } => {
                let mu = self.mean();
                piecewise_linear_moment(xs, fs, mu, n)
            }
        })
    }

    /// True when the law has mean 0 and variance 1 (to 1e-12).
    pub fn is_standardized(&self) -> bool {
        self.mean().abs() < 1e-12 && (self.variance() - 1.0).abs() < 1e-12
    }

    /// Support of the density; the normal reports infinite endpoints.
    pub fn support(&self) -> (f64, f64) {
        match &self.family {
            Family::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Uniform { lo, hi } => (*lo, *hi),
            Family::Triangular { lo, hi, .. } => (*lo, *hi),
            Family::Custom { xs, .. } => (xs[0], *xs.last().unwrap()),
        }
    }

    /// Finite interval carrying all but ~1e-40 of the mass; used to truncate
    /// quadratures over the coefficient.
    pub fn quadrature_support(&self) -> (f64, f64) {
        match &self.family {
            Family::Normal { mean, std } => (mean - 13.5 * std, mean + 13.5 * std),
            _ => self.support(),
        }
    }

    /// `n` i.i.d. draws by inverse-transform sampling. Draw `k` is a pure
    /// function of `(seed, k)`: it does not depend on `n` or on evaluation
    /// order, so parallel ensembles are reproducible.
    pub fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let stream = Stream::new(seed, streams::COEFFICIENT);
        map_indexed(ExecMode::Auto, n, |k| self.sample_at(&stream, k as u64))
    }

    /// Single indexed draw from a caller-provided stream.
    pub fn sample_at(&self, stream: &Stream, k: u64) -> f64 {
        self.inverse_cdf(stream.uniform(k))
    }
}

fn segment_index(xs: &[f64], x: f64) -> usize {
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(xs.len() - 2),
        Err(i) => i.saturating_sub(1).min(xs.len() - 2),
    }
}

/// Raw n-th moment of a triangular law with vertices (a, c, b), c the mode:
/// E[X^n] = 2/((b-a)(n+1)(n+2)) [ (b^{n+2}-c^{n+2})/(b-c) - (c^{n+2}-a^{n+2})/(c-a) ].
fn triangular_raw_moment(a: f64, c: f64, b: f64, n: u32) -> f64 {
    let k = n + 2;
    let diff_quot = |u: f64, v: f64| -> f64 {
        // (v^k - u^k)/(v - u), with the confluent limit k * u^{k-1}.
        if (v - u).abs() <= 1e-12 * u.abs().max(v.abs()).max(1.0) {
            k as f64 * (0.5 * (u + v)).powi((k - 1) as i32)
        } else {
            (v.powi(k as i32) - u.powi(k as i32)) / (v - u)
        }
    };
    2.0 / ((b - a) * (n + 1) as f64 * (n + 2) as f64) * (diff_quot(c, b) - diff_quot(a, c))
}

/// Exact integral of (x - mu)^n f(x) dx for a piecewise-linear density.
fn piecewise_linear_moment(xs: &[f64], fs: &[f64], mu: f64, n: u32) -> f64 {
    let mut total = 0.0;
    for i in 1..xs.len() {
        let (y0, y1) = (xs[i - 1] - mu, xs[i] - mu);
        let slope = (fs[i] - fs[i - 1]) / (xs[i] - xs[i - 1]);
        let c0 = fs[i - 1] - slope * y0;
        let p1 = (y1.powi((n + 1) as i32) - y0.powi((n + 1) as i32)) / (n + 1) as f64;
        let p2 = (y1.powi((n + 2) as i32) - y0.powi((n + 2) as i32)) / (n + 2) as f64;
        total += c0 * p1 + slope * p2;
    }
    total
}

// ---------------------------------------------------------------------------
// Config representation
// ---------------------------------------------------------------------------

/// Wire format: `{"family": "...", "params": [...]}` with parameter order
/// normal [mean, std], uniform [lo, hi], triangular [lo, mode, hi]; the
/// custom family uses explicit `xs`/`fs` arrays instead of `params`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs: Option<Vec<f64>>,
}

impl TryFrom<&DistSpec> for CoefficientDistribution {
    type Error = Error;

    fn try_from(spec: &DistSpec) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if spec.params.len() != n {
                Err(Error::InvalidParameter(format!(
                    "family '{}' takes {n} params, got {}",
                    spec.family,
                    spec.params.len()
                )))
            } else {
                Ok(())
            }
        };
        match spec.family.as_str() {
            "normal" => {
                need(2)?;
                CoefficientDistribution::normal(spec.params[0], spec.params[1])
            }
            "uniform" => {
                need(2)?;
                CoefficientDistribution::uniform(spec.params[0], spec.params[1])
            }
            "triangular" => {
                need(3)?;
                CoefficientDistribution::triangular(spec.params[0], spec.params[1], spec.params[2])
            }
            "custom" => match (&spec.xs, &spec.fs) {
                (Some(xs), Some(fs)) => CoefficientDistribution::custom(xs.clone(), fs.clone()),
                _ => Err(Error::InvalidParameter(
                    "custom family requires xs and fs arrays".into(),
                )),
            },
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution family '{other}'"
            ))),
        }
    }
}

impl From<&CoefficientDistribution> for DistSpec {
    fn from(d: &CoefficientDistribution) -> Self {
        match &d.family {
            Family::Normal { mean, std } => DistSpec {
                family: "normal".into(),
                params: vec![*mean, *std],
                xs: None,
                fs: None,
            },
            Family::Uniform { lo, hi } => DistSpec {
                family: "uniform".into(),
                params: vec![*lo, *hi],
                xs: None,
                fs: None,
            },
            Family::Triangular { lo, mode, hi } => DistSpec {
                family: "triangular".into(),
                params: vec![*lo, *mode, *hi],
                xs: None,
                fs: None,
            },
            Family::Custom { xs, fs, .. } => DistSpec {
                family: "custom".into(),
                params: vec![],
                xs: Some(xs.clone()),
                fs: Some(fs.clone()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{sample_mean, sample_skewness, sample_variance, GaussLegendre};
    use crate::pdf::ks_statistic_samples;
    use proptest::prelude::*;

    fn standard_families() -> Vec<(&'static str, CoefficientDistribution)> {
        vec![
            ("normal", CoefficientDistribution::standard_normal()),
            ("uniform", CoefficientDistribution::standard_uniform()),
            ("triangular", CoefficientDistribution::standard_triangular()),
        ]
    }

    #[test]
    fn density_reference_values() {
        let n = CoefficientDistribution::standard_normal();
        assert!((n.density(0.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
        let u = CoefficientDistribution::standard_uniform();
        assert!((u.density(0.0) - 0.288_675_134_594_812_9).abs() < 1e-12);
        let t = CoefficientDistribution::standard_triangular();
        assert!((t.density(SQRT_2) - 0.471_404_520_791_031_7).abs() < 1e-12);
        assert_eq!(u.density(2.0), 0.0);
        assert_eq!(t.density(1.5), 0.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(CoefficientDistribution::uniform(1.0, 1.0).is_err());
        assert!(CoefficientDistribution::uniform(2.0, 1.0).is_err());
        assert!(CoefficientDistribution::triangular(0.0, 2.0, 1.0).is_err());
        assert!(CoefficientDistribution::normal(0.0, 0.0).is_err());
        assert!(CoefficientDistribution::custom(vec![0.0, 1.0], vec![-1.0, 1.0]).is_err());
        assert!(CoefficientDistribution::custom(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn standardized_families_have_unit_moments() {
        for (name, d) in standard_families() {
            assert!(d.is_standardized(), "{name}");
            // Quadrature cross-check of the analytic mean/variance.
            let gl = GaussLegendre::new(40);
            let (lo, hi) = d.quadrature_support();
            let mass = gl.integrate_panels(|x| d.density(x), lo, hi, 32);
            let mean = gl.integrate_panels(|x| x * d.density(x), lo, hi, 32);
            let var = gl.integrate_panels(|x| x * x * d.density(x), lo, hi, 32);
            assert!((mass - 1.0).abs() < 1e-9, "{name} mass = {mass}");
            assert!(mean.abs() < 1e-9, "{name} mean = {mean}");
            assert!((var - 1.0).abs() < 1e-8, "{name} var = {var}");
        }
    }

    #[test]
    fn central_moments_against_quadrature() {
        let gl = GaussLegendre::new(40);
        for (name, d) in standard_families() {
            let (lo, hi) = d.quadrature_support();
            for order in [2u32, 3, 4, 5, 6] {
                let analytic = d.central_moment(order).unwrap();
                let mu = d.mean();
                let quad =
                    gl.integrate_panels(|x| (x - mu).powi(order as i32) * d.density(x), lo, hi, 64);
                assert!(
                    (analytic - quad).abs() < 1e-8 * quad.abs().max(1.0),
                    "{name} order {order}: {analytic} vs {quad}"
                );
            }
        }
        // Frozen values.
        let u = CoefficientDistribution::standard_uniform();
        assert!((u.central_moment(4).unwrap() - 1.8).abs() < 1e-12);
        let t = CoefficientDistribution::standard_triangular();
        assert!((t.central_moment(3).unwrap() + 0.565_685_424_949_238).abs() < 1e-12);
        let n = CoefficientDistribution::standard_normal();
        assert_eq!(n.central_moment(3).unwrap(), 0.0);
        assert!((n.central_moment(4).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn odd_moments_vanish_for_symmetric_families() {
        for (_, d) in standard_families().into_iter().take(2) {
            assert!(d.central_moment(3).unwrap().abs() < 1e-12);
            assert!(d.central_moment(5).unwrap().abs() < 1e-12);
        }
        let t = CoefficientDistribution::standard_triangular();
        assert!(t.central_moment(3).unwrap() < 0.0);
    }

    #[test]
    fn sampling_stays_in_support() {
        let u = CoefficientDistribution::standard_uniform();
        for x in u.sample(321, 10_000) {
            assert!((-SQRT_3..=SQRT_3).contains(&x));
        }
    }

    #[test]
    fn sampling_moments_normal() {
        let d = CoefficientDistribution::standard_normal();
        let xs = d.sample(7, 1_000_000);
        assert!(sample_mean(&xs).abs() < 5e-3);
        assert!((sample_variance(&xs) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn sampling_skewness_triangular() {
        let d = CoefficientDistribution::standard_triangular();
        let xs = d.sample(3, 1_000_000);
        assert!((sample_skewness(&xs) + 0.5657).abs() < 0.02);
    }

    #[test]
    fn sampling_is_index_stable() {
        let d = CoefficientDistribution::standard_triangular();
        let a = d.sample(11, 100);
        let b = d.sample(11, 10_000);
        assert_eq!(&a[..], &b[..100]);
    }

    #[test]
    fn empirical_cdf_close_to_analytic() {
        for (name, d) in standard_families() {
            let xs = d.sample(99, 100_000);
            let ks = ks_statistic_samples(&xs, |x| d.cdf(x)).unwrap();
            assert!(ks < 0.01, "{name}: KS = {ks}");
        }
    }

    #[test]
    fn custom_family_matches_its_table() {
        // Tent density on [-1, 1].
        let xs: Vec<f64> = (0..101).map(|i| -1.0 + 0.02 * i as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|x| 1.0 - x.abs()).collect();
        let d = CoefficientDistribution::custom(xs, fs).unwrap();
        assert!((d.density(0.0) - 1.0).abs() < 1e-12);
        assert!(d.mean().abs() < 1e-12);
        assert!((d.variance() - 1.0 / 6.0).abs() < 1e-12);
        assert!((d.cdf(0.0) - 0.5).abs() < 1e-12);
        let ks = ks_statistic_samples(&d.sample(5, 50_000), |x| d.cdf(x)).unwrap();
        assert!(ks < 0.015, "KS = {ks}");
    }

    #[test]
    fn dist_spec_round_trip() {
        for (_, d) in standard_families() {
            let spec = DistSpec::from(&d);
            let back = CoefficientDistribution::try_from(&spec).unwrap();
            assert_eq!(d, back);
        }
        let json = r#"{"family":"triangular","params":[-2.8284271247461903,1.4142135623730951,1.4142135623730951]}"#;
        let spec: DistSpec = serde_json::from_str(json).unwrap();
        let d = CoefficientDistribution::try_from(&spec).unwrap();
        assert!(d.is_standardized());
        assert!(serde_json::from_str::<DistSpec>(
            r#"{"family":"normal","params":[0,1],"bogus":3}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn inverse_cdf_round_trip_uniform(lo in -5.0..5.0f64, width in 0.1..10.0f64, p in 1e-6..0.999999f64) {
            let d = CoefficientDistribution::uniform(lo, lo + width).unwrap();
            let x = d.inverse_cdf(p);
            prop_assert!((d.cdf(x) - p).abs() < 1e-10);
        }

        #[test]
        fn inverse_cdf_round_trip_triangular(lo in -5.0..0.0f64, span in 0.5..8.0f64, frac in 0.0..=1.0f64, p in 1e-6..0.999999f64) {
            let d = CoefficientDistribution::triangular(lo, lo + frac * span, lo + span).unwrap();
            let x = d.inverse_cdf(p);
            prop_assert!((d.cdf(x) - p).abs() < 1e-10);
        }

        #[test]
        fn inverse_cdf_round_trip_normal(mean in -3.0..3.0f64, std in 0.1..4.0f64, p in 1e-9..0.999999f64) {
            let d = CoefficientDistribution::normal(mean, std).unwrap();
            let x = d.inverse_cdf(p);
            prop_assert!((d.cdf(x) - p).abs() < 1e-10);
        }

        #[test]
        fn density_nonnegative_everywhere(x in -20.0..20.0f64) {
            for (_, d) in super::tests::standard_families() {
                prop_assert!(d.density(x) >= 0.0);
            }
        }
    }
}
