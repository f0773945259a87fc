//! Exact sampling of centered Gaussian processes with stationary increments
//! on uniform grids, and the drift adjustment `W(t) = B(t) - σ²(t)/2` that
//! makes `E e^{W(t)} = 1`.
//!
//! The law of `B` pinned at `B(0) = 0` is determined by its variance
//! function `σ²(t) = Var(B(t))` through
//! `Cov(B(s), B(t)) = (σ²(|s|) + σ²(|t|) - σ²(|t-s|)) / 2`.
//! Power variograms `σ²(t) = scale·|t|^α` cover fractional Brownian motion
//! (Hurst index α/2); arbitrary variograms can be supplied as tables.

mod circulant;
mod dense;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SamplePath};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub use circulant::CirculantEmbedding;
pub use dense::DenseFactorization;

/// A non-decreasing function given by linear interpolation between knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedFn {
    ts: Vec<f64>,
    vals: Vec<f64>,
}

impl TabulatedFn {
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidSpec("empty table".into()));
        }
        let mut ts = Vec::with_capacity(pairs.len());
        let mut vals = Vec::with_capacity(pairs.len());
        for &(t, v) in pairs {
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::InvalidSpec(format!("non-finite table entry ({t}, {v})")));
            }
            if t < 0.0 {
                return Err(Error::InvalidSpec(format!("table abscissa {t} must be >= 0")));
            }
            if let Some(&last) = ts.last() {
                if t <= last {
                    return Err(Error::InvalidSpec(format!(
                        "table abscissas must be strictly increasing at t = {t}"
                    )));
                }
            }
            ts.push(t);
            vals.push(v);
        }
        Ok(Self { ts, vals })
    }

    pub fn max_abscissa(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    /// Evaluate at `t >= 0`; errors outside `[first knot treated as 0, last knot]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || t > self.max_abscissa() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} outside the tabulated range [0, {}]",
                self.max_abscissa()
            )));
        }
        let t = t.min(self.max_abscissa());
        // implicit knot (0, 0) when the table starts past 0
        if t <= self.ts[0] {
            if self.ts[0] == 0.0 {
                return Ok(self.vals[0]);
            }
            return Ok(self.vals[0] * t / self.ts[0]);
        }
        let j = self.ts.partition_point(|&x| x < t);
        let (t0, t1) = (self.ts[j - 1], self.ts[j]);
        let (v0, v1) = (self.vals[j - 1], self.vals[j]);
        Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
    }
}

/// Variance function σ²(t) of a centered Gaussian process with stationary
/// increments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarianceFunction {
    /// σ²(t) = scale·|t|^alpha with alpha in (0, 2].
    Power { alpha: f64, scale: f64 },
    /// σ² given by a table of (t, σ²(t)) pairs, interpolated linearly.
    Tabulated { table: TabulatedFn },
}

impl VarianceFunction {
    pub fn power(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidSpec(format!(
                "power variogram needs alpha in (0, 2] for stationary increments, got {alpha}"
            )));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::InvalidSpec(format!("power variogram scale must be >= 0, got {scale}")));
        }
        Ok(Self::Power { alpha, scale })
    }

    /// The fractional-Brownian-motion convention `W(t) = √2 B_α(t) - |t|^α`,
    /// i.e. σ²(t) = 2|t|^α.
    pub fn fbm_convention(alpha: f64) -> Result<Self> {
        Self::power(alpha, 2.0)
    }

    pub fn tabulated(pairs: &[(f64, f64)]) -> Result<Self> {
        let table = TabulatedFn::new(pairs)?;
        if table.ts[0] == 0.0 && table.vals[0] != 0.0 {
            return Err(Error::InvalidSpec("σ²(0) must be 0".into()));
        }
        if table.vals.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidSpec("σ² must be non-negative".into()));
        }
        Ok(Self::Tabulated { table })
    }

    /// Load a table from a two-column whitespace-separated text file
    /// (`t  σ²(t)` per line, `#` starts a comment).
    pub fn tabulated_from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| {
                    Error::InvalidSpec(format!("line {}: expected two columns", lineno + 1))
                })?
                .parse::<f64>()
                .map_err(|e| Error::InvalidSpec(format!("line {}: {e}", lineno + 1)))
            };
            let t = parse(cols.next())?;
            let v = parse(cols.next())?;
            if cols.next().is_some() {
                return Err(Error::InvalidSpec(format!(
                    "line {}: expected exactly two columns",
                    lineno + 1
                )));
            }
            pairs.push((t, v));
        }
        Self::tabulated(&pairs)
    }

    /// σ²(|t|).
    pub fn eval(&self, t: f64) -> Result<f64> {
        let a = t.abs();
        match self {
            Self::Power { alpha, scale } => Ok(scale * a.powf(*alpha)),
            Self::Tabulated { table } => table.eval(a),
        }
    }
}

/// Covariance of `(B(s), B(t))` implied by stationary increments and
/// `B(0) = 0`: `(σ²(|s|) + σ²(|t|) - σ²(|t-s|)) / 2`.
pub fn covariance_from_variogram(sigma2: &VarianceFunction, s: f64, t: f64) -> Result<f64> {
    Ok((sigma2.eval(s)? + sigma2.eval(t)? - sigma2.eval(t - s)?) / 2.0)
}

/// Replace `B` by the drift-adjusted process `W(t) = B(t) - σ²(|t|)/2`.
pub fn drift_adjust_gaussian(b: &SamplePath, sigma2: &VarianceFunction) -> Result<SamplePath> {
    let grid = *b.grid();
    let mut values = Vec::with_capacity(grid.len());
    for (i, &v) in b.values().iter().enumerate() {
        values.push(v - sigma2.eval(grid.point(i))? / 2.0);
    }
    values[grid.zero_index()] = 0.0;
    SamplePath::from_values(grid, values)
}

/// Variance-mixed drift adjustment `W(t) = s·B(t) - s²σ²(|t|)/2` for a
/// mixing value `s > 0` drawn independently of `b`.
pub fn sample_variance_mixed(b: &SamplePath, sigma2: &VarianceFunction, s: f64) -> Result<SamplePath> {
    if !(s > 0.0) {
        return Err(Error::Contract(format!("mixing value must be > 0, got {s}")));
    }
    let grid = *b.grid();
    let mut values = Vec::with_capacity(grid.len());
    for (i, &v) in b.values().iter().enumerate() {
        values.push(s * v - s * s * sigma2.eval(grid.point(i))? / 2.0);
    }
    values[grid.zero_index()] = 0.0;
    SamplePath::from_values(grid, values)
}

/// How a Gaussian path sampler factorizes the covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// FFT embedding of the stationary increment sequence (power variograms).
    Circulant,
    /// Dense factorization of the full covariance matrix.
    Dense,
}

/// Diagnostics recorded while preparing a sampler.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SamplerDiagnostics {
    /// Number of slightly negative circulant eigenvalues clipped to 0.
    pub clipped_eigenvalues: usize,
    /// Most negative eigenvalue encountered relative to the largest.
    pub min_eigenvalue_ratio: f64,
    /// Whether the embedding was abandoned for the dense route.
    pub dense_fallback: bool,
    /// Diagonal jitter finally applied in the dense route, if any.
    pub jitter_applied: f64,
}

enum Backend {
    Circulant(CirculantEmbedding),
    Dense(DenseFactorization),
    /// Single-point grid {0}: the path is identically 0.
    Constant,
}

/// Prepared sampler for the centered process `B` on a fixed grid.
///
/// Preparation factorizes the covariance once; `sample_b` is then cheap and
/// uses a fixed number of normal draws per path, independent of the data.
pub struct GaussianPathSampler {
    sigma2: VarianceFunction,
    grid: GridSpec,
    backend: Backend,
    diagnostics: SamplerDiagnostics,
}

impl GaussianPathSampler {
    pub fn new(sigma2: &VarianceFunction, grid: GridSpec) -> Result<Self> {
        let strategy = match sigma2 {
            VarianceFunction::Power { .. } => Strategy::Circulant,
            VarianceFunction::Tabulated { .. } => Strategy::Dense,
        };
        Self::with_strategy(sigma2, grid, strategy)
    }

    pub fn with_strategy(sigma2: &VarianceFunction, grid: GridSpec, strategy: Strategy) -> Result<Self> {
        let mut diagnostics = SamplerDiagnostics::default();
        if grid.len() == 1 {
            return Ok(Self { sigma2: sigma2.clone(), grid, backend: Backend::Constant, diagnostics });
        }
        let backend = match strategy {
            Strategy::Circulant => match CirculantEmbedding::new(sigma2, &grid, &mut diagnostics)? {
                Some(emb) => Backend::Circulant(emb),
                None => {
                    // embedding not nonnegative definite: dense fallback
                    diagnostics.dense_fallback = true;
                    Backend::Dense(DenseFactorization::new(sigma2, &grid, &mut diagnostics)?)
                }
            },
            Strategy::Dense => Backend::Dense(DenseFactorization::new(sigma2, &grid, &mut diagnostics)?),
        };
        Ok(Self { sigma2: sigma2.clone(), grid, backend, diagnostics })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn sigma2(&self) -> &VarianceFunction {
        &self.sigma2
    }

    pub fn diagnostics(&self) -> &SamplerDiagnostics {
        &self.diagnostics
    }

    pub fn strategy(&self) -> Strategy {
        match self.backend {
            Backend::Circulant(_) => Strategy::Circulant,
            _ => Strategy::Dense,
        }
    }

    /// One realization of the centered process `B` with `B(0) = 0`.
    pub fn sample_b<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        let values = match &self.backend {
            Backend::Constant => vec![0.0],
            Backend::Circulant(emb) => emb.sample(rng, self.grid.zero_index()),
            Backend::Dense(f) => f.sample(rng, self.grid.zero_index()),
        };
        SamplePath::from_values(self.grid, values).expect("sampler produced an invalid path")
    }

    /// One realization of the drifted process `W = B - σ²/2`.
    pub fn sample_w<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        let b = self.sample_b(rng);
        drift_adjust_gaussian(&b, &self.sigma2).expect("drift adjustment cannot fail on the sampler grid")
    }
}

/// Finite-range diagnostic report for the sufficient conditions under which
/// the continuous-parameter constant has a ratio representation.
///
/// All flags are heuristic proxies for liminf conditions, evaluated on a
/// sampled tail of `t_range`; they are advisory and never block estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// (a) c·ℓ(t) <= σ²(t) <= ℓ(t) on every sampled t.
    pub envelope_ok: bool,
    /// (b) min ℓ(t)/ln t and whether it exceeds 8/(c² + 8c - 8).
    pub ell_over_log_min: f64,
    pub ell_growth_ok: bool,
    /// (c) c² + 8c - 8 > 0.
    pub c_admissible: bool,
    /// (d) min σ²(t)/ln t and whether it exceeds 8.
    pub sigma2_over_log_min: f64,
    pub sigma2_growth_ok: bool,
    /// Sampled evaluation points.
    pub n_samples: usize,
    pub note: String,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.envelope_ok && self.ell_growth_ok && self.c_admissible && self.sigma2_growth_ok
    }
}

/// Check the sufficient-condition battery for `sigma2` against the envelope
/// `ell` with constant `c` in (0, 1], over log-spaced samples of `t_range`.
pub fn check_variance_conditions(
    sigma2: &VarianceFunction,
    ell: &TabulatedFn,
    c: f64,
    t_range: (f64, f64),
) -> Result<ConditionReport> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Contract(format!("c must lie in (0, 1], got {c}")));
    }
    let (lo, hi) = t_range;
    if !(lo > 1.0 && hi > lo) || !hi.is_finite() {
        return Err(Error::Contract(format!(
            "t_range must satisfy 1 < lo < hi < ∞, got ({lo}, {hi})"
        )));
    }
    let n_samples = 256usize;
    let mut envelope_ok = true;
    let mut ell_over_log_min = f64::INFINITY;
    let mut sigma2_over_log_min = f64::INFINITY;
    for i in 0..n_samples {
        let t = lo * (hi / lo).powf(i as f64 / (n_samples - 1) as f64);
        let s2 = sigma2.eval(t)?;
        let l = ell.eval(t)?;
        if !(c * l <= s2 * (1.0 + 1e-12) && s2 <= l * (1.0 + 1e-12)) {
            envelope_ok = false;
        }
        ell_over_log_min = ell_over_log_min.min(l / t.ln());
        sigma2_over_log_min = sigma2_over_log_min.min(s2 / t.ln());
    }
    let quad = c * c + 8.0 * c - 8.0;
    let c_admissible = quad > 0.0;
    let ell_growth_ok = c_admissible && ell_over_log_min > 8.0 / quad;
    let sigma2_growth_ok = sigma2_over_log_min > 8.0;
    Ok(ConditionReport {
        envelope_ok,
        ell_over_log_min,
        ell_growth_ok,
        c_admissible,
        sigma2_over_log_min,
        sigma2_growth_ok,
        n_samples,
        note: format!(
            "heuristic finite-range proxies for liminf conditions, sampled on [{lo}, {hi}]"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn covariance_trivial_values() {
        let bm = VarianceFunction::power(1.0, 1.0).unwrap();
        assert_relative_eq!(covariance_from_variogram(&bm, 1.0, 2.0).unwrap(), 1.0);
        let line = VarianceFunction::power(2.0, 1.0).unwrap();
        assert_relative_eq!(covariance_from_variogram(&line, 1.0, 2.0).unwrap(), 2.0);
        let rough = VarianceFunction::power(1.5, 2.0).unwrap();
        assert_relative_eq!(covariance_from_variogram(&rough, 1.0, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn covariance_of_negative_times_uses_the_two_sided_variogram() {
        // for fBm-type processes Cov(B(-1), B(1)) = (σ²(1)+σ²(1)-σ²(2))/2
        let v = VarianceFunction::fbm_convention(1.0).unwrap();
        assert_relative_eq!(covariance_from_variogram(&v, -1.0, 1.0).unwrap(), 0.0);
        let v2 = VarianceFunction::fbm_convention(2.0).unwrap();
        assert_relative_eq!(covariance_from_variogram(&v2, -1.0, 1.0).unwrap(), -2.0);
    }

    #[test]
    fn power_alpha_validation() {
        assert!(VarianceFunction::power(0.0, 1.0).is_err());
        assert!(VarianceFunction::power(2.5, 1.0).is_err());
        assert!(VarianceFunction::power(2.0, 1.0).is_ok());
    }

    #[test]
    fn tabulated_eval_and_domain_error() {
        let v = VarianceFunction::tabulated(&[(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)]).unwrap();
        assert_relative_eq!(v.eval(0.5).unwrap(), 1.0);
        assert_relative_eq!(v.eval(2.0).unwrap(), 3.0);
        assert_relative_eq!(v.eval(-2.0).unwrap(), 3.0);
        assert!(matches!(v.eval(5.0), Err(Error::Domain(_))));
        // σ²(0) must vanish
        assert!(VarianceFunction::tabulated(&[(0.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn tabulated_from_file_parses_comments() {
        use std::io::Write;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# variogram table").unwrap();
        writeln!(f, "0.0 0.0").unwrap();
        writeln!(f, "1.0 2.0   # knot").unwrap();
        writeln!(f, "2.0\t3.5").unwrap();
        let v = VarianceFunction::tabulated_from_file(f.path()).unwrap();
        assert_relative_eq!(v.eval(1.0).unwrap(), 2.0);
        assert_relative_eq!(v.eval(1.5).unwrap(), 2.75);
    }

    #[test]
    fn drift_adjustment_values() {
        let grid = GridSpec::new(1.0, (-1.0, 1.0), 1.0, 1.0).unwrap();
        let sigma2 = VarianceFunction::fbm_convention(1.0).unwrap();
        let b = SamplePath::from_values(grid, vec![0.0, 0.0, 0.0]).unwrap();
        let w = drift_adjust_gaussian(&b, &sigma2).unwrap();
        assert_eq!(w.value_at(1.0), Some(-1.0));
        assert_eq!(w.value_at(-1.0), Some(-1.0));
        assert_eq!(w.value_at(0.0), Some(0.0));
    }

    #[test]
    fn variance_mixing_degenerates_to_drift_adjustment_at_one() {
        let grid = GridSpec::new(0.5, (-1.0, 1.0), 0.5, 0.5).unwrap();
        let sigma2 = VarianceFunction::fbm_convention(1.0).unwrap();
        let b = SamplePath::from_values(grid, vec![0.3, -0.1, 0.0, 0.2, -0.4]).unwrap();
        let w1 = sample_variance_mixed(&b, &sigma2, 1.0).unwrap();
        let w2 = drift_adjust_gaussian(&b, &sigma2).unwrap();
        assert_eq!(w1.values(), w2.values());
        // s = 0.5, zero path: W(1) = -s²σ²(1)/2 = -0.25
        let zero = SamplePath::from_values(grid, vec![0.0; 5]).unwrap();
        let w = sample_variance_mixed(&zero, &sigma2, 0.5).unwrap();
        assert_relative_eq!(w.value_at(1.0).unwrap(), -0.25);
        assert!(sample_variance_mixed(&b, &sigma2, 0.0).is_err());
    }

    #[test]
    fn condition_report_flags() {
        // σ²(t) = 2|t| with ℓ(t) = 2t and c = 1: everything passes
        let sigma2 = VarianceFunction::fbm_convention(1.0).unwrap();
        let knots: Vec<(f64, f64)> = (0..600).map(|i| (i as f64 * 20.0, 40.0 * i as f64)).collect();
        let ell = TabulatedFn::new(&knots).unwrap();
        let rep = check_variance_conditions(&sigma2, &ell, 1.0, (10.0, 1.0e4)).unwrap();
        assert!(rep.all_pass(), "{rep:?}");

        // c = 0.5 makes c² + 8c - 8 < 0
        let rep = check_variance_conditions(&sigma2, &ell, 0.5, (10.0, 1.0e4)).unwrap();
        assert!(!rep.c_admissible && !rep.all_pass());

        // σ²(t) = ln t grows too slowly: flag (d) fails
        let log_knots: Vec<(f64, f64)> = (0..2000)
            .map(|i| {
                let t = 1.0 + i as f64 * 10.0;
                (t, t.ln())
            })
            .collect();
        let slow = VarianceFunction::tabulated(&log_knots).unwrap();
        let ell_slow = TabulatedFn::new(&log_knots).unwrap();
        let rep = check_variance_conditions(&slow, &ell_slow, 1.0, (10.0, 1.0e4)).unwrap();
        assert!(!rep.sigma2_growth_ok);
        assert!(rep.sigma2_over_log_min < 8.0);

        assert!(check_variance_conditions(&sigma2, &ell, 1.5, (10.0, 1.0e4)).is_err());
    }
}
