//! Unified process descriptions consumed by the estimators: a tagged spec
//! of the driving process `W`, and a prepared sampler that owns whatever
//! factorization the spec requires.

use crate::error::{Error, Result};
use crate::gaussian::{GaussianPathSampler, SamplerDiagnostics, Strategy, VarianceFunction};
use crate::grid::{GridSpec, SamplePath};
use crate::levy::{LevyPathSampler, LevySpec};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Law of the independent mixing variable `S > 0` of a variance-mixed
/// process `W(t) = S·B(t) - S²σ²(t)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MixingLaw {
    Fixed { s: f64 },
    TwoPoint { lo: f64, hi: f64, p_lo: f64 },
}

impl MixingLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MixingLaw::Fixed { s } => {
                if !(s > 0.0) {
                    return Err(Error::InvalidSpec(format!("mixing value must be > 0, got {s}")));
                }
            }
            MixingLaw::TwoPoint { lo, hi, p_lo } => {
                if !(lo > 0.0 && hi > 0.0 && (0.0..=1.0).contains(&p_lo)) {
                    return Err(Error::InvalidSpec(format!(
                        "two-point mixing needs lo, hi > 0 and p_lo in [0, 1], got \
                         lo={lo}, hi={hi}, p_lo={p_lo}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MixingLaw::Fixed { s } => s,
            MixingLaw::TwoPoint { lo, hi, p_lo } => {
                if rng.random::<f64>() < p_lo {
                    lo
                } else {
                    hi
                }
            }
        }
    }
}

/// Tagged description of the driving process `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessSpec {
    /// `W(t) = B(t) - σ²(t)/2` with `B` centered Gaussian with stationary
    /// increments and variance function σ².
    Gaussian { variance: VarianceFunction },
    /// `W(t) = S·B(t) - S²σ²(t)/2` with an independent mixing variable `S`.
    VarianceMixed { variance: VarianceFunction, mixing: MixingLaw },
    /// Two-sided Lévy-driven `W` built from a drift-compensated driver and
    /// its exponential tilt.
    Levy { spec: LevySpec },
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::Gaussian { .. } => Ok(()),
            ProcessSpec::VarianceMixed { mixing, .. } => mixing.validate(),
            ProcessSpec::Levy { spec } => spec.validate(),
        }
    }

    /// Half-width L of the default symmetric window: the smallest grid
    /// multiple at which the downward drift of `W(L)` dominates six of its
    /// standard deviations, so the tail beyond the window is negligible.
    pub fn default_window_halfwidth(&self, delta: f64) -> Result<f64> {
        let dominated = |l: f64| -> Result<bool> {
            match self {
                ProcessSpec::Gaussian { variance } => {
                    let v = variance.eval(l)?;
                    Ok(v / 2.0 >= 6.0 * v.sqrt())
                }
                ProcessSpec::VarianceMixed { variance, mixing } => {
                    // require domination for the smallest mixing value
                    let s = match *mixing {
                        MixingLaw::Fixed { s } => s,
                        MixingLaw::TwoPoint { lo, hi, .. } => lo.min(hi),
                    };
                    let v = variance.eval(l)?;
                    Ok(s * s * v / 2.0 >= 6.0 * s * v.sqrt())
                }
                ProcessSpec::Levy { spec } => {
                    let dyn_ = crate::levy::drift_compensate(spec)?;
                    // mean rate ψ'(0) < 0 and variance rate ψ''(0) per unit time
                    let eps = 1e-5;
                    let d0 = dyn_.exponent(0.0)?;
                    let dp = dyn_.exponent(eps)?;
                    let dm = dyn_.exponent(-eps)?;
                    let mean_rate = (dp - dm) / (2.0 * eps);
                    let var_rate = (dp - 2.0 * d0 + dm) / (eps * eps);
                    Ok(-mean_rate * l >= 6.0 * (var_rate * l).sqrt())
                }
            }
        };
        let mut l = delta;
        while !dominated(l)? {
            l += delta;
            if l > 1e7 * delta {
                return Err(Error::Numeric(
                    "default window rule did not terminate; supply a window explicitly".into(),
                ));
            }
        }
        Ok(l)
    }
}

impl fmt::Display for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessSpec::Gaussian { variance } => match variance {
                VarianceFunction::Power { alpha, scale } => {
                    write!(f, "gaussian:power(alpha={alpha},scale={scale})")
                }
                VarianceFunction::Tabulated { .. } => write!(f, "gaussian:tabulated"),
            },
            ProcessSpec::VarianceMixed { variance, mixing } => {
                let v = match variance {
                    VarianceFunction::Power { alpha, scale } => {
                        format!("power(alpha={alpha},scale={scale})")
                    }
                    VarianceFunction::Tabulated { .. } => "tabulated".to_string(),
                };
                match mixing {
                    MixingLaw::Fixed { s } => write!(f, "mixed:{v}:fixed(s={s})"),
                    MixingLaw::TwoPoint { lo, hi, p_lo } => {
                        write!(f, "mixed:{v}:two_point({lo},{hi},p={p_lo})")
                    }
                }
            }
            ProcessSpec::Levy { spec } => match spec {
                LevySpec::BrownianDrift { mu, sigma } => {
                    write!(f, "levy:brownian_drift(mu={mu},sigma={sigma})")
                }
                LevySpec::CompoundPoissonExp { lambda, rho, jump_sign } => {
                    write!(f, "levy:compound_poisson_exp(lambda={lambda},rho={rho},sign={jump_sign})")
                }
                LevySpec::BrownianPlusNegativeCp { mu, sigma, lambda, rho } => write!(
                    f,
                    "levy:brownian_plus_negative_cp(mu={mu},sigma={sigma},lambda={lambda},rho={rho})"
                ),
            },
        }
    }
}

enum SamplerKind {
    Gaussian(GaussianPathSampler),
    VarianceMixed(GaussianPathSampler, MixingLaw),
    Levy(LevyPathSampler),
}

/// Prepared sampler for `W` on a fixed grid. Immutable after construction
/// and safe to share across worker threads; all randomness comes from the
/// caller-supplied generator.
pub struct PathSampler {
    kind: SamplerKind,
    grid: GridSpec,
}

impl PathSampler {
    pub fn new(process: &ProcessSpec, grid: GridSpec) -> Result<Self> {
        process.validate()?;
        let kind = match process {
            ProcessSpec::Gaussian { variance } => {
                SamplerKind::Gaussian(GaussianPathSampler::new(variance, grid)?)
            }
            ProcessSpec::VarianceMixed { variance, mixing } => {
                SamplerKind::VarianceMixed(GaussianPathSampler::new(variance, grid)?, *mixing)
            }
            ProcessSpec::Levy { spec } => SamplerKind::Levy(LevyPathSampler::new(spec, grid)?),
        };
        Ok(Self { kind, grid })
    }

    /// Force a Gaussian factorization strategy (used to compare the
    /// circulant and dense routes on the same spec).
    pub fn with_gaussian_strategy(
        process: &ProcessSpec,
        grid: GridSpec,
        strategy: Strategy,
    ) -> Result<Self> {
        process.validate()?;
        let kind = match process {
            ProcessSpec::Gaussian { variance } => SamplerKind::Gaussian(
                GaussianPathSampler::with_strategy(variance, grid, strategy)?,
            ),
            ProcessSpec::VarianceMixed { variance, mixing } => SamplerKind::VarianceMixed(
                GaussianPathSampler::with_strategy(variance, grid, strategy)?,
                *mixing,
            ),
            _ => return Err(Error::Contract("strategy override applies to Gaussian specs".into())),
        };
        Ok(Self { kind, grid })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn diagnostics(&self) -> Option<&SamplerDiagnostics> {
        match &self.kind {
            SamplerKind::Gaussian(g) | SamplerKind::VarianceMixed(g, _) => Some(g.diagnostics()),
            SamplerKind::Levy(_) => None,
        }
    }

    /// One realization of the drifted process `W` (so `E e^{W(t)} = 1`).
    pub fn sample_w<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        match &self.kind {
            SamplerKind::Gaussian(g) => g.sample_w(rng),
            SamplerKind::VarianceMixed(g, mixing) => {
                let s = mixing.sample(rng);
                let b = g.sample_b(rng);
                crate::gaussian::sample_variance_mixed(&b, g.sigma2(), s)
                    .expect("mixing law yielded s <= 0")
            }
            SamplerKind::Levy(l) => l.sample_w(rng),
        }
    }
}
