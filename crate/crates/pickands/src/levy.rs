//! Lévy-driven processes: a raw driver `B⁺` with Laplace exponent
//! `Φ(θ) = ln E e^{θB⁺(1)}`, its drift-compensated version
//! `W⁺(t) = B⁺(t) - Φ(1)t`, and the exponentially tilted negative side `W⁻`
//! whose exponent is `Φ(1-θ) - (1-θ)Φ(1)`. The two-sided process is
//! `W(t) = W⁺(t)` for `t >= 0` and `W(t) = W⁻(-t)` for `t < 0`, with the two
//! sides independent. Both sides satisfy `E e^{W(t)} = 1`.
//!
//! Only exponential jump laws are offered, which keeps every exponential
//! tilt inside the family (an Esscher transform maps exponential jumps to
//! exponential jumps) and excludes lattice-supported jump distributions by
//! construction.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, SamplePath};
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

/// Fixed slack used by the moment-condition validator: any positive value
/// works, a concrete one makes validation deterministic.
pub const MOMENT_EPSILON: f64 = 0.1;

/// Description of the raw Lévy driver `B⁺` per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LevySpec {
    /// Brownian motion with drift: Φ(θ) = μθ + σ²θ²/2.
    BrownianDrift { mu: f64, sigma: f64 },
    /// Compound Poisson with rate `lambda` and Exp(`rho`) jumps of sign
    /// `jump_sign`: Φ(θ) = λ(ρ/(ρ∓θ) - 1).
    CompoundPoissonExp { lambda: f64, rho: f64, jump_sign: i8 },
    /// Brownian motion plus an independent negative-jump compound Poisson
    /// part; spectrally negative.
    BrownianPlusNegativeCp { mu: f64, sigma: f64, lambda: f64, rho: f64 },
}

/// Estimation route, which determines the required finiteness strip of Φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentRoute {
    /// δ = 0 with integral normalization: Φ finite on (-2-ε, 3+ε).
    Continuous,
    /// δ > 0 or η > 0: Φ finite on (-1-ε, 2+ε).
    Grid,
}

impl MomentRoute {
    pub fn required_strip(self) -> (f64, f64) {
        match self {
            MomentRoute::Continuous => (-2.0 - MOMENT_EPSILON, 3.0 + MOMENT_EPSILON),
            MomentRoute::Grid => (-1.0 - MOMENT_EPSILON, 2.0 + MOMENT_EPSILON),
        }
    }

    /// The route implied by a grid's estimation spacings.
    pub fn for_grid(grid: &GridSpec) -> Self {
        if grid.target_delta() == 0.0 && grid.eta() == 0.0 {
            MomentRoute::Continuous
        } else {
            MomentRoute::Grid
        }
    }
}

impl LevySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LevySpec::BrownianDrift { mu, sigma } => {
                if !mu.is_finite() || !(sigma >= 0.0) || !sigma.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "brownian_drift needs finite mu and sigma >= 0, got mu={mu}, sigma={sigma}"
                    )));
                }
            }
            LevySpec::CompoundPoissonExp { lambda, rho, jump_sign } => {
                if !(lambda > 0.0) || !(rho > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "compound_poisson_exp needs lambda > 0 and rho > 0, got lambda={lambda}, rho={rho}"
                    )));
                }
                if jump_sign != 1 && jump_sign != -1 {
                    return Err(Error::InvalidSpec(format!(
                        "jump_sign must be +1 or -1, got {jump_sign}"
                    )));
                }
                if jump_sign == 1 && rho <= 1.0 {
                    return Err(Error::InvalidSpec(format!(
                        "positive exponential jumps need rho > 1 so that Φ(1) is finite, got rho={rho}"
                    )));
                }
            }
            LevySpec::BrownianPlusNegativeCp { mu, sigma, lambda, rho } => {
                if !mu.is_finite() || !(sigma >= 0.0) || !(lambda > 0.0) || !(rho > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "brownian_plus_negative_cp needs sigma >= 0, lambda > 0, rho > 0, got \
                         mu={mu}, sigma={sigma}, lambda={lambda}, rho={rho}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Open finiteness interval of Φ.
    pub fn finiteness_domain(&self) -> (f64, f64) {
        match *self {
            LevySpec::BrownianDrift { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            LevySpec::CompoundPoissonExp { rho, jump_sign, .. } => {
                if jump_sign == 1 {
                    (f64::NEG_INFINITY, rho)
                } else {
                    (-rho, f64::INFINITY)
                }
            }
            LevySpec::BrownianPlusNegativeCp { rho, .. } => (-rho, f64::INFINITY),
        }
    }

    /// Validate the moment conditions for an estimation route; the error
    /// names the violated bound.
    pub fn check_moment_conditions(&self, route: MomentRoute) -> Result<()> {
        let (need_lo, need_hi) = route.required_strip();
        let (lo, hi) = self.finiteness_domain();
        if lo > need_lo || hi < need_hi {
            return Err(Error::MomentCondition(format!(
                "route requires Φ(θ) finite on ({need_lo}, {need_hi}) but the spec's domain is \
                 ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    /// Whether the driver has no positive jumps.
    pub fn is_spectrally_negative(&self) -> bool {
        match *self {
            LevySpec::BrownianDrift { .. } => true,
            LevySpec::BrownianPlusNegativeCp { .. } => true,
            LevySpec::CompoundPoissonExp { jump_sign, .. } => jump_sign == -1,
        }
    }

    /// The raw (uncompensated) driver `B⁺` as sampleable dynamics.
    pub fn raw_dynamics(&self) -> LevyDynamics {
        match *self {
            LevySpec::BrownianDrift { mu, sigma } => LevyDynamics { drift: mu, sigma, jumps: None },
            LevySpec::CompoundPoissonExp { lambda, rho, jump_sign } => LevyDynamics {
                drift: 0.0,
                sigma: 0.0,
                jumps: Some(ExpJumps { rate: lambda, jump_rate: rho, negative: jump_sign == -1 }),
            },
            LevySpec::BrownianPlusNegativeCp { mu, sigma, lambda, rho } => LevyDynamics {
                drift: mu,
                sigma,
                jumps: Some(ExpJumps { rate: lambda, jump_rate: rho, negative: true }),
            },
        }
    }
}

/// The Laplace exponent Φ(θ) = ln E e^{θB⁺(1)}; errors name the violated
/// domain bound.
pub fn laplace_exponent(spec: &LevySpec, theta: f64) -> Result<f64> {
    spec.raw_dynamics().exponent(theta)
}

/// Compound Poisson component with exponential jump sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpJumps {
    /// Poisson arrival rate per unit time.
    pub rate: f64,
    /// Rate of the Exp jump-size law.
    pub jump_rate: f64,
    /// Jumps are -Exp(jump_rate) when true.
    pub negative: bool,
}

/// A sampleable one-sided Lévy process: deterministic drift, Brownian part
/// and optional exponential-jump compound Poisson part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyDynamics {
    pub drift: f64,
    pub sigma: f64,
    pub jumps: Option<ExpJumps>,
}

impl LevyDynamics {
    /// ln E e^{θX(1)} for this process.
    pub fn exponent(&self, theta: f64) -> Result<f64> {
        let mut psi = self.drift * theta + self.sigma * self.sigma * theta * theta / 2.0;
        if let Some(j) = self.jumps {
            let signed = if j.negative { -theta } else { theta };
            if signed >= j.jump_rate {
                let bound = if j.negative { -j.jump_rate } else { j.jump_rate };
                return Err(Error::Domain(format!(
                    "theta = {theta} outside the exponent domain: requires {} rho = {bound}",
                    if j.negative { "theta >" } else { "theta <" },
                )));
            }
            psi += j.rate * (j.jump_rate / (j.jump_rate - signed) - 1.0);
        }
        Ok(psi)
    }

    /// One increment over a time step `h`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, h: f64, rng: &mut R) -> f64 {
        let mut x = self.drift * h;
        if self.sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            x += self.sigma * h.sqrt() * z;
        }
        if let Some(j) = self.jumps {
            let count = Poisson::new(j.rate * h).expect("positive Poisson mean").sample(rng);
            let exp = Exp::new(j.jump_rate).expect("positive Exp rate");
            let mut jump_sum = 0.0;
            for _ in 0..count as u64 {
                jump_sum += exp.sample(rng);
            }
            x += if j.negative { -jump_sum } else { jump_sum };
        }
        x
    }
}

/// The compensated process `W⁺(t) = B⁺(t) - Φ(1)t`, with exponent
/// `ψ⁺(θ) = Φ(θ) - θΦ(1)` and in particular `ψ⁺(1) = 0`.
pub fn drift_compensate(spec: &LevySpec) -> Result<LevyDynamics> {
    spec.validate()?;
    let phi1 = laplace_exponent(spec, 1.0)?;
    let mut dyn_ = spec.raw_dynamics();
    dyn_.drift -= phi1;
    Ok(dyn_)
}

/// The negative-side process `W⁻`, the exponential tilt of `W⁺` with
/// exponent `ψ⁻(θ) = Φ(1-θ) - (1-θ)Φ(1)`.
///
/// Closed form per component: the Brownian part maps to Brownian with
/// variance σ² and drift -σ²/2 (the raw drift μ cancels); a compound Poisson
/// part with rate λ and Exp(ρ) jumps of sign s maps to rate λρ/(ρ-s),
/// Exp(ρ-s) jumps of sign -s, plus a drift contribution equal to the jump
/// part's ln E e^{jump part at time 1}.
pub fn tilt_negative_side(spec: &LevySpec) -> Result<LevyDynamics> {
    spec.validate()?;
    let (mut drift, mut sigma, mut jumps) = (0.0, 0.0, None);
    let apply_cp = |lambda: f64, rho: f64, negative: bool, drift: &mut f64| -> Result<ExpJumps> {
        let s = if negative { -1.0 } else { 1.0 };
        let tilted_rate = rho - s;
        if tilted_rate <= 0.0 {
            // unreachable for validated specs (positive jumps need rho > 1)
            return Err(Error::Unsupported(format!(
                "tilted jump rate rho - sign = {tilted_rate} is not positive; \
                 restrict estimation to t >= 0"
            )));
        }
        *drift += lambda * s / tilted_rate; // = Φ_jump(1)
        Ok(ExpJumps { rate: lambda * rho / tilted_rate, jump_rate: tilted_rate, negative: !negative })
    };
    match *spec {
        LevySpec::BrownianDrift { sigma: s, .. } => {
            sigma = s;
            drift = -s * s / 2.0;
        }
        LevySpec::CompoundPoissonExp { lambda, rho, jump_sign } => {
            jumps = Some(apply_cp(lambda, rho, jump_sign == -1, &mut drift)?);
        }
        LevySpec::BrownianPlusNegativeCp { sigma: s, lambda, rho, .. } => {
            sigma = s;
            drift = -s * s / 2.0;
            jumps = Some(apply_cp(lambda, rho, true, &mut drift)?);
        }
    }
    Ok(LevyDynamics { drift, sigma, jumps })
}

/// Prepared sampler for the two-sided process `W` on a fixed grid.
pub struct LevyPathSampler {
    grid: GridSpec,
    positive: LevyDynamics,
    negative: Option<LevyDynamics>,
}

impl LevyPathSampler {
    pub fn new(spec: &LevySpec, grid: GridSpec) -> Result<Self> {
        spec.validate()?;
        let positive = drift_compensate(spec)?;
        let negative = if grid.zero_index() > 0 {
            match tilt_negative_side(spec) {
                Ok(d) => Some(d),
                Err(Error::Unsupported(msg)) => {
                    return Err(Error::Unsupported(format!(
                        "two-sided grid requires a tilted negative side: {msg}"
                    )))
                }
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        Ok(Self { grid, positive, negative })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn positive_dynamics(&self) -> &LevyDynamics {
        &self.positive
    }

    pub fn negative_dynamics(&self) -> Option<&LevyDynamics> {
        self.negative.as_ref()
    }

    /// One realization of `W`: cumulative exact increments of `W⁺` to the
    /// right of 0 and an independent copy built from `W⁻` to the left.
    pub fn sample_w<R: Rng + ?Sized>(&self, rng: &mut R) -> SamplePath {
        let grid = self.grid;
        let h = grid.delta();
        let zero = grid.zero_index();
        let mut values = vec![0.0; grid.len()];
        let mut acc = 0.0;
        for i in zero + 1..grid.len() {
            acc += self.positive.sample_increment(h, rng);
            values[i] = acc;
        }
        if let Some(neg) = &self.negative {
            let mut acc = 0.0;
            for i in (0..zero).rev() {
                acc += neg.sample_increment(h, rng);
                values[i] = acc;
            }
        }
        SamplePath::from_values(grid, values).expect("sampler produced an invalid path")
    }
}

/// Two-sided sampling as a free function mirroring the sampler.
pub fn sample_levy_two_sided<R: Rng + ?Sized>(
    spec: &LevySpec,
    grid: GridSpec,
    rng: &mut R,
) -> Result<SamplePath> {
    Ok(LevyPathSampler::new(spec, grid)?.sample_w(rng))
}
