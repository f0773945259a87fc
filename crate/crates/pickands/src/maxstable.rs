//! The Brown–Resnick process `ξ_W(t) = max_i (P_i + W_i(t))` built over a
//! Poisson point process with intensity `e^{-x}dx`, its exact
//! finite-dimensional law `-ln P(sup_{t∈E} ξ_W ≤ x) = H_W(E)·e^{-x}` with
//! the capacity functional `H_W(E) = E sup_{t∈E} e^{W(t)}`, and the
//! mixed-moving-maxima normalizing constants for deterministic shape
//! functions.

use crate::error::{Error, Result};
use crate::estimators::{replicate_map, EstimateResult, Method};
use crate::grid::GridSpec;
use crate::process::PathSampler;
use crate::rng::{replicate_rng, Phase};
use crate::stats::{empirical_quantile, mean_stderr};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

/// Default tail mass for the pilot-quantile stopping rule.
pub const DEFAULT_BETA: f64 = 1e-4;
/// Default pilot-run size.
pub const DEFAULT_K_PILOT: usize = 10_000;
/// Hard cap on Poisson points per path, guarding misconfigured processes.
pub const HARD_CAP: usize = 100_000;

/// One realization of `ξ_W` on a grid, with truncation metadata.
#[derive(Debug, Clone)]
pub struct MaxStablePath {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub n_points_used: usize,
    pub truncation_bound: f64,
    pub stopped_cleanly: bool,
}

/// Prepared Brown–Resnick sampler.
///
/// The Poisson points are `P_i = -ln Γ_i` with `Γ_i` cumulative sums of
/// unit exponentials, so the `P_i` decrease. The construction stops once
/// `P_{i+1} + q ≤ min_t m(t)` where `m` is the running pointwise maximum
/// and `q` is an empirical `(1-β)` quantile of `sup_grid W` estimated from
/// a pilot run that shares no randomness with the main run. The rule is
/// approximate because `sup W` is unbounded; the bias is controlled by `β`
/// and surfaced through `stopped_cleanly`.
pub struct BrownResnickSampler {
    sampler: PathSampler,
    beta: f64,
    pilot_quantile: f64,
    hard_cap: usize,
}

impl BrownResnickSampler {
    pub fn new(sampler: PathSampler, beta: f64, k_pilot: usize, seed: u64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Contract(format!("beta must lie in (0, 1), got {beta}")));
        }
        if k_pilot == 0 {
            return Err(Error::Contract("pilot run needs at least one sample".into()));
        }
        let sups = replicate_map(k_pilot, seed, Phase::Pilot, |_, rng| {
            let w = sampler.sample_w(rng);
            w.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        });
        let pilot_quantile = empirical_quantile(&sups, 1.0 - beta);
        Ok(Self { sampler, beta, pilot_quantile, hard_cap: HARD_CAP })
    }

    pub fn grid(&self) -> &GridSpec {
        self.sampler.grid()
    }

    pub fn path_sampler(&self) -> &PathSampler {
        &self.sampler
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn pilot_quantile(&self) -> f64 {
        self.pilot_quantile
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MaxStablePath {
        let npts = self.grid().len();
        let mut maxima = vec![f64::NEG_INFINITY; npts];
        let mut min_max = f64::NEG_INFINITY;
        let mut gamma = 0.0f64;
        let mut used = 0usize;
        let stopped_cleanly = loop {
            let e: f64 = rng.sample(Exp1);
            gamma += e;
            let p = -gamma.ln();
            if used >= 1 && p + self.pilot_quantile <= min_max {
                break true;
            }
            if used >= self.hard_cap {
                break false;
            }
            let w = self.sampler.sample_w(rng);
            min_max = f64::INFINITY;
            for (m, v) in maxima.iter_mut().zip(w.values()) {
                *m = m.max(p + v);
                min_max = min_max.min(*m);
            }
            used += 1;
        };
        MaxStablePath {
            grid: *self.grid(),
            values: maxima,
            n_points_used: used,
            truncation_bound: self.pilot_quantile,
            stopped_cleanly,
        }
    }
}

/// Monte Carlo estimate of the capacity functional
/// `H_W(E) = E sup_{t∈E} e^{W(t)}` over the finite subgrid `E`
/// (times that must lie on the sampler's grid).
pub fn capacity_functional(
    sampler: &PathSampler,
    subset: &[f64],
    n: usize,
    seed: u64,
) -> Result<EstimateResult> {
    if subset.is_empty() {
        return Err(Error::Contract("capacity functional needs a non-empty subgrid".into()));
    }
    let grid = sampler.grid();
    let indices: Vec<usize> = subset
        .iter()
        .map(|&t| {
            grid.index_of(t).ok_or_else(|| {
                Error::Contract(format!("subgrid point {t} does not lie on the sampler grid"))
            })
        })
        .collect::<Result<_>>()?;
    let vals = replicate_map(n, seed, Phase::Secondary, |_, rng| {
        let w = sampler.sample_w(rng);
        let m = indices.iter().map(|&i| w.values()[i]).fold(f64::NEG_INFINITY, f64::max);
        m.exp()
    });
    let (value, stderr) = mean_stderr(&vals);
    let (lo, hi) = (
        subset.iter().cloned().fold(f64::INFINITY, f64::min),
        subset.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(EstimateResult::new(
        value,
        stderr,
        n,
        Method::Capacity,
        (lo, hi),
        format!("subgrid of {} points", subset.len()),
        seed,
    ))
}

/// One probe of the finite-dimensional-law validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidisProbe {
    pub x: f64,
    /// -ln of the empirical non-exceedance probability of `sup_E ξ` at `x`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `H_W(E)·e^{-x}` from the capacity estimate.
    pub rhs: f64,
    pub rhs_stderr: f64,
    pub z: f64,
    /// Probes with empirical probabilities outside [0.01, 0.99] are
    /// excluded from pass/fail scoring.
    pub excluded: bool,
}

/// Report of [`validate_fidis`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidisReport {
    pub probes: Vec<FidisProbe>,
    pub capacity: EstimateResult,
    pub n_xi: usize,
    /// Fraction of max-stable samples that stopped before the hard cap.
    pub clean_fraction: f64,
}

impl FidisReport {
    /// Fraction of scored probes with |z| within `limit`.
    pub fn fraction_within(&self, limit: f64) -> f64 {
        let scored: Vec<&FidisProbe> = self.probes.iter().filter(|p| !p.excluded).collect();
        if scored.is_empty() {
            return 1.0;
        }
        scored.iter().filter(|p| p.z.abs() <= limit).count() as f64 / scored.len() as f64
    }
}

/// Compare `-ln P(sup_E ξ_W ≤ x)` estimated from `n_xi` Brown–Resnick
/// samples against `H_W(E)·e^{-x}` from `n_cap` capacity samples, at each
/// probe level. The identity is exact at every finite subgrid, so z-scores
/// should be noise.
pub fn validate_fidis(
    br: &BrownResnickSampler,
    subset: &[f64],
    x_probes: &[f64],
    n_xi: usize,
    n_cap: usize,
    seed: u64,
) -> Result<FidisReport> {
    if subset.is_empty() || x_probes.is_empty() {
        return Err(Error::Contract("fidis validation needs a subgrid and probe levels".into()));
    }
    let grid = br.grid();
    let indices: Vec<usize> = subset
        .iter()
        .map(|&t| {
            grid.index_of(t).ok_or_else(|| {
                Error::Contract(format!("subgrid point {t} does not lie on the sampler grid"))
            })
        })
        .collect::<Result<_>>()?;
    let capacity = capacity_functional(br.path_sampler(), subset, n_cap, seed)?;

    let sups: Vec<(f64, bool)> = replicate_map(n_xi, seed, Phase::MaxStable, |_, rng| {
        let xi = br.sample(rng);
        let m = indices.iter().map(|&i| xi.values[i]).fold(f64::NEG_INFINITY, f64::max);
        (m, xi.stopped_cleanly)
    });
    let clean: Vec<f64> = sups.iter().filter(|s| s.1).map(|s| s.0).collect();
    let clean_fraction = clean.len() as f64 / n_xi as f64;

    let mut probes = Vec::with_capacity(x_probes.len());
    for &x in x_probes {
        let count = clean.iter().filter(|&&m| m <= x).count();
        let p_hat = count as f64 / clean.len() as f64;
        let excluded = !(0.01..=0.99).contains(&p_hat);
        let (lhs, lhs_stderr) = if p_hat > 0.0 {
            let se_p = (p_hat * (1.0 - p_hat) / clean.len() as f64).sqrt();
            (-p_hat.ln(), se_p / p_hat)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let rhs = capacity.value * (-x).exp();
        let rhs_stderr = capacity.stderr * (-x).exp();
        let z = (lhs - rhs) / (lhs_stderr * lhs_stderr + rhs_stderr * rhs_stderr).sqrt();
        probes.push(FidisProbe { x, lhs, lhs_stderr, rhs, rhs_stderr, z, excluded });
    }
    Ok(FidisReport { probes, capacity, n_xi, clean_fraction })
}

/// Deterministic shape functions with `sup F = F(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeFunction {
    /// F(t) = -t².
    Quadratic,
    /// F(t) = -a|t| with a > 0.
    Abs { a: f64 },
    /// Symmetric table of (|t|, F(|t|)) values, interpolated linearly.
    Tabulated { ts: Vec<f64>, vals: Vec<f64> },
}

impl ShapeFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            ShapeFunction::Quadratic => Ok(()),
            ShapeFunction::Abs { a } => {
                if !(*a > 0.0) {
                    return Err(Error::InvalidSpec(format!("abs shape needs a > 0, got {a}")));
                }
                Ok(())
            }
            ShapeFunction::Tabulated { ts, vals } => {
                if ts.len() != vals.len() || ts.is_empty() {
                    return Err(Error::InvalidSpec("shape table is empty or ragged".into()));
                }
                if ts[0] != 0.0 || vals[0] != 0.0 {
                    return Err(Error::InvalidSpec("shape table must start at (0, 0)".into()));
                }
                if vals.iter().any(|&v| v > 0.0) {
                    return Err(Error::InvalidSpec("shape function must be ≤ 0 everywhere".into()));
                }
                if ts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidSpec("shape abscissas must increase".into()));
                }
                Ok(())
            }
        }
    }

    /// F(|t|); tabulated shapes return None past their last knot.
    fn eval(&self, t: f64) -> Option<f64> {
        let a_t = t.abs();
        match self {
            ShapeFunction::Quadratic => Some(-a_t * a_t),
            ShapeFunction::Abs { a } => Some(-a * a_t),
            ShapeFunction::Tabulated { ts, vals } => {
                if a_t > *ts.last().unwrap() {
                    return None;
                }
                let j = ts.partition_point(|&x| x < a_t);
                if j == 0 {
                    return Some(vals[0]);
                }
                let (t0, t1) = (ts[j - 1], ts[j]);
                let (v0, v1) = (vals[j - 1], vals[j]);
                Some(v0 + (v1 - v0) * (a_t - t0) / (t1 - t0))
            }
        }
    }
}

/// The mixed-moving-maxima normalizing constant of a deterministic shape:
/// `(∫ e^{F})^{-1}` for δ = 0 and `(δ·Σ_k e^{F(kδ)})^{-1}` for δ > 0.
///
/// The integral uses adaptive Simpson quadrature on a symmetric window that
/// doubles until the estimated tail falls below `quad_tol` of the total;
/// the lattice sum truncates once terms fall below `quad_tol` of the
/// running sum. Tabulated shapes whose tail has not decayed inside the
/// table are rejected.
pub fn m3_constant_deterministic(shape: &ShapeFunction, delta: f64, quad_tol: f64) -> Result<f64> {
    shape.validate()?;
    if !(quad_tol > 0.0 && quad_tol < 1.0) {
        return Err(Error::Contract(format!("quad_tol must lie in (0, 1), got {quad_tol}")));
    }
    if delta < 0.0 {
        return Err(Error::Contract(format!("delta must be >= 0, got {delta}")));
    }
    let total = if delta == 0.0 {
        match shape {
            ShapeFunction::Tabulated { ts, vals } => {
                // trapezoid over the table; the boundary density must be
                // negligible or the tail is not summable within the table
                let mut sum = 0.0;
                for (tw, vw) in ts.windows(2).zip(vals.windows(2)) {
                    sum += (tw[1] - tw[0]) * (vw[0].exp() + vw[1].exp()) / 2.0;
                }
                let total = 2.0 * sum; // symmetric in t
                let boundary = vals.last().unwrap().exp();
                if boundary * (ts.last().unwrap() - ts[0]) > quad_tol * total {
                    return Err(Error::Domain(
                        "tabulated shape tail has not decayed inside the table".into(),
                    ));
                }
                total
            }
            _ => {
                let f = |t: f64| shape.eval(t).expect("closed-form shapes are total").exp();
                let mut half = 1.0f64;
                let mut total;
                loop {
                    total = 2.0 * adaptive_simpson(&f, 0.0, half, quad_tol / 4.0);
                    let tail = 2.0 * adaptive_simpson(&f, half, 2.0 * half, quad_tol / 4.0);
                    if tail <= quad_tol * total {
                        total += tail;
                        break;
                    }
                    half *= 2.0;
                    if half > 1e6 {
                        return Err(Error::Numeric("shape integral did not converge".into()));
                    }
                }
                total
            }
        }
    } else {
        let mut sum = 1.0; // k = 0 term: e^{F(0)} = 1
        let mut k = 1usize;
        loop {
            match shape.eval(k as f64 * delta) {
                Some(fv) => {
                    let term = fv.exp();
                    sum += 2.0 * term;
                    if 2.0 * term <= quad_tol * sum {
                        break;
                    }
                }
                None => {
                    return Err(Error::Domain(
                        "tabulated shape tail has not decayed inside the table".into(),
                    ))
                }
            }
            k += 1;
            if k > 100_000_000 {
                return Err(Error::Numeric("lattice sum did not converge".into()));
            }
        }
        delta * sum
    };
    Ok(1.0 / total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = (a + b) / 2.0;
    let lm = (a + m) / 2.0;
    let rm = (m + b) / 2.0;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let m = (a + b) / 2.0;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    let tol = rel_tol * whole.abs().max(1e-300);
    adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// One probe of the block-maxima extremal-index check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockProbe {
    pub x: f64,
    /// Inverted estimate `Ĥ(x) = -ln P̂(sup ξ ≤ x + ln T) · e^{x}`.
    pub h_hat: f64,
    pub stderr: f64,
    /// z-score against the exact finite-horizon reference `H_W(E)/T`.
    pub z_vs_capacity: f64,
    /// Relative deviation from the supplied lattice-constant estimate.
    pub rel_dev_vs_reference: f64,
    pub excluded: bool,
}

/// Report of [`extremal_index_block_check`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockCheckReport {
    pub probes: Vec<BlockProbe>,
    /// The exact finite-horizon value `H_W(E)/T` this check converges to.
    pub capacity_over_t: f64,
    pub capacity_over_t_stderr: f64,
    pub clean_fraction: f64,
    pub caveat: String,
}

/// Estimate the extremal index from block maxima of `ξ_W` on `[0, T]`:
/// `P(sup_{δZ∩[0,T]} ξ ≤ x + ln T)` inverts to `Ĥ(x) = -ln(P̂)·e^{x}`.
/// At finite `T` the exact target is `H_W(δZ∩[0,T])/T`, which is
/// upper-biased for the lattice constant; `reference` (typically a ratio
/// estimate) quantifies that bias.
pub fn extremal_index_block_check(
    br: &BrownResnickSampler,
    reference: &EstimateResult,
    x_probes: &[f64],
    n: usize,
    seed: u64,
) -> Result<BlockCheckReport> {
    let grid = *br.grid();
    let (w_lo, t_horizon) = grid.window();
    if w_lo != 0.0 || !(t_horizon > 0.0) {
        return Err(Error::Contract("block check needs a one-sided grid [0, T]".into()));
    }
    let subset: Vec<f64> = grid.points().collect();
    let capacity = capacity_functional(br.path_sampler(), &subset, n, seed)?;
    let cap_over_t = capacity.value / t_horizon;
    let cap_over_t_se = capacity.stderr / t_horizon;

    let sups: Vec<(f64, bool)> = replicate_map(n, seed, Phase::MaxStable, |_, rng| {
        let xi = br.sample(rng);
        let m = xi.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (m, xi.stopped_cleanly)
    });
    let clean: Vec<f64> = sups.iter().filter(|s| s.1).map(|s| s.0).collect();
    let clean_fraction = clean.len() as f64 / n as f64;
    let shift = t_horizon.ln();

    let mut probes = Vec::with_capacity(x_probes.len());
    for &x in x_probes {
        let level = x + shift;
        let count = clean.iter().filter(|&&m| m <= level).count();
        let p_hat = count as f64 / clean.len() as f64;
        let excluded = !(0.01..=0.99).contains(&p_hat);
        let (h_hat, stderr) = if p_hat > 0.0 {
            let se_p = (p_hat * (1.0 - p_hat) / clean.len() as f64).sqrt();
            (-p_hat.ln() * x.exp(), se_p / p_hat * x.exp())
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let z_vs_capacity =
            (h_hat - cap_over_t) / (stderr * stderr + cap_over_t_se * cap_over_t_se).sqrt();
        let rel_dev_vs_reference = (h_hat - reference.value) / reference.value;
        probes.push(BlockProbe { x, h_hat, stderr, z_vs_capacity, rel_dev_vs_reference, excluded });
    }
    Ok(BlockCheckReport {
        probes,
        capacity_over_t: cap_over_t,
        capacity_over_t_stderr: cap_over_t_se,
        clean_fraction,
        caveat: format!(
            "finite horizon T = {t_horizon}: the block estimate targets H_W(grid)/T, which is \
             upper-biased for the lattice constant"
        ),
    })
}

/// Convenience: sample one Brown–Resnick path from the stream
/// `(seed, MaxStable, index)`.
pub fn sample_brown_resnick(br: &BrownResnickSampler, seed: u64, index: u64) -> MaxStablePath {
    let mut rng = replicate_rng(seed, Phase::MaxStable, index);
    br.sample(&mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::VarianceFunction;
    use crate::process::ProcessSpec;
    use crate::stats::{gumbel_cdf, ks_critical_value, ks_statistic, std_normal_cdf};
    use approx::assert_relative_eq;

    fn alpha1() -> ProcessSpec {
        ProcessSpec::Gaussian { variance: VarianceFunction::fbm_convention(1.0).unwrap() }
    }

    #[test]
    fn single_point_grid_margin_is_exactly_gumbel() {
        let grid = GridSpec::new(1.0, (0.0, 0.0), 0.0, 0.0).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let br = BrownResnickSampler::new(sampler, DEFAULT_BETA, 1000, 5).unwrap();
        assert_eq!(br.pilot_quantile(), 0.0, "sup W over {{0}} is identically 0");
        let n = 10_000u64;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let xi = sample_brown_resnick(&br, 7, i);
                assert!(xi.stopped_cleanly);
                assert_eq!(xi.n_points_used, 1, "P_2 < P_1 always stops a single-point grid");
                xi.values[0]
            })
            .collect();
        let d = ks_statistic(&samples, gumbel_cdf);
        let crit = ks_critical_value(0.001, n as usize);
        assert!(d < crit, "Gumbel KS statistic {d} exceeds critical value {crit}");
    }

    #[test]
    fn first_point_dominates_at_origin() {
        // ξ(0) >= P_1 always since the max includes i = 1 and W_1(0) = 0
        let grid = GridSpec::lattice(1.0, (-1.0, 1.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let br = BrownResnickSampler::new(sampler, DEFAULT_BETA, 500, 3).unwrap();
        for i in 0..200 {
            let mut rng = replicate_rng(13, Phase::MaxStable, i);
            let e: f64 = rng.sample(Exp1);
            let p1 = -e.ln();
            let mut rng2 = replicate_rng(13, Phase::MaxStable, i);
            let xi = br.sample(&mut rng2);
            let zero = xi.grid.zero_index();
            assert!(xi.values[zero] >= p1 - 1e-12, "ξ(0) = {} < P_1 = {p1}", xi.values[zero]);
        }
    }

    #[test]
    fn marginal_law_is_stationary_across_the_grid() {
        let grid = GridSpec::lattice(0.5, (-1.0, 1.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let br = BrownResnickSampler::new(sampler, DEFAULT_BETA, 2000, 17).unwrap();
        let n = 10_000u64;
        let mut at_zero = Vec::with_capacity(n as usize);
        let mut at_edge = Vec::with_capacity(n as usize);
        for i in 0..n {
            let xi = sample_brown_resnick(&br, 19, i);
            if xi.stopped_cleanly {
                at_zero.push(xi.values[xi.grid.zero_index()]);
                at_edge.push(xi.values[xi.grid.len() - 1]);
            }
        }
        let d = crate::stats::ks_two_sample_statistic(&at_zero, &at_edge);
        let crit = crate::stats::ks_two_sample_critical_value(0.001, at_zero.len(), at_edge.len());
        assert!(d < crit, "stationarity KS statistic {d} exceeds {crit}");
        let d0 = ks_statistic(&at_zero, gumbel_cdf);
        assert!(d0 < ks_critical_value(0.001, at_zero.len()), "margin KS {d0}");
    }

    #[test]
    fn bivariate_maximum_law_is_shift_invariant() {
        // max(ξ(0), ξ(h)) and max(ξ(a), ξ(a+h)) share a law
        let grid = GridSpec::lattice(0.5, (-1.0, 1.5)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let br = BrownResnickSampler::new(sampler, DEFAULT_BETA, 2000, 41).unwrap();
        let n = 10_000u64;
        let (mut base, mut shifted) = (Vec::new(), Vec::new());
        for i in 0..n {
            let xi = sample_brown_resnick(&br, 43, i);
            if xi.stopped_cleanly {
                let g = xi.grid;
                let z = g.zero_index();
                base.push(xi.values[z].max(xi.values[z + 1]));
                shifted.push(xi.values[z + 2].max(xi.values[z + 3]));
            }
        }
        let d = crate::stats::ks_two_sample_statistic(&base, &shifted);
        let crit = crate::stats::ks_two_sample_critical_value(0.001, base.len(), shifted.len());
        assert!(d < crit, "bivariate stationarity KS statistic {d} exceeds {crit}");
    }

    #[test]
    fn capacity_single_point_is_one() {
        let grid = GridSpec::lattice(1.0, (0.0, 1.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let r = capacity_functional(&sampler, &[0.0], 20_000, 3).unwrap();
        assert!((r.value - 1.0).abs() <= 3.0 * r.stderr.max(1e-12), "H({{0}}) = {}", r.value);
        assert!(capacity_functional(&sampler, &[], 100, 3).is_err());
        assert!(capacity_functional(&sampler, &[0.3], 100, 3).is_err());
    }

    #[test]
    fn capacity_two_point_closed_form() {
        let grid = GridSpec::lattice(1.0, (0.0, 1.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let n = 100_000;
        let r = capacity_functional(&sampler, &[0.0, 1.0], n, 11).unwrap();
        let expected = 2.0 * std_normal_cdf(std::f64::consts::SQRT_2 / 2.0);
        assert!(
            (r.value - expected).abs() <= 3.0 * r.stderr,
            "H({{0,1}}) = {} ± {} vs {expected}",
            r.value,
            r.stderr
        );
    }

    #[test]
    fn capacity_is_shift_invariant() {
        let grid = GridSpec::lattice(1.0, (0.0, 6.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let n = 60_000;
        let base = capacity_functional(&sampler, &[0.0, 1.0], n, 13).unwrap();
        let shifted = capacity_functional(&sampler, &[5.0, 6.0], n, 14).unwrap();
        let z = base.z_against(&shifted);
        assert!(z <= 3.0, "shift invariance z = {z}: {} vs {}", base.value, shifted.value);
    }

    #[test]
    fn fidis_two_point_probes_match() {
        let grid = GridSpec::lattice(1.0, (0.0, 1.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let br = BrownResnickSampler::new(sampler, DEFAULT_BETA, DEFAULT_K_PILOT, 23).unwrap();
        let rep = validate_fidis(&br, &[0.0, 1.0], &[0.0, 1.0], 30_000, 30_000, 29).unwrap();
        assert!(rep.clean_fraction > 0.999, "clean fraction {}", rep.clean_fraction);
        for p in &rep.probes {
            assert!(p.z.is_finite(), "z must be reported even on disagreement");
            assert!(!p.excluded);
            assert!(p.z.abs() <= 3.5, "fidis probe {p:?}");
        }
    }

    #[test]
    fn fidis_excludes_extreme_probes() {
        let grid = GridSpec::new(1.0, (0.0, 0.0), 0.0, 0.0).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let br = BrownResnickSampler::new(sampler, DEFAULT_BETA, 100, 31).unwrap();
        let rep = validate_fidis(&br, &[0.0], &[-3.0, 0.0, 12.0], 5000, 5000, 37).unwrap();
        assert!(rep.probes[2].excluded, "x = 12 should be outside the estimable range");
        assert!(!rep.probes[1].excluded);
    }

    #[test]
    fn m3_constants_quadratic_and_abs() {
        let c0 = m3_constant_deterministic(&ShapeFunction::Quadratic, 0.0, 1e-8).unwrap();
        assert_relative_eq!(c0, 1.0 / std::f64::consts::PI.sqrt(), epsilon = 1e-6);
        let ch = m3_constant_deterministic(&ShapeFunction::Abs { a: 1.0 }, 0.0, 1e-8).unwrap();
        assert_relative_eq!(ch, 0.5, epsilon = 1e-6);
        // lattice sum at δ = 1: independent direct-summation oracle
        let mut oracle = 1.0;
        for k in 1..30 {
            oracle += 2.0 * (-((k * k) as f64)).exp();
        }
        let c1 = m3_constant_deterministic(&ShapeFunction::Quadratic, 1.0, 1e-12).unwrap();
        assert_relative_eq!(c1, 1.0 / oracle, epsilon = 1e-9);
        assert_relative_eq!(c1, 0.5641314, epsilon = 1e-6);
    }

    #[test]
    fn m3_lattice_constant_converges_to_integral() {
        let c0 = m3_constant_deterministic(&ShapeFunction::Quadratic, 0.0, 1e-10).unwrap();
        for delta in [0.05, 0.025] {
            let cd = m3_constant_deterministic(&ShapeFunction::Quadratic, delta, 1e-10).unwrap();
            assert!(
                (cd - c0).abs() <= 0.01,
                "lattice constant at δ = {delta} is {cd}, integral gives {c0}"
            );
        }
    }

    #[test]
    fn m3_tabulated_requires_decayed_tail() {
        let slow = ShapeFunction::Tabulated { ts: vec![0.0, 1.0], vals: vec![0.0, -0.1] };
        assert!(m3_constant_deterministic(&slow, 0.0, 1e-6).is_err());
        let ts: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| -t).collect();
        let ok = ShapeFunction::Tabulated { ts, vals };
        let c = m3_constant_deterministic(&ok, 0.0, 1e-4).unwrap();
        assert_relative_eq!(c, 0.5, epsilon = 1e-2);
    }

    #[test]
    fn shape_validation() {
        assert!(ShapeFunction::Abs { a: 0.0 }.validate().is_err());
        let bad = ShapeFunction::Tabulated { ts: vec![0.0, 1.0], vals: vec![0.0, 0.5] };
        assert!(bad.validate().is_err());
        let not_origin = ShapeFunction::Tabulated { ts: vec![0.5, 1.0], vals: vec![0.0, -1.0] };
        assert!(not_origin.validate().is_err());
    }
}
