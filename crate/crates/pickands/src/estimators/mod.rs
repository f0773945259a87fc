//! Monte Carlo estimators for the generalized Pickands constant `H_W^δ`.
//!
//! Three routes are implemented:
//!
//! * [`estimate_limit_definition`] — the finite-horizon proxy
//!   `(1/T) E sup_{t ∈ δZ ∩ [0,T]} e^{W(t)}`, an upper-biased
//!   approximation that decreases to the constant by subadditivity;
//! * [`estimate_dieker_yakir`] — the limit-free ratio `E[M^δ / S^η]`
//!   with `M^δ` the lattice supremum of `e^W` and `S^η` the η-spaced sum
//!   (trapezoid integral when η = 0);
//! * [`estimate_grid_attainment`] — `(1/δ) P(sup_{t ∈ δZ} W(t) = 0)`,
//!   the event that the lattice supremum of `W` is attained at the origin.
//!
//! Structural diagnostics (subadditivity along doublings, the tilt-shift
//! identity, the resolvent identity) live in [`diagnostics`]; lattice-bias
//! removal lives in [`richardson`].

pub mod diagnostics;
pub mod richardson;

use crate::error::{Error, Result};
use crate::grid::SamplePath;
use crate::process::PathSampler;
use crate::rng::{replicate_rng, Phase};
use crate::stats::mean_stderr;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diagnostics::{
    fekete_diagnostic, resolvent_identity_check, tilt_shift_check, TiltFunctional,
};
pub use richardson::richardson_extrapolate;

/// Estimation route tags carried by every result record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Limit,
    DiekerYakir,
    GridAttainment,
    Capacity,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Limit => "limit",
            Method::DiekerYakir => "dieker_yakir",
            Method::GridAttainment => "grid_attainment",
            Method::Capacity => "capacity",
        };
        f.write_str(s)
    }
}

/// A point estimate with its replicate-level uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub ci95: (f64, f64),
    pub method: Method,
    pub window: (f64, f64),
    pub truncation_note: String,
    pub seed: u64,
}

impl EstimateResult {
    pub fn new(
        value: f64,
        stderr: f64,
        n: usize,
        method: Method,
        window: (f64, f64),
        truncation_note: String,
        seed: u64,
    ) -> Self {
        let ci95 = (value - 1.96 * stderr, value + 1.96 * stderr);
        Self { value, stderr, n, ci95, method, window, truncation_note, seed }
    }

    /// |a - b| in units of the combined standard error.
    pub fn z_against(&self, other: &EstimateResult) -> f64 {
        let se = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        (self.value - other.value).abs() / se
    }
}

/// Per-path functionals entering the ratio estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateFunctionals {
    /// `M^δ`: supremum of `e^W` over the δ-subgrid (≥ 1, the grid holds 0).
    pub m_delta: f64,
    /// `S^η`: η-spaced sum of `e^W` (η > 0) or trapezoid integral (η = 0).
    pub s_eta: f64,
    /// Whether the supremum of `W` over the δ-subgrid is attained at t = 0,
    /// i.e. every other subgrid value is ≤ 0 (ties count as attainment).
    pub argmax_at_zero: bool,
}

/// Compute `M`, `S` and the attainment flag over an inclusive index range.
/// Subgrid membership is alignment with the zero index, so restricted
/// windows stay on the same lattice.
pub(crate) fn functionals_on_range(
    values: &[f64],
    zero: usize,
    lo: usize,
    hi: usize,
    target_step: usize,
    eta_step: usize,
    delta: f64,
) -> ReplicateFunctionals {
    debug_assert!(lo <= hi && hi < values.len());
    let aligned = |i: usize, step: usize| -> bool {
        step <= 1 || (i as i64 - zero as i64).rem_euclid(step as i64) == 0
    };
    let mut w_max = f64::NEG_INFINITY;
    let mut argmax_at_zero = true;
    for i in lo..=hi {
        if !aligned(i, target_step) {
            continue;
        }
        let v = values[i];
        if v > w_max {
            w_max = v;
        }
        if i != zero && v > 0.0 {
            argmax_at_zero = false;
        }
    }
    let s_eta = if eta_step == 0 {
        if hi == lo {
            // degenerate single-cell quadrature
            delta * values[lo].exp()
        } else {
            let mut sum = 0.0;
            for v in &values[lo..=hi] {
                sum += v.exp();
            }
            delta * (sum - (values[lo].exp() + values[hi].exp()) / 2.0)
        }
    } else {
        let mut sum = 0.0;
        for i in lo..=hi {
            if aligned(i, eta_step) {
                sum += values[i].exp();
            }
        }
        (eta_step as f64 * delta) * sum
    };
    ReplicateFunctionals { m_delta: w_max.exp(), s_eta, argmax_at_zero }
}

/// The functionals of one sampled path, with estimation spacing
/// `target_delta` (0 = full fine grid) and sum spacing `eta` (0 = trapezoid
/// integral). Both must be integer multiples of the path's grid step.
pub fn path_functionals(w: &SamplePath, target_delta: f64, eta: f64) -> Result<ReplicateFunctionals> {
    let grid = w.grid();
    let step_of = |name: &str, x: f64| -> Result<usize> {
        if x == 0.0 {
            return Ok(0);
        }
        match grid.steps_of(x) {
            Some(k) if k >= 1 => Ok(k as usize),
            _ => Err(Error::Contract(format!(
                "{name} = {x} is not a positive integer multiple of the grid step {}",
                grid.delta()
            ))),
        }
    };
    let target_step = step_of("target_delta", target_delta)?;
    let eta_step = step_of("eta", eta)?;
    Ok(functionals_on_range(
        w.values(),
        grid.zero_index(),
        0,
        grid.len() - 1,
        target_step,
        eta_step,
        grid.delta(),
    ))
}

/// Ordered parallel map over replicates: replicate `i` always draws from
/// the stream `(seed, phase, i)`, and results are collected in index order,
/// so any reduction over the output is independent of the worker count.
pub(crate) fn replicate_map<T, F>(n: usize, seed: u64, phase: Phase, eval: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_rng(seed, phase, i);
            eval(i, &mut rng)
        })
        .collect()
}

/// Finite-horizon proxy `(1/T) E sup_{t ∈ δZ ∩ [0,T]} e^{W(t)}` on a
/// one-sided grid `[0, T]`. Upper-biased for the constant; the horizon is
/// recorded in the truncation note.
pub fn estimate_limit_definition(
    sampler: &PathSampler,
    t_horizon: f64,
    n: usize,
    seed: u64,
) -> Result<EstimateResult> {
    let grid = *sampler.grid();
    if n < 100 {
        return Err(Error::Contract(format!(
            "limit-definition estimator needs n >= 100 replicates for a meaningful stderr, got {n}"
        )));
    }
    if grid.window().0 != 0.0 {
        return Err(Error::Contract("limit-definition estimator needs a one-sided grid [0, T]".into()));
    }
    if !(t_horizon > 0.0) || grid.window().1 > t_horizon {
        return Err(Error::Contract(format!(
            "horizon T = {t_horizon} must be positive and cover the grid window {:?}",
            grid.window()
        )));
    }
    let zero = grid.zero_index();
    let last = grid.len() - 1;
    let target_step = grid.target_step();
    let vals = replicate_map(n, seed, Phase::Main, |_, rng| {
        let w = sampler.sample_w(rng);
        let f = functionals_on_range(w.values(), zero, 0, last, target_step, 1, grid.delta());
        f.m_delta / t_horizon
    });
    let (value, stderr) = mean_stderr(&vals);
    Ok(EstimateResult::new(
        value,
        stderr,
        n,
        Method::Limit,
        grid.window(),
        format!("finite horizon T={t_horizon}; upper-biased proxy"),
        seed,
    ))
}

/// The Dieker–Yakir ratio `E[M^δ / S^η]` on the sampler's window.
///
/// Admissible spacings: δ = 0 with η ≥ 0, or δ > 0 with η = kδ for an
/// integer k ≥ 1. The truncation note carries a window-sensitivity
/// diagnostic: the estimate recomputed on the inner half-window and the
/// relative change.
pub fn estimate_dieker_yakir(sampler: &PathSampler, n: usize, seed: u64) -> Result<EstimateResult> {
    let grid = *sampler.grid();
    let target_step = grid.target_step();
    let eta_step = grid.eta_step();
    let admissible = target_step == 0 || (eta_step >= 1 && eta_step % target_step == 0);
    if !admissible {
        return Err(Error::Contract(format!(
            "inadmissible (delta, eta) = ({}, {}): for delta > 0 the sum spacing must satisfy \
             eta = k*delta for an integer k >= 1",
            grid.target_delta(),
            grid.eta()
        )));
    }
    let zero = grid.zero_index();
    let last = grid.len() - 1;
    // inner half-window index range for the sensitivity diagnostic
    let (w_lo, w_hi) = grid.window();
    let mut half_lo = zero;
    while half_lo > 0 && grid.point(half_lo - 1) >= w_lo / 2.0 - 1e-12 {
        half_lo -= 1;
    }
    let mut half_hi = zero;
    while half_hi < last && grid.point(half_hi + 1) <= w_hi / 2.0 + 1e-12 {
        half_hi += 1;
    }
    let delta = grid.delta();
    let pairs = replicate_map(n, seed, Phase::Main, |_, rng| {
        let w = sampler.sample_w(rng);
        let full = functionals_on_range(w.values(), zero, 0, last, target_step, eta_step, delta);
        let half =
            functionals_on_range(w.values(), zero, half_lo, half_hi, target_step, eta_step, delta);
        (full.m_delta / full.s_eta, half.m_delta / half.s_eta)
    });
    let full: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let half: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (value, stderr) = mean_stderr(&full);
    let (half_value, _) = mean_stderr(&half);
    let rel_change = ((half_value - value) / value).abs();
    Ok(EstimateResult::new(
        value,
        stderr,
        n,
        Method::DiekerYakir,
        grid.window(),
        format!(
            "window sensitivity: half-window [{}, {}] estimate {:.6} (rel change {:.2e})",
            grid.point(half_lo),
            grid.point(half_hi),
            half_value,
            rel_change
        ),
        seed,
    ))
}

/// `(1/δ) P(sup_{t ∈ δZ} W(t) = 0)` with a binomial standard error.
pub fn estimate_grid_attainment(sampler: &PathSampler, n: usize, seed: u64) -> Result<EstimateResult> {
    let grid = *sampler.grid();
    let delta = grid.target_delta();
    if !(delta > 0.0) {
        return Err(Error::Contract(
            "grid-attainment estimator needs target_delta > 0 (the probability degenerates as δ → 0)"
                .into(),
        ));
    }
    let zero = grid.zero_index();
    let last = grid.len() - 1;
    let target_step = grid.target_step();
    let hits = replicate_map(n, seed, Phase::Main, |_, rng| {
        let w = sampler.sample_w(rng);
        let f = functionals_on_range(w.values(), zero, 0, last, target_step, 1, grid.delta());
        u64::from(f.argmax_at_zero)
    });
    let successes: u64 = hits.iter().sum();
    let p_hat = successes as f64 / n as f64;
    let se = (p_hat * (1.0 - p_hat) / n as f64).sqrt() / delta;
    Ok(EstimateResult::new(
        p_hat / delta,
        se,
        n,
        Method::GridAttainment,
        grid.window(),
        format!("binomial: {successes} attainments of {n}"),
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::VarianceFunction;
    use crate::grid::GridSpec;
    use crate::process::ProcessSpec;
    use crate::stats::std_normal_cdf;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn alpha1() -> ProcessSpec {
        ProcessSpec::Gaussian { variance: VarianceFunction::fbm_convention(1.0).unwrap() }
    }

    #[test]
    fn functionals_hand_computed() {
        let grid = GridSpec::lattice(1.0, (-1.0, 1.0)).unwrap();
        let w = SamplePath::from_values(grid, vec![-1.0, 0.0, -1.0]).unwrap();
        let f = path_functionals(&w, 1.0, 1.0).unwrap();
        assert_relative_eq!(f.m_delta, 1.0);
        assert_relative_eq!(f.s_eta, 1.0 + 2.0 * (-1.0f64).exp(), epsilon = 1e-12);
        assert!(f.argmax_at_zero);

        // a strictly positive off-origin value defeats attainment
        let w = SamplePath::from_values(grid, vec![-1.0, 0.0, 0.5]).unwrap();
        let f = path_functionals(&w, 1.0, 1.0).unwrap();
        assert!(!f.argmax_at_zero);
        assert_relative_eq!(f.m_delta, 0.5f64.exp());
    }

    #[test]
    fn functionals_single_point_grid() {
        let grid = GridSpec::new(1.0, (0.0, 0.0), 1.0, 1.0).unwrap();
        let w = SamplePath::from_values(grid, vec![0.0]).unwrap();
        let f = path_functionals(&w, 0.0, 1.0).unwrap();
        assert_relative_eq!(f.m_delta, 1.0);
        assert_relative_eq!(f.s_eta, 1.0);
        assert!(f.argmax_at_zero);
    }

    #[test]
    fn functionals_reject_misaligned_spacings() {
        let grid = GridSpec::lattice(0.4, (-2.0, 2.0)).unwrap();
        let w = SamplePath::from_values(grid, vec![0.0; 11]).unwrap();
        assert!(path_functionals(&w, 0.6, 0.4).is_err());
        assert!(path_functionals(&w, 0.4, 0.6).is_err());
    }

    #[test]
    fn ties_count_as_attainment_at_zero() {
        let grid = GridSpec::lattice(1.0, (-1.0, 1.0)).unwrap();
        let w = SamplePath::from_values(grid, vec![0.0, 0.0, -0.5]).unwrap();
        let f = path_functionals(&w, 1.0, 1.0).unwrap();
        assert!(f.argmax_at_zero);
    }

    #[test]
    fn limit_estimator_on_single_point_grid_is_one_over_t() {
        // T < delta: the grid is {0}, the supremum is identically 1
        let grid = GridSpec::new(1.0, (0.0, 0.0), 0.0, 1.0).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let r = estimate_limit_definition(&sampler, 0.5, 200, 9).unwrap();
        assert_relative_eq!(r.value, 2.0);
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn limit_estimator_two_point_closed_form() {
        // E sup over {0, 1} of e^W = 2Φ(σ(1)/2) with σ²(1) = 2
        let grid = GridSpec::lattice(1.0, (0.0, 1.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let n = 100_000;
        let r = estimate_limit_definition(&sampler, 1.0, n, 31).unwrap();
        let expected = 2.0 * std_normal_cdf(std::f64::consts::SQRT_2 / 2.0);
        assert!(
            (r.value - expected).abs() <= 3.0 * r.stderr,
            "limit estimate {} ± {} vs closed form {expected}",
            r.value,
            r.stderr
        );
    }

    #[test]
    fn limit_estimator_refuses_small_n() {
        let grid = GridSpec::lattice(1.0, (0.0, 4.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        assert!(estimate_limit_definition(&sampler, 4.0, 50, 1).is_err());
    }

    #[test]
    fn dieker_yakir_rejects_inadmissible_spacings() {
        // δ > 0 with η = 0 is not covered by the ratio representation
        let grid = GridSpec::new(0.5, (-4.0, 4.0), 0.0, 0.5).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let err = estimate_dieker_yakir(&sampler, 1000, 3).unwrap_err();
        assert!(err.to_string().contains("eta = k*delta"), "{err}");
    }

    #[test]
    fn grid_attainment_requires_positive_delta() {
        let grid = GridSpec::new(0.5, (-4.0, 4.0), 0.5, 0.0).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        assert!(estimate_grid_attainment(&sampler, 1000, 3).is_err());
    }

    #[test]
    fn grid_attainment_bounded_by_inverse_delta_and_positive() {
        let grid = GridSpec::lattice(1.0, (-40.0, 40.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let r = estimate_grid_attainment(&sampler, 20_000, 5).unwrap();
        assert!(r.value > 0.0, "at least one attainment expected, got {}", r.value);
        assert!(r.value <= 1.0, "value {} exceeds 1/δ", r.value);
    }

    #[test]
    fn estimators_are_deterministic_across_pool_sizes() {
        let grid = GridSpec::lattice(0.5, (-8.0, 8.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| estimate_dieker_yakir(&sampler, 4000, 77).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        // pathwise invariants: M ≥ 1; M^δ/S^δ ≤ 1/δ for power-of-two δ;
        // coarsening the lattice cannot increase the supremum.
        #[test]
        fn pathwise_bounds_hold(seed in 0u64..500, pow in 0u32..3) {
            let delta = f64::powi(2.0, pow as i32 - 1); // 0.5, 1, 2
            let grid = GridSpec::lattice(delta, (-8.0 * delta, 8.0 * delta)).unwrap();
            let sampler = PathSampler::new(&alpha1(), grid).unwrap();
            let mut rng = crate::rng::replicate_rng(seed, Phase::Main, 0);
            let w = sampler.sample_w(&mut rng);
            let f = path_functionals(&w, delta, delta).unwrap();
            prop_assert!(f.m_delta >= 1.0);
            prop_assert!(f.m_delta / f.s_eta <= 1.0 / delta);
            let coarse = path_functionals(&w, 2.0 * delta, delta).unwrap();
            prop_assert!(coarse.m_delta <= f.m_delta);
        }
    }
}
