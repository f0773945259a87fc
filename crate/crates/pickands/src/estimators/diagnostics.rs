//! Structural identities used as numerical cross-checks: subadditivity of
//! the finite-horizon functional along doublings, the tilt-shift identity
//! `E[e^{W(t)} Γ(W)] = E[Γ(θ_t W)]` for constant-addition-invariant Γ, and
//! the resolvent identity expressing the finite-horizon functional as an
//! average of window-shifted ratios.

use super::{estimate_limit_definition, functionals_on_range, replicate_map, EstimateResult};
use crate::error::{Error, Result};
use crate::process::{PathSampler, ProcessSpec};
use crate::rng::Phase;
use crate::stats::mean_stderr;
use serde::{Deserialize, Serialize};

/// A Monte Carlo expectation that is one side of a paired identity check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CheckEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

impl CheckEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let (value, stderr) = mean_stderr(samples);
        Self { value, stderr, n: samples.len() }
    }

    /// |lhs - rhs| in combined standard errors.
    pub fn combined_z(&self, other: &CheckEstimate) -> f64 {
        let se = (self.stderr * self.stderr + other.stderr * other.stderr).sqrt();
        (self.value - other.value).abs() / se
    }
}

impl From<&EstimateResult> for CheckEstimate {
    fn from(r: &EstimateResult) -> Self {
        Self { value: r.value, stderr: r.stderr, n: r.n }
    }
}

/// Finite-horizon estimates along a doubling sequence of horizons, sharing
/// replicate paths on `[0, T_max]` (common random numbers).
///
/// For each horizon `T` the per-replicate value averages `(1/T)·sup e^W`
/// over the `T_max/T` disjoint length-`T` windows of the shared path. Each
/// window has the same expectation by shift invariance, and the split
/// `max(a, b) <= a + b` makes the estimate exactly non-increasing along
/// doublings, replicate by replicate.
pub fn fekete_diagnostic(
    sampler: &PathSampler,
    t_list: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<EstimateResult>> {
    let grid = *sampler.grid();
    if t_list.is_empty() {
        return Err(Error::Contract("empty horizon list".into()));
    }
    for pair in t_list.windows(2) {
        if (pair[1] - 2.0 * pair[0]).abs() > 1e-9 * pair[1] {
            return Err(Error::Contract(format!(
                "horizons must double: {} is not twice {}",
                pair[1], pair[0]
            )));
        }
    }
    if grid.window().0 != 0.0 {
        return Err(Error::Contract("fekete diagnostic needs a one-sided grid [0, T_max]".into()));
    }
    let t_max = *t_list.last().unwrap();
    if (grid.window().1 - t_max).abs() > 1e-9 * t_max {
        return Err(Error::Contract(format!(
            "grid window {:?} must end at the largest horizon {t_max}",
            grid.window()
        )));
    }
    let steps: Vec<usize> = t_list
        .iter()
        .map(|&t| match grid.steps_of(t) {
            Some(k) if k >= 1 => Ok(k as usize),
            _ => Err(Error::Contract(format!(
                "horizon {t} is not a multiple of the grid step {}",
                grid.delta()
            ))),
        })
        .collect::<Result<_>>()?;
    let total_steps = grid.len() - 1;
    if steps.iter().any(|&s| total_steps % s != 0) {
        return Err(Error::Contract("every horizon must divide the grid span".into()));
    }
    let target_step = grid.target_step();
    let delta = grid.delta();

    let per_replicate = replicate_map(n, seed, Phase::Main, |_, rng| {
        let w = sampler.sample_w(rng);
        let values = w.values();
        steps
            .iter()
            .zip(t_list)
            .map(|(&step, &t)| {
                let windows = total_steps / step;
                let mut acc = 0.0;
                for k in 0..windows {
                    let f = functionals_on_range(
                        values,
                        0,
                        k * step,
                        (k + 1) * step,
                        target_step,
                        1,
                        delta,
                    );
                    acc += f.m_delta / t;
                }
                acc / windows as f64
            })
            .collect::<Vec<f64>>()
    });

    let mut out = Vec::with_capacity(t_list.len());
    for (j, &t) in t_list.iter().enumerate() {
        let vals: Vec<f64> = per_replicate.iter().map(|v| v[j]).collect();
        let (value, stderr) = mean_stderr(&vals);
        out.push(EstimateResult::new(
            value,
            stderr,
            n,
            super::Method::Limit,
            (0.0, t),
            format!("common random numbers on [0, {t_max}], {} windows averaged", total_steps / steps[j]),
            seed,
        ));
    }
    Ok(out)
}

/// Constant-addition-invariant functionals for the tilt-shift check. The
/// closed enum guarantees invariance by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TiltFunctional {
    /// sup of e^f over the common window divided by its δ-weighted sum.
    RatioSupSum,
    /// Indicator that the argmax location lies in `[lo, hi]`.
    ArgmaxInSet { lo: f64, hi: f64 },
}

impl TiltFunctional {
    /// Evaluate on the index range `[lo, hi]` of `values`; `origin_time` is
    /// the time of index `lo` so that argmax locations are reported in the
    /// functional's own coordinates.
    fn eval(&self, values: &[f64], lo: usize, hi: usize, origin_time: f64, delta: f64) -> f64 {
        match *self {
            TiltFunctional::RatioSupSum => {
                let mut max = f64::NEG_INFINITY;
                let mut sum = 0.0;
                for v in &values[lo..=hi] {
                    max = max.max(*v);
                    sum += v.exp();
                }
                max.exp() / (delta * sum)
            }
            TiltFunctional::ArgmaxInSet { lo: a, hi: b } => {
                let mut best = lo;
                for i in lo..=hi {
                    if values[i] > values[best] {
                        best = i;
                    }
                }
                let t = origin_time + (best - lo) as f64 * delta;
                f64::from(t >= a && t <= b)
            }
        }
    }
}

/// Check the tilt-shift identity `E[e^{W(t)} Γ(W)] = E[Γ(θ_t W)]` at
/// `t = t_shift`: the lhs weights Γ on a common sub-window by `e^{W(t)}`,
/// the rhs evaluates Γ on the window shifted by `t`. Both sides share
/// replicate paths, so the comparison is a matched-pairs test.
pub fn tilt_shift_check(
    sampler: &PathSampler,
    t_shift: f64,
    functional: TiltFunctional,
    n: usize,
    seed: u64,
) -> Result<(CheckEstimate, CheckEstimate)> {
    let grid = *sampler.grid();
    let shift = grid.steps_of(t_shift).ok_or_else(|| {
        Error::Contract(format!(
            "t_shift = {t_shift} is not a multiple of the grid step {}",
            grid.delta()
        ))
    })?;
    let zero = grid.zero_index() as i64;
    let last = (grid.len() - 1) as i64;
    // common sub-window [lo + |shift|, hi - |shift|] so that both the
    // plain and the shifted evaluation stay inside the sampled window
    let c_lo = shift.abs();
    let c_hi = last - shift.abs();
    if c_lo > zero || c_hi < zero {
        return Err(Error::Contract(format!(
            "window {:?} too small for shift {t_shift}: the common sub-window must contain 0",
            grid.window()
        )));
    }
    let w_index = (zero + shift) as usize;
    let delta = grid.delta();
    let pairs = replicate_map(n, seed, Phase::Main, |_, rng| {
        let w = sampler.sample_w(rng);
        let values = w.values();
        let gamma_plain =
            functional.eval(values, c_lo as usize, c_hi as usize, grid.point(c_lo as usize), delta);
        let lhs = values[w_index].exp() * gamma_plain;
        // Γ(θ_t W) on the same sub-window reads W on the window shifted by -t
        let s_lo = (c_lo - shift) as usize;
        let s_hi = (c_hi - shift) as usize;
        let rhs = functional.eval(values, s_lo, s_hi, grid.point(c_lo as usize), delta);
        (lhs, rhs)
    });
    let lhs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let rhs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok((CheckEstimate::from_samples(&lhs), CheckEstimate::from_samples(&rhs)))
}

/// Check the resolvent identity at lattice spacing `delta` and horizon
/// `t_horizon = N·delta`:
///
/// `(1/T) E sup_{δZ ∩ [0,T]} e^W  =  (1/T) Σ_{j=0}^{N} E[ M_j / Σ_j ]`,
///
/// where window `j` is `δZ ∩ [-jδ, T - jδ]`, `M_j` is the supremum of `e^W`
/// over it and `Σ_j` the plain (counting-measure) sum. The lhs is the
/// finite-horizon estimator on `[0, T]`; the rhs averages the shifted
/// ratios over an independent two-sided sample on `[-T, T]`.
pub fn resolvent_identity_check(
    process: &ProcessSpec,
    delta: f64,
    t_horizon: f64,
    n: usize,
    seed: u64,
) -> Result<(CheckEstimate, CheckEstimate)> {
    if !(delta > 0.0) {
        return Err(Error::Contract("resolvent check needs delta > 0".into()));
    }
    let steps = t_horizon / delta;
    if (steps - steps.round()).abs() > 1e-9 || steps.round() < 1.0 {
        return Err(Error::Contract(format!(
            "horizon T = {t_horizon} must be a positive multiple of delta = {delta}"
        )));
    }
    let n_steps = steps.round() as usize;

    let lhs_grid = crate::grid::GridSpec::lattice(delta, (0.0, t_horizon))?;
    let lhs_sampler = PathSampler::new(process, lhs_grid)?;
    let lhs_estimate = estimate_limit_definition(&lhs_sampler, t_horizon, n, seed)?;

    let rhs_grid = crate::grid::GridSpec::lattice(delta, (-t_horizon, t_horizon))?;
    let rhs_sampler = PathSampler::new(process, rhs_grid)?;
    let zero = rhs_grid.zero_index();
    let rhs_vals = replicate_map(n, seed, Phase::Secondary, |_, rng| {
        let w = rhs_sampler.sample_w(rng);
        let values = w.values();
        let exps: Vec<f64> = values.iter().map(|v| v.exp()).collect();
        let mut acc = 0.0;
        for j in 0..=n_steps {
            let lo = zero - j;
            let hi = lo + n_steps;
            let mut m = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for &e in &exps[lo..=hi] {
                m = m.max(e);
                sum += e;
            }
            acc += m / sum;
        }
        acc / t_horizon
    });
    Ok((CheckEstimate::from(&lhs_estimate), CheckEstimate::from_samples(&rhs_vals)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::VarianceFunction;
    use crate::grid::GridSpec;
    use crate::levy::LevySpec;
    use crate::process::ProcessSpec;

    fn alpha1() -> ProcessSpec {
        ProcessSpec::Gaussian { variance: VarianceFunction::fbm_convention(1.0).unwrap() }
    }

    #[test]
    fn fekete_singleton_equals_limit_estimator() {
        let grid = GridSpec::lattice(0.5, (0.0, 8.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let list = fekete_diagnostic(&sampler, &[8.0], 2000, 42).unwrap();
        assert_eq!(list.len(), 1);
        let direct = estimate_limit_definition(&sampler, 8.0, 2000, 42).unwrap();
        assert_eq!(list[0].value.to_bits(), direct.value.to_bits());
    }

    #[test]
    fn fekete_is_exactly_non_increasing_along_doublings() {
        let grid = GridSpec::lattice(0.25, (0.0, 16.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let list = fekete_diagnostic(&sampler, &[2.0, 4.0, 8.0, 16.0], 1500, 7).unwrap();
        for pair in list.windows(2) {
            assert!(
                pair[1].value <= pair[0].value,
                "doubling must not increase the estimate: {} -> {}",
                pair[0].value,
                pair[1].value
            );
        }
    }

    #[test]
    fn fekete_rejects_non_doubling_horizons() {
        let grid = GridSpec::lattice(0.5, (0.0, 12.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        assert!(fekete_diagnostic(&sampler, &[4.0, 12.0], 500, 1).is_err());
    }

    #[test]
    fn tilt_shift_at_zero_is_exact() {
        let grid = GridSpec::lattice(0.5, (-10.0, 10.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let (lhs, rhs) =
            tilt_shift_check(&sampler, 0.0, TiltFunctional::RatioSupSum, 500, 3).unwrap();
        assert_eq!(lhs.value, rhs.value, "zero shift makes both sides identical pathwise");
    }

    #[test]
    fn tilt_shift_gaussian_ratio_within_three_se() {
        let grid = GridSpec::lattice(0.5, (-20.0, 20.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        for shift in [1.0, -1.0] {
            let (lhs, rhs) =
                tilt_shift_check(&sampler, shift, TiltFunctional::RatioSupSum, 30_000, 19).unwrap();
            let z = lhs.combined_z(&rhs);
            assert!(z <= 3.0, "tilt-shift z = {z} at shift {shift}: lhs {lhs:?} rhs {rhs:?}");
        }
    }

    #[test]
    fn tilt_shift_argmax_functional_within_three_se() {
        let grid = GridSpec::lattice(0.5, (-20.0, 20.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        let f = TiltFunctional::ArgmaxInSet { lo: -2.0, hi: 2.0 };
        let (lhs, rhs) = tilt_shift_check(&sampler, 1.0, f, 30_000, 23).unwrap();
        let z = lhs.combined_z(&rhs);
        assert!(z <= 3.0, "argmax tilt-shift z = {z}: lhs {lhs:?} rhs {rhs:?}");
    }

    #[test]
    fn tilt_shift_levy_within_three_se() {
        let spec = ProcessSpec::Levy {
            spec: LevySpec::BrownianDrift { mu: 0.0, sigma: std::f64::consts::SQRT_2 },
        };
        let grid = GridSpec::lattice(0.5, (-20.0, 20.0)).unwrap();
        let sampler = PathSampler::new(&spec, grid).unwrap();
        let (lhs, rhs) =
            tilt_shift_check(&sampler, -1.0, TiltFunctional::RatioSupSum, 30_000, 29).unwrap();
        let z = lhs.combined_z(&rhs);
        assert!(z <= 3.0, "levy tilt-shift z = {z}: lhs {lhs:?} rhs {rhs:?}");
    }

    #[test]
    fn tilt_shift_rejects_offgrid_and_oversized_shifts() {
        let grid = GridSpec::lattice(0.5, (-2.0, 2.0)).unwrap();
        let sampler = PathSampler::new(&alpha1(), grid).unwrap();
        assert!(tilt_shift_check(&sampler, 0.3, TiltFunctional::RatioSupSum, 100, 1).is_err());
        assert!(tilt_shift_check(&sampler, 2.5, TiltFunctional::RatioSupSum, 100, 1).is_err());
    }

    #[test]
    fn resolvent_two_point_windows_agree() {
        // δ = 1, T = 1: lhs = E max(1, e^{W(1)}), rhs sums two shifted ratios
        let (lhs, rhs) = resolvent_identity_check(&alpha1(), 1.0, 1.0, 40_000, 11).unwrap();
        let z = lhs.combined_z(&rhs);
        assert!(z <= 3.0, "resolvent z = {z}: lhs {lhs:?} rhs {rhs:?}");
    }

    #[test]
    fn resolvent_longer_horizon_agrees() {
        let (lhs, rhs) = resolvent_identity_check(&alpha1(), 1.0, 8.0, 40_000, 13).unwrap();
        let z = lhs.combined_z(&rhs);
        assert!(z <= 3.0, "resolvent z = {z}: lhs {lhs:?} rhs {rhs:?}");
    }

    #[test]
    fn resolvent_rejects_misaligned_horizon() {
        assert!(resolvent_identity_check(&alpha1(), 0.4, 1.0, 500, 1).is_err());
        assert!(resolvent_identity_check(&alpha1(), 0.0, 1.0, 500, 1).is_err());
    }
}
