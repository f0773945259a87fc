//! Uniform evaluation lattices.
//!
//! All simulation happens on a finite uniform grid `{k·delta}` intersected
//! with a window `[window_lo, window_hi]` that always contains 0. The grid
//! carries two extra spacings used by the estimators: `target_delta`, the
//! lattice spacing of the constant being estimated (0 means the
//! continuous-parameter constant approximated on the fine grid), and `eta`,
//! the spacing of the normalizing sum (0 selects trapezoid integration).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const ALIGN_TOL: f64 = 1e-9;

/// Snap `x` to the nearest integer when it is within `ALIGN_TOL` of one.
fn as_aligned_int(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= ALIGN_TOL * (1.0 + x.abs()) {
        Some(r as i64)
    } else {
        None
    }
}

/// A finite uniform grid `delta·{k_min, ..., k_max}` containing 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    delta: f64,
    k_min: i64,
    k_max: i64,
    eta_step: usize,    // 0 => trapezoid integral
    target_step: usize, // 0 => full fine grid
}

impl GridSpec {
    /// Build a grid with step `delta` over `window = (lo, hi)`, with sum
    /// spacing `eta` and estimation spacing `target_delta`.
    ///
    /// `eta` and `target_delta` must be 0 or integer multiples of `delta`.
    pub fn new(delta: f64, window: (f64, f64), eta: f64, target_delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidSpec(format!("grid delta must be > 0, got {delta}")));
        }
        let (lo, hi) = window;
        if !(lo <= 0.0 && 0.0 <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "window must satisfy lo <= 0 <= hi, got ({lo}, {hi})"
            )));
        }
        // snap before the floor/ceil so windows like (-0.3, 0.3) with
        // delta = 0.1 keep their endpoint lattice points
        let k_min = as_aligned_int(lo / delta).unwrap_or_else(|| (lo / delta).ceil() as i64);
        let k_max = as_aligned_int(hi / delta).unwrap_or_else(|| (hi / delta).floor() as i64);
        let eta_step = if eta == 0.0 {
            0
        } else {
            match as_aligned_int(eta / delta) {
                Some(k) if k >= 1 => k as usize,
                _ => {
                    return Err(Error::InvalidSpec(format!(
                        "eta = {eta} is not an integer multiple of delta = {delta}"
                    )))
                }
            }
        };
        let target_step = if target_delta == 0.0 {
            0
        } else {
            match as_aligned_int(target_delta / delta) {
                Some(k) if k >= 1 => k as usize,
                _ => {
                    return Err(Error::InvalidSpec(format!(
                        "target_delta = {target_delta} is not an integer multiple of delta = {delta}"
                    )))
                }
            }
        };
        Ok(Self { delta, k_min, k_max, eta_step, target_step })
    }

    /// Grid for direct simulation on the lattice `delta·Z`: step, sum
    /// spacing and estimation spacing all equal to `delta`.
    pub fn lattice(delta: f64, window: (f64, f64)) -> Result<Self> {
        Self::new(delta, window, delta, delta)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta_step as f64 * self.delta
    }

    pub fn target_delta(&self) -> f64 {
        self.target_step as f64 * self.delta
    }

    /// Number of fine-grid steps between consecutive sum points (0 = integral).
    pub fn eta_step(&self) -> usize {
        self.eta_step
    }

    /// Number of fine-grid steps between consecutive estimation points
    /// (0 = every fine-grid point).
    pub fn target_step(&self) -> usize {
        self.target_step
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // always contains 0
    }

    /// Index of the grid point t = 0.
    pub fn zero_index(&self) -> usize {
        (-self.k_min) as usize
    }

    pub fn point(&self, index: usize) -> f64 {
        (self.k_min + index as i64) as f64 * self.delta
    }

    pub fn window(&self) -> (f64, f64) {
        (self.point(0), self.point(self.len() - 1))
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Index of the grid point at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = as_aligned_int(t / self.delta)?;
        if k >= self.k_min && k <= self.k_max {
            Some((k - self.k_min) as usize)
        } else {
            None
        }
    }

    /// Signed number of fine-grid steps corresponding to the duration `t`.
    pub fn steps_of(&self, t: f64) -> Option<i64> {
        as_aligned_int(t / self.delta)
    }

    /// Same lattice restricted to `[lo, hi]` (sub-window must contain 0).
    pub fn restrict(&self, window: (f64, f64)) -> Result<Self> {
        let mut g = Self::new(self.delta, window, 0.0, 0.0)?;
        g.eta_step = self.eta_step;
        g.target_step = self.target_step;
        if g.k_min < self.k_min || g.k_max > self.k_max {
            return Err(Error::Contract(format!(
                "restriction window {window:?} exceeds the grid window {:?}",
                self.window()
            )));
        }
        Ok(g)
    }
}

/// One realization of a process on a grid, on the natural-log scale.
///
/// The value at t = 0 is exactly 0 by construction.
#[derive(Debug, Clone)]
pub struct SamplePath {
    grid: GridSpec,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "path has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values[grid.zero_index()] != 0.0 {
            return Err(Error::Contract(format!(
                "path value at t = 0 must be exactly 0, got {}",
                values[grid.zero_index()]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.grid.index_of(t).map(|i| self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_contains_zero_and_is_uniform() {
        let g = GridSpec::new(0.5, (-2.0, 3.0), 1.0, 0.5).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.zero_index(), 4);
        assert_eq!(g.point(g.zero_index()), 0.0);
        assert_eq!(g.window(), (-2.0, 3.0));
        assert_eq!(g.eta_step(), 2);
        assert_eq!(g.target_step(), 1);
    }

    #[test]
    fn one_sided_and_single_point_grids() {
        let g = GridSpec::new(0.25, (0.0, 1.0), 0.0, 0.0).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.zero_index(), 0);
        let single = GridSpec::new(1.0, (0.0, 0.0), 0.0, 0.0).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.point(0), 0.0);
    }

    #[test]
    fn eta_must_be_multiple_of_delta() {
        let err = GridSpec::new(0.4, (-1.0, 1.0), 0.5, 0.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("not an integer multiple"), "{msg}");
    }

    #[test]
    fn window_must_straddle_zero() {
        assert!(GridSpec::new(0.5, (0.5, 2.0), 0.0, 0.0).is_err());
        assert!(GridSpec::new(0.5, (-2.0, -0.5), 0.0, 0.0).is_err());
    }

    #[test]
    fn index_of_roundtrips() {
        let g = GridSpec::new(0.1, (-1.0, 1.0), 0.0, 0.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.index_of(g.point(i)), Some(i));
        }
        assert_eq!(g.index_of(0.05), None);
        assert_eq!(g.index_of(7.0), None);
    }

    #[test]
    fn restrict_keeps_alignment() {
        let g = GridSpec::new(0.5, (-4.0, 4.0), 0.5, 0.5).unwrap();
        let h = g.restrict((-2.0, 2.0)).unwrap();
        assert_eq!(h.len(), 9);
        assert_eq!(h.point(h.zero_index()), 0.0);
        assert!(g.restrict((-8.0, 2.0)).is_err());
    }

    #[test]
    fn path_rejects_nonzero_origin() {
        let g = GridSpec::new(1.0, (-1.0, 1.0), 1.0, 1.0).unwrap();
        assert!(SamplePath::from_values(g, vec![0.0, 0.1, 0.0]).is_err());
        assert!(SamplePath::from_values(g, vec![0.0, 0.0]).is_err());
        let p = SamplePath::from_values(g, vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(p.value_at(0.0), Some(0.0));
        assert_eq!(p.value_at(1.0), Some(2.0));
    }

    proptest! {
        #[test]
        fn grid_points_sorted_and_contain_zero(
            delta in 1e-3f64..10.0,
            lo_steps in 0i64..200,
            hi_steps in 0i64..200,
        ) {
            let lo = -(lo_steps as f64) * delta;
            let hi = hi_steps as f64 * delta;
            let g = GridSpec::new(delta, (lo, hi), 0.0, 0.0).unwrap();
            prop_assert_eq!(g.len() as i64, lo_steps + hi_steps + 1);
            prop_assert_eq!(g.point(g.zero_index()), 0.0);
            let pts: Vec<f64> = g.points().collect();
            for w in pts.windows(2) {
                prop_assert!((w[1] - w[0] - delta).abs() < 1e-9 * delta.max(1.0));
            }
        }
    }
}
