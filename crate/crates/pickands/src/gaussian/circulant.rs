//! Circulant embedding of the stationary increment sequence.
//!
//! On a uniform grid the increments of a process with stationary increments
//! form a stationary Gaussian sequence with autocovariance
//! `r(k) = (σ²((k+1)h) - 2σ²(kh) + σ²((k-1)h)) / 2`.
//! Embedding `r(0..m)` in a circulant of size `2m` and taking an FFT of a
//! Hermitian-symmetrized Gaussian vector yields exact draws in O(m log m).

use super::{SamplerDiagnostics, VarianceFunction};
use crate::error::Result;
use crate::grid::GridSpec;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Eigenvalues in `[-EIG_CLIP_TOL·max, 0)` are clipped to zero; anything
/// more negative abandons the embedding for the dense route.
const EIG_CLIP_TOL: f64 = 1e-10;

pub struct CirculantEmbedding {
    /// sqrt(λ_k / N) for k = 0..N, clipped at zero.
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    n_inc: usize,
    m: usize,
}

impl CirculantEmbedding {
    /// Returns `Ok(None)` when the embedding has eigenvalues too negative to
    /// clip, signalling the caller to fall back to dense factorization.
    pub fn new(
        sigma2: &VarianceFunction,
        grid: &GridSpec,
        diagnostics: &mut SamplerDiagnostics,
    ) -> Result<Option<Self>> {
        let n_inc = grid.len() - 1;
        assert!(n_inc >= 1, "circulant embedding needs at least one increment");
        let h = grid.delta();
        let m = n_inc.next_power_of_two().max(2);
        let size = 2 * m;

        let r = |k: usize| -> Result<f64> {
            let k = k as f64;
            Ok((sigma2.eval((k + 1.0) * h)? - 2.0 * sigma2.eval(k * h)?
                + sigma2.eval((k - 1.0).abs() * h)?)
                / 2.0)
        };
        let mut row = vec![Complex::new(0.0, 0.0); size];
        for k in 0..=m {
            row[k].re = r(k)?;
        }
        for k in 1..m {
            row[size - k].re = row[k].re;
        }

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(size);
        let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut row, &mut scratch);

        let max_eig = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let min_eig = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        diagnostics.min_eigenvalue_ratio = if max_eig > 0.0 { min_eig / max_eig } else { 0.0 };
        if min_eig < -EIG_CLIP_TOL * max_eig {
            return Ok(None);
        }
        let mut clipped = 0usize;
        let weights: Vec<f64> = row
            .iter()
            .map(|c| {
                let lambda = if c.re < 0.0 {
                    clipped += 1;
                    0.0
                } else {
                    c.re
                };
                (lambda / size as f64).sqrt()
            })
            .collect();
        diagnostics.clipped_eigenvalues = clipped;

        Ok(Some(Self { weights, fft, n_inc, m }))
    }

    /// Draws exactly `2m` standard normals per path, independent of the data.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, zero_index: usize) -> Vec<f64> {
        let size = 2 * self.m;
        let mut spectral = vec![Complex::new(0.0, 0.0); size];
        let g0: f64 = rng.sample(StandardNormal);
        let gm: f64 = rng.sample(StandardNormal);
        spectral[0].re = self.weights[0] * g0;
        spectral[self.m].re = self.weights[self.m] * gm;
        let half = std::f64::consts::FRAC_1_SQRT_2;
        for k in 1..self.m {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            let w = self.weights[k] * half;
            spectral[k] = Complex::new(w * u, w * v);
            spectral[size - k] = Complex::new(w * u, -w * v);
        }
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut spectral, &mut scratch);

        // cumulative sums of the increments, re-pinned so that B(0) = 0
        let mut values = Vec::with_capacity(self.n_inc + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for c in spectral.iter().take(self.n_inc) {
            acc += c.re;
            values.push(acc);
        }
        let pin = values[zero_index];
        for v in &mut values {
            *v -= pin;
        }
        values[zero_index] = 0.0;
        values
    }
}
