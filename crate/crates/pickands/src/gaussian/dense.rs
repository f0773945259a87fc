//! Dense covariance factorization for variograms without a fast embedding
//! (tabulated tables, or embeddings that turned out indefinite).

use super::{covariance_from_variogram, SamplerDiagnostics, VarianceFunction};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

const JITTER_BASE: f64 = 1e-12;
const JITTER_DOUBLINGS: usize = 3;

pub struct DenseFactorization {
    lower: DMatrix<f64>,
    /// Grid indices of the factorized points (everything except t = 0).
    free_indices: Vec<usize>,
}

impl DenseFactorization {
    pub fn new(
        sigma2: &VarianceFunction,
        grid: &GridSpec,
        diagnostics: &mut SamplerDiagnostics,
    ) -> Result<Self> {
        // B(0) = 0 exactly, so factorize the covariance of the other points.
        let free_indices: Vec<usize> =
            (0..grid.len()).filter(|&i| i != grid.zero_index()).collect();
        let p = free_indices.len();
        let mut cov = DMatrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let c = covariance_from_variogram(
                    sigma2,
                    grid.point(free_indices[a]),
                    grid.point(free_indices[b]),
                )?;
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
        }
        let jitter_unit = JITTER_BASE * cov.trace() / p as f64;
        let mut jitter = 0.0;
        for attempt in 0..=(JITTER_DOUBLINGS + 1) {
            let mut m = cov.clone();
            for i in 0..p {
                m[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(m) {
                diagnostics.jitter_applied = jitter;
                return Ok(Self { lower: chol.l(), free_indices });
            }
            jitter = if attempt == 0 { jitter_unit } else { jitter * 2.0 };
        }
        Err(Error::Numeric(format!(
            "dense covariance factorization failed after jitter up to {jitter:.3e}"
        )))
    }

    /// Draws exactly `p` standard normals per path.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, zero_index: usize) -> Vec<f64> {
        let p = self.free_indices.len();
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.lower * z;
        let mut values = vec![0.0; p + 1];
        for (a, &i) in self.free_indices.iter().enumerate() {
            values[i] = x[a];
        }
        values[zero_index] = 0.0;
        values
    }
}
