//! Lattice-bias removal by Richardson extrapolation: fit
//! `value(δ) = H + a·δ^p` over a geometric ladder of spacings and report
//! the intercept `H`. The exponent `p` is fitted in `[0.5, 2]` rather than
//! fixed, since the discretization-bias rate is not known in general.

use super::EstimateResult;
use crate::error::{Error, Result};

const P_RANGE: (f64, f64) = (0.5, 2.0);

struct Fit {
    h: f64,
    sse: f64,
    var_h: f64,
}

/// Weighted least squares of y = H + a·x with x = δ^p and weights w.
fn fit_at(p: f64, deltas: &[f64], ys: &[f64], ws: &[f64]) -> Fit {
    let (mut s0, mut s1, mut s2, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&d, &y), &w) in deltas.iter().zip(ys).zip(ws) {
        let x = d.powf(p);
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = s0 * s2 - s1 * s1;
    let h = (s2 * sy - s1 * sxy) / det;
    let a = (s0 * sxy - s1 * sy) / det;
    let mut sse = 0.0;
    for ((&d, &y), &w) in deltas.iter().zip(ys).zip(ws) {
        let r = y - h - a * d.powf(p);
        sse += w * r * r;
    }
    Fit { h, sse, var_h: s2 / det }
}

/// Extrapolate lattice estimates to δ → 0.
///
/// Needs at least three distinct spacings in geometric progression. When
/// every input carries a positive standard error the fit is
/// inverse-variance weighted and the reported uncertainty is the
/// propagated one; otherwise the fit is unweighted and the uncertainty
/// comes from the residuals.
pub fn richardson_extrapolate(results: &[(f64, EstimateResult)]) -> Result<EstimateResult> {
    if results.len() < 3 {
        return Err(Error::Contract(format!(
            "extrapolation needs at least 3 spacings, got {}",
            results.len()
        )));
    }
    let mut ordered: Vec<&(f64, EstimateResult)> = results.iter().collect();
    ordered.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("NaN delta"));
    let deltas: Vec<f64> = ordered.iter().map(|r| r.0).collect();
    if deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Contract("all spacings must be positive".into()));
    }
    let ratio = deltas[0] / deltas[1];
    for pair in deltas.windows(2) {
        let r = pair[0] / pair[1];
        if (r - ratio).abs() > 1e-6 * ratio || r <= 1.0 + 1e-9 {
            return Err(Error::Contract(format!(
                "spacings must form a decreasing geometric progression, got {deltas:?}"
            )));
        }
    }
    let ys: Vec<f64> = ordered.iter().map(|r| r.1.value).collect();
    let weighted = ordered.iter().all(|r| r.1.stderr > 0.0);
    let ws: Vec<f64> = if weighted {
        ordered.iter().map(|r| 1.0 / (r.1.stderr * r.1.stderr)).collect()
    } else {
        vec![1.0; ordered.len()]
    };

    // coarse scan then golden-section refinement of the bias exponent
    let coarse = 151;
    let mut best_p = P_RANGE.0;
    let mut best_sse = f64::INFINITY;
    for i in 0..coarse {
        let p = P_RANGE.0 + (P_RANGE.1 - P_RANGE.0) * i as f64 / (coarse - 1) as f64;
        let f = fit_at(p, &deltas, &ys, &ws);
        if f.sse < best_sse {
            best_sse = f.sse;
            best_p = p;
        }
    }
    let step = (P_RANGE.1 - P_RANGE.0) / (coarse - 1) as f64;
    let (mut lo, mut hi) = ((best_p - step).max(P_RANGE.0), (best_p + step).min(P_RANGE.1));
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if fit_at(m1, &deltas, &ys, &ws).sse <= fit_at(m2, &deltas, &ys, &ws).sse {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let p = (lo + hi) / 2.0;
    let fit = fit_at(p, &deltas, &ys, &ws);

    let stderr = if weighted {
        fit.var_h.sqrt()
    } else {
        let dof = (results.len() as f64 - 2.0).max(1.0);
        (fit.sse / dof * fit.var_h).sqrt()
    };
    let base = &ordered.last().unwrap().1;
    let n_total = ordered.iter().map(|r| r.1.n).sum();
    Ok(EstimateResult::new(
        fit.h,
        stderr,
        n_total,
        base.method,
        base.window,
        format!("richardson: fitted p = {p:.4}, deltas = {deltas:?}"),
        base.seed,
    ))
}
