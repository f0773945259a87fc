//! Small statistical toolbox shared by the estimators and validators:
//! replicate summaries, empirical quantiles, and Kolmogorov–Smirnov tests.

use statrs::function::erf::erf;

/// Mean and standard error of the mean, accumulated in slice order so that
/// results are bit-identical for a fixed replicate ordering.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut sum = 0.0;
    for v in values {
        sum += v;
    }
    let mean = sum / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut ss = 0.0;
    for v in values {
        let d = v - mean;
        ss += d * d;
    }
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Standard Gumbel cumulative distribution function exp(-e^(-x)).
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// Upper empirical quantile by order statistic: the smallest sample value
/// whose rank is at least ceil(p·n).
pub fn empirical_quantile(samples: &[f64], p: f64) -> f64 {
    assert!(!samples.is_empty() && (0.0..=1.0).contains(&p));
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    let rank = (p * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// One-sample Kolmogorov–Smirnov statistic sup |F_n - F| against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS input"));
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sample Kolmogorov–Smirnov statistic sup |F_n - G_m|. Ties advance
/// both samples together before the gap is measured.
pub fn ks_two_sample_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).expect("NaN in KS input"));
    ys.sort_by(|u, v| u.partial_cmp(v).expect("NaN in KS input"));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] == v {
            i += 1;
        }
        while j < m && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic critical coefficient c(level) with rejection region
/// D > c / sqrt(n): c = sqrt(ln(2/level) / 2).
pub fn ks_critical_coefficient(level: f64) -> f64 {
    ((2.0 / level).ln() / 2.0).sqrt()
}

/// One-sample critical value at `level` for sample size `n`.
pub fn ks_critical_value(level: f64, n: usize) -> f64 {
    ks_critical_coefficient(level) / (n as f64).sqrt()
}

/// Two-sample critical value at `level` for sample sizes `n`, `m`.
pub fn ks_two_sample_critical_value(level: f64, n: usize, m: usize) -> f64 {
    ks_critical_coefficient(level) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
