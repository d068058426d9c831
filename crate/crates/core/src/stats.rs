//! Small statistics toolkit: deterministic reductions, confidence
//! half-widths, Kolmogorov–Smirnov distances, rank correlation and
//! weighted line fits.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::real::Real;

/// z-value of a two-sided 95% normal confidence interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Pairwise (cascade) summation with a fixed split order, so the result only
/// depends on the input order.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean with its 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate<T> {
    pub mean: T,
    pub half_width: T,
    pub count: usize,
}

impl<T: Real> MeanEstimate<T> {
    pub fn from_samples(xs: &[T]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanEstimate { mean: T::nan(), half_width: T::nan(), count: 0 };
        }
        let nt = T::from_usize_lossy(n);
        let mean = pairwise_sum(xs) / nt;
        if n == 1 {
            return MeanEstimate { mean, half_width: T::infinity(), count: 1 };
        }
        let sq: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / T::from_usize_lossy(n - 1);
        MeanEstimate { mean, half_width: T::lit(Z95) * (var / nt).sqrt(), count: n }
    }

    /// Standard error implied by the half-width.
    pub fn std_error(&self) -> T {
        self.half_width / T::lit(Z95)
    }
}

fn total_cmp<T: Real>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// One-sample KS distance between the empirical law of `samples` and `cdf`.
pub fn ks_one_sample<T: Real>(samples: &[T], cdf: impl Fn(T) -> T) -> T {
    let mut sorted = samples.to_vec();
    sorted.sort_by(total_cmp);
    let n = T::from_usize_lossy(sorted.len());
    sorted.iter().enumerate().fold(T::zero(), |d, (i, &x)| {
        let f = cdf(x);
        let lo = T::from_usize_lossy(i) / n;
        let hi = T::from_usize_lossy(i + 1) / n;
        d.max((hi - f).abs()).max((f - lo).abs())
    })
}

/// Two-sample KS distance between empirical CDFs.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> T {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(total_cmp);
    b.sort_by(total_cmp);
    let (na, nb) = (T::from_usize_lossy(a.len()), T::from_usize_lossy(b.len()));
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = T::zero();
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        let fa = T::from_usize_lossy(i) / na;
        let fb = T::from_usize_lossy(j) / nb;
        d = d.max((fa - fb).abs());
    }
    d
}

fn ranks<T: Real>(xs: &[T]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| total_cmp(&xs[a], &xs[b]));
    let mut r = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // average rank for ties
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation of two equally long series.
pub fn spearman_rho<T: Real>(x: &[T], y: &[T]) -> f64 {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Result of a weighted least-squares line fit `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Standard error of the slope under the supplied weights.
    pub slope_se: T,
}

/// Weighted least squares with weights `w_i`; weights are inverse variances.
pub fn weighted_line_fit<T: Real>(x: &[T], y: &[T], w: &[T]) -> Option<LinearFit<T>> {
    if x.len() != y.len() || x.len() != w.len() || x.len() < 2 {
        return None;
    }
    let sw: T = w.iter().copied().sum();
    let mx = x.iter().zip(w).map(|(&a, &b)| a * b).sum::<T>() / sw;
    let my = y.iter().zip(w).map(|(&a, &b)| a * b).sum::<T>() / sw;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        sxx = sxx + wi * (xi - mx) * (xi - mx);
        sxy = sxy + wi * (xi - mx) * (yi - my);
    }
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    Some(LinearFit { slope, intercept: my - slope * mx, slope_se: (T::one() / sxx).sqrt() })
}
