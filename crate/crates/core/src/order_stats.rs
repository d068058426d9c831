//! K-smallest selection for the K-SCG feedback protocol, plus Monte Carlo
//! checks of the order-statistics facts the scaling results rest on.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::real::Real;
use crate::rng::{stream, Purpose};
use crate::special::{beta_reg, gamma_fn};
use crate::stats::{ks_one_sample, pairwise_sum, MeanEstimate};

/// The users whose interference gains the primary base station feeds back.
#[derive(Debug, Clone, PartialEq)]
pub struct KscgSelection<T> {
    /// π(1..K): user indices in ascending order of g.
    pub indices: Vec<usize>,
    /// g_{(K:N)}, the largest fed-back gain.
    pub threshold: T,
}

impl<T> KscgSelection<T> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[inline]
fn by_gain_then_index<T: Real>(g: &[T]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| match g[a].partial_cmp(&g[b]) {
        Some(Ordering::Equal) | None => a.cmp(&b),
        Some(o) => o,
    }
}

/// Indices of the `k` smallest gains, ties broken by lowest index.
pub fn select_k_smallest<T: Real>(g: &[T], k: usize) -> Result<KscgSelection<T>> {
    let n = g.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if g.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidGains);
    }
    let cmp = by_gain_then_index(g);
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        idx.select_nth_unstable_by(k - 1, &cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(&cmp);
    let threshold = g[idx[k - 1]];
    Ok(KscgSelection { indices: idx, threshold })
}

/// Outcome of [`beta_law_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaLawReport<T> {
    /// KS distance between the law of z = F_g(g_{(K:N)}) and Beta(K, N−K+1).
    pub ks: T,
    /// Sample mean of z with its 95% half-width.
    pub mean: MeanEstimate<T>,
    /// K / (N + 1).
    pub expected_mean: T,
    /// Standard deviation of a single Beta(K, N−K+1) draw.
    pub beta_sd: T,
}

/// Draws `trials` gain vectors, maps the K-th smallest gain through its own
/// CDF and compares the result with Beta(K, N−K+1).
pub fn beta_law_check<T: Real>(
    model: &FadingModel<T>,
    n: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<BetaLawReport<T>> {
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("beta_law_check needs at least two trials".into()));
    }
    let sampler = model.sampler();
    let z: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, Purpose::OrderStats, t as u64);
            let mut g = vec![T::zero(); n];
            sampler.fill(&mut rng, &mut g);
            let (_, kth, _) = g.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            model.cdf(*kth)
        })
        .collect();
    let (a, b) = (T::from_usize_lossy(k), T::from_usize_lossy(n - k + 1));
    let ks = ks_one_sample(&z, |x| beta_reg(a, b, x));
    let ab = a + b;
    Ok(BetaLawReport {
        ks,
        mean: MeanEstimate::from_samples(&z),
        expected_mean: a / ab,
        beta_sd: (a * b / (ab * ab * (ab + T::one()))).sqrt(),
    })
}

/// Bounds of the concentration interval (G⁻¹(N^{1−ε}), G⁻¹(N^{1+ε})] for the
/// maximum of `n` draws. A lower end that falls below the invertibility
/// threshold is reported as 0.
pub fn concentration_interval<T: Real>(model: &FadingModel<T>, n: usize, eps: T) -> Result<(T, T)> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let params = model.class_c_params();
    let ln_n = T::from_usize_lossy(n).ln();
    let lower = match params.tail_g_inv_ln((T::one() - eps) * ln_n) {
        Ok(v) => v,
        Err(Error::BelowThreshold { .. }) => T::zero(),
        Err(e) => return Err(e),
    };
    let upper = params.tail_g_inv_ln((T::one() + eps) * ln_n)?;
    Ok((lower, upper))
}

/// Fraction of trials whose maximum of `n` i.i.d. draws lies in the
/// concentration interval.
pub fn concentration_check<T: Real>(
    model: &FadingModel<T>,
    n: usize,
    eps: T,
    trials: usize,
    seed: u64,
) -> Result<T> {
    if n == 0 || trials == 0 {
        return Err(Error::InvalidArgument("concentration_check needs n > 0 and trials > 0".into()));
    }
    let (lower, upper) = concentration_interval(model, n, eps)?;
    let sampler = model.sampler();
    let hits: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, Purpose::OrderStats, t as u64);
            let max = (0..n).map(|_| sampler.sample(&mut rng)).fold(T::neg_infinity(), T::max);
            if max > lower && max <= upper {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(pairwise_sum(&hits) / T::from_usize_lossy(trials))
}

/// Exact probability that the maximum of `n` i.i.d. draws lands in the
/// concentration interval, F(upper)^N − F(lower)^N.
pub fn concentration_exact<T: Real>(model: &FadingModel<T>, n: usize, eps: T) -> Result<T> {
    let (lower, upper) = concentration_interval(model, n, eps)?;
    let nt = T::from_usize_lossy(n);
    // F^N through exp(N ln F) keeps precision when F is near 1
    let pow_n = |x: T| {
        let f = model.cdf(x);
        if f <= T::zero() {
            T::zero()
        } else {
            (nt * (-model.survival(x)).ln_1p()).exp()
        }
    };
    Ok(pow_n(upper) - pow_n(lower))
}

/// Outcome of [`g_min_scaling`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinScaling<T> {
    /// Monte Carlo E[min g] / F_g⁻¹(1/N).
    pub ratio: T,
    /// Γ(1 + 1/γ_g), the large-N limit of the ratio.
    pub limit: T,
    pub mean_min: MeanEstimate<T>,
    pub quantile: T,
}

/// E[g_min(N)] / F_g⁻¹(1/N) by Monte Carlo, for N ≥ 2.
pub fn g_min_scaling<T: Real>(model: &FadingModel<T>, n: usize, trials: usize, seed: u64) -> Result<MinScaling<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("g_min_scaling needs N >= 2, got {n}")));
    }
    if trials < 2 {
        return Err(Error::InvalidArgument("g_min_scaling needs at least two trials".into()));
    }
    let sampler = model.sampler();
    let mins: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, Purpose::OrderStats, t as u64);
            (0..n).map(|_| sampler.sample(&mut rng)).fold(T::infinity(), T::min)
        })
        .collect();
    let mean_min = MeanEstimate::from_samples(&mins);
    let quantile = model.quantile(T::one() / T::from_usize_lossy(n))?;
    let gamma_g = model.class_c_params().gamma;
    Ok(MinScaling {
        ratio: mean_min.mean / quantile,
        limit: gamma_fn(T::one() + gamma_g.recip()),
        mean_min,
        quantile,
    })
}
