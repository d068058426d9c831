//! Class-C channel power-gain laws.
//!
//! Every model describes the *power* gain of a link and is normalized to unit
//! mean. A class-C law has a CDF `F` whose tail satisfies
//!
//! ```text
//! 1 - F(x) ~ α x^l exp(-β x^n + H(x))      as x → ∞
//! F(x)     ~ η x^γ                         as x ↓ 0
//! ```
//!
//! [`ClassCParams`] carries `(α, l, β, n, H, η, γ)` for each catalog model and
//! the tail function `G(x) = x^{-l} exp(β x^n - H(x)) / α` with its inverse,
//! which locate the maximum of many i.i.d. draws.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::special::{gamma_fn, gamma_p, gamma_q, ln_gamma};

/// Named fading family and its shape parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family<T> {
    Rayleigh,
    /// Rician magnitude with factor `K_f ≥ 0`; power is noncentral χ² (2 dof).
    Rician { k_factor: T },
    /// Nakagami-m magnitude, `m ≥ 0.5`; power is Gamma(m, 1/m).
    Nakagami { m: T },
    /// Weibull magnitude with shape `c > 0`; power is Weibull with shape c/2.
    Weibull { c: T },
}

/// A validated, unit-mean power-gain distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingModel<T> {
    family: Family<T>,
}

impl<T: Real> FadingModel<T> {
    pub fn rayleigh() -> Self {
        FadingModel { family: Family::Rayleigh }
    }

    pub fn rician(k_factor: T) -> Result<Self> {
        if !(k_factor >= T::zero()) || !k_factor.is_finite() {
            return Err(Error::InvalidModel(format!("Rician K_f must be >= 0, got {k_factor}")));
        }
        Ok(FadingModel { family: Family::Rician { k_factor } })
    }

    pub fn nakagami(m: T) -> Result<Self> {
        if !(m >= T::lit(0.5)) || !m.is_finite() {
            return Err(Error::InvalidModel(format!("Nakagami m must be >= 0.5, got {m}")));
        }
        Ok(FadingModel { family: Family::Nakagami { m } })
    }

    pub fn weibull(c: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidModel(format!("Weibull c must be > 0, got {c}")));
        }
        Ok(FadingModel { family: Family::Weibull { c } })
    }

    pub fn from_family(family: Family<T>) -> Result<Self> {
        match family {
            Family::Rayleigh => Ok(Self::rayleigh()),
            Family::Rician { k_factor } => Self::rician(k_factor),
            Family::Nakagami { m } => Self::nakagami(m),
            Family::Weibull { c } => Self::weibull(c),
        }
    }

    pub fn family(&self) -> Family<T> {
        self.family
    }

    /// The family's shape parameter, if it has one.
    pub fn shape_parameter(&self) -> Option<T> {
        match self.family {
            Family::Rayleigh => None,
            Family::Rician { k_factor } => Some(k_factor),
            Family::Nakagami { m } => Some(m),
            Family::Weibull { c } => Some(c),
        }
    }

    /// Same family with a different shape parameter (Rayleigh has none).
    pub fn with_shape_parameter(&self, value: T) -> Result<Self> {
        match self.family {
            Family::Rayleigh => Err(Error::InvalidModel("Rayleigh has no shape parameter".into())),
            Family::Rician { .. } => Self::rician(value),
            Family::Nakagami { .. } => Self::nakagami(value),
            Family::Weibull { .. } => Self::weibull(value),
        }
    }

    /// The class-C signature of this law.
    pub fn class_c_params(&self) -> ClassCParams<T> {
        let one = T::one();
        match self.family {
            Family::Rayleigh => ClassCParams::rayleigh(),
            // K_f = 0 is Rayleigh; the Rician α below is singular there.
            Family::Rician { k_factor } if k_factor == T::zero() => ClassCParams::rayleigh(),
            Family::Rician { k_factor: k } => {
                let kk = k * (k + one);
                ClassCParams {
                    alpha: one / (T::lit(2.0) * T::PI().sqrt() * k.exp() * kk.powf(T::lit(0.25))),
                    l: T::lit(-0.25),
                    beta: k + one,
                    n: one,
                    tail_correction: TailCorrection::SqrtLinear { coef: T::lit(2.0) * kk.sqrt() },
                    eta: (k + one) / k.exp(),
                    gamma: one,
                }
            }
            Family::Nakagami { m } => {
                let a = ((m - one) * m.ln() - ln_gamma(m)).exp();
                ClassCParams {
                    alpha: a,
                    l: m - one,
                    beta: m,
                    n: one,
                    tail_correction: TailCorrection::Zero,
                    eta: a,
                    gamma: m,
                }
            }
            Family::Weibull { c } => {
                let half = c / T::lit(2.0);
                let b = gamma_fn(one + T::lit(2.0) / c).powf(half);
                ClassCParams {
                    alpha: one,
                    l: T::zero(),
                    beta: b,
                    n: half,
                    tail_correction: TailCorrection::Zero,
                    eta: b,
                    gamma: half,
                }
            }
        }
    }

    /// A sampler with the per-draw constants precomputed.
    pub fn sampler(&self) -> FadingSampler<T> {
        match self.family {
            Family::Rayleigh => FadingSampler::Exponential,
            Family::Rician { k_factor: k } => {
                let one = T::one();
                FadingSampler::Rician {
                    los: (k / (k + one)).sqrt(),
                    sigma: (one / (T::lit(2.0) * (k + one))).sqrt(),
                }
            }
            Family::Nakagami { m } => FadingSampler::Gamma { dist: T::gamma_sampler(m), inv_m: m.recip() },
            Family::Weibull { .. } => {
                let p = self.class_c_params();
                FadingSampler::Weibull { beta: p.beta, inv_n: p.n.recip() }
            }
        }
    }

    /// One power-gain draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.sampler().sample(rng)
    }

    /// Power-gain CDF F(x).
    pub fn cdf(&self, x: T) -> T {
        if !(x > T::zero()) {
            return T::zero();
        }
        if x.is_infinite() {
            return T::one();
        }
        match self.family {
            Family::Rayleigh => -(-x).exp_m1(),
            Family::Nakagami { m } => gamma_p(m, m * x),
            Family::Weibull { .. } => {
                let p = self.class_c_params();
                -(-(p.beta * x.powf(p.n))).exp_m1()
            }
            Family::Rician { k_factor } => rician_series(k_factor, x, gamma_p),
        }
    }

    /// Survival function 1 − F(x), computed without cancellation in the tail.
    pub fn survival(&self, x: T) -> T {
        if !(x > T::zero()) {
            return T::one();
        }
        if x.is_infinite() {
            return T::zero();
        }
        match self.family {
            Family::Rayleigh => (-x).exp(),
            Family::Nakagami { m } => gamma_q(m, m * x),
            Family::Weibull { .. } => {
                let p = self.class_c_params();
                (-(p.beta * x.powf(p.n))).exp()
            }
            Family::Rician { k_factor } => rician_series(k_factor, x, gamma_q),
        }
    }

    /// Numeric inverse CDF by bracketed bisection (absolute tolerance 1e-10,
    /// tightened relatively for small quantiles).
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::InvalidArgument(format!("quantile level must lie in (0, 1), got {p}")));
        }
        let mut lo = T::zero();
        let mut hi = T::one();
        while self.cdf(hi) < p {
            lo = hi;
            hi = hi * T::lit(2.0);
        }
        let abs_tol = T::lit(1e-10);
        for _ in 0..400 {
            let mid = lo + (hi - lo) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= abs_tol && hi - lo <= T::lit(1e-12) * hi {
                break;
            }
        }
        Ok(lo + (hi - lo) / T::lit(2.0))
    }

    /// E[h^p] for p > 0.
    pub fn moment(&self, p: T) -> Result<T> {
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::InvalidMomentOrder(p.as_f64()));
        }
        let one = T::one();
        let value = match self.family {
            Family::Rayleigh => gamma_fn(one + p),
            Family::Nakagami { m } => (ln_gamma(m + p) - ln_gamma(m) - p * m.ln()).exp(),
            Family::Weibull { c } => {
                let two_over_c = T::lit(2.0) / c;
                (ln_gamma(one + p * two_over_c) - p * ln_gamma(one + two_over_c)).exp()
            }
            Family::Rician { k_factor: k } => {
                // Poisson(K) mixture of Gamma(j + 1, rate K + 1) laws.
                let rate = k + one;
                poisson_mixture(k, |j| (ln_gamma(j + one + p) - ln_gamma(j + one)).exp() / rate.powf(p))
            }
        };
        Ok(value)
    }
}

impl<T: Real> fmt::Display for FadingModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Rayleigh => write!(f, "rayleigh"),
            Family::Rician { k_factor } => write!(f, "rician:{k_factor}"),
            Family::Nakagami { m } => write!(f, "nakagami:{m}"),
            Family::Weibull { c } => write!(f, "weibull:{c}"),
        }
    }
}

impl<T: Real> FromStr for FadingModel<T> {
    type Err = Error;

    /// Parses `rayleigh`, `rician:<K_f>`, `nakagami:<m>` or `weibull:<c>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let value = |what: &str| -> Result<T> {
            let raw = arg.ok_or_else(|| Error::InvalidModel(format!("{name} needs a {what} parameter")))?;
            raw.parse::<f64>()
                .map(T::lit)
                .map_err(|_| Error::InvalidModel(format!("cannot parse {what} from {raw:?}")))
        };
        match name.to_ascii_lowercase().as_str() {
            "rayleigh" if arg.is_none() => Ok(Self::rayleigh()),
            "rician" | "rice" => Self::rician(value("K_f")?),
            "nakagami" => Self::nakagami(value("m")?),
            "weibull" => Self::weibull(value("c")?),
            _ => Err(Error::InvalidModel(format!("unknown fading model {s:?}"))),
        }
    }
}

/// Σ_j Poisson(j; k) · term(j), truncated once the remaining Poisson mass is
/// negligible relative to the accumulated sum.
fn poisson_mixture<T: Real>(k: T, term: impl Fn(T) -> T) -> T {
    let mut weight = (-k).exp();
    let mut acc = T::zero();
    for j in 0..100_000usize {
        let jt = T::from_usize_lossy(j);
        let t = term(jt);
        acc = acc + weight * t;
        let next = weight * k / (jt + T::one());
        // Past j = 2K the remaining Poisson mass is below 2·next; terms grow
        // at most polynomially in j.
        if jt + T::one() > T::lit(2.0) * k {
            let bound = T::lit(8.0) * next * t.max(T::one());
            if next < T::min_positive_value() || bound <= T::epsilon() * T::lit(1e-2) * acc {
                break;
            }
        }
        weight = next;
    }
    acc
}

fn rician_series<T: Real>(k: T, x: T, reg_gamma: fn(T, T) -> T) -> T {
    let y = (k + T::one()) * x;
    let value = poisson_mixture(k, |j| reg_gamma(j + T::one(), y));
    value.max(T::zero()).min(T::one())
}

/// Prepared sampler for a [`FadingModel`].
#[derive(Debug, Clone)]
pub enum FadingSampler<T: Real> {
    Exponential,
    Gamma { dist: T::GammaSampler, inv_m: T },
    /// Exact inverse CDF: x = (E / β)^{1/n} with E ~ Exp(1).
    Weibull { beta: T, inv_n: T },
    Rician { los: T, sigma: T },
}

impl<T: Real> FadingSampler<T> {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        use rand_distr::Distribution;
        match self {
            FadingSampler::Exponential => T::sample_exp1(rng),
            FadingSampler::Gamma { dist, inv_m } => dist.sample(rng) * *inv_m,
            FadingSampler::Weibull { beta, inv_n } => (T::sample_exp1(rng) / *beta).powf(*inv_n),
            FadingSampler::Rician { los, sigma } => {
                let re = *los + *sigma * T::sample_standard_normal(rng);
                let im = *sigma * T::sample_standard_normal(rng);
                re * re + im * im
            }
        }
    }

    /// Fills `out` with independent draws.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        for v in out {
            *v = self.sample(rng);
        }
    }
}

/// The slowly varying tail correction H(x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailCorrection<T> {
    Zero,
    /// H(x) = coef · √x (Rician: coef = 2√(K_f(K_f+1))).
    SqrtLinear { coef: T },
}

impl<T: Real> TailCorrection<T> {
    #[inline]
    pub fn eval(&self, x: T) -> T {
        match *self {
            TailCorrection::Zero => T::zero(),
            TailCorrection::SqrtLinear { coef } => coef * x.sqrt(),
        }
    }
}

/// `(α, l, β, n, H, η, γ)` of a class-C law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCParams<T> {
    pub alpha: T,
    pub l: T,
    pub beta: T,
    pub n: T,
    pub tail_correction: TailCorrection<T>,
    pub eta: T,
    pub gamma: T,
}

impl<T: Real> ClassCParams<T> {
    fn rayleigh() -> Self {
        let one = T::one();
        ClassCParams {
            alpha: one,
            l: T::zero(),
            beta: one,
            n: one,
            tail_correction: TailCorrection::Zero,
            eta: one,
            gamma: one,
        }
    }

    /// The point C above which G is strictly increasing for every catalog law.
    pub fn threshold(&self) -> T {
        T::one()
    }

    /// Tail asymptote α x^l exp(−β x^n + H(x)) of 1 − F.
    pub fn tail_asymptote(&self, x: T) -> T {
        self.alpha * x.powf(self.l) * (-self.beta * x.powf(self.n) + self.tail_correction.eval(x)).exp()
    }

    /// Origin asymptote η x^γ of F.
    pub fn origin_asymptote(&self, x: T) -> T {
        self.eta * x.powf(self.gamma)
    }

    /// ln G(x) without the threshold check.
    pub fn ln_tail_g(&self, x: T) -> T {
        -self.l * x.ln() + self.beta * x.powf(self.n) - self.tail_correction.eval(x) - self.alpha.ln()
    }

    /// G(x) = x^{-l} exp(β x^n − H(x)) / α for x ≥ C.
    pub fn tail_g(&self, x: T) -> Result<T> {
        let c = self.threshold();
        if !(x >= c) {
            return Err(Error::BelowThreshold { arg: x.as_f64(), min: c.as_f64() });
        }
        Ok(self.ln_tail_g(x).exp())
    }

    /// Solves G(z) = y for z ≥ C by bisection on ln G.
    pub fn tail_g_inv(&self, y: T) -> Result<T> {
        let c = self.threshold();
        let ln_min = self.ln_tail_g(c);
        if !(y > T::zero()) || y.ln() < ln_min {
            return Err(Error::BelowThreshold { arg: y.as_f64(), min: ln_min.exp().as_f64() });
        }
        self.tail_g_inv_ln(y.ln())
    }

    /// As [`Self::tail_g_inv`] but takes ln y, so huge arguments stay finite.
    pub fn tail_g_inv_ln(&self, ln_y: T) -> Result<T> {
        let c = self.threshold();
        let ln_min = self.ln_tail_g(c);
        if ln_y < ln_min {
            return Err(Error::BelowThreshold { arg: ln_y.exp().as_f64(), min: ln_min.exp().as_f64() });
        }
        let mut lo = c;
        let mut hi = c + T::one();
        while self.ln_tail_g(hi) < ln_y {
            lo = hi;
            hi = hi * T::lit(2.0);
            if hi.is_infinite() {
                return Err(Error::InvalidArgument("tail_g_inv bracket overflow".into()));
            }
        }
        for _ in 0..2_000 {
            let mid = lo + (hi - lo) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_tail_g(mid) < ln_y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }
}
