//! Monte Carlo estimation of sum-rate and interference at a fixed user count.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual_solver::{interference_target, power_target, solve_duals, DualSolution, DualVariables, SolverOptions};
use crate::error::{Error, Result};
use crate::fading::{FadingModel, FadingSampler};
use crate::power_control::allocate_scenario;
use crate::real::Real;
use crate::rng::{derive_seed, stream, Purpose};
use crate::stats::{spearman_rho, MeanEstimate};

/// Which average constraints bind the secondary network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Network {
    /// Total transmit power and interference.
    Tpil,
    /// Interference only.
    Il,
    /// Individual transmit powers and interference.
    Ipil,
    /// Individual transmit powers only; no primary receiver.
    PrimaryMac,
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Network::Tpil => "tpil",
            Network::Il => "il",
            Network::Ipil => "ipil",
            Network::PrimaryMac => "primary_mac",
        })
    }
}

impl FromStr for Network {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tpil" => Ok(Network::Tpil),
            "il" => Ok(Network::Il),
            "ipil" => Ok(Network::Ipil),
            "primary_mac" | "primary-mac" => Ok(Network::PrimaryMac),
            other => Err(Error::InvalidScenario(format!("unknown network `{other}`"))),
        }
    }
}

/// How many users the K-SCG protocol feeds back at a given N.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KSchedule<T> {
    /// K(N) = ⌈N^δ⌉.
    Power(T),
    /// K(N) = k.
    Constant(usize),
}

impl<T: Real> KSchedule<T> {
    pub fn k(&self, n: usize) -> Result<usize> {
        match *self {
            KSchedule::Power(delta) => {
                if !(delta > T::zero() && delta <= T::one()) {
                    return Err(Error::InvalidScenario(format!("K-SCG exponent must lie in (0, 1], got {delta}")));
                }
                let x = T::from_usize_lossy(n).powf(delta).as_f64();
                // exact integer powers (1024^0.5) must not round up
                let r = x.round();
                let k = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
                Ok((k as usize).clamp(1, n.max(1)))
            }
            KSchedule::Constant(k) => {
                if k == 0 || k > n {
                    Err(Error::KOutOfRange { k, n })
                } else {
                    Ok(k)
                }
            }
        }
    }
}

/// Feedback protocol from the primary to the secondary base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feedback<T> {
    Full,
    Kscg(KSchedule<T>),
}

impl<T: Real> fmt::Display for Feedback<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feedback::Full => f.write_str("full"),
            Feedback::Kscg(KSchedule::Power(d)) => write!(f, "kscg:n^{d}"),
            Feedback::Kscg(KSchedule::Constant(k)) => write!(f, "kscg:{k}"),
        }
    }
}

impl<T: Real> FromStr for Feedback<T> {
    type Err = Error;

    /// `full`, `kscg:<k>` or `kscg:n^<delta>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "full" {
            return Ok(Feedback::Full);
        }
        let bad = || Error::InvalidScenario(format!("unknown feedback `{s}`; expected full, kscg:<k> or kscg:n^<delta>"));
        let rest = s.strip_prefix("kscg:").ok_or_else(bad)?;
        if let Some(exp) = rest.strip_prefix("n^") {
            let d: f64 = exp.parse().map_err(|_| bad())?;
            let delta = T::lit(d);
            KSchedule::Power(delta).k(2)?;
            return Ok(Feedback::Kscg(KSchedule::Power(delta)));
        }
        let k: usize = rest.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        Ok(Feedback::Kscg(KSchedule::Constant(k)))
    }
}

/// One (network, feedback, budgets, fading, N) operating point. Budgets are
/// linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig<T> {
    pub network: Network,
    pub feedback: Feedback<T>,
    pub p_ave: T,
    pub q_ave: T,
    /// Secondary-transmitter-to-secondary-base-station power gains h.
    pub stsb: FadingModel<T>,
    /// Secondary-transmitter-to-primary-base-station power gains g.
    pub stpb: FadingModel<T>,
    pub n: usize,
}

impl<T: Real> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if self.n == 0 {
            return Err(Error::InvalidScenario("user count must be positive".into()));
        }
        if self.network != Network::Il && !positive(self.p_ave) {
            return Err(Error::InvalidScenario(format!("P_ave must be positive, got {}", self.p_ave)));
        }
        if self.network != Network::PrimaryMac && !positive(self.q_ave) {
            return Err(Error::InvalidScenario(format!("Q_ave must be positive, got {}", self.q_ave)));
        }
        self.k().map(|_| ())
    }

    /// K(N) under K-SCG feedback, `None` under full feedback.
    pub fn k(&self) -> Result<Option<usize>> {
        match self.feedback {
            Feedback::Full => Ok(None),
            Feedback::Kscg(s) => s.k(self.n).map(Some),
        }
    }

    /// Number of users whose g is known at the secondary base station.
    pub fn fed_back(&self) -> Result<usize> {
        Ok(self.k()?.unwrap_or(self.n))
    }

    pub fn with_n(&self, n: usize) -> Self {
        ScenarioConfig { n, ..*self }
    }
}

/// Decibels to linear scale.
pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// One realization of the STSB (`h`) and STPB (`g`) power gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw<T> {
    pub h: Vec<T>,
    pub g: Vec<T>,
}

impl<T: Real> ChannelDraw<T> {
    pub fn zeros(n: usize) -> Self {
        ChannelDraw { h: vec![T::zero(); n], g: vec![T::zero(); n] }
    }
}

/// Fills `draw` with h first, then g.
pub fn draw_channel<T: Real, R: Rng + ?Sized>(
    stsb: &FadingSampler<T>,
    stpb: &FadingSampler<T>,
    rng: &mut R,
    draw: &mut ChannelDraw<T>,
) {
    stsb.fill(rng, &mut draw.h);
    stpb.fill(rng, &mut draw.g);
}

/// Monte Carlo sum-rate and interference of one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult<T> {
    pub n: usize,
    /// Fed-back users (N under full feedback).
    pub k: usize,
    /// Nats per channel use.
    pub sum_rate: T,
    pub rate_hw: T,
    pub interference: T,
    pub intf_hw: T,
    /// Average total transmit power.
    pub avg_power: T,
    pub power_hw: T,
    pub duals: DualVariables<T>,
    pub power_slack: bool,
    pub interference_slack: bool,
    pub trials: usize,
    pub seed: u64,
    /// Power budget the average total power is held to, if any.
    pub power_target: Option<T>,
    pub interference_target: Option<T>,
}

impl<T: Real> EstimateResult<T> {
    /// Average power relative to its budget.
    pub fn power_ratio(&self) -> Option<T> {
        self.power_target.map(|t| self.avg_power / t)
    }

    pub fn interference_ratio(&self) -> Option<T> {
        self.interference_target.map(|t| self.interference / t)
    }
}

/// Seed of the point at user count `n` derived from an experiment seed, so
/// that scenarios sharing a seed share channel draws.
pub fn point_seed(seed: u64, n: usize) -> u64 {
    derive_seed(seed, n as u64)
}

/// Solves the duals on a batch drawn from `seed`, then estimates the rate on
/// `trials` fresh draws from an independent stream.
pub fn estimate<T: Real>(scenario: &ScenarioConfig<T>, trials: usize, seed: u64) -> Result<EstimateResult<T>> {
    estimate_with_options(scenario, trials, seed, &SolverOptions::default())
}

pub fn estimate_with_options<T: Real>(
    scenario: &ScenarioConfig<T>,
    trials: usize,
    seed: u64,
    opts: &SolverOptions<T>,
) -> Result<EstimateResult<T>> {
    scenario.validate()?;
    let solution = solve_duals(scenario, opts, seed)?;
    let mut result = estimate_with_duals(scenario, &solution.duals, trials, seed)?;
    apply_solution(&mut result, &solution);
    Ok(result)
}

fn apply_solution<T: Real>(result: &mut EstimateResult<T>, solution: &DualSolution<T>) {
    result.power_slack = solution.power_slack;
    result.interference_slack = solution.interference_slack;
}

/// Estimates at fixed duals.
pub fn estimate_with_duals<T: Real>(
    scenario: &ScenarioConfig<T>,
    duals: &DualVariables<T>,
    trials: usize,
    seed: u64,
) -> Result<EstimateResult<T>> {
    scenario.validate()?;
    if trials < 2 {
        return Err(Error::InvalidArgument(format!("need at least two trials, got {trials}")));
    }
    let n = scenario.n;
    let (stsb, stpb) = (scenario.stsb.sampler(), scenario.stpb.sampler());
    let outcomes: Vec<Result<(T, T, T)>> = (0..trials)
        .into_par_iter()
        .map_init(
            || ChannelDraw::zeros(n),
            |draw, t| {
                let mut rng = stream(seed, Purpose::Trials, t as u64);
                draw_channel(&stsb, &stpb, &mut rng, draw);
                let r = allocate_scenario(scenario, &draw.h, &draw.g, duals)?;
                Ok((r.rate, r.interference, r.power))
            },
        )
        .collect();
    let mut rate = Vec::with_capacity(trials);
    let mut intf = Vec::with_capacity(trials);
    let mut power = Vec::with_capacity(trials);
    for o in outcomes {
        let (r, i, p) = o?;
        rate.push(r);
        intf.push(i);
        power.push(p);
    }
    let (r, i, p) = (MeanEstimate::from_samples(&rate), MeanEstimate::from_samples(&intf), MeanEstimate::from_samples(&power));
    Ok(EstimateResult {
        n,
        k: scenario.fed_back()?,
        sum_rate: r.mean,
        rate_hw: r.half_width,
        interference: i.mean,
        intf_hw: i.half_width,
        avg_power: p.mean,
        power_hw: p.half_width,
        duals: *duals,
        power_slack: false,
        interference_slack: false,
        trials,
        seed,
        power_target: power_target(scenario),
        interference_target: interference_target(scenario),
    })
}

/// Interference at the primary base station across user counts.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceProfile<T> {
    pub points: Vec<EstimateResult<T>>,
    /// Spearman correlation of mean interference with N.
    pub spearman: f64,
    /// Smallest N at which μ = 0 was detected.
    pub first_slack_n: Option<usize>,
    /// μ stayed 0 at every N after `first_slack_n`.
    pub slack_persists: bool,
}

/// Runs [`estimate`] at each N (seeded per N) and summarizes the trend.
pub fn interference_profile<T: Real>(
    scenario: &ScenarioConfig<T>,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    opts: &SolverOptions<T>,
) -> Result<InterferenceProfile<T>> {
    if n_list.len() < 2 {
        return Err(Error::InvalidArgument("interference profile needs at least two user counts".into()));
    }
    let points = n_list
        .iter()
        .map(|&n| estimate_with_options(&scenario.with_n(n), trials, point_seed(seed, n), opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(InterferenceProfile::from_points(points))
}

impl<T: Real> InterferenceProfile<T> {
    /// Summarizes estimates ordered by N.
    pub fn from_points(points: Vec<EstimateResult<T>>) -> Self {
        let ns: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
        let intf: Vec<f64> = points.iter().map(|p| p.interference.as_f64()).collect();
        let first = points.iter().position(|p| p.duals.mu == T::zero());
        InterferenceProfile {
            spearman: spearman_rho(&ns, &intf),
            first_slack_n: first.map(|i| points[i].n),
            slack_persists: first.is_none_or(|i| points[i..].iter().all(|p| p.duals.mu == T::zero())),
            points,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tpil(n: usize, feedback: Feedback<f64>) -> ScenarioConfig<f64> {
        ScenarioConfig {
            network: Network::Tpil,
            feedback,
            p_ave: db_to_linear(15.0),
            q_ave: db_to_linear(0.0),
            stsb: FadingModel::rayleigh(),
            stpb: FadingModel::rayleigh(),
            n,
        }
    }

    #[test]
    fn k_schedule_ceilings() {
        let p = KSchedule::Power(0.5f64);
        assert_eq!(p.k(1024).unwrap(), 32);
        assert_eq!(p.k(16).unwrap(), 4);
        assert_eq!(p.k(17).unwrap(), 5);
        assert_eq!(KSchedule::Power(0.8f64).k(1024).unwrap(), 256);
        assert_eq!(KSchedule::Power(0.8f64).k(1).unwrap(), 1);
        assert_eq!(KSchedule::<f64>::Constant(3).k(2), Err(Error::KOutOfRange { k: 3, n: 2 }));
        assert!(KSchedule::Power(1.5f64).k(10).is_err());
    }

    #[test]
    fn feedback_grammar_round_trips() {
        for s in ["full", "kscg:1", "kscg:n^0.8", "kscg:n^0.5"] {
            let f: Feedback<f64> = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("kscg:0".parse::<Feedback<f64>>().is_err());
        assert!("kscg:n^2".parse::<Feedback<f64>>().is_err());
        assert!("partial".parse::<Feedback<f64>>().is_err());
        assert_eq!("ipil".parse::<Network>().unwrap(), Network::Ipil);
    }

    #[test]
    fn decibels() {
        assert_relative_eq!(db_to_linear(15.0f64), 31.622_776_601_683_79, max_relative = 1e-14);
        assert_eq!(db_to_linear(0.0f64), 1.0);
    }

    #[test]
    fn validation() {
        let mut s = tpil(4, Feedback::Full);
        s.p_ave = 0.0;
        assert!(s.validate().is_err());
        s.network = Network::Il;
        assert!(s.validate().is_ok());
        assert!(tpil(0, Feedback::Full).validate().is_err());
        assert!(tpil(3, Feedback::Kscg(KSchedule::Constant(4))).validate().is_err());
    }

    /// E[log(h P)·1{h P ≥ 1}] for h ~ Exp(1), i.e. E₁(1/P), by the trapezoid rule.
    fn single_user_rate_oracle(p: f64) -> f64 {
        let (a, b, steps) = (1.0 / p, 60.0, 400_000);
        let dx = (b - a) / steps as f64;
        let f = |h: f64| (h * p).ln() * (-h).exp();
        let inner: f64 = (1..steps).map(|i| f(a + i as f64 * dx)).sum();
        dx * (inner + 0.5 * (f(a) + f(b)))
    }

    #[test]
    fn single_user_rate_matches_quadrature() {
        let s = tpil(1, Feedback::Full);
        let duals = DualVariables::new(1.0 / s.p_ave, 0.0);
        let r = estimate_with_duals(&s, &duals, 100_000, 3).unwrap();
        let oracle = single_user_rate_oracle(s.p_ave);
        assert!((r.sum_rate / oracle - 1.0).abs() < 0.02, "{} vs {oracle}", r.sum_rate);
    }

    #[test]
    fn full_kscg_is_bit_identical_to_full_feedback() {
        let a = estimate(&tpil(24, Feedback::Full), 2_000, 9).unwrap();
        let b = estimate(&tpil(24, Feedback::Kscg(KSchedule::Constant(24))), 2_000, 9).unwrap();
        assert_eq!(a.sum_rate.to_bits(), b.sum_rate.to_bits());
        assert_eq!(a.interference.to_bits(), b.interference.to_bits());
        assert_eq!(a.duals, b.duals);
        assert_eq!(a.k, 24);
    }

    #[test]
    fn reproducible_across_thread_pools() {
        let s = tpil(32, Feedback::Kscg(KSchedule::Power(0.8)));
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| estimate(&s, 3_000, 77).unwrap())
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn kscg_does_not_beat_full_feedback() {
        let seed = 5;
        let full = estimate(&tpil(64, Feedback::Full), 5_000, seed).unwrap();
        let k = estimate(&tpil(64, Feedback::Kscg(KSchedule::Power(0.5))), 5_000, seed).unwrap();
        assert!(k.sum_rate <= full.sum_rate + 2.0 * (full.rate_hw + k.rate_hw));
    }

    #[test]
    fn full_feedback_meets_interference_budget_with_equality() {
        let r = estimate(&tpil(256, Feedback::Full), 20_000, 4).unwrap();
        assert!(r.duals.mu > 0.0);
        let ratio = r.interference_ratio().unwrap();
        assert!((ratio - 1.0).abs() < 0.02 + 2.0 * r.intf_hw, "ratio {ratio}");
    }
}
