//! Lagrange multipliers for the average constraints.
//!
//! The solver draws one channel batch and reuses it for every iterate
//! (common random numbers), so the estimated constraint functionals are
//! monotone in each multiplier and plain bisection applies: an outer search
//! on λ, an inner one on μ.
//!
//! A realization only ever schedules a user on the Pareto front of its
//! eligible set (no other eligible user has both a larger h and a smaller g),
//! so the batch stores just that front, typically O(log N) users.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::order_stats::select_k_smallest;
use crate::power_control::{effective_duals, served};
use crate::real::Real;
use crate::rng::{stream, Purpose};
use crate::simulator::{draw_channel, ChannelDraw, Network, ScenarioConfig};
use crate::stats::MeanEstimate;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DualVariables<T> {
    /// Multiplier of the transmit-power constraint.
    pub lambda: T,
    /// Multiplier of the interference constraint.
    pub mu: T,
}

impl<T: Real> DualVariables<T> {
    pub fn new(lambda: T, mu: T) -> Self {
        DualVariables { lambda, mu }
    }
}

/// Batch averages of the constrained quantities with 95% half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEstimate<T> {
    pub avg_total_power: T,
    pub avg_interference: T,
    /// Per-user average power, `avg_total_power / N` by symmetry.
    pub avg_individual_power: T,
    pub power_hw: T,
    pub interference_hw: T,
    pub individual_hw: T,
}

impl<T: Real> ConstraintEstimate<T> {
    fn unbounded() -> Self {
        let inf = T::infinity();
        ConstraintEstimate {
            avg_total_power: inf,
            avg_interference: inf,
            avg_individual_power: inf,
            power_hw: T::zero(),
            interference_hw: T::zero(),
            individual_hw: T::zero(),
        }
    }
}

/// Pre-drawn realizations, each reduced to the `(h, g)` pairs of its
/// eligible Pareto front in ascending g.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBatch<T> {
    n: usize,
    offsets: Vec<usize>,
    front: Vec<(T, T)>,
}

/// Appends the Pareto front of `eligible` (ascending g, ties by index).
fn push_front<T: Real>(h: &[T], g: &[T], eligible: &[usize], out: &mut Vec<(T, T)>) {
    let mut best_h = T::neg_infinity();
    for &i in eligible {
        if h[i] > best_h {
            best_h = h[i];
            out.push((h[i], g[i]));
        }
    }
}

impl<T: Real> ChannelBatch<T> {
    /// Draws `size` realizations from the scenario's fading laws.
    pub fn draw(scenario: &ScenarioConfig<T>, size: usize, seed: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyBatch);
        }
        scenario.validate()?;
        let n = scenario.n;
        let k = scenario.k()?.unwrap_or(n);
        let (stsb, stpb) = (scenario.stsb.sampler(), scenario.stpb.sampler());
        let fronts: Vec<Vec<(T, T)>> = (0..size)
            .into_par_iter()
            .map_init(
                || ChannelDraw::zeros(n),
                |draw, r| {
                    let mut rng = stream(seed, Purpose::DualBatch, r as u64);
                    draw_channel(&stsb, &stpb, &mut rng, draw);
                    let sel = select_k_smallest(&draw.g, k).expect("validated selection size");
                    let mut f = Vec::new();
                    push_front(&draw.h, &draw.g, &sel.indices, &mut f);
                    f
                },
            )
            .collect();
        Ok(Self::from_fronts(n, fronts))
    }

    /// Builds a batch from explicit draws.
    pub fn from_draws(scenario: &ScenarioConfig<T>, draws: &[ChannelDraw<T>]) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = scenario.n;
        let k = scenario.k()?.unwrap_or(n);
        let mut fronts = Vec::with_capacity(draws.len());
        for d in draws {
            if d.h.len() != n || d.g.len() != n {
                return Err(Error::InvalidGains);
            }
            let sel = select_k_smallest(&d.g, k)?;
            let mut f = Vec::new();
            push_front(&d.h, &d.g, &sel.indices, &mut f);
            fronts.push(f);
        }
        Ok(Self::from_fronts(n, fronts))
    }

    fn from_fronts(n: usize, fronts: Vec<Vec<(T, T)>>) -> Self {
        let mut offsets = Vec::with_capacity(fronts.len() + 1);
        offsets.push(0);
        let mut front = Vec::with_capacity(fronts.iter().map(Vec::len).sum());
        for f in fronts {
            front.extend_from_slice(&f);
            offsets.push(front.len());
        }
        ChannelBatch { n, offsets, front }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn users(&self) -> usize {
        self.n
    }

    /// Mean number of stored candidates per realization.
    pub fn mean_front_size(&self) -> f64 {
        self.front.len() as f64 / self.len() as f64
    }

    fn realization(&self, r: usize) -> &[(T, T)] {
        &self.front[self.offsets[r]..self.offsets[r + 1]]
    }

    /// `(power, interference)` of the scheduled user in realization `r`.
    fn evaluate(&self, r: usize, duals: &DualVariables<T>) -> (T, T) {
        let mut best = (T::neg_infinity(), T::zero(), T::zero(), T::one());
        for &(h, g) in self.realization(r) {
            let d = duals.lambda + duals.mu * g;
            let x = h / d;
            if x > best.0 {
                best = (x, h, g, d);
            }
        }
        let (_, h, g, d) = best;
        let (power, _, intf) = served(h, g, d);
        (power, intf)
    }
}

/// Batch averages of total power and interference at the given duals, after
/// the scenario's forced zeros (λ for IL, μ for the primary MAC).
pub fn estimate_constraints<T: Real>(
    scenario: &ScenarioConfig<T>,
    duals: &DualVariables<T>,
    batch: &ChannelBatch<T>,
) -> Result<ConstraintEstimate<T>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let duals = effective_duals(scenario.network, duals);
    if duals.lambda < T::zero() || duals.mu < T::zero() {
        return Err(Error::InvalidArgument("dual variables must be non-negative".into()));
    }
    if duals.lambda == T::zero() && duals.mu == T::zero() {
        return Err(Error::UnboundedWaterLevel);
    }
    let (power, intf): (Vec<T>, Vec<T>) = (0..batch.len()).into_par_iter().map(|r| batch.evaluate(r, &duals)).unzip();
    let p = MeanEstimate::from_samples(&power);
    let i = MeanEstimate::from_samples(&intf);
    let nt = T::from_usize_lossy(batch.n);
    Ok(ConstraintEstimate {
        avg_total_power: p.mean,
        avg_interference: i.mean,
        avg_individual_power: p.mean / nt,
        power_hw: p.half_width,
        interference_hw: i.half_width,
        individual_hw: p.half_width / nt,
    })
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions<T> {
    pub batch_size: usize,
    /// Relative tolerance on each active constraint.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions { batch_size: 20_000, tol: T::lit(0.02), max_iter: 200 }
    }
}

impl<T: Real> SolverOptions<T> {
    fn validate(&self) -> Result<()> {
        if !(self.tol > T::zero() && self.tol <= T::lit(0.1)) {
            return Err(Error::InvalidArgument(format!("solver tolerance must lie in (0, 0.1], got {}", self.tol)));
        }
        if self.batch_size == 0 {
            return Err(Error::EmptyBatch);
        }
        Ok(())
    }
}

/// Solved multipliers and the batch estimate they produce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSolution<T> {
    pub duals: DualVariables<T>,
    pub estimate: ConstraintEstimate<T>,
    /// Power constraint strictly slack (below target by three half-widths) at λ = 0.
    pub power_slack: bool,
    /// Interference constraint strictly slack at μ = 0.
    pub interference_slack: bool,
    /// Constraint evaluations spent.
    pub evaluations: usize,
}

/// Average total-power budget of the network, if it has one. Individual
/// constraints are symmetric, so they amount to a total budget of N·P_ave.
pub fn power_target<T: Real>(scenario: &ScenarioConfig<T>) -> Option<T> {
    match scenario.network {
        Network::Tpil => Some(scenario.p_ave),
        Network::Ipil | Network::PrimaryMac => Some(scenario.p_ave * T::from_usize_lossy(scenario.n)),
        Network::Il => None,
    }
}

/// Average interference budget of the network, if it has one.
pub fn interference_target<T: Real>(scenario: &ScenarioConfig<T>) -> Option<T> {
    match scenario.network {
        Network::PrimaryMac => None,
        _ => Some(scenario.q_ave),
    }
}

struct Search<'a, T: Real> {
    scenario: &'a ScenarioConfig<T>,
    batch: &'a ChannelBatch<T>,
    opts: SolverOptions<T>,
    evaluations: usize,
}

struct InnerResult<T> {
    mu: T,
    estimate: ConstraintEstimate<T>,
    slack: bool,
}

impl<T: Real> Search<'_, T> {
    fn eval(&mut self, lambda: T, mu: T) -> Result<ConstraintEstimate<T>> {
        self.evaluations += 1;
        if lambda == T::zero() && mu == T::zero() {
            return Ok(ConstraintEstimate::unbounded());
        }
        estimate_constraints(self.scenario, &DualVariables { lambda, mu }, self.batch)
    }

    /// μ meeting the interference budget at fixed λ.
    fn solve_mu(&mut self, lambda: T) -> Result<InnerResult<T>> {
        let Some(q) = interference_target(self.scenario) else {
            let estimate = self.eval(lambda, T::zero())?;
            return Ok(InnerResult { mu: T::zero(), estimate, slack: true });
        };
        let tol = self.opts.tol / T::lit(8.0);
        let at_zero = self.eval(lambda, T::zero())?;
        if at_zero.avg_interference <= q * (T::one() + tol) {
            let slack = at_zero.avg_interference < q - T::lit(3.0) * at_zero.interference_hw;
            return Ok(InnerResult { mu: T::zero(), estimate: at_zero, slack });
        }
        let (mut lo, mut hi) = (T::zero(), (T::one() + self.opts.tol) / q);
        let mut ratio = T::infinity();
        for _ in 0..self.opts.max_iter {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            let e = self.eval(lambda, mid)?;
            ratio = e.avg_interference / q;
            if (ratio - T::one()).abs() <= tol {
                return Ok(InnerResult { mu: mid, estimate: e, slack: false });
            }
            if ratio > T::one() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::NonConvergence {
            multiplier: "mu",
            iterations: self.opts.max_iter,
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            ratio: ratio.as_f64(),
        })
    }

    fn solve(&mut self) -> Result<DualSolution<T>> {
        let Some(p) = power_target(self.scenario) else {
            let inner = self.solve_mu(T::zero())?;
            return Ok(self.finish(T::zero(), inner, true));
        };
        let tol = self.opts.tol;
        if self.scenario.network != Network::PrimaryMac {
            let inner = self.solve_mu(T::zero())?;
            if inner.estimate.avg_total_power <= p * (T::one() + tol) {
                let slack = inner.estimate.avg_total_power < p - T::lit(3.0) * inner.estimate.power_hw;
                return Ok(self.finish(T::zero(), inner, slack));
            }
        }
        let (mut lo, mut hi) = (T::zero(), (T::one() + tol) / p);
        let mut ratio = T::infinity();
        for _ in 0..self.opts.max_iter {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            let inner = self.solve_mu(mid)?;
            ratio = inner.estimate.avg_total_power / p;
            if (ratio - T::one()).abs() <= tol {
                return Ok(self.finish(mid, inner, false));
            }
            if ratio > T::one() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::NonConvergence {
            multiplier: "lambda",
            iterations: self.opts.max_iter,
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            ratio: ratio.as_f64(),
        })
    }

    fn finish(&self, lambda: T, inner: InnerResult<T>, power_slack: bool) -> DualSolution<T> {
        DualSolution {
            duals: DualVariables { lambda, mu: inner.mu },
            estimate: inner.estimate,
            power_slack,
            interference_slack: inner.slack,
            evaluations: self.evaluations,
        }
    }
}

/// Solves the multipliers on a given batch.
pub fn solve_on_batch<T: Real>(
    scenario: &ScenarioConfig<T>,
    batch: &ChannelBatch<T>,
    opts: &SolverOptions<T>,
) -> Result<DualSolution<T>> {
    opts.validate()?;
    scenario.validate()?;
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.users() != scenario.n {
        return Err(Error::InvalidScenario(format!("batch has {} users, scenario {}", batch.users(), scenario.n)));
    }
    Search { scenario, batch, opts: *opts, evaluations: 0 }.solve()
}

/// Draws a fresh batch from `seed` and solves the multipliers on it.
pub fn solve_duals<T: Real>(scenario: &ScenarioConfig<T>, opts: &SolverOptions<T>, seed: u64) -> Result<DualSolution<T>> {
    opts.validate()?;
    let batch = ChannelBatch::draw(scenario, opts.batch_size, seed)?;
    solve_on_batch(scenario, &batch, opts)
}
