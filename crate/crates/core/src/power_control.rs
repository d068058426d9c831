//! Per-realization scheduling and water-filling power.
//!
//! One user transmits per channel realization: the eligible user with the
//! largest metric `X = h / (λ + μ g)`. Its power is `(1/(λ+μg) − 1/h)⁺`.

use crate::dual_solver::DualVariables;
use crate::error::{Error, Result};
use crate::order_stats::select_k_smallest;
use crate::real::Real;
use crate::simulator::{Network, ScenarioConfig};

/// Users allowed to transmit in a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eligible<'a> {
    All,
    Subset(&'a [usize]),
}

/// Outcome of scheduling one realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationResult<T> {
    /// The transmitting user; `None` when the water level leaves everyone silent.
    pub selected: Option<usize>,
    pub power: T,
    /// Nats per channel use.
    pub rate: T,
    /// g·power at the primary base station.
    pub interference: T,
    /// X*, the winning metric.
    pub max_metric: T,
}

impl<T: Real> AllocationResult<T> {
    fn silent(max_metric: T) -> Self {
        AllocationResult { selected: None, power: T::zero(), rate: T::zero(), interference: T::zero(), max_metric }
    }
}

/// Metrics of the eligible users and their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricState<T> {
    /// `(user, X_user)` in eligible-set order.
    pub metric: Vec<(usize, T)>,
    pub max_metric: T,
    /// Lowest-index user attaining `max_metric`.
    pub argmax: usize,
}

fn check_duals<T: Real>(duals: &DualVariables<T>) -> Result<()> {
    let (l, m) = (duals.lambda, duals.mu);
    if l.is_nan() || m.is_nan() || l < T::zero() || m < T::zero() {
        return Err(Error::InvalidArgument(format!("dual variables must be non-negative, got ({l}, {m})")));
    }
    if l == T::zero() && m == T::zero() {
        return Err(Error::UnboundedWaterLevel);
    }
    Ok(())
}

fn check_gains<T: Real>(h: &[T], g: &[T]) -> Result<()> {
    if h.is_empty() || h.len() != g.len() || h.iter().chain(g).any(|x| x.is_nan()) {
        return Err(Error::InvalidGains);
    }
    Ok(())
}

/// Visits eligible users in order, validating indices.
fn for_each_eligible(n: usize, eligible: Eligible<'_>, mut f: impl FnMut(usize)) -> Result<()> {
    match eligible {
        Eligible::All => (0..n).for_each(f),
        Eligible::Subset(set) => {
            if set.is_empty() {
                return Err(Error::InvalidEligible(n));
            }
            for &i in set {
                if i >= n {
                    return Err(Error::InvalidEligible(n));
                }
                f(i);
            }
        }
    }
    Ok(())
}

#[inline]
fn is_better<T: Real>(x: T, i: usize, best_x: T, best_i: usize) -> bool {
    x > best_x || (x == best_x && i < best_i)
}

/// Evaluates the metric of every eligible user.
pub fn metric_state<T: Real>(h: &[T], g: &[T], duals: &DualVariables<T>, eligible: Eligible<'_>) -> Result<MetricState<T>> {
    check_duals(duals)?;
    check_gains(h, g)?;
    let mut metric = Vec::new();
    let mut best = (T::neg_infinity(), usize::MAX);
    let mut unbounded = false;
    for_each_eligible(h.len(), eligible, |i| {
        let d = duals.lambda + duals.mu * g[i];
        if d <= T::zero() {
            unbounded = true;
        }
        let x = h[i] / d;
        if is_better(x, i, best.0, best.1) {
            best = (x, i);
        }
        metric.push((i, x));
    })?;
    if unbounded {
        return Err(Error::UnboundedWaterLevel);
    }
    Ok(MetricState { metric, max_metric: best.0, argmax: best.1 })
}

/// Water-filling power `(1/d − 1/h)⁺` written as `(h − d)/(h d)` so that it is
/// positive exactly when `h > d`.
#[inline]
pub fn water_fill<T: Real>(h: T, d: T) -> T {
    if h > d {
        (h - d) / (h * d)
    } else {
        T::zero()
    }
}

/// `(power, rate, interference)` of a user with gains `(h, g)` at water level
/// `1/d`. The rate is `log(h/d)` evaluated as `log1p((h − d)/d)`.
#[inline]
pub(crate) fn served<T: Real>(h: T, g: T, d: T) -> (T, T, T) {
    if h > d {
        let excess = h - d;
        let power = excess / (h * d);
        (power, (excess / d).ln_1p(), g * power)
    } else {
        (T::zero(), T::zero(), T::zero())
    }
}

/// Schedules the best eligible user and assigns its water-filling power.
pub fn allocate<T: Real>(h: &[T], g: &[T], duals: &DualVariables<T>, eligible: Eligible<'_>) -> Result<AllocationResult<T>> {
    check_duals(duals)?;
    check_gains(h, g)?;
    let mut best = (T::neg_infinity(), usize::MAX, T::one());
    for_each_eligible(h.len(), eligible, |i| {
        let d = duals.lambda + duals.mu * g[i];
        let x = h[i] / d;
        if is_better(x, i, best.0, best.1) {
            best = (x, i, d);
        }
    })?;
    let (x, i, d) = best;
    if d <= T::zero() {
        return Err(Error::UnboundedWaterLevel);
    }
    let (power, rate, interference) = served(h[i], g[i], d);
    if power <= T::zero() {
        return Ok(AllocationResult::silent(x));
    }
    Ok(AllocationResult { selected: Some(i), power, rate, interference, max_metric: x })
}

/// Duals actually used by a network: interference-limited networks drop λ,
/// the primary MAC drops μ.
pub fn effective_duals<T: Real>(network: Network, duals: &DualVariables<T>) -> DualVariables<T> {
    match network {
        Network::Il => DualVariables { lambda: T::zero(), mu: duals.mu },
        Network::PrimaryMac => DualVariables { lambda: duals.lambda, mu: T::zero() },
        Network::Tpil | Network::Ipil => *duals,
    }
}

/// Builds the scenario's eligible set (all users or the K-SCG selection) and
/// allocates on it.
pub fn allocate_scenario<T: Real>(
    scenario: &ScenarioConfig<T>,
    h: &[T],
    g: &[T],
    duals: &DualVariables<T>,
) -> Result<AllocationResult<T>> {
    if h.len() != scenario.n || g.len() != scenario.n {
        return Err(Error::InvalidGains);
    }
    let duals = effective_duals(scenario.network, duals);
    match scenario.k()? {
        Some(k) => {
            let sel = select_k_smallest(g, k)?;
            allocate(h, g, &duals, Eligible::Subset(&sel.indices))
        }
        None => allocate(h, g, &duals, Eligible::All),
    }
}

/// Lower-bound policy for interference-limited networks: the user with the
/// smallest g transmits at `Q_ave / g_min`, so every draw meets the
/// interference budget exactly.
pub fn suboptimal_il_policy<T: Real>(h: &[T], g: &[T], q_ave: T) -> Result<AllocationResult<T>> {
    check_gains(h, g)?;
    if !(q_ave > T::zero()) {
        return Err(Error::InvalidArgument(format!("Q_ave must be positive, got {q_ave}")));
    }
    let i = argmin(g, Eligible::All)?;
    let power = q_ave / g[i];
    Ok(AllocationResult {
        selected: Some(i),
        power,
        rate: (h[i] * power).ln_1p(),
        interference: g[i] * power,
        max_metric: T::one() + h[i] * power,
    })
}

/// Fixed-power policy `ε N^{min(1, 1/γ_g)}` for the lowest-g eligible user.
/// Feasibility of the average constraints is left to the caller.
pub fn suboptimal_ipil_policy<T: Real>(
    h: &[T],
    g: &[T],
    eps: T,
    gamma_g: T,
    n: usize,
    eligible: Eligible<'_>,
) -> Result<AllocationResult<T>> {
    check_gains(h, g)?;
    if !(eps > T::zero() && gamma_g > T::zero()) {
        return Err(Error::InvalidArgument("eps and gamma_g must be positive".into()));
    }
    let i = argmin(g, eligible)?;
    let power = eps * T::from_usize_lossy(n).powf(T::one().min(gamma_g.recip()));
    Ok(AllocationResult {
        selected: Some(i),
        power,
        rate: (h[i] * power).ln_1p(),
        interference: g[i] * power,
        max_metric: T::one() + h[i] * power,
    })
}

fn argmin<T: Real>(g: &[T], eligible: Eligible<'_>) -> Result<usize> {
    let mut best = (T::infinity(), usize::MAX);
    for_each_eligible(g.len(), eligible, |i| {
        if g[i] < best.0 || (g[i] == best.0 && i < best.1) {
            best = (g[i], i);
        }
    })?;
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::FadingModel;
    use crate::simulator::{Feedback, KSchedule};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn duals(lambda: f64, mu: f64) -> DualVariables<f64> {
        DualVariables { lambda, mu }
    }

    #[test]
    fn two_user_example() {
        let r = allocate(&[2.0, 4.0], &[1.0, 3.0], &duals(0.1, 0.5), Eligible::All).unwrap();
        assert_eq!(r.selected, Some(0));
        assert_relative_eq!(r.power, 1.0 / 0.6 - 0.5, max_relative = 1e-14);
        assert_relative_eq!(r.rate, (2.0f64 / 0.6).ln(), max_relative = 1e-14);
        assert_relative_eq!(r.rate, 1.2040, epsilon = 5e-5);
        assert_relative_eq!(r.interference, r.power, max_relative = 1e-14);

        let sub = allocate(&[2.0, 4.0], &[1.0, 3.0], &duals(0.1, 0.5), Eligible::Subset(&[1])).unwrap();
        assert_eq!(sub.selected, Some(1));
        assert_relative_eq!(sub.power, 0.375, max_relative = 1e-14);
    }

    #[test]
    fn weak_channel_is_silent() {
        let r = allocate(&[0.05], &[1.0], &duals(1.0, 1.0), Eligible::All).unwrap();
        assert_eq!(r.selected, None);
        assert_eq!((r.power, r.rate, r.interference), (0.0, 0.0, 0.0));
    }

    #[test]
    fn errors() {
        assert_eq!(allocate(&[1.0], &[1.0], &duals(0.0, 0.0), Eligible::All), Err(Error::UnboundedWaterLevel));
        assert_eq!(allocate(&[1.0], &[1.0], &duals(1.0, 0.0), Eligible::Subset(&[])), Err(Error::InvalidEligible(1)));
        assert_eq!(allocate(&[1.0], &[1.0], &duals(1.0, 0.0), Eligible::Subset(&[3])), Err(Error::InvalidEligible(1)));
        assert_eq!(allocate(&[1.0, 2.0], &[1.0], &duals(1.0, 0.0), Eligible::All), Err(Error::InvalidGains));
        assert!(allocate(&[1.0], &[1.0], &duals(-1.0, 1.0), Eligible::All).is_err());
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let r = allocate(&[3.0, 3.0, 1.0], &[1.0, 1.0, 0.1], &duals(0.5, 0.5), Eligible::All).unwrap();
        assert_eq!(r.selected, Some(0));
        let r = allocate(&[3.0, 3.0], &[1.0, 1.0], &duals(0.5, 0.5), Eligible::Subset(&[1, 0])).unwrap();
        assert_eq!(r.selected, Some(0));
    }

    fn scenario(network: Network, feedback: Feedback<f64>, n: usize) -> ScenarioConfig<f64> {
        ScenarioConfig {
            network,
            feedback,
            p_ave: 10.0,
            q_ave: 1.0,
            stsb: FadingModel::rayleigh(),
            stpb: FadingModel::rayleigh(),
            n,
        }
    }

    #[test]
    fn interference_limited_ignores_lambda() {
        let h = [1.0, 2.0, 0.5];
        let g = [0.5, 2.0, 0.1];
        let s = scenario(Network::Il, Feedback::Full, 3);
        let r = allocate_scenario(&s, &h, &g, &duals(7.0, 0.5)).unwrap();
        let direct = allocate(&h, &g, &duals(0.0, 0.5), Eligible::All).unwrap();
        assert_eq!(r, direct);
        // metric h/(μg): 4, 2, 10
        assert_eq!(r.selected, Some(2));
    }

    #[test]
    fn kscg_with_one_user_picks_smallest_g() {
        let h = [5.0, 2.0, 0.9];
        let g = [0.5, 0.2, 0.3];
        let s = scenario(Network::Il, Feedback::Kscg(KSchedule::Constant(1)), 3);
        let r = allocate_scenario(&s, &h, &g, &duals(0.0, 0.1)).unwrap();
        assert_eq!(r.selected, Some(1));
    }

    #[test]
    fn full_kscg_equals_full_feedback() {
        let h = [1.3, 0.2, 2.2, 0.9];
        let g = [0.4, 0.1, 1.9, 0.3];
        for net in [Network::Tpil, Network::Il, Network::Ipil] {
            let f = allocate_scenario(&scenario(net, Feedback::Full, 4), &h, &g, &duals(0.2, 0.3)).unwrap();
            let k = allocate_scenario(&scenario(net, Feedback::Kscg(KSchedule::Constant(4)), 4), &h, &g, &duals(0.2, 0.3))
                .unwrap();
            assert_eq!(f, k);
        }
    }

    #[test]
    fn il_lower_bound_policy() {
        let r = suboptimal_il_policy(&[1.0, 1.0], &[0.5, 0.25], 1.0).unwrap();
        assert_eq!(r.selected, Some(1));
        assert_eq!(r.power, 4.0);
        assert_eq!(r.interference, 1.0);
        assert_relative_eq!(r.rate, 5.0f64.ln());
    }

    #[test]
    fn ipil_fixed_power_policy() {
        let r = suboptimal_ipil_policy(&[1.0, 1.0, 1.0], &[0.5, 0.25, 0.1], 2.0, 1.0, 3, Eligible::Subset(&[0, 1])).unwrap();
        assert_eq!(r.selected, Some(1));
        assert_relative_eq!(r.power, 6.0);
        // γ_g > 1 caps the exponent at 1/γ_g
        let r = suboptimal_ipil_policy(&[1.0], &[1.0], 1.0, 2.0, 100, Eligible::All).unwrap();
        assert_relative_eq!(r.power, 10.0, max_relative = 1e-14);
    }

    #[test]
    fn metric_state_agrees_with_allocate() {
        let h = [0.3, 1.7, 0.8];
        let g = [0.2, 0.9, 0.05];
        let d = duals(0.4, 1.1);
        let m = metric_state(&h, &g, &d, Eligible::All).unwrap();
        assert_eq!(m.metric.len(), 3);
        assert!(m.metric.iter().all(|&(_, x)| x <= m.max_metric));
        let r = allocate(&h, &g, &d, Eligible::All).unwrap();
        assert_eq!(r.max_metric, m.max_metric);
        assert_eq!(r.selected, Some(m.argmax));
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
        (1usize..10).prop_flat_map(|n| {
            (
                prop::collection::vec(1e-3f64..20.0, n),
                prop::collection::vec(1e-3f64..20.0, n),
                0.0f64..3.0,
                1e-3f64..3.0,
            )
        })
    }

    proptest! {
        #[test]
        fn argmax_is_scale_covariant((h, g, l, m) in instance(), t in 0.01f64..100.0) {
            let a = allocate(&h, &g, &duals(l, m), Eligible::All).unwrap();
            let b = metric_state(&h, &g, &duals(l * t, m * t), Eligible::All).unwrap();
            let am = metric_state(&h, &g, &duals(l, m), Eligible::All).unwrap();
            prop_assert_eq!(am.argmax, b.argmax);
            if let Some(i) = a.selected { prop_assert_eq!(i, am.argmax); }
        }

        #[test]
        fn positivity_and_rate_identity((h, g, l, m) in instance()) {
            let r = allocate(&h, &g, &duals(l, m), Eligible::All).unwrap();
            prop_assert_eq!(r.power > 0.0, r.max_metric > 1.0);
            if let Some(i) = r.selected {
                let direct = (h[i] * r.power).ln_1p();
                prop_assert!((direct - r.rate).abs() <= 1e-12 * r.rate.abs().max(1e-300) + 1e-15);
                prop_assert!(r.interference >= 0.0);
            }
        }

        #[test]
        fn more_feedback_never_hurts((h, g, l, m) in instance(), mask in prop::collection::vec(any::<bool>(), 10)) {
            let n = h.len();
            let mut a: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            if a.is_empty() { a.push(0); }
            let ra = allocate(&h, &g, &duals(l, m), Eligible::Subset(&a)).unwrap();
            let rb = allocate(&h, &g, &duals(l, m), Eligible::All).unwrap();
            prop_assert!(ra.rate <= rb.rate);
        }
    }
}
