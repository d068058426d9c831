//! N-sweeps, slope fits against the scaling laws, and reference curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual_solver::SolverOptions;
use crate::error::{Error, Result};
use crate::fading::FadingModel;
use crate::real::Real;
use crate::simulator::{estimate_with_options, point_seed, EstimateResult, Feedback, KSchedule, Network, ScenarioConfig};
use crate::stats::{weighted_line_fit, LinearFit};

/// Abscissa the sum-rate is regressed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    LogLogN,
    LogN,
}

impl Regressor {
    pub fn of(network: Network) -> Self {
        match network {
            Network::Tpil => Regressor::LogLogN,
            Network::Il | Network::Ipil | Network::PrimaryMac => Regressor::LogN,
        }
    }
}

/// User count the double-log law runs in: K(N) for TPIL under a growing
/// K-SCG schedule, N otherwise.
pub fn scaling_users<T: Real>(scenario: &ScenarioConfig<T>) -> Result<usize> {
    match (scenario.network, scenario.feedback) {
        (Network::Tpil, Feedback::Kscg(s @ KSchedule::Power(_))) => s.k(scenario.n),
        _ => Ok(scenario.n),
    }
}

/// Regressor value at the scenario's N.
pub fn regressor_value<T: Real>(scenario: &ScenarioConfig<T>) -> Result<T> {
    let m = T::from_usize_lossy(scaling_users(scenario)?);
    match Regressor::of(scenario.network) {
        Regressor::LogLogN if m > T::one() => Ok(m.ln().ln()),
        Regressor::LogLogN => Err(Error::InvalidArgument(format!("log log of {m} users is undefined"))),
        Regressor::LogN => Ok(m.ln()),
    }
}

/// Pre-log factor predicted for the scenario from the class-C parameters.
pub fn theory_slope<T: Real>(scenario: &ScenarioConfig<T>) -> T {
    let h = scenario.stsb.class_c_params();
    let g = scenario.stpb.class_c_params();
    match scenario.network {
        Network::Tpil => h.n.recip(),
        Network::Il => g.gamma.recip(),
        Network::Ipil => T::one().min(g.gamma.recip()),
        Network::PrimaryMac => T::one(),
    }
}

fn il_curve_offset<T: Real>(stsb: &FadingModel<T>, stpb: &FadingModel<T>, q_ave: T) -> Result<T> {
    let g = stpb.class_c_params();
    let moment = stsb.moment(g.gamma)?;
    Ok(q_ave.ln() + (g.eta * moment).ln() / g.gamma)
}

/// Second-order reference curve in nats at each N.
///
/// TPIL: (1/n_h) log log M + log P_ave + (1/n_h) log(1/β_h), with M = K(N)
/// under a growing K-SCG schedule.
/// IL: (1/γ_g) log N + log Q_ave + (1/γ_g) log(η_g E[h^{γ_g}]).
/// IPIL: log N + log P_ave when γ_g < 1, the IL curve otherwise.
pub fn theory_curve<T: Real>(scenario: &ScenarioConfig<T>, n_list: &[usize]) -> Result<Vec<(usize, T)>> {
    let h = scenario.stsb.class_c_params();
    let g = scenario.stpb.class_c_params();
    let ln = |n: usize| T::from_usize_lossy(n).ln();
    let mac = |n: usize| ln(n) + scenario.p_ave.ln();
    n_list
        .iter()
        .map(|&n| {
            let s = scenario.with_n(n);
            let v = match scenario.network {
                Network::Tpil => {
                    if let Feedback::Kscg(KSchedule::Constant(_)) = scenario.feedback {
                        return Err(Error::UnsupportedCurve("TPIL with a constant K-SCG schedule does not grow".into()));
                    }
                    let inv_n = h.n.recip();
                    inv_n * regressor_value(&s)? + scenario.p_ave.ln() + inv_n * h.beta.recip().ln()
                }
                Network::Il => ln(n) / g.gamma + il_curve_offset(&scenario.stsb, &scenario.stpb, scenario.q_ave)?,
                Network::Ipil if g.gamma < T::one() => mac(n),
                Network::Ipil => ln(n) / g.gamma + il_curve_offset(&scenario.stsb, &scenario.stpb, scenario.q_ave)?,
                Network::PrimaryMac => mac(n),
            };
            Ok((n, v))
        })
        .collect()
}

/// Estimates along an N-sweep and the fitted scaling law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub points: Vec<EstimateResult<T>>,
    pub regressor: Regressor,
    /// Regressor value per point.
    pub x: Vec<T>,
    pub fit: LinearFit<T>,
    pub theory_slope: T,
    /// Reference curve per point, when one is defined for the scenario.
    pub theory: Option<Vec<T>>,
}

impl<T: Real> SweepResult<T> {
    pub fn fitted_slope(&self) -> T {
        self.fit.slope
    }

    pub fn fitted_intercept(&self) -> T {
        self.fit.intercept
    }

    /// Largest per-N |sum-rate difference| against another sweep over the
    /// same N list.
    pub fn max_gap(&self, other: &SweepResult<T>) -> Result<T> {
        if self.points.len() != other.points.len() || self.points.iter().zip(&other.points).any(|(a, b)| a.n != b.n) {
            return Err(Error::InvalidArgument("sweeps cover different user counts".into()));
        }
        Ok(self.points.iter().zip(&other.points).fold(T::zero(), |m, (a, b)| m.max((a.sum_rate - b.sum_rate).abs())))
    }
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 5 {
        return Err(Error::InvalidArgument(format!("a sweep needs at least 5 user counts, got {}", n_list.len())));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("user counts must be strictly increasing".into()));
    }
    if n_list.last().is_some_and(|&n| n < 512) {
        return Err(Error::InvalidArgument("the largest user count must be at least 512".into()));
    }
    Ok(())
}

/// Estimates the scenario at each N (seeded per N) and fits the sum-rate
/// against the scenario's regressor with inverse-variance weights.
pub fn run_sweep<T: Real>(
    base: &ScenarioConfig<T>,
    n_list: &[usize],
    trials: usize,
    seed: u64,
    opts: &SolverOptions<T>,
) -> Result<SweepResult<T>> {
    check_n_list(n_list)?;
    let points = n_list
        .par_iter()
        .map(|&n| estimate_with_options(&base.with_n(n), trials, point_seed(seed, n), opts))
        .collect::<Result<Vec<_>>>()?;
    fit_points(base, points)
}

/// Fits already estimated points.
pub fn fit_points<T: Real>(base: &ScenarioConfig<T>, points: Vec<EstimateResult<T>>) -> Result<SweepResult<T>> {
    let x = points.iter().map(|p| regressor_value(&base.with_n(p.n))).collect::<Result<Vec<T>>>()?;
    let y: Vec<T> = points.iter().map(|p| p.sum_rate).collect();
    let w: Vec<T> = points.iter().map(|p| (p.rate_hw * p.rate_hw).recip()).collect();
    let fit = weighted_line_fit(&x, &y, &w)
        .ok_or_else(|| Error::InvalidArgument("degenerate sweep: regressor values do not vary".into()))?;
    let ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    let theory = theory_curve(base, &ns).ok().map(|c| c.into_iter().map(|(_, v)| v).collect());
    Ok(SweepResult { points, regressor: Regressor::of(base.network), x, fit, theory_slope: theory_slope(base), theory })
}

/// Which link's fading parameter a study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Stsb,
    Stpb,
}

/// Sum-rate at fixed N for each value of one fading shape parameter.
pub fn parameter_study<T: Real>(
    base: &ScenarioConfig<T>,
    link: Link,
    values: &[T],
    trials: usize,
    seed: u64,
    opts: &SolverOptions<T>,
) -> Result<Vec<(T, EstimateResult<T>)>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("parameter grid is empty".into()));
    }
    values
        .par_iter()
        .map(|&v| {
            let mut s = *base;
            match link {
                Link::Stsb => s.stsb = s.stsb.with_shape_parameter(v)?,
                Link::Stpb => s.stpb = s.stpb.with_shape_parameter(v)?,
            }
            estimate_with_options(&s, trials, point_seed(seed, base.n), opts).map(|r| (v, r))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::db_to_linear;
    use approx::assert_relative_eq;

    fn scenario(network: Network, stsb: FadingModel<f64>, stpb: FadingModel<f64>) -> ScenarioConfig<f64> {
        ScenarioConfig {
            network,
            feedback: Feedback::Full,
            p_ave: db_to_linear(15.0),
            q_ave: 1.0,
            stsb,
            stpb,
            n: 1000,
        }
    }

    #[test]
    fn slopes_from_class_c_parameters() {
        let w4 = FadingModel::weibull(4.0).unwrap();
        let n05 = FadingModel::nakagami(0.5).unwrap();
        assert_relative_eq!(theory_slope(&scenario(Network::Tpil, w4, n05)), 0.5, max_relative = 1e-12);
        let n12 = FadingModel::nakagami(1.2).unwrap();
        assert_relative_eq!(theory_slope(&scenario(Network::Il, FadingModel::rician(1.0).unwrap(), n12)), 1.0 / 1.2);
        let w25 = FadingModel::weibull(2.5).unwrap();
        assert_relative_eq!(theory_slope(&scenario(Network::Ipil, FadingModel::rayleigh(), w25)), 0.8, max_relative = 1e-12);
        let w1 = FadingModel::weibull(1.0).unwrap();
        assert_eq!(theory_slope(&scenario(Network::Ipil, FadingModel::rayleigh(), w1)), 1.0);
    }

    #[test]
    fn tpil_midline_rayleigh() {
        let s = scenario(Network::Tpil, FadingModel::rayleigh(), FadingModel::rayleigh());
        let c = theory_curve(&s, &[1000]).unwrap();
        let expect = 1000f64.ln().ln() + db_to_linear(15.0f64).ln();
        assert_relative_eq!(c[0].1, expect, max_relative = 1e-12);
        assert_relative_eq!(c[0].1, 5.39, epsilon = 5e-3);
    }

    #[test]
    fn il_offset_rician_stpb() {
        let s = scenario(Network::Il, FadingModel::rayleigh(), FadingModel::rician(1.0).unwrap());
        let c = theory_curve(&s, &[1]).unwrap();
        assert_relative_eq!(c[0].1, (2.0 / std::f64::consts::E).ln(), max_relative = 1e-9);
    }

    #[test]
    fn ipil_curve_branches() {
        let s = scenario(Network::Ipil, FadingModel::rayleigh(), FadingModel::weibull(1.5).unwrap());
        let c = theory_curve(&s, &[100]).unwrap();
        assert_relative_eq!(c[0].1, 100f64.ln() + s.p_ave.ln(), max_relative = 1e-12);
        let s = scenario(Network::Ipil, FadingModel::rayleigh(), FadingModel::weibull(2.5).unwrap());
        let il = theory_curve(&ScenarioConfig { network: Network::Il, ..s }, &[100]).unwrap();
        assert_eq!(theory_curve(&s, &[100]).unwrap(), il);
    }

    #[test]
    fn kscg_tpil_runs_in_fed_back_users() {
        let mut s = scenario(Network::Tpil, FadingModel::rayleigh(), FadingModel::rayleigh());
        s.feedback = Feedback::Kscg(KSchedule::Power(0.5));
        s.n = 1024;
        assert_eq!(scaling_users(&s).unwrap(), 32);
        assert_relative_eq!(regressor_value(&s).unwrap(), 32f64.ln().ln());
        s.feedback = Feedback::Kscg(KSchedule::Constant(1));
        assert!(theory_curve(&s, &[1024]).is_err());
    }

    #[test]
    fn sweep_preconditions() {
        let s = scenario(Network::Il, FadingModel::rayleigh(), FadingModel::rayleigh());
        let o = SolverOptions::default();
        assert!(run_sweep(&s, &[16, 32, 64, 128], 1000, 0, &o).is_err());
        assert!(run_sweep(&s, &[16, 32, 64, 128, 256], 1000, 0, &o).is_err());
        assert!(run_sweep(&s, &[16, 64, 32, 128, 512], 1000, 0, &o).is_err());
    }
}
