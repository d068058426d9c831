use kscg_core::{
    db_to_linear, parameter_study, run_sweep, theory_curve, Fading, Feedback, Link, Network, Options, Regressor, Scenario,
};

fn scenario(network: Network, stsb: Fading, stpb: Fading, n: usize) -> Scenario {
    Scenario { network, feedback: Feedback::Full, p_ave: db_to_linear(15.0), q_ave: 1.0, stsb, stpb, n }
}

fn rates(study: &[(f64, kscg_core::Estimate)]) -> Vec<f64> {
    study.iter().map(|(_, e)| e.sum_rate).collect()
}

#[test]
fn tpil_rate_falls_with_nakagami_m() {
    let base = scenario(Network::Tpil, Fading::nakagami(1.0).unwrap(), Fading::rayleigh(), 50);
    let study = parameter_study(&base, Link::Stsb, &[0.5, 1.0, 2.0], 5000, 11, &Options::default()).unwrap();
    let r = rates(&study);
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
}

#[test]
fn tpil_rate_peaks_in_weibull_c() {
    let base = scenario(Network::Tpil, Fading::weibull(1.0).unwrap(), Fading::rayleigh(), 50);
    let study = parameter_study(&base, Link::Stsb, &[0.2, 0.8, 2.0], 5000, 11, &Options::default()).unwrap();
    let r = rates(&study);
    assert!(r[1] > r[0] && r[1] > r[2], "{r:?}");
}

#[test]
fn il_rate_falls_with_stpb_nakagami_m() {
    let base = scenario(Network::Il, Fading::rayleigh(), Fading::nakagami(1.0).unwrap(), 50);
    let study = parameter_study(&base, Link::Stpb, &[0.5, 1.0, 2.0], 5000, 11, &Options::default()).unwrap();
    let r = rates(&study);
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
}

#[test]
fn il_rayleigh_sweep_follows_log_n() {
    let base = scenario(Network::Il, Fading::rayleigh(), Fading::rayleigh(), 16);
    let ns = [16, 32, 64, 128, 256, 512];
    let sweep = run_sweep(&base, &ns, 4000, 5, &Options::default()).unwrap();
    assert_eq!(sweep.regressor, Regressor::LogN);
    assert_eq!(sweep.theory_slope, 1.0);
    let tol = (0.15 * sweep.theory_slope).max(0.1);
    assert!((sweep.fitted_slope() - 1.0).abs() <= tol, "slope {}", sweep.fitted_slope());
    // η_g E[h^γ_g] = 1 for Rayleigh/Rayleigh, so the curve is log N + log Q
    let curve = theory_curve(&base, &ns).unwrap();
    for ((n, v), p) in curve.iter().zip(&sweep.points) {
        assert!((v - (*n as f64).ln()).abs() < 1e-12);
        // intercepts are only expected to hold to about a nat
        assert!((p.sum_rate - v).abs() < 1.0, "N={n}: {} vs {v}", p.sum_rate);
    }
}
