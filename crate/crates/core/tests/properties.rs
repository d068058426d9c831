use kscg_core::{
    allocate, estimate, select_k_smallest, Duals, DualsF32, Eligible, Fading, FadingF32, Feedback, KSchedule, Network,
    Scenario, ScenarioF32,
};
use proptest::prelude::*;

fn gains(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-6.0f64..6.0).prop_map(f64::exp), n)
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64, f64)> {
    (1usize..12).prop_flat_map(|n| (gains(n), gains(n), 0.0f64..4.0, 0.0f64..4.0)).prop_filter("duals", |(_, _, l, m)| l + m > 1e-3)
}

proptest! {
    #[test]
    fn allocation_matches_naive_scan((h, g, lambda, mu) in instance()) {
        let duals = Duals { lambda, mu };
        let got = allocate(&h, &g, &duals, Eligible::All).unwrap();
        let metric = |i: usize| h[i] / (lambda + mu * g[i]);
        let mut best = 0;
        for i in 1..h.len() {
            if metric(i) > metric(best) {
                best = i;
            }
        }
        prop_assert_eq!(got.max_metric, metric(best));
        let d = lambda + mu * g[best];
        if h[best] > d {
            prop_assert_eq!(got.selected, Some(best));
            let p = 1.0 / d - 1.0 / h[best];
            prop_assert!((got.power - p).abs() <= 1e-9 * p.max(1e-300) + 1e-15 / d);
            prop_assert!((got.rate - metric(best).ln()).abs() <= 1e-12);
        } else {
            prop_assert_eq!(got.selected, None);
            prop_assert_eq!(got.power, 0.0);
        }
    }

    #[test]
    fn restricting_eligibility_never_helps((h, g, lambda, mu) in instance(), mask in any::<u16>()) {
        let duals = Duals { lambda, mu };
        let subset: Vec<usize> = (0..h.len()).filter(|i| mask & (1 << i) != 0).collect();
        prop_assume!(!subset.is_empty());
        let all = allocate(&h, &g, &duals, Eligible::All).unwrap();
        let some = allocate(&h, &g, &duals, Eligible::Subset(&subset)).unwrap();
        prop_assert!(some.max_metric <= all.max_metric);
        prop_assert!(some.selected.is_none_or(|i| subset.contains(&i)));
    }

    #[test]
    fn k_smallest_agrees_with_sorting(g in prop::collection::vec(0.0f64..10.0, 1..40), k_frac in 0.0f64..1.0) {
        let k = 1 + ((g.len() - 1) as f64 * k_frac) as usize;
        let sel = select_k_smallest(&g, k).unwrap();
        let mut order: Vec<usize> = (0..g.len()).collect();
        order.sort_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b)));
        prop_assert_eq!(&sel.indices[..], &order[..k]);
        prop_assert_eq!(sel.threshold, g[order[k - 1]]);
    }
}

#[test]
fn single_precision_allocation_agrees() {
    let h = [0.3f32, 2.5, 1.1, 4.0];
    let g = [0.2f32, 1.0, 0.05, 3.0];
    let duals = DualsF32 { lambda: 0.1, mu: 0.5 };
    let a32 = allocate(&h, &g, &duals, Eligible::All).unwrap();
    let h64 = h.map(f64::from);
    let g64 = g.map(f64::from);
    let a64 = allocate(&h64, &g64, &Duals { lambda: 0.1f32 as f64, mu: 0.5 }, Eligible::All).unwrap();
    assert_eq!(a32.selected, a64.selected);
    assert!((f64::from(a32.power) - a64.power).abs() < 1e-5 * a64.power);
}

#[test]
fn single_precision_estimate_tracks_double() {
    let s64 = Scenario {
        network: Network::Tpil,
        feedback: Feedback::Kscg(KSchedule::Power(0.5)),
        p_ave: 10.0,
        q_ave: 1.0,
        stsb: Fading::rayleigh(),
        stpb: Fading::weibull(2.0).unwrap(),
        n: 64,
    };
    let s32 = ScenarioF32 {
        network: Network::Tpil,
        feedback: Feedback::Kscg(KSchedule::Power(0.5)),
        p_ave: 10.0,
        q_ave: 1.0,
        stsb: FadingF32::rayleigh(),
        stpb: FadingF32::weibull(2.0).unwrap(),
        n: 64,
    };
    let e64 = estimate(&s64, 4000, 3).unwrap();
    let e32 = estimate(&s32, 4000, 3).unwrap();
    assert_eq!((e32.n, e32.k), (64, 8));
    let tol = 3.0 * (e64.rate_hw + f64::from(e32.rate_hw));
    assert!((f64::from(e32.sum_rate) - e64.sum_rate).abs() < tol, "{} vs {}", e32.sum_rate, e64.sum_rate);
}
