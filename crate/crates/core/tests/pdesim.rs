use proptest::prelude::*;
use reglab::criteria::BoundaryFunction;
use reglab::kernels::EquationFamily;
use reglab::pdesim::*;
use reglab::spectral::{interval_spectrum, top_eigenvalue, IntervalEigenProblem, Method};

fn constant_run(l: f64, span: f64, n: usize) -> SimResult {
    let cfg = SimConfig::new(SimFamily::Biharmonic, BoundaryFunction::Constant { l }, (0.0, span)).with_grid(n);
    simulate(&cfg).unwrap()
}

// (l, span, fit window, tabulated rate, tolerance)
const TABLE: [(f64, f64, (f64, f64), f64, f64); 5] = [
    (1.0, 1.0, (0.2, 0.8), -31.16, 0.05),
    (2.0, 20.0, (5.0, 20.0), -1.83, 0.02),
    (3.0, 100.0, (30.0, 100.0), -0.2647, 0.005),
    (4.0, 400.0, (50.0, 400.0), -0.008152, 1e-3),
    (5.0, 400.0, (50.0, 400.0), 0.0483, 2e-3),
];

#[test]
fn table_rates_from_simulation() {
    for (l, span, win, want, tol) in TABLE {
        let r = constant_run(l, span, 128);
        let s = fit_rate(&r, win).unwrap();
        assert!(!s.envelope);
        assert!((s.sigma - want).abs() <= tol, "l = {l}: {} vs {want}", s.sigma);
    }
}

#[test]
fn example_rates() {
    let s1 = fit_rate(&constant_run(1.0, 1.0, 128), (0.2, 0.8)).unwrap().sigma;
    assert!((s1 + 31.2).abs() <= 0.5, "{s1}");
    let s4 = fit_rate(&constant_run(4.0, 400.0, 128), (50.0, 400.0)).unwrap().sigma;
    assert!((s4 + 0.008).abs() <= 0.004);
    let s5 = fit_rate(&constant_run(5.0, 400.0, 128), (50.0, 400.0)).unwrap().sigma;
    assert!((s5 - 0.048).abs() <= 0.015);
    let s = fit_rate(&constant_run(4.0775, 400.0, 128), (50.0, 400.0)).unwrap().sigma;
    assert!(s.abs() <= 0.003, "{s}");
}

#[test]
fn rate_matches_spectrum() {
    for (l, span, win, _, tol) in TABLE {
        let lam = top_eigenvalue(l, 1e-12).unwrap();
        let s = fit_rate(&constant_run(l, span, 128), win).unwrap().sigma;
        assert!((s - lam).abs() <= tol, "l = {l}: {s} vs {lam}");
    }
}

#[test]
fn grid_doubling() {
    for (l, span, win, _, _) in TABLE {
        let a = fit_rate(&constant_run(l, span, 128), win).unwrap().sigma;
        let b = fit_rate(&constant_run(l, span, 256), win).unwrap().sigma;
        assert!((a - b).abs() < 0.1 * b.abs() + 1e-3, "l = {l}: {a} vs {b}");
    }
}

#[test]
fn heat_decays_at_dirichlet_eigenvalue() {
    let r = simulate(&SimConfig::new(SimFamily::Heat, BoundaryFunction::Constant { l: 1.0 }, (0.0, 5.0))).unwrap();
    let s = fit_rate(&r, (2.0, 5.0)).unwrap().sigma;
    let p = IntervalEigenProblem::new(1.0).with_family(EquationFamily::HEAT).with_method(Method::Collocation);
    let lam = interval_spectrum(&p, 1).unwrap()[0].lambda.re;
    assert!((s - lam).abs() <= 1e-3 * lam.abs(), "{s} vs {lam}");
}

#[test]
fn heat_stays_nonnegative() {
    for d in [InitialData::Bump { center: 0.3, width: 0.2 }, InitialData::Polynomial { coeffs: vec![1.0] }] {
        let r = simulate(&SimConfig::new(SimFamily::Heat, BoundaryFunction::Constant { l: 2.0 }, (0.0, 10.0)).with_initial(d)).unwrap();
        let min = r.profiles.iter().flatten().fold(f64::INFINITY, |a, v| a.min(*v));
        assert!(min >= 0.0, "{min}");
    }
}

#[test]
fn synthetic_rate() {
    let tau: Vec<f64> = (0..=200).map(|i| 0.05 * i as f64).collect();
    let x: Vec<f64> = tau.iter().map(|t| (-0.5 * t).exp()).collect();
    let f = fit_rate_series(&tau, &x, (1.0, 9.0)).unwrap();
    assert!((f.sigma + 0.5).abs() <= 1e-6 && !f.envelope);
    // oscillating decay is fitted on its maxima
    let tau: Vec<f64> = (0..=4000).map(|i| 0.005 * i as f64).collect();
    let x: Vec<f64> = tau.iter().map(|t| (-0.3 * t).exp() * (2.0 * t).cos()).collect();
    let f = fit_rate_series(&tau, &x, (1.0, 19.0)).unwrap();
    assert!(f.envelope);
    assert!((f.sigma + 0.3).abs() <= 1e-3, "{}", f.sigma);
    assert!(fit_rate_series(&tau, &x, (1.0, 40.0)).is_err());
}

#[test]
fn heat_wall_layer() {
    let cfg = SimConfig::new(SimFamily::Heat, BoundaryFunction::PetrovskiiSqrtLog { c: 2.0 }, (3.0, 1e4)).with_bl_checks(vec![1e4]);
    let r = simulate(&cfg).unwrap();
    let s = &r.bl[0];
    assert!(s.dominance >= 0.9 && !s.inconclusive);
    assert!(s.max_deviation <= 0.1, "{s:?}");
}

#[test]
fn biharmonic_wall_layer_at_six() {
    let r = constant_run(6.0, 150.0, 128);
    let s = bl_snapshot_check(&r, 100.0).unwrap();
    assert!(s.dominance >= 0.9 && !s.inconclusive, "{s:?}");
    // the layer shape holds near the wall; its amplitude is the outer value at
    // the wall, which differs from a₀ at φ = 6
    assert!(s.shape_deviation <= 0.1, "{s:?}");
    println!("a0-scaled deviation at l = 6: {:.4}", s.max_deviation);
}

#[test]
fn dominance_precondition_flags_runs() {
    let r = constant_run(8.0, 150.0, 128);
    let s = bl_snapshot_check(&r, 100.0).unwrap();
    assert_eq!(s.inconclusive, s.dominance < 0.9);
    assert!(bl_snapshot_check(&r, 1e3).is_err());
}

#[test]
fn expansion_converges_in_order() {
    let r = constant_run(3.0, 40.0, 128);
    let errs: Vec<f64> = [6, 10, 14, 20].iter().map(|&k| expansion_check(&r, 40.0, k).unwrap().max_rel_error).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[3] < 0.05, "{errs:?}");
    println!("k ≤ 6 reconstruction error at l = 3: {:.4}", errs[0]);
}

#[test]
fn p2_signs() {
    let rep = verify_p2(&P2_SEEDS).unwrap();
    assert!(rep.pass, "{:?}", rep.rows);
    assert_eq!(rep.rows.len(), 6);
    for row in &rep.rows {
        assert!(row.trace.is_none());
    }
}

#[test]
fn rapid_decay_at_two() {
    for seed in P2_SEEDS {
        let cfg = SimConfig::new(SimFamily::Biharmonic, BoundaryFunction::Constant { l: 2.0 }, (0.0, 20.0))
            .with_initial(InitialData::RandomSmooth { seed, modes: 8 });
        let s = fit_rate(&simulate(&cfg).unwrap(), (5.0, 20.0)).unwrap().sigma;
        assert!((s + 1.83).abs() <= 0.1, "{s}");
    }
}

#[test]
fn step_budget_is_reported() {
    let mut cfg = SimConfig::new(SimFamily::Biharmonic, BoundaryFunction::Constant { l: 4.0 }, (0.0, 10.0));
    cfg.steps.max_steps = 5;
    assert!(matches!(simulate(&cfg), Err(reglab::NumError::StepBudget { .. })));
}

#[test]
fn traces_are_finite_and_deterministic() {
    let cfg = SimConfig::new(SimFamily::Biharmonic, BoundaryFunction::PowerLog { c: 3.5, gamma: 0.75 }, (3.0, 1e3))
        .with_initial(InitialData::RandomSmooth { seed: 5, modes: 8 });
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert!(a.sup.iter().chain(&a.a0).all(|v| v.is_finite()));
    assert_eq!(a.sup, b.sup);
    assert_eq!(a.tau.len(), cfg.samples);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]
    #[test]
    fn generic_data_decays_at_four(seed in 0u64..1_000_000) {
        let cfg = SimConfig::new(SimFamily::Biharmonic, BoundaryFunction::Constant { l: 4.0 }, (0.0, 400.0))
            .with_initial(InitialData::RandomSmooth { seed, modes: 8 });
        let s = fit_rate(&simulate(&cfg).unwrap(), (50.0, 400.0)).unwrap().sigma;
        prop_assert!((s + 0.008152).abs() <= 2e-3);
    }
}
