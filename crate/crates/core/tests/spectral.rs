use proptest::prelude::*;
use reglab::numcore::find_root;
use reglab::spectral::*;

fn clamped_beam_mu() -> f64 {
    // cosh(2μ) cos(2μ) = 1 on half-length 1
    find_root(|mu| (2.0 * mu).cosh() * (2.0 * mu).cos() - 1.0, (2.0, 2.6), 1e-15).unwrap()
}

#[test]
fn poincare_constant_matches_frequency_equation() {
    let mu = clamped_beam_mu();
    assert!((mu - 2.3650).abs() < 1e-4);
    let lam = poincare_lambda(1.0);
    assert!((lam - mu.powi(4)).abs() < 1e-7 * lam, "{lam} vs {}", mu.powi(4));
    assert!((lam - 31.285).abs() < 0.05);
    assert!((poincare_lambda(2.0) - lam / 16.0).abs() < 1e-14);
}

#[test]
fn regularity_bound_value() {
    let ls = regularity_bound();
    assert!((ls - 3.9779).abs() < 0.002, "{ls}");
    let direct = (8.0 * clamped_beam_mu().powi(4)).powf(0.25);
    assert!((ls - direct).abs() < 1e-8);
}

#[test]
fn top_eigenvalue_table() {
    let rows = [
        (1.0, -31.16, 0.05),
        (2.0, -1.83, 0.02),
        (3.0, -0.2647, 0.005),
        (4.0, -0.008152, 1e-3),
        (5.0, 0.0483, 2e-3),
        (7.5, -0.0097, 2e-3),
        (8.0, -0.027, 3e-3),
    ];
    for (l, want, tol) in rows {
        let lam = top_eigenvalue(l, 1e-12).unwrap();
        assert!((lam - want).abs() < tol, "l = {l}: {lam} vs {want}");
    }
}

#[test]
fn remaining_table_rows_to_two_and_a_half_percent() {
    let rows = [
        (4.075, -0.000236),
        (4.0775, 0.0000113),
        (4.08, 0.00026),
        (4.1, 0.0022),
        (4.2, 0.011),
        (6.0, 0.046),
        (9.0, -0.018),
        (10.0, -0.00084),
        (11.0, 0.00397),
        (12.0, 0.00172),
        (13.0, -0.00055),
    ];
    for (l, want) in rows {
        let lam = top_eigenvalue(l, 1e-12).unwrap();
        assert!((lam - want).abs() <= 0.025 * want.abs(), "l = {l}: {lam} vs {want}");
    }
}

#[test]
fn top_eigenvalue_near_second_root() {
    let lam = top_eigenvalue(7.25, 1e-12).unwrap();
    assert!(lam > 0.0 && (lam - 0.00167).abs() < 5e-4, "{lam}");
}

#[test]
fn shooting_and_collocation_agree() {
    for l in [1.0, 2.0, 3.0, 4.0, 5.0] {
        let s = interval_spectrum(&IntervalEigenProblem::new(l), 4).unwrap();
        let c = interval_spectrum(&IntervalEigenProblem::new(l).with_method(Method::Collocation), 4).unwrap();
        for (a, b) in s.iter().zip(&c) {
            let (x, y) = (a.lambda.re, b.lambda.re);
            let ok = (x - y).abs() <= 1e-4 * x.abs() || (x - y).abs() <= 1e-6;
            assert!(ok, "l = {l}: {x} vs {y}");
            assert!(b.lambda.im.abs() < 1e-8);
            assert!(!a.flagged && !b.flagged);
        }
    }
}

#[test]
fn sturm_structure_at_unit_length() {
    for method in [Method::Shooting, Method::Collocation] {
        let pairs = interval_spectrum(&IntervalEigenProblem::new(1.0).with_method(method), 5).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            assert_eq!(p.zero_count, k, "{method:?} k = {k}");
            let want = if k % 2 == 0 { Parity::Even } else { Parity::Odd };
            assert_eq!(p.parity, want);
            let vmax = p.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!((vmax - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn drift_negligible_on_short_intervals() {
    // first-order perturbation of −D⁴ by −(1/4)yD shifts the ground level by +1/8
    for l in [0.5, 0.75, 1.0, 1.25, 1.5] {
        let lam = top_eigenvalue(l, 1e-12).unwrap();
        let big = poincare_lambda(l);
        let shift = lam + big;
        assert!((shift - 0.125).abs() < 0.01 * 0.125 + 1e-3, "l = {l}: shift {shift}");
        if l <= 1.25 {
            assert!(shift.abs() / big <= 0.01, "l = {l}: {lam} vs {big}");
        }
    }
}

#[test]
fn negative_below_regularity_bound() {
    let ls = regularity_bound();
    for i in 1..=12 {
        let l = ls * i as f64 / 12.5;
        assert!(top_eigenvalue(l, 1e-12).unwrap() < 0.0, "l = {l}");
    }
}

#[test]
fn top_eigenvalue_is_real() {
    for l in 1..=13 {
        let p = IntervalEigenProblem::new(l as f64).with_method(Method::Collocation);
        let top = &interval_spectrum(&p, 1).unwrap()[0];
        assert!(top.lambda.im.abs() <= 1e-6, "l = {l}: {}", top.lambda);
    }
}

#[test]
fn collocation_reports_complex_pairs() {
    let p = IntervalEigenProblem::new(13.0).with_method(Method::Collocation);
    let eig = interval_spectrum(&p, 6).unwrap();
    assert!(eig.iter().any(|e| e.lambda.im.abs() > 0.1));
}

#[test]
fn full_system_determinant_vanishes_at_parity_eigenvalues() {
    let l = 2.0;
    for e in interval_spectrum(&IntervalEigenProblem::new(l), 3).unwrap() {
        let lam = e.lambda.re;
        let h = 1e-6 * lam.abs();
        let a = shooting_determinant(2, l, Parity::Full, lam - h, 1e-12).unwrap();
        let b = shooting_determinant(2, l, Parity::Full, lam + h, 1e-12).unwrap();
        assert!(a.signum() != b.signum(), "no sign change at {lam}");
    }
}

#[test]
fn first_branch_segment() {
    let br = branch_trace((3.5, 8.0), 0.05).unwrap();
    assert_eq!(br.roots.len(), 2, "{:?}", br.roots);
    assert!((br.roots[0] - 4.08).abs() < 0.02);
    assert!((br.roots[0] - 4.0775).abs() < 0.003);
    assert!((br.roots[1] - 7.25).abs() < 0.05);
    for w in br.samples.windows(2) {
        assert!(w[1].0 > w[0].0);
        assert!((w[1].1 - w[0].1).abs() < 0.05);
    }
    for r in &br.roots {
        let i = br.samples.iter().position(|s| s.0 > *r).unwrap();
        assert!(br.samples[i - 1].1.signum() != br.samples[i].1.signum());
    }
}

#[test]
fn far_branch_roots_and_layer_approximation() {
    let br = branch_trace((9.0, 14.0), 0.05).unwrap();
    assert_eq!(br.roots.len(), 2, "{:?}", br.roots);
    assert!((br.roots[0] - 10.0).abs() < 0.3);
    assert!((br.roots[1] - 13.0).abs() < 0.5);
    // approximate eigenvalue from the wall layer changes sign near both roots
    let mut changes = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=120 {
        let l = 8.0 + 0.05 * i as f64;
        let v = bl_eigenvalue_approx(l).unwrap().lambda0;
        if let Some((pl, pv)) = prev {
            if pv.signum() != v.signum() {
                changes.push(0.5 * (pl + l));
            }
        }
        prev = Some((l, v));
    }
    assert_eq!(changes.len(), 2, "{changes:?}");
    for (c, r) in changes.iter().zip(&br.roots) {
        assert!((c - r).abs() < 0.5, "{c} vs {r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn energy_bound(l in 0.5f64..9.0) {
        // Re λ ≤ 1/8 − Λ₀(l) for every clamped eigenvalue at m = 2
        let lam = top_eigenvalue(l, 1e-11).unwrap();
        prop_assert!(lam <= spectral_ceiling(2) - poincare_lambda(l) + 1e-9);
    }
}
