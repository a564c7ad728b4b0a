use proptest::prelude::*;
use qsu2_core::casimir::{
    build_k, natural_gauge, physical_casimir, run_pipeline, solve_casimir_family,
    vanishing_pivots,
};
use qsu2_core::qcore::{qnumber, rel_residual_scalar};
use qsu2_core::standard_rep::{build_standard, derive_generators};
use qsu2_core::triangular_rep::{
    defining_residual, extract_and_check_alphas, family_deviation, identity_chain_residuals,
    triangular_pair, AlphaParams,
};
use qsu2_core::{rel_residual, Deformation, Error, RealMatrix, Spin};

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    prop_oneof![lo..-0.05, 0.05..hi]
}

fn pair_inputs(max_two_l: u32) -> impl Strategy<Value = (u32, f64, Vec<f64>)> {
    (1..=max_two_l, nonzero(-1.0, 1.0)).prop_flat_map(|(two_l, t)| {
        (
            Just(two_l),
            Just(t),
            proptest::collection::vec(nonzero(-2.0, 2.0), two_l as usize),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qnumber_is_odd_and_tends_to_n(n in -20i32..20, t in 1e-6f64..0.5) {
        let q = qnumber(f64::from(n), t);
        prop_assert!(rel_residual_scalar(qnumber(-f64::from(n), t), -q) <= 1e-15);
        prop_assert!((qnumber(f64::from(n), 1e-9) - f64::from(n)).abs() <= 1e-6);
        prop_assert!(q.abs() >= f64::from(n.abs()) * (1.0 - 1e-12));
    }

    #[test]
    fn triangular_pair_satisfies_relations((two_l, t, a) in pair_inputs(16)) {
        let spin = Spin::new(two_l);
        let pair = triangular_pair(spin, t, &AlphaParams::new(spin, a.clone()).unwrap()).unwrap();
        prop_assert!(pair.defining_residual() <= 1e-12);
        for v in identity_chain_residuals(&pair.s, &pair.r, pair.deformation) {
            prop_assert!(v <= 1e-12);
        }
        let back = extract_and_check_alphas(&pair.r, spin, t).unwrap();
        prop_assert_eq!(back.values(), &a[..]);
    }

    /// A diagonal similarity keeps `s`, stays in the family and rescales
    /// the alphas by `d_{i-1} / d_i`.
    #[test]
    fn gauge_covariance(
        (two_l, t, a) in pair_inputs(10),
        seeds in proptest::collection::vec(0.3f64..3.0, 11),
    ) {
        let spin = Spin::new(two_l);
        let pair = triangular_pair(spin, t, &AlphaParams::new(spin, a.clone()).unwrap()).unwrap();
        let d = &seeds[..spin.dim()];
        let r2 = pair.r.diagonal_similarity(d);
        let s2 = pair.s.diagonal_similarity(d);
        prop_assert!(rel_residual(&s2, &pair.s).unwrap() <= 1e-15);
        let moved = extract_and_check_alphas(&r2, spin, t).unwrap();
        let expected: Vec<f64> = (1..spin.dim()).map(|i| a[i - 1] * r2.get(i, i - 1) / pair.r.get(i, i - 1)).collect();
        for (m, e) in moved.values().iter().zip(&expected) {
            prop_assert!(rel_residual_scalar(*m, *e) <= 1e-14);
        }
        let direct = triangular_pair(spin, t, &moved).unwrap();
        prop_assert!(rel_residual(&direct.r, &r2).unwrap() <= 1e-12);
    }

    /// `(s, r) -> (-s, r)` maps a solution at `t` to one at `-t`.
    #[test]
    fn deformation_reflection((two_l, t, a) in pair_inputs(16)) {
        let spin = Spin::new(two_l);
        let pair = triangular_pair(spin, t, &AlphaParams::new(spin, a).unwrap()).unwrap();
        let neg = Deformation::new(-t).unwrap();
        prop_assert!(defining_residual(&pair.s.scale(-1.0), &pair.r, neg) <= 1e-12);
        let gen = derive_generators(&build_standard(spin, t).unwrap()).unwrap();
        prop_assert!(defining_residual(&gen.s.scale(-1.0), &gen.r, neg) <= 1e-12);
    }

    /// Any entry below the subdiagonal perturbed by a visible amount is
    /// caught by the family check and by the defining relation.
    #[test]
    fn perturbation_is_detected(
        (two_l, t, a) in (2u32..=10, nonzero(-1.0, 1.0)).prop_flat_map(|(n, t)| {
            (Just(n), Just(t), proptest::collection::vec(nonzero(-2.0, 2.0), n as usize))
        }),
        row_frac in 0.0f64..1.0,
        col_frac in 0.0f64..1.0,
        eps in 1e-6f64..1e-3,
    ) {
        let spin = Spin::new(two_l);
        let pair = triangular_pair(spin, t, &AlphaParams::new(spin, a).unwrap()).unwrap();
        let d = spin.dim();
        let i = 2 + ((d - 2) as f64 * row_frac) as usize;
        let i = i.min(d - 1);
        let j = ((i - 1) as f64 * col_frac) as usize;
        let mut r = pair.r.clone();
        let bump = eps * (1.0 + pair.r.max_abs());
        r.set(i, j, r.get(i, j) + bump);
        prop_assert!(family_deviation(&r, spin, t).unwrap() > 1e-9);
        prop_assert!(defining_residual(&pair.s, &r, pair.deformation) > 1e-12);
    }

    /// The physical Casimir vanishes exactly the last pivot and the
    /// pipeline output is a member of the solved family.
    #[test]
    fn physical_casimir_last_pivot((two_l, t, a) in pair_inputs(8)) {
        let spin = Spin::new(two_l);
        let pair = triangular_pair(spin, t, &AlphaParams::new(spin, a).unwrap()).unwrap();
        let k = build_k(&pair, physical_casimir(spin, t).unwrap());
        prop_assert_eq!(vanishing_pivots(&k), vec![spin.dim() - 1]);
        let family = solve_casimir_family(&pair, &k).unwrap();
        prop_assert_eq!(family.nullity(), 1);
    }

    /// A generic Casimir leaves `K` invertible and admits no `R`.
    #[test]
    fn generic_casimir_has_no_singular_pivot(two_l in 1u32..8, t in 0.1f64..1.0, shift in 0.01f64..0.5) {
        let spin = Spin::new(two_l);
        let pair = triangular_pair(spin, t, &AlphaParams::ones(spin)).unwrap();
        let k = build_k(&pair, physical_casimir(spin, t).unwrap() + shift);
        prop_assert!(matches!(solve_casimir_family(&pair, &k), Err(Error::NoSingularPivot)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The spectrally fixed `R` equals `e^{tH}` carried into the
    /// orthonormal s-eigenbasis, independently of the caller's alphas.
    #[test]
    fn fixed_r_matches_exponential_oracle((two_l, t, a) in pair_inputs(8)) {
        let spin = Spin::new(two_l);
        let t = if t.abs() < 0.1 { 0.1f64.copysign(t) } else { t };
        let p = run_pipeline(spin, t, &AlphaParams::new(spin, a).unwrap()).unwrap();
        let nat = natural_gauge(spin, t).unwrap();
        let oracle = nat.basis.conjugate(&nat.generators.big_r);
        prop_assert!(rel_residual(&p.fixed.natural_r, &oracle).unwrap() <= 1e-8);
        prop_assert!(p.report.max_relation() <= 1e-9);
        let back = p.family.member(&p.family.project(&p.fixed.r)).unwrap();
        prop_assert!(rel_residual(&back, &p.fixed.r).unwrap() <= 1e-10);
    }
}

#[test]
fn zero_alpha_gauge_is_rejected() {
    let spin = Spin::new(3);
    let a = AlphaParams::new(spin, vec![1.0, 0.0, 1.0]).unwrap();
    assert!(matches!(
        run_pipeline(spin, 0.3, &a),
        Err(Error::DegenerateGauge { .. })
    ));
}

#[test]
fn standard_rep_is_conjugate_to_triangular_in_both_signs() {
    for t in [0.4, -0.4] {
        let spin = Spin::new(5);
        let gen = derive_generators(&build_standard(spin, t).unwrap()).unwrap();
        let nat = natural_gauge(spin, t).unwrap();
        let r = nat.basis.conjugate(&gen.r);
        assert!(family_deviation(&r, spin, t).unwrap() <= 1e-12);
        assert!(rel_residual(&nat.basis.conjugate(&gen.s), &RealMatrix::from_diagonal(&nat.pair.s.diagonal())).unwrap() <= 1e-12);
    }
}
