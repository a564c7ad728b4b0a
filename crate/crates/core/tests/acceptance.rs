//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report is always printed; exits non-zero on any failure.

use qsu2_core::casimir::{
    admissible_casimirs, build_k, inverse_pair_residual, k_commutator_constant,
    physical_casimir, run_pipeline, solve_casimir_family, spin_half_weights,
};
use qsu2_core::classical_limit::{convergence_table, undeformed_su2};
use qsu2_core::heisenberg::{default_xs, run_suite, DEFAULT_F, DEFAULT_PHI, DEFAULT_T};
use qsu2_core::qcore::{balanced_residual, frobenius_dot, rel_residual_scalar, spectrum_residual};
use qsu2_core::standard_rep::{
    build_standard, casimir_value, derive_generators, s_eigenbasis, s_eigenbasis_orthonormal,
};
use qsu2_core::triangular_rep::{
    build_r_closed_form, build_r_recursive, defining_residual, defining_residual_literal,
    extract_and_check_alphas_with_tol, family_deviation, identity_chain_residuals, triangular_pair, AlphaParams,
};
use qsu2_core::{rel_residual, Deformation, Error, RealMatrix, Spin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5155_3221;
const SWEEP_T: [f64; 4] = [0.05, 0.2, 0.5, 1.0];

struct Outcome {
    worst: f64,
    tol: f64,
    detail: String,
    failures: Vec<String>,
}

impl Outcome {
    fn new(tol: f64) -> Self {
        Self {
            worst: 0.0,
            tol,
            detail: String::new(),
            failures: Vec::new(),
        }
    }

    fn record(&mut self, value: f64, label: impl FnOnce() -> String) {
        self.record_tol(value, self.tol, label);
    }

    fn record_tol(&mut self, value: f64, tol: f64, label: impl FnOnce() -> String) {
        self.worst = self.worst.max(value / tol * self.tol);
        if !(value <= tol) {
            self.failures.push(format!("{} = {value:.3e} (tol {tol:.0e})", label()));
        }
    }

    fn fail(&mut self, what: String) {
        self.failures.push(what);
    }

    fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn random_alphas(rng: &mut ChaCha8Rng, spin: Spin) -> AlphaParams {
    AlphaParams::new(spin, (0..spin.two_l()).map(|_| rng.gen_range(-2.0..=2.0)).collect()).unwrap()
}

/// `(two_l, t)` over the identity sweep, inside the guard rail.
fn sweep(max_two_l: u32, ts: &[f64]) -> Vec<(Spin, f64)> {
    let mut out = Vec::new();
    for two_l in 0..=max_two_l {
        for &t in ts {
            if t.abs() * f64::from(two_l + 1) <= 26.0 {
                out.push((Spin::new(two_l), t));
            }
        }
    }
    out
}

fn defining_identity() -> Outcome {
    let mut o = Outcome::new(1e-11);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut literal = 0.0_f64;
    for (spin, t) in sweep(24, &SWEEP_T) {
        let def = Deformation::new(t).unwrap();
        let pair = triangular_pair(spin, t, &random_alphas(&mut rng, spin)).unwrap();
        o.record(pair.defining_residual(), || format!("triangular two_l={} t={t}", spin.two_l()));
        literal = literal.max(defining_residual_literal(&pair.s, &pair.r, def));
        let gen = derive_generators(&build_standard(spin, t).unwrap()).unwrap();
        o.record(defining_residual(&gen.s, &gen.r, def), || {
            format!("standard two_l={} t={t}", spin.two_l())
        });
    }
    o.detail = format!("literal commutator form, worst {literal:.1e}");
    o
}

fn closed_form_vs_recursion() -> Outcome {
    let mut o = Outcome::new(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for (spin, t) in sweep(24, &SWEEP_T) {
        let a = random_alphas(&mut rng, spin);
        let closed = build_r_closed_form(spin, t, &a).unwrap();
        let rec = build_r_recursive(spin, t, &a).unwrap();
        o.record(rel_residual(&closed, &rec).unwrap(), || {
            format!("two_l={} t={t}", spin.two_l())
        });
    }
    o
}

fn spin_half_reproduction() -> Outcome {
    let mut o = Outcome::new(1e-12);
    let spin = Spin::new(1);
    for t in [0.1, 0.3, 0.7_f64] {
        let (ch, sh) = (t.cosh(), t.sinh());
        let pair = triangular_pair(spin, t, &AlphaParams::new(spin, vec![2.0 * sh]).unwrap()).unwrap();
        let family = solve_casimir_family(&pair, &build_k(&pair, physical_casimir(spin, t).unwrap())).unwrap();
        let r = family.member(&spin_half_weights(t, 0.5 / sh, 0.5 / ch)).unwrap();
        let expected = RealMatrix::from_rows(&[vec![ch, sh], vec![sh, ch]]).unwrap();
        o.record(rel_residual(&r, &expected).unwrap(), || format!("R at t={t}"));
        match solve_casimir_family(&pair, &build_k(&pair, (1.0 - ch) / (sh * sh))) {
            Err(Error::NoSolution { .. }) => {}
            other => o.fail(format!("t={t}: non-physical Casimir gave {other:?}")),
        }
    }
    o
}

fn spin_one_reproduction() -> Outcome {
    let mut o = Outcome::new(1e-9);
    let spin = Spin::new(2);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for t in [0.1, 0.3, 0.5, 1.0, -0.4_f64] {
        for alphas in [AlphaParams::ones(spin), random_alphas(&mut rng, spin)] {
            let p = run_pipeline(spin, t, &alphas).unwrap();
            let r = &p.fixed.r;
            o.record((r.determinant() - 1.0).abs(), || format!("det t={t}"));
            o.record(rel_residual_scalar(r.trace(), 2.0 * (2.0 * t).cosh() + 1.0), || {
                format!("Tr R t={t}")
            });
            o.record(rel_residual_scalar((r * r).trace(), 2.0 * (4.0 * t).cosh() + 1.0), || {
                format!("Tr R^2 t={t}")
            });
            let predicted = [(2.0 * t).exp(), 1.0, (-2.0 * t).exp()];
            o.record(spectrum_residual(&r.eigenvalues(), &predicted), || {
                format!("spectrum t={t}")
            });
        }
    }
    o
}

fn admissible_casimir_sets() -> Outcome {
    let mut o = Outcome::new(1e-12);
    for t in [0.05, 0.2, 0.5, 1.0, -0.3_f64] {
        let (ch, sh2) = (t.cosh(), t.sinh().powi(2));
        let mut expected = [(1.0 - ch) / sh2, ((2.0 * t).cosh() - ch) / sh2];
        let mut got: Vec<f64> = admissible_casimirs(Spin::new(1), t).unwrap().iter().map(|c| c.value).collect();
        expected.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        if got.len() != 2 {
            o.fail(format!("t={t}: {} admissible values", got.len()));
            continue;
        }
        for (g, e) in got.iter().zip(expected) {
            o.record(rel_residual_scalar(*g, e), || format!("two_l=1 set t={t}"));
        }
    }
    for (spin, t) in sweep(12, &SWEEP_T) {
        if spin.two_l() == 0 {
            continue;
        }
        let l = spin.l();
        let closed = 2.0 * (t * l).sinh() * (t * (l + 1.0)).sinh() / t.sinh().powi(2);
        let phys = physical_casimir(spin, t).unwrap();
        let standard = casimir_value(&build_standard(spin, t).unwrap()).unwrap();
        o.record_tol(rel_residual_scalar(phys, standard), 1e-11, || {
            format!("standard Casimir two_l={} t={t}", spin.two_l())
        });
        o.record_tol(rel_residual_scalar(phys, closed), 1e-11, || {
            format!("closed form two_l={} t={t}", spin.two_l())
        });
    }
    o
}

fn intertwining() -> Outcome {
    let mut o = Outcome::new(1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut inverse = 0.0_f64;
    for (spin, t) in sweep(12, &[0.1, 0.3, 0.5]) {
        for alphas in [AlphaParams::ones(spin), random_alphas(&mut rng, spin)] {
            let label = || format!("two_l={} t={t}", spin.two_l());
            match run_pipeline(spin, t, &alphas) {
                Ok(p) => o.record(p.report.max_relation(), label),
                Err(e) => o.fail(format!("{}: {e}", label())),
            }
            match inverse_pair_residual(spin, t, &alphas) {
                Ok(inv) => {
                    inverse = inverse.max(inv.common_basis);
                    o.record(inv.common_basis, || format!("R(t)R(-t) {}", label()));
                }
                Err(e) => o.fail(format!("R(t)R(-t) {}: {e}", label())),
            }
        }
    }
    o.detail = format!("R(t)R(-t) worst {inverse:.1e}");
    o
}

fn s_spectrum() -> Outcome {
    let mut o = Outcome::new(1e-8);
    for (spin, t) in sweep(24, &SWEEP_T) {
        let predicted: Vec<f64> = spin.weights().iter().map(|&w| (t * w as f64).sinh()).collect();
        let gen = derive_generators(&build_standard(spin, t).unwrap()).unwrap();
        let computed: Vec<(f64, f64)> = gen.s.symmetric_eigenvalues().into_iter().map(|x| (x, 0.0)).collect();
        o.record(spectrum_residual(&computed, &predicted), || {
            format!("standard two_l={} t={t}", spin.two_l())
        });
        let pair = triangular_pair(spin, t, &AlphaParams::ones(spin)).unwrap();
        let computed: Vec<(f64, f64)> = pair.s.eigenvalues();
        o.record(spectrum_residual(&computed, &predicted), || {
            format!("triangular two_l={} t={t}", spin.two_l())
        });
    }
    o
}

fn cross_construction() -> Outcome {
    let mut o = Outcome::new(1e-8);
    for (spin, t) in sweep(12, &[0.05, 0.2, 0.5, 1.0, -0.3]) {
        let gen = derive_generators(&build_standard(spin, t).unwrap()).unwrap();
        for (name, basis) in [
            ("normalized", s_eigenbasis(&gen, spin)),
            ("orthonormal", s_eigenbasis_orthonormal(&gen, spin)),
        ] {
            let r = basis.unwrap().conjugate(&gen.r);
            o.record(family_deviation(&r, spin, t).unwrap(), || {
                format!("{name} two_l={} t={t}", spin.two_l())
            });
            if let Err(e) = extract_and_check_alphas_with_tol(&r, spin, t, 1e-8) {
                o.fail(format!("{name} two_l={} t={t}: {e}", spin.two_l()));
            }
        }
    }
    o
}

fn identity_chain() -> Outcome {
    let mut o = Outcome::new(1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut constant = 0.0_f64;
    for (spin, t) in sweep(24, &SWEEP_T) {
        let def = Deformation::new(t).unwrap();
        let pair = triangular_pair(spin, t, &random_alphas(&mut rng, spin)).unwrap();
        let label = || format!("two_l={} t={t}", spin.two_l());
        for v in identity_chain_residuals(&pair.s, &pair.r, def) {
            o.record(v, label);
        }
        // Fit [K, s + r] = c (s^2 - r^2 + 1) and test the direction.
        let d = spin.dim();
        let k = build_k(&pair, physical_casimir(spin, t).unwrap());
        let sigma = &pair.s + &pair.r;
        let delta = pair.delta();
        let dd = frobenius_dot(&delta, &delta);
        if dd == 0.0 {
            continue;
        }
        let kc = &k * &sigma - &sigma * &k;
        let c = frobenius_dot(&kc, &delta) / dd;
        let id = RealMatrix::identity(d);
        let dir = balanced_residual(
            &[&k * &sigma, (&pair.r * &pair.r).scale(c)],
            &[&sigma * &k, (&pair.s * &pair.s + id).scale(c)],
        )
        .unwrap();
        o.record_tol(dir, 1e-9, || format!("[K, s+r] direction {}", label()));
        constant = constant.max(rel_residual_scalar(c, k_commutator_constant(t)));
    }
    o.detail = format!("fitted [K, s+r] constant vs e^t sinh t, worst rel {constant:.1e}");
    o
}

fn classical_limit() -> Outcome {
    let mut o = Outcome::new(1e-12);
    for two_l in 0..=24 {
        match undeformed_su2(Spin::new(two_l)) {
            Ok(tr) => {
                o.record(tr.commutator_residual(), || format!("[s1,r1] two_l={two_l}"));
                o.record(tr.h_resolution_residual(), || format!("r1 H two_l={two_l}"));
            }
            Err(e) => o.fail(format!("two_l={two_l}: {e}")),
        }
    }
    let mut min_order = f64::INFINITY;
    for two_l in 1..=12 {
        let rows = convergence_table(Spin::new(two_l), 0.08, 3).unwrap();
        for row in &rows {
            for order in row.orders.into_iter().flatten() {
                min_order = min_order.min(order);
                if !(order >= 1.0) {
                    o.fail(format!("two_l={two_l} t={}: order {order:.3}", row.report.t));
                }
            }
        }
    }
    o.detail = format!("minimum observed order {min_order:.3}");
    o
}

fn functional_checks() -> Outcome {
    let mut o = Outcome::new(1e-10);
    let mut weakest = f64::INFINITY;
    for row in run_suite(DEFAULT_T, DEFAULT_F, DEFAULT_PHI, &default_xs()).unwrap() {
        if row.negative_control {
            weakest = weakest.min(row.value);
            if !(row.value > 1e-3) {
                o.fail(format!("{} = {:.3e} (must exceed 1e-3)", row.name, row.value));
            }
        } else {
            o.record(row.value, || row.name.to_string());
        }
    }
    o.detail = format!("weakest negative control {weakest:.1e}");
    o
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 defining identity", defining_identity),
        ("2 closed form vs recursion", closed_form_vs_recursion),
        ("3 spin-1/2 R reproduction", spin_half_reproduction),
        ("4 spin-1 trace/det/spectrum", spin_one_reproduction),
        ("5 admissible Casimirs", admissible_casimir_sets),
        ("6 intertwining and R(t)R(-t)", intertwining),
        ("7 spectrum of s", s_spectrum),
        ("8 cross-construction equivalence", cross_construction),
        ("9 identity chain and [K, s+r]", identity_chain),
        ("10 classical limit", classical_limit),
        ("11 functional checks", functional_checks),
    ];
    println!("acceptance (seed {SEED:#x})");
    let mut failed = 0;
    for (name, f) in criteria {
        let start = std::time::Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        let worst = format!("worst {:.1e} (tol {:.0e})", o.worst, o.tol);
        let tag = if o.passed() { "PASS" } else { "FAIL" };
        println!("{tag}  {name:34} {worst:26} {secs:6.2}s  {}", o.detail);
        for f in o.failures.iter().take(5) {
            println!("        {f}");
        }
        if !o.passed() {
            failed += 1;
        }
    }
    println!("{failed} of 11 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
