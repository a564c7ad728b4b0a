//! Subcommand implementations. Each returns `Ok(true)` when every check is
//! within tolerance and `Ok(false)` when one exceeds it.

use std::fs;
use std::io::Write;

use qsu2_core::casimir::{
    admissible_casimirs, build_k, inverse_pair_residual, k_commutator_constant,
    natural_gauge, physical_casimir, run_pipeline, solve_casimir_family, spin_half_weights, verify_r,
    Pipeline, RReport,
};
use qsu2_core::classical_limit::{convergence_table, undeformed_su2};
use qsu2_core::heisenberg::{default_xs, run_suite};
use qsu2_core::qcore::{rel_residual_scalar, spectrum_residual};
use qsu2_core::standard_rep::{
    build_standard, casimir_value, derive_generators, predicted_s_spectrum, s_eigenbasis,
    s_eigenbasis_orthonormal,
};
use qsu2_core::triangular_rep::{
    build_r_closed_form, build_r_recursive, defining_residual, defining_residual_literal,
    family_deviation, identity_chain_residuals, triangular_pair, AlphaParams, SRPair,
};
use qsu2_core::{rel_residual, Deformation, Error, RealMatrix, Spin};

use crate::export::MatrixDoc;
use crate::{
    parse_grid, BuildArgs, CliError, CliResult, Command, Format, HeisenbergArgs, LimitArgs,
    Operator, RunConfig, SpectrumArgs, SpinArgs, VerifyArgs,
};

/// One named residual with its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    /// Negative controls must exceed `tol` instead.
    pub control: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            control: false,
        }
    }

    pub fn control(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            control: true,
            ..Self::new(name, value, bound)
        }
    }

    /// NaN fails either way.
    pub fn passed(&self) -> bool {
        if self.control {
            self.value > self.tol
        } else {
            self.value <= self.tol
        }
    }
}

/// Checks plus informational lines that do not affect the exit code.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
    pub info: Vec<(String, String)>,
}

impl Report {
    fn check(&mut self, name: impl Into<String>, value: f64, tol: f64) {
        self.checks.push(Check::new(name, value, tol));
    }

    fn note(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.info.push((name.into(), value.into()));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn write(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            let rel = if c.control { "must exceed" } else { "tol" };
            writeln!(out, "{tag}  {:width$}  {:.3e}  ({rel} {:.0e})", c.name, c.value, c.tol)?;
        }
        for (name, value) in &self.info {
            writeln!(out, "info  {name}: {value}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        writeln!(out, "{} checks, {failed} failed", self.checks.len())
    }
}

pub fn dispatch(cmd: &Command, out: &mut dyn Write) -> CliResult<bool> {
    match cmd {
        Command::Build(a) => build(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Casimir(a) => casimir(a, out),
        Command::Spectrum(a) => spectrum(a, out),
        Command::Oracle(a) => oracle(a, out),
        Command::Limit(a) => limit(a, out),
        Command::Heisenberg(a) => heisenberg(a, out),
    }
}

fn spin_config(spin: &SpinArgs, alphas: Option<Vec<f64>>, tol: f64) -> CliResult<RunConfig> {
    RunConfig {
        two_l: spin.two_l,
        t: spin.t,
        alphas,
        tol,
        format: Format::Json,
        out: None,
    }
    .validate()
}

fn matrix_text(m: &RealMatrix) -> String {
    m.to_rows()
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.12}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn build(a: &BuildArgs, out: &mut dyn Write) -> CliResult<bool> {
    let cfg = RunConfig {
        format: a.format,
        out: a.out.clone(),
        ..spin_config(&a.spin, a.alphas.clone(), 1e-9)?
    };
    let p = run_pipeline(cfg.spin(), cfg.t, &cfg.alpha_params()?)?;
    let doc = MatrixDoc::from_pipeline(&p);
    match (cfg.format, &cfg.out) {
        (Format::Json, None) => writeln!(out, "{}", doc.to_json()?)?,
        (Format::Json, Some(path)) => {
            fs::write(path, doc.to_json()? + "\n")?;
            writeln!(out, "wrote {}", path.display())?;
        }
        (Format::Csv, None) => write!(out, "{}", doc.csv_text()?)?,
        (Format::Csv, Some(prefix)) => {
            for path in doc.write_csv(prefix)? {
                writeln!(out, "wrote {}", path.display())?;
            }
        }
    }
    Ok(true)
}

fn verify(a: &VerifyArgs, out: &mut dyn Write) -> CliResult<bool> {
    let report = match &a.input {
        Some(path) => {
            if !(a.tol > 0.0) {
                return Err(CliError::Input(format!("tol must be positive, got {}", a.tol)));
            }
            let doc = MatrixDoc::from_json(&fs::read_to_string(path)?)?;
            writeln!(out, "verifying {} (two_l = {}, t = {})", path.display(), doc.two_l, doc.t)?;
            matrix_checks(&doc, a.tol)?
        }
        None => {
            let cfg = spin_config(&a.spin, a.alphas.clone(), a.tol)?;
            writeln!(out, "two_l = {}, t = {}, tol = {:e}", cfg.two_l, cfg.t, cfg.tol)?;
            verify_suite(&cfg)?
        }
    };
    report.write(out)?;
    Ok(report.passed())
}

/// Full identity suite for one configuration.
pub fn verify_suite(cfg: &RunConfig) -> CliResult<Report> {
    let spin = cfg.spin();
    let t = cfg.t;
    let tol = cfg.tol;
    let def = Deformation::new(t)?;
    let alphas = cfg.alpha_params()?;
    let mut rep = Report::default();

    let std_rep = build_standard(spin, t)?;
    let [hp, hm, pm] = std_rep.relation_residuals();
    rep.check("standard: [H, J+] = 2 J+", hp, tol);
    rep.check("standard: [H, J-] = -2 J-", hm, tol);
    rep.check("standard: [J+, J-] = sinh(tH)/sinh t", pm, tol);
    let gen = derive_generators(&std_rep)?;
    rep.check(
        "standard: e^t Q+Q- - e^-t Q-Q+ = -1/(2 sinh t)",
        gen.q_relation_residual(),
        tol,
    );
    rep.check("standard: [s, r] = tanh t (s^2 - r^2 + 1)", defining_residual(&gen.s, &gen.r, def), tol);
    let phys = physical_casimir(spin, t)?;
    rep.check(
        "standard Casimir = 2 sinh(tl) sinh(t(l+1))/sinh^2 t",
        rel_residual_scalar(casimir_value(&std_rep)?, phys),
        tol,
    );

    let closed = build_r_closed_form(spin, t, &alphas)?;
    let recursive = build_r_recursive(spin, t, &alphas)?;
    rep.check("triangular: closed form = recursion", rel_residual(&closed, &recursive)?, tol);
    let pair = triangular_pair(spin, t, &alphas)?;
    rep.check("triangular: [s, r] = tanh t (s^2 - r^2 + 1)", pair.defining_residual(), tol);
    let names = [
        "triangular: (s-r)(s+r) + 1 = e^t/cosh t (s^2 - r^2 + 1)",
        "triangular: (s+r)(s-r) + 1 = e^-t/cosh t (s^2 - r^2 + 1)",
        "triangular: (s^2 - r^2 + 1)(s+r) = e^2t (s+r)(s^2 - r^2 + 1)",
    ];
    for (name, v) in names.iter().zip(identity_chain_residuals(&pair.s, &pair.r, def)) {
        rep.check(*name, v, tol);
    }
    let computed: Vec<(f64, f64)> = gen.s.symmetric_eigenvalues().into_iter().map(|x| (x, 0.0)).collect();
    rep.check(
        "spectrum of s = sinh(t mu_j)",
        spectrum_residual(&computed, &predicted_s_spectrum(spin, t)),
        tol,
    );

    let basis = s_eigenbasis(&gen, spin)?;
    rep.check(
        "oracle: standard r in the s-eigenbasis is in the family",
        family_deviation(&basis.conjugate(&gen.r), spin, t)?,
        tol,
    );

    let p = run_pipeline(spin, t, &alphas)?;
    let nat = natural_gauge(spin, t)?;
    rep.check(
        "oracle: fixed R = e^{tH} in the orthonormal s-eigenbasis",
        rel_residual(&p.fixed.natural_r, &nat.basis.conjugate(&nat.generators.big_r))?,
        tol,
    );
    r_checks(&mut rep, &p.report, t, tol);
    let inv = inverse_pair_residual(spin, t, &alphas)?;
    rep.check("R(t) R(-t) = I", inv.common_basis, tol);
    rep.note("literal triangular-basis R(t) R(-t) residual", format!("{:.3e}", inv.literal));
    rep.note("Gauss-Newton iterations", p.fixed.iterations.to_string());
    rep.note("condition number of R", format!("{:.3e}", p.report.condition));
    rep.note(
        "literal [s, r] residual (triangular)",
        format!("{:.3e}", defining_residual_literal(&pair.s, &pair.r, def)),
    );
    if spin.dim() <= 4 {
        rep.note("R", matrix_text(&p.fixed.r));
    }

    if spin.two_l() == 1 {
        spin_half_reproduction(&mut rep, t, tol)?;
    }
    Ok(rep)
}

fn r_checks(rep: &mut Report, r: &RReport, t: f64, tol: f64) {
    rep.check("R T+ = e^2t T+ R", r.intertwining_plus, tol);
    rep.check("R T- = e^-2t T- R", r.intertwining_minus, tol);
    rep.check("e^t T+T- - e^-t T-T+ = (R^2 - 1)/(2 sinh t)", r.q_commutator, tol);
    rep.check("R K = (s^2 - r^2 + 1)/2", r.casimir_equation, tol);
    rep.check("[K, s+r] parallel to s^2 - r^2 + 1", r.k_direction, tol);
    rep.check("spectrum of R = e^{t mu_j}", r.spectrum, tol);
    rep.check("det R = 1", (r.determinant - 1.0).abs(), tol);
    if let Some(c) = r.k_constant {
        rep.note(
            "fitted [K, s+r] constant",
            format!("{c:.12e} (e^t sinh t = {:.12e})", k_commutator_constant(t)),
        );
    }
}

/// With `alpha_1 = 2 sinh t` the family member at
/// `(a, b) = (1/(2 sinh t), 1/(2 cosh t))` is `[[cosh t, sinh t], [sinh t, cosh t]]`;
/// the non-physical Casimir admits no `R` at all.
fn spin_half_reproduction(rep: &mut Report, t: f64, tol: f64) -> CliResult<()> {
    let spin = Spin::new(1);
    let (ch, sh) = (t.cosh(), t.sinh());
    let pair = triangular_pair(spin, t, &AlphaParams::new(spin, vec![2.0 * sh])?)?;
    let k = build_k(&pair, physical_casimir(spin, t)?);
    let family = solve_casimir_family(&pair, &k)?;
    let r = family.member(&spin_half_weights(t, 0.5 / sh, 0.5 / ch))?;
    let expected = RealMatrix::from_rows(&[vec![ch, sh], vec![sh, ch]])?;
    rep.check(
        "spin 1/2: R = [[cosh t, sinh t], [sinh t, cosh t]] at alpha = 2 sinh t",
        rel_residual(&r, &expected)?,
        tol,
    );
    rep.note("spin 1/2 reproduced R", matrix_text(&r));
    let other = build_k(&pair, (1.0 - ch) / (sh * sh));
    let none = matches!(solve_casimir_family(&pair, &other), Err(Error::NoSolution { .. }));
    rep.check(
        "spin 1/2: C sinh^2 t = 1 - cosh t admits no R",
        if none { 0.0 } else { 1.0 },
        tol,
    );
    Ok(())
}

/// Checks of the matrices stored in a document; used by `verify --input`.
pub fn matrix_checks(doc: &MatrixDoc, tol: f64) -> CliResult<Report> {
    let spin = Spin::new(doc.two_l);
    let def = Deformation::new(doc.t)?;
    def.check_guard_rail(spin)?;
    let [s, r, k, big_r] = doc.real_matrices()?;
    let mut rep = Report::default();
    let alphas = AlphaParams::new(spin, (1..spin.dim()).map(|i| r.get(i, i - 1)).collect())?;
    let pair = SRPair {
        spin,
        deformation: def,
        s,
        r,
        alphas: Some(alphas),
    };
    rep.check("[s, r] = tanh t (s^2 - r^2 + 1)", pair.defining_residual(), tol);
    let names = [
        "(s-r)(s+r) + 1 = e^t/cosh t (s^2 - r^2 + 1)",
        "(s+r)(s-r) + 1 = e^-t/cosh t (s^2 - r^2 + 1)",
        "(s^2 - r^2 + 1)(s+r) = e^2t (s+r)(s^2 - r^2 + 1)",
    ];
    for (name, v) in names.iter().zip(identity_chain_residuals(&pair.s, &pair.r, def)) {
        rep.check(*name, v, tol);
    }
    rep.check("r is in the triangular family", family_deviation(&pair.r, spin, doc.t)?, tol);
    let diag: Vec<(f64, f64)> = pair.s.diagonal().into_iter().map(|x| (x, 0.0)).collect();
    rep.check(
        "s = diag(sinh(t mu_j))",
        spectrum_residual(&diag, &predicted_s_spectrum(spin, doc.t)).max(pair.s.max_abs_offdiag()),
        tol,
    );
    let phys = physical_casimir(spin, doc.t)?;
    rep.check("Casimir = 2 sinh(tl) sinh(t(l+1))/sinh^2 t", rel_residual_scalar(doc.casimir, phys), tol);
    rep.check("K rebuilt from (s, r, C)", rel_residual(&k, &build_k(&pair, doc.casimir))?, tol);
    r_checks(&mut rep, &verify_r(&big_r, &pair)?, doc.t, tol);
    Ok(rep)
}

fn casimir(a: &SpinArgs, out: &mut dyn Write) -> CliResult<bool> {
    let cfg = spin_config(a, None, 1e-9)?;
    let spin = cfg.spin();
    let pair = triangular_pair(spin, cfg.t, &AlphaParams::ones(spin))?;
    writeln!(out, "admissible Casimirs, two_l = {}, t = {}", cfg.two_l, cfg.t)?;
    writeln!(out, "{:>4}  {:>24}  {:>10}  {:>9}  status", "n", "C", "pivots", "physical")?;
    let mut ok = true;
    for c in admissible_casimirs(spin, cfg.t)? {
        let status = match solve_casimir_family(&pair, &build_k(&pair, c.value)) {
            Ok(f) => format!("solvable, {} free weights", f.weight_count()),
            Err(Error::NoSolution { row, pivot, .. }) => format!("no solution (row {row}, pivot {pivot})"),
            Err(e) => format!("{e}"),
        };
        if c.physical && !status.starts_with("solvable") {
            ok = false;
        }
        let pivots: Vec<String> = c.vanishing.iter().map(|p| p.to_string()).collect();
        writeln!(
            out,
            "{:>4}  {:>24.16e}  {:>10}  {:>9}  {status}",
            c.n,
            c.value,
            pivots.join(","),
            if c.physical { "*" } else { "" }
        )?;
    }
    if spin.two_l() > 0 {
        let std_c = casimir_value(&build_standard(spin, cfg.t)?)?;
        writeln!(out, "standard-rep Casimir: {std_c:.16e}")?;
    }
    Ok(ok)
}

fn spectrum(a: &SpectrumArgs, out: &mut dyn Write) -> CliResult<bool> {
    let cfg = spin_config(&a.spin, None, 1e-9)?;
    let spin = cfg.spin();
    let t = cfg.t;
    let (mut computed, predicted, label): (Vec<(f64, f64)>, Vec<f64>, &str) = match a.operator {
        Operator::S => {
            let gen = derive_generators(&build_standard(spin, t)?)?;
            let ev = gen.s.symmetric_eigenvalues().into_iter().map(|x| (x, 0.0)).collect();
            (ev, predicted_s_spectrum(spin, t), "sinh(t mu)")
        }
        Operator::R => {
            let p = run_pipeline(spin, t, &AlphaParams::ones(spin))?;
            let pred = spin.weights().iter().map(|&w| (t * w as f64).exp()).collect();
            (p.fixed.r.eigenvalues(), pred, "e^(t mu)")
        }
    };
    let res = spectrum_residual(&computed, &predicted);
    computed.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut pred_sorted = predicted.clone();
    pred_sorted.sort_by(f64::total_cmp);
    writeln!(out, "{:>24}  {:>12}  {:>24}", "computed", "imag", label)?;
    for ((re, im), p) in computed.iter().zip(&pred_sorted) {
        writeln!(out, "{re:>24.16e}  {im:>12.3e}  {p:>24.16e}")?;
    }
    let check = Check::new("spectrum", res, cfg.tol);
    writeln!(
        out,
        "{}  scale-aware residual {:.3e}",
        if check.passed() { "PASS" } else { "FAIL" },
        res
    )?;
    Ok(check.passed())
}

fn oracle(a: &SpinArgs, out: &mut dyn Write) -> CliResult<bool> {
    let cfg = spin_config(a, None, 1e-9)?;
    let spin = cfg.spin();
    let t = cfg.t;
    let def = Deformation::new(t)?;
    let gen = derive_generators(&build_standard(spin, t)?)?;
    let mut rep = Report::default();
    let tol = 1e-8;
    for (name, basis) in [
        ("normalized", s_eigenbasis(&gen, spin)?),
        ("orthonormal", s_eigenbasis_orthonormal(&gen, spin)?),
    ] {
        let s = basis.conjugate(&gen.s);
        let r = basis.conjugate(&gen.r);
        rep.check(format!("{name} basis: s diagonal"), s.max_abs_offdiag() / (1.0 + s.max_abs()), tol);
        rep.check(format!("{name} basis: r in the triangular family"), family_deviation(&r, spin, t)?, tol);
        rep.check(format!("{name} basis: [s, r] identity"), defining_residual(&s, &r, def), tol);
        let sub: Vec<String> = (1..spin.dim()).map(|i| format!("{:.6e}", r.get(i, i - 1))).collect();
        rep.note(format!("{name} basis alphas"), format!("[{}]", sub.join(", ")));
    }
    let nat = natural_gauge(spin, t)?;
    let p = run_pipeline(spin, t, &AlphaParams::ones(spin))?;
    rep.check(
        "pipeline R = e^{tH} in the orthonormal basis",
        rel_residual(&p.fixed.natural_r, &nat.basis.conjugate(&nat.generators.big_r))?,
        tol,
    );
    writeln!(out, "standard vs triangular, two_l = {}, t = {t}", cfg.two_l)?;
    rep.write(out)?;
    Ok(rep.passed())
}

fn limit(a: &LimitArgs, out: &mut dyn Write) -> CliResult<bool> {
    let spin = Spin::new(a.two_l);
    let triple = undeformed_su2(spin)?;
    let rows = convergence_table(spin, a.t_start, a.halvings)?;
    writeln!(out, "t -> 0 contraction, two_l = {}", a.two_l)?;
    writeln!(
        out,
        "[s1, r1] = -2 r1: {:.3e}   r1 H = (r1^2 - s1^2)/2 - s1 + C: {:.3e}",
        triple.commutator_residual(),
        triple.h_resolution_residual()
    )?;
    writeln!(
        out,
        "{:>12}  {:>11}  {:>11}  {:>11}  {:>7}  {:>7}  {:>7}",
        "t", "s", "r", "R", "ord s", "ord r", "ord R"
    )?;
    let mut ok = triple.commutator_residual() <= 1e-12 && triple.h_resolution_residual() <= 1e-12;
    for row in &rows {
        let [s, r, big_r] = row.report.as_array();
        let ords = match row.orders {
            Some(o) => {
                ok &= o.iter().all(|&x| x >= 0.9);
                o.map(|x| format!("{x:.3}"))
            }
            None => ["-".to_string(), "-".to_string(), "-".to_string()],
        };
        writeln!(
            out,
            "{:>12.6e}  {s:>11.3e}  {r:>11.3e}  {big_r:>11.3e}  {:>7}  {:>7}  {:>7}",
            row.report.t, ords[0], ords[1], ords[2]
        )?;
    }
    Ok(ok)
}

fn heisenberg(a: &HeisenbergArgs, out: &mut dyn Write) -> CliResult<bool> {
    if !(a.tol > 0.0) {
        return Err(CliError::Input(format!("tol must be positive, got {}", a.tol)));
    }
    let xs = match &a.grid {
        Some(g) => parse_grid(g)?,
        None => default_xs(),
    };
    let rows = run_suite(a.t, a.f, a.phi, &xs)?;
    let mut rep = Report::default();
    for row in rows {
        if row.negative_control {
            rep.checks.push(Check::control(row.name, row.value, 1e-3));
        } else {
            rep.check(row.name, row.value, a.tol);
        }
    }
    writeln!(out, "functional checks, t = {}, F = {}, phi = {}, {} grid points", a.t, a.f, a.phi, xs.len())?;
    rep.write(out)?;
    Ok(rep.passed())
}

/// Pipeline for a validated configuration.
pub fn pipeline(cfg: &RunConfig) -> CliResult<Pipeline> {
    Ok(run_pipeline(cfg.spin(), cfg.t, &cfg.alpha_params()?)?)
}
