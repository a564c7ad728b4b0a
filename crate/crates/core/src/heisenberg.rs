//! Functional realisations of the two-generator algebra.
//!
//! Classical level: `s = sinh(tp)`, `r = cosh(tp) coth(nu x + phi)` with
//! `nu = tanh t / t` solves `{s, r} = tanh t (s^2 - r^2 + 1)` for the
//! Poisson bracket of conjugate variables `(p, x)`.
//!
//! Quantum level: `p, x` generate the Heisenberg-Weyl algebra, `[p, x] = 1`,
//! so `e^{mu p}` acts on a function of `x` as the exact shift
//! `f(x) -> f(x + mu)`. No derivative is ever discretised: every operator
//! below is a finite combination of shifts and multiplications, evaluated
//! pointwise on closed-form test functions.

use std::rc::Rc;

use crate::error::{Error, Result};

/// Minimum distance kept from any `coth` pole.
pub const POLE_RADIUS: f64 = 0.1;

type Func = Rc<dyn Fn(f64) -> f64>;

fn check_pole(arg: f64, x: f64) -> Result<()> {
    if arg.abs() < POLE_RADIUS {
        return Err(Error::PoleProximity {
            x,
            radius: POLE_RADIUS,
        });
    }
    Ok(())
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

fn scaled(diff: f64, a: f64, b: f64) -> f64 {
    diff.abs() / (1.0 + a.abs() + b.abs())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Classical solution on a `(p, x)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSolution {
    pub t: f64,
    pub nu: f64,
    pub phi: f64,
    pub grid: Vec<(f64, f64)>,
}

impl ClassicalSolution {
    /// `nu = tanh t / t`.
    pub fn new(t: f64, phi: f64, grid: Vec<(f64, f64)>) -> Result<Self> {
        if !t.is_finite() || t == 0.0 {
            return Err(Error::InvalidDeformation(t));
        }
        Self::with_nu(t, t.tanh() / t, phi, grid)
    }

    /// Arbitrary `nu`, for negative controls.
    pub fn with_nu(t: f64, nu: f64, phi: f64, grid: Vec<(f64, f64)>) -> Result<Self> {
        for &(_, x) in &grid {
            check_pole(nu * x + phi, x)?;
        }
        Ok(Self { t, nu, phi, grid })
    }

    /// `n x n` tensor grid on `[lo, hi]^2`.
    pub fn square_grid(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        let axis = linspace(lo, hi, n);
        axis.iter()
            .flat_map(|&p| axis.iter().map(move |&x| (p, x)))
            .collect()
    }
}

/// `(s, r, ds/dp, ds/dx, dr/dp, dr/dx)` at one point, analytically.
pub fn classical_fields(sol: &ClassicalSolution, p: f64, x: f64) -> [f64; 6] {
    let t = sol.t;
    let u = sol.nu * x + sol.phi;
    let (sh, ch) = ((t * p).sinh(), (t * p).cosh());
    let c = coth(u);
    let csch2 = 1.0 / u.sinh().powi(2);
    [sh, ch * c, t * ch, 0.0, t * sh * c, -sol.nu * ch * csch2]
}

/// `{f, g} = df/dp dg/dx - df/dx dg/dp`.
pub fn poisson_bracket(df_dp: f64, df_dx: f64, dg_dp: f64, dg_dx: f64) -> f64 {
    df_dp * dg_dx - df_dx * dg_dp
}

/// Max over the grid of `|{s, r} - tanh t (s^2 - r^2 + 1)| / (1 + |s^2 - r^2 + 1|)`.
pub fn poisson_residual(sol: &ClassicalSolution) -> Result<f64> {
    let th = sol.t.tanh();
    let mut worst = 0.0_f64;
    for &(p, x) in &sol.grid {
        check_pole(sol.nu * x + sol.phi, x)?;
        let [s, r, sp, sx, rp, rx] = classical_fields(sol, p, x);
        let bracket = poisson_bracket(sp, sx, rp, rx);
        let delta = s * s - r * r + 1.0;
        worst = worst.max((bracket - th * delta).abs() / (1.0 + delta.abs()));
    }
    Ok(worst)
}

/// Profile of the coefficient function `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AProfile {
    /// `coth(x + F)`, the solution.
    Coth,
    /// `tanh(x + F)`: solves the same difference equation.
    Tanh,
    /// `coth(2(x + F))`: violates the difference equation.
    CothDoubled,
}

/// Quantum realisation `r = (A(x) e^{tp} + e^{-tp} B(x))/2` with
/// `B(x) = A(x - b_shift)`; `b_shift = t` resolves the selfconsistency
/// condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumRealization {
    pub t: f64,
    pub f: f64,
    pub profile: AProfile,
    pub b_shift: f64,
}

impl QuantumRealization {
    pub fn new(t: f64, f: f64) -> Result<Self> {
        if !t.is_finite() || t == 0.0 {
            return Err(Error::InvalidDeformation(t));
        }
        Ok(Self {
            t,
            f,
            profile: AProfile::Coth,
            b_shift: t,
        })
    }

    pub fn with_profile(self, profile: AProfile) -> Self {
        Self { profile, ..self }
    }

    pub fn with_b_shift(self, b_shift: f64) -> Self {
        Self { b_shift, ..self }
    }

    /// Argument of the singular function inside `A(x)`.
    fn pole_arg(&self, x: f64) -> f64 {
        match self.profile {
            AProfile::Coth | AProfile::CothDoubled => x + self.f,
            AProfile::Tanh => f64::INFINITY,
        }
    }

    pub fn a(&self, x: f64) -> f64 {
        match self.profile {
            AProfile::Coth => coth(x + self.f),
            AProfile::Tanh => (x + self.f).tanh(),
            AProfile::CothDoubled => coth(2.0 * (x + self.f)),
        }
    }

    pub fn b(&self, x: f64) -> f64 {
        self.a(x - self.b_shift)
    }

    /// Rejects `x` if `A` or `B` would be evaluated within [`POLE_RADIUS`]
    /// of a pole at any shift `x + k t`, `|k| <= 2`, reached by the checks.
    fn check(&self, x: f64) -> Result<()> {
        for k in -2..=2 {
            check_pole(self.pole_arg(x + f64::from(k) * self.t), x)?;
            check_pole(self.pole_arg(x + f64::from(k) * self.t - self.b_shift), x)?;
        }
        Ok(())
    }
}

/// Per-equation maxima of [`shift_eq_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShiftReport {
    pub a_equation: f64,
    pub b_equation: f64,
    pub ab_equation: f64,
    pub selfconsistency: f64,
}

impl ShiftReport {
    pub fn max(&self) -> f64 {
        self.a_equation
            .max(self.b_equation)
            .max(self.ab_equation)
            .max(self.selfconsistency)
    }
}

/// The difference equations for `A`, `B`, the mixed equation and the
/// selfconsistency product `(A(x) - B(x-t)) (B(x) - A(x-t))`, each
/// scale-aware, maximised over `xs`.
pub fn shift_eq_residual(qr: &QuantumRealization, xs: &[f64]) -> Result<ShiftReport> {
    let t = qr.t;
    let th = t.tanh();
    let mut rep = ShiftReport::default();
    let single = |g: &dyn Fn(f64) -> f64, x: f64| {
        let lhs = g(x + t) - g(x);
        let rhs = th * (1.0 - g(x + t) * g(x));
        scaled(lhs - rhs, lhs, rhs)
    };
    for &x in xs {
        qr.check(x)?;
        rep.a_equation = rep.a_equation.max(single(&|y| qr.a(y), x));
        rep.b_equation = rep.b_equation.max(single(&|y| qr.b(y), x));
        let (a0, a1, b0, b1) = (qr.a(x), qr.a(x - t), qr.b(x), qr.b(x - t));
        let lhs = a0 - a1 + b0 - b1;
        let rhs = th * (2.0 - a0 * b0 - a1 * b1);
        rep.ab_equation = rep.ab_equation.max(scaled(lhs - rhs, lhs, rhs));
        let (u, v) = (a0 - b1, b0 - a1);
        let mag = (a0.abs() + b1.abs()) * (b0.abs() + a1.abs());
        rep.selfconsistency = rep.selfconsistency.max((u * v).abs() / (1.0 + mag));
    }
    Ok(rep)
}

/// Which operator realises `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ROrdering {
    /// `(A(x) e^{tp} + e^{-tp} B(x)) / 2` with the realisation's `A`, `B`.
    Substitution,
    /// `cosh(tp) coth(x + F)`.
    ShiftFirst,
    /// `coth(x + F) cosh(tp)`.
    MultiplyFirst,
}

fn op_s(t: f64, f: Func) -> Func {
    Rc::new(move |x| 0.5 * (f(x + t) - f(x - t)))
}

fn op_r(qr: QuantumRealization, ordering: ROrdering, f: Func) -> Func {
    let t = qr.t;
    match ordering {
        ROrdering::Substitution => Rc::new(move |x| 0.5 * (qr.a(x) * f(x + t) + qr.b(x - t) * f(x - t))),
        ROrdering::ShiftFirst => {
            let c = move |y: f64| coth(y + qr.f);
            Rc::new(move |x| 0.5 * (c(x + t) * f(x + t) + c(x - t) * f(x - t)))
        }
        ROrdering::MultiplyFirst => Rc::new(move |x| 0.5 * coth(x + qr.f) * (f(x + t) + f(x - t))),
    }
}

/// Default test functions `1, x, x^2, e^{x/3}, sin x`.
pub fn default_test_functions() -> Vec<(&'static str, fn(f64) -> f64)> {
    vec![
        ("1", |_| 1.0),
        ("x", |x| x),
        ("x^2", |x| x * x),
        ("exp(x/3)", |x| (x / 3.0).exp()),
        ("sin x", f64::sin),
    ]
}

/// Applies `[s, r] = tanh t (s^2 - r^2 + 1)` to each test function at each
/// point, comparing `s r f + tanh t r r f` with `r s f + tanh t (s s f + f)`.
pub fn operator_commutator_residual(
    qr: &QuantumRealization,
    ordering: ROrdering,
    testfns: &[fn(f64) -> f64],
    xs: &[f64],
) -> Result<f64> {
    let t = qr.t;
    let th = t.tanh();
    let mut worst = 0.0_f64;
    for &x in xs {
        qr.check(x)?;
    }
    for &g in testfns {
        let f: Func = Rc::new(g);
        let sr = op_s(t, op_r(*qr, ordering, f.clone()));
        let rs = op_r(*qr, ordering, op_s(t, f.clone()));
        let rr = op_r(*qr, ordering, op_r(*qr, ordering, f.clone()));
        let ss = op_s(t, op_s(t, f.clone()));
        for &x in xs {
            let lhs = sr(x) + th * rr(x);
            let rhs = rs(x) + th * (ss(x) + f(x));
            worst = worst.max(scaled(lhs - rhs, lhs, rhs));
        }
    }
    Ok(worst)
}

/// `Theta = F e^{g} e^{sign * exponent * x}` with constant `F`, `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderAnsatz {
    pub t: f64,
    /// `F+`, `F-`.
    pub big_f: [f64; 2],
    /// `f+`, `f-`.
    pub small_f: [f64; 2],
    /// 2 for the true ladder operators.
    pub exponent: f64,
}

impl LadderAnsatz {
    pub fn new(t: f64) -> Self {
        Self {
            t,
            big_f: [1.0, 1.0],
            small_f: [0.0, 0.0],
            exponent: 2.0,
        }
    }

    pub fn with_exponent(self, exponent: f64) -> Self {
        Self { exponent, ..self }
    }

    fn theta(&self, sign: LadderSign, x: f64) -> f64 {
        let (k, sigma) = match sign {
            LadderSign::Raise => (0, 1.0),
            LadderSign::Lower => (1, -1.0),
        };
        self.big_f[k] * (sigma * self.exponent * x + self.small_f[k]).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderSign {
    /// `Theta+`, paired with `p + 2`.
    Raise,
    /// `Theta-`, paired with `p - 2`.
    Lower,
}

/// `sinh(tp) Theta f = Theta sinh(t(p ± 2)) f` pointwise, where
/// `sinh(t(p + c)) f = (e^{ct} f(x+t) - e^{-ct} f(x-t)) / 2`.
pub fn ladder_shift_residual(
    la: &LadderAnsatz,
    sign: LadderSign,
    testfns: &[fn(f64) -> f64],
    xs: &[f64],
) -> Result<f64> {
    let t = la.t;
    let c = match sign {
        LadderSign::Raise => 2.0,
        LadderSign::Lower => -2.0,
    };
    let mut worst = 0.0_f64;
    for &g in testfns {
        for &x in xs {
            let th_f = |y: f64| la.theta(sign, y) * g(y);
            let lhs = 0.5 * (th_f(x + t) - th_f(x - t));
            let rhs = la.theta(sign, x) * 0.5 * ((c * t).exp() * g(x + t) - (-c * t).exp() * g(x - t));
            if !lhs.is_finite() || !rhs.is_finite() {
                return Err(Error::NonFinite("ladder evaluation"));
            }
            worst = worst.max(scaled(lhs - rhs, lhs, rhs));
        }
    }
    Ok(worst)
}

/// Parameters of the default checks.
pub const DEFAULT_T: f64 = 0.3;
pub const DEFAULT_F: f64 = 3.0;
pub const DEFAULT_POISSON_T: f64 = 0.5;
pub const DEFAULT_PHI: f64 = 2.0;
/// Negative controls run nearer the pole, where a wrong `A` or `B` is
/// visible above rounding by several orders: `F = 0.6 + 3|t|` keeps every
/// reached argument at least 0.6 from the pole on `[0, 1]`.
pub fn control_f(t: f64) -> f64 {
    0.6 + 3.0 * t.abs()
}

/// Control grid: 21 points on `[0, 1]` for `t > 0`, on `[t, 1 + t]` for
/// `t < 0`, so that the pair `(x, x - t)` covers the same arguments for
/// either sign.
pub fn control_xs(t: f64) -> Vec<f64> {
    let lo = t.min(0.0);
    linspace(lo, lo + 1.0, 21)
}

/// Default operator grid: 41 points on `[-1, 1]`.
pub fn default_xs() -> Vec<f64> {
    linspace(-1.0, 1.0, 41)
}

/// One named residual of [`run_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub name: &'static str,
    pub value: f64,
    /// Negative controls must come out large, the rest small.
    pub negative_control: bool,
}

/// All functional checks with their negative controls. The positive checks
/// use `(t, f, phi, xs)` (the Poisson check uses `t` too, on a 20x20 grid
/// over `[-1, 1]^2`); the controls use `t`, [`control_f`] and
/// [`control_xs`]. The controls deviate at `O(t^2)`, so they clear `1e-3`
/// only for `|t|` of roughly 0.25 and above.
pub fn run_suite(t: f64, f: f64, phi: f64, xs: &[f64]) -> Result<Vec<SuiteRow>> {
    let fns: Vec<fn(f64) -> f64> = default_test_functions().into_iter().map(|(_, g)| g).collect();
    let grid = ClassicalSolution::square_grid(-1.0, 1.0, 20);
    let sol = ClassicalSolution::new(t, phi, grid.clone())?;
    let qr = QuantumRealization::new(t, f)?;
    let la = LadderAnsatz::new(t);
    let cxs = control_xs(t);
    let cqr = QuantumRealization::new(t, control_f(t))?;
    let row = |name, value, negative_control| SuiteRow {
        name,
        value,
        negative_control,
    };
    Ok(vec![
        row("poisson bracket", poisson_residual(&sol)?, false),
        row("shift equations", shift_eq_residual(&qr, xs)?.max(), false),
        row(
            "operator identity, substitution",
            operator_commutator_residual(&qr, ROrdering::Substitution, &fns, xs)?,
            false,
        ),
        row(
            "operator identity, cosh(tp) coth(x+F)",
            operator_commutator_residual(&qr, ROrdering::ShiftFirst, &fns, xs)?,
            false,
        ),
        row(
            "operator identity, coth(x+F) cosh(tp)",
            operator_commutator_residual(&qr, ROrdering::MultiplyFirst, &fns, xs)?,
            false,
        ),
        row("ladder, raising", ladder_shift_residual(&la, LadderSign::Raise, &fns, xs)?, false),
        row("ladder, lowering", ladder_shift_residual(&la, LadderSign::Lower, &fns, xs)?, false),
        row(
            "control: poisson with nu = 1",
            poisson_residual(&ClassicalSolution::with_nu(t, 1.0, phi, grid)?)?,
            true,
        ),
        row(
            "control: shift equations with B(x) = A(x)",
            shift_eq_residual(&cqr.with_b_shift(0.0), &cxs)?.max(),
            true,
        ),
        row(
            "control: shift equations with A = coth(2(x+F))",
            shift_eq_residual(&cqr.with_profile(AProfile::CothDoubled), &cxs)?.max(),
            true,
        ),
        row(
            "control: operator identity with A = coth(2(x+F))",
            operator_commutator_residual(
                &cqr.with_profile(AProfile::CothDoubled),
                ROrdering::Substitution,
                &fns,
                &cxs,
            )?,
            true,
        ),
        row(
            "control: raising with e^x",
            ladder_shift_residual(&la.with_exponent(1.0), LadderSign::Raise, &fns, xs)?,
            true,
        ),
        row(
            "control: lowering with e^-x",
            ladder_shift_residual(&la.with_exponent(1.0), LadderSign::Lower, &fns, xs)?,
            true,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fns() -> Vec<fn(f64) -> f64> {
        default_test_functions().into_iter().map(|(_, f)| f).collect()
    }

    #[test]
    fn constant_function_is_killed_by_s() {
        let one: Func = Rc::new(|_| 1.0);
        let s1 = op_s(0.3, one);
        for x in linspace(-1.0, 1.0, 7) {
            assert_eq!(s1(x), 0.0);
        }
    }

    #[test]
    fn pole_is_rejected() {
        let qr = QuantumRealization::new(0.3, 0.0).unwrap();
        assert!(matches!(
            shift_eq_residual(&qr, &[0.05]),
            Err(Error::PoleProximity { .. })
        ));
        assert!(ClassicalSolution::new(0.5, 0.0, vec![(0.0, 0.0)]).is_err());
    }

    #[test]
    fn tanh_profile_also_solves_difference_equation() {
        let qr = QuantumRealization::new(0.3, 3.0).unwrap().with_profile(AProfile::Tanh);
        let rep = shift_eq_residual(&qr, &linspace(-1.0, 1.0, 21)).unwrap();
        assert!(rep.max() < 1e-14, "{rep:?}");
    }

    #[test]
    fn substitution_matches_orderings_with_shifted_constants() {
        // cosh(tp) coth(x+F) is the substitution with F -> F + t.
        let xs = linspace(-1.0, 1.0, 11);
        let qr = QuantumRealization::new(0.3, 3.0).unwrap();
        let shifted = QuantumRealization::new(0.3, 3.3).unwrap();
        for g in fns() {
            let f: Func = Rc::new(g);
            let a = op_r(qr, ROrdering::ShiftFirst, f.clone());
            let b = op_r(shifted, ROrdering::Substitution, f.clone());
            for &x in &xs {
                assert!((a(x) - b(x)).abs() < 1e-14 * (1.0 + a(x).abs()));
            }
        }
    }

    #[test]
    fn ladder_constant_function() {
        let la = LadderAnsatz::new(0.3);
        let r = ladder_shift_residual(&la, LadderSign::Raise, &[|_| 1.0], &linspace(-1.0, 1.0, 9)).unwrap();
        assert!(r <= 1e-12);
    }
}
