//! Lower-triangular realisation of the two-generator algebra
//! `[s, r] = tanh t (s^2 - r^2 + 1)`: `s` diagonal with entries
//! `sinh(t mu_j)`, `r` lower triangular with diagonal `cosh(t mu_j)`, free
//! subdiagonal `alpha_i` and every deeper entry fixed by a product formula.

use crate::error::{Error, Result};
use crate::qcore::{balanced_residual, commutator, rel_residual_scalar, Deformation, RealMatrix, Spin};

/// Default tolerance for [`extract_and_check_alphas`].
pub const EXTRACT_TOL: f64 = 1e-9;

/// Free subdiagonal parameters; `values[k]` sits at 0-based entry
/// `(k + 1, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaParams {
    values: Vec<f64>,
}

impl AlphaParams {
    pub fn new(spin: Spin, values: Vec<f64>) -> Result<Self> {
        let expected = spin.two_l() as usize;
        if values.len() != expected {
            return Err(Error::AlphaCount {
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("alpha parameters"));
        }
        Ok(Self { values })
    }

    /// All parameters equal to 1.
    pub fn ones(spin: Spin) -> Self {
        Self {
            values: vec![1.0; spin.two_l() as usize],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Product of the parameters on rows `j0 + 1 ..= i0` (0-based), i.e.
    /// the chain linking column `j0` to row `i0`.
    fn chain(&self, i0: usize, j0: usize) -> f64 {
        self.values[j0..i0].iter().product()
    }
}

/// Sign of the diagonal of `r`. Only the positive branch admits non-zero
/// `alpha`; the negative branch is exposed for experimentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Positive,
    Negative,
}

/// A concrete `(s, r)` pair satisfying the defining relation.
#[derive(Debug, Clone)]
pub struct SRPair {
    pub spin: Spin,
    pub deformation: Deformation,
    pub s: RealMatrix,
    pub r: RealMatrix,
    /// Subdiagonal parameters, when `r` is in the triangular family.
    pub alphas: Option<AlphaParams>,
}

impl SRPair {
    pub fn t(&self) -> f64 {
        self.deformation.t()
    }

    /// `s^2 - r^2 + 1`.
    pub fn delta(&self) -> RealMatrix {
        let d = self.s.dim();
        &self.s * &self.s - &self.r * &self.r + RealMatrix::identity(d)
    }

    /// Residual of `[s, r] = tanh t (s^2 - r^2 + 1)`, evaluated as
    /// `s r + tanh t r^2 = r s + tanh t (s^2 + 1)`.
    pub fn defining_residual(&self) -> f64 {
        defining_residual(&self.s, &self.r, self.deformation)
    }
}

/// Residual of `[s, r] = tanh t (s^2 - r^2 + 1)` for any pair, with every
/// product kept on the side where it is added.
pub fn defining_residual(s: &RealMatrix, r: &RealMatrix, deformation: Deformation) -> f64 {
    let th = deformation.tanh();
    let d = s.dim();
    let sq_s = s * s;
    let sq_r = r * r;
    balanced_residual(
        &[s * r, sq_r.scale(th)],
        &[r * s, (sq_s + RealMatrix::identity(d)).scale(th)],
    )
    .expect("square matrices of one size")
}

/// Literal residual `rel_residual([s, r], tanh t (s^2 - r^2 + 1))`. Loses
/// accuracy to cancellation once entries grow large.
pub fn defining_residual_literal(s: &RealMatrix, r: &RealMatrix, deformation: Deformation) -> f64 {
    let d = s.dim();
    let lhs = commutator(s, r).expect("dim");
    let rhs = (s * s - r * r + RealMatrix::identity(d)).scale(deformation.tanh());
    crate::qcore::rel_residual(&lhs, &rhs).expect("dim")
}

fn checked(spin: Spin, t: f64) -> Result<Deformation> {
    let def = Deformation::new(t)?;
    def.check_guard_rail(spin)?;
    Ok(def)
}

fn check_alphas(spin: Spin, alphas: &AlphaParams) -> Result<()> {
    if alphas.values.len() != spin.two_l() as usize {
        return Err(Error::AlphaCount {
            expected: spin.two_l() as usize,
            got: alphas.values.len(),
        });
    }
    Ok(())
}

/// `diag(sinh(t mu_j))`.
pub fn build_s_diag(spin: Spin, t: f64) -> Result<RealMatrix> {
    checked(spin, t)?;
    Ok(RealMatrix::from_diagonal(&diag_values(spin, t, f64::sinh)))
}

fn diag_values(spin: Spin, t: f64, f: fn(f64) -> f64) -> Vec<f64> {
    spin.weights().into_iter().map(|w| f(t * w as f64)).collect()
}

/// Coefficient `c` of the entry `depth` steps below the diagonal in
/// 0-based row `i0`:
/// `c = 2^{-(depth-1)} prod_{k=2}^{depth} 1 / cosh(t (2l + 2k - 2i))`
/// with the 1-based row `i = i0 + 1`. The empty product gives `c = 1` on
/// the subdiagonal.
pub fn family_coefficient(spin: Spin, t: f64, i0: usize, depth: usize) -> f64 {
    assert!(depth >= 1 && depth <= i0, "entry must lie below the diagonal");
    let two_l = i64::from(spin.two_l());
    let i = i0 as i64 + 1;
    let mut c = 1.0;
    for k in 2..=depth as i64 {
        c /= 2.0 * (t * (two_l + 2 * k - 2 * i) as f64).cosh();
    }
    c
}

/// Closed-form `r`: `r_{i0, i0-depth} = c(i0, depth) * prod of the alphas
/// on the chain`.
pub fn build_r_closed_form(spin: Spin, t: f64, alphas: &AlphaParams) -> Result<RealMatrix> {
    checked(spin, t)?;
    check_alphas(spin, alphas)?;
    let d = spin.dim();
    let mut r = RealMatrix::from_diagonal(&diag_values(spin, t, f64::cosh));
    for i0 in 1..d {
        for j0 in 0..i0 {
            let depth = i0 - j0;
            r.set(i0, j0, family_coefficient(spin, t, i0, depth) * alphas.chain(i0, j0));
        }
    }
    Ok(r)
}

/// `r` filled diagonal by diagonal from
/// `2 cosh(t(2l+2-i-j)) sinh(t(i-j-1)) a_ij = sinh t sum_{j<k<i} a_ik a_kj`.
pub fn build_r_recursive(spin: Spin, t: f64, alphas: &AlphaParams) -> Result<RealMatrix> {
    checked(spin, t)?;
    check_alphas(spin, alphas)?;
    let d = spin.dim();
    let two_l = i64::from(spin.two_l());
    let sh = t.sinh();
    let mut r = RealMatrix::from_diagonal(&diag_values(spin, t, f64::cosh));
    for (k, &a) in alphas.values.iter().enumerate() {
        r.set(k + 1, k, a);
    }
    for depth in 2..d {
        for j0 in 0..d - depth {
            let i0 = j0 + depth;
            let sum: f64 = (j0 + 1..i0).map(|k| r.get(i0, k) * r.get(k, j0)).sum();
            let arg = (two_l - i0 as i64 - j0 as i64) as f64;
            let coeff = 2.0 * (t * arg).cosh() * (t * (depth as f64 - 1.0)).sinh();
            assert!(coeff != 0.0, "recursion coefficient vanishes for real t != 0");
            r.set(i0, j0, sh * sum / coeff);
        }
    }
    Ok(r)
}

/// `r` on either diagonal branch. On the negative branch the equation for
/// each subdiagonal entry has a non-zero coefficient and a zero right side,
/// so every alpha is forced to vanish; non-zero alphas are rejected.
pub fn build_r_branch(
    spin: Spin,
    t: f64,
    alphas: &AlphaParams,
    branch: Branch,
) -> Result<RealMatrix> {
    match branch {
        Branch::Positive => build_r_closed_form(spin, t, alphas),
        Branch::Negative => {
            checked(spin, t)?;
            check_alphas(spin, alphas)?;
            if let Some(k) = alphas.values.iter().position(|&a| a != 0.0) {
                return Err(Error::InvalidInput(format!(
                    "negative branch forces alpha {} to zero",
                    k + 1
                )));
            }
            let neg: Vec<f64> = diag_values(spin, t, f64::cosh).iter().map(|c| -c).collect();
            Ok(RealMatrix::from_diagonal(&neg))
        }
    }
}

/// Builds the triangular pair on the positive branch.
pub fn triangular_pair(spin: Spin, t: f64, alphas: &AlphaParams) -> Result<SRPair> {
    let deformation = checked(spin, t)?;
    Ok(SRPair {
        spin,
        deformation,
        s: build_s_diag(spin, t)?,
        r: build_r_closed_form(spin, t, alphas)?,
        alphas: Some(alphas.clone()),
    })
}

/// [`extract_and_check_alphas_with_tol`] at [`EXTRACT_TOL`].
pub fn extract_and_check_alphas(lower: &RealMatrix, spin: Spin, t: f64) -> Result<AlphaParams> {
    extract_and_check_alphas_with_tol(lower, spin, t, EXTRACT_TOL)
}

/// Reads the subdiagonal of a lower-triangular `r` and checks that every
/// deeper entry equals its family coefficient times the alpha chain.
/// Entries with a vanishing chain must themselves vanish.
pub fn extract_and_check_alphas_with_tol(
    lower: &RealMatrix,
    spin: Spin,
    t: f64,
    tol: f64,
) -> Result<AlphaParams> {
    let scan = scan_family(lower, spin, t)?;
    if let Some(v) = scan.violations.iter().find(|v| v.deviation > tol) {
        return Err(v.error.clone());
    }
    Ok(scan.alphas)
}

/// Largest deviation of `lower` from the triangular family: upper entries
/// and vanishing-chain entries relative to `1 + max|lower|`, diagonal and
/// chain ratios as scalar relative residuals.
pub fn family_deviation(lower: &RealMatrix, spin: Spin, t: f64) -> Result<f64> {
    Ok(scan_family(lower, spin, t)?
        .violations
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.deviation)))
}

struct Violation {
    deviation: f64,
    error: Error,
}

struct FamilyScan {
    alphas: AlphaParams,
    violations: Vec<Violation>,
}

fn scan_family(lower: &RealMatrix, spin: Spin, t: f64) -> Result<FamilyScan> {
    let d = spin.dim();
    if lower.dim() != d {
        return Err(Error::DimensionMismatch {
            left: lower.dim(),
            right: d,
        });
    }
    if !lower.is_finite() {
        return Err(Error::NonFinite("triangular input"));
    }
    let scale = 1.0 + lower.max_abs();
    let mut violations = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            violations.push(Violation {
                deviation: lower.get(i, j).abs() / scale,
                error: Error::NotTriangular { row: i, col: j },
            });
        }
    }
    for (j, w) in spin.weights().into_iter().enumerate() {
        violations.push(Violation {
            deviation: rel_residual_scalar(lower.get(j, j), (t * w as f64).cosh()),
            error: Error::NotTriangular { row: j, col: j },
        });
    }
    let alphas = AlphaParams {
        values: (1..d).map(|i| lower.get(i, i - 1)).collect(),
    };
    for i0 in 2..d {
        for j0 in 0..i0 - 1 {
            let chain = alphas.chain(i0, j0);
            let expected = family_coefficient(spin, t, i0, i0 - j0);
            let entry = lower.get(i0, j0);
            let (deviation, ratio) = if chain == 0.0 {
                (entry.abs() / scale, f64::INFINITY)
            } else {
                let ratio = entry / chain;
                (rel_residual_scalar(ratio, expected), ratio)
            };
            violations.push(Violation {
                deviation,
                error: Error::NotInFamily {
                    row: i0,
                    col: j0,
                    ratio,
                    expected,
                },
            });
        }
    }
    Ok(FamilyScan { alphas, violations })
}

/// Residuals of the identity chain implied by the defining relation, each
/// rearranged so that no side is a difference of large terms:
/// `(s - r)(s + r) + 1 = e^t / cosh t (s^2 - r^2 + 1)`,
/// `(s + r)(s - r) + 1 = e^-t / cosh t (s^2 - r^2 + 1)`,
/// `(s^2 - r^2 + 1)(s + r) = e^{2t} (s + r)(s^2 - r^2 + 1)`.
pub fn identity_chain_residuals(s: &RealMatrix, r: &RealMatrix, deformation: Deformation) -> [f64; 3] {
    let t = deformation.t();
    let ch = deformation.cosh();
    let d = s.dim();
    let id = RealMatrix::identity(d);
    let sq_s1 = s * s + &id;
    let sq_r = r * r;
    let sum = s + r;
    let diff = s - r;
    let chain = |prod: RealMatrix, c: f64| {
        balanced_residual(&[prod, id.clone(), sq_r.scale(c)], &[sq_s1.scale(c)]).expect("dim")
    };
    let e2 = (2.0 * t).exp();
    let cyclic = balanced_residual(
        &[&sq_s1 * &sum, (&sum * &sq_r).scale(e2)],
        &[&sq_r * &sum, (&sum * &sq_s1).scale(e2)],
    )
    .expect("dim");
    [
        chain(&diff * &sum, t.exp() / ch),
        chain(&sum * &diff, (-t).exp() / ch),
        cyclic,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn small_cases() {
        let t = 0.37_f64;
        let s = build_s_diag(Spin::new(1), t).unwrap();
        assert_eq!(s.diagonal(), vec![t.sinh(), -t.sinh()]);
        let s = build_s_diag(Spin::new(2), t).unwrap();
        assert_eq!(s.diagonal(), vec![(2.0 * t).sinh(), 0.0, -(2.0 * t).sinh()]);

        let a = AlphaParams::new(Spin::new(1), vec![1.7]).unwrap();
        let r = build_r_closed_form(Spin::new(1), t, &a).unwrap();
        assert_eq!(r.to_rows(), vec![vec![t.cosh(), 0.0], vec![1.7, t.cosh()]]);

        let a = AlphaParams::new(Spin::new(2), vec![1.3, -0.4]).unwrap();
        let r = build_r_closed_form(Spin::new(2), t, &a).unwrap();
        assert_relative_eq!(r.get(2, 0), 1.3 * -0.4 / 2.0, max_relative = 1e-15);

        let r = build_r_closed_form(Spin::new(3), t, &AlphaParams::ones(Spin::new(3))).unwrap();
        assert_relative_eq!(r.get(3, 0), 1.0 / (4.0 * t.cosh().powi(2)), max_relative = 1e-14);
    }

    #[test]
    fn zero_alpha_kills_dependent_chain() {
        let spin = Spin::new(5);
        let a = AlphaParams::new(spin, vec![1.0, 0.5, 0.0, 2.0, -1.0]).unwrap();
        let r = build_r_recursive(spin, 0.4, &a).unwrap();
        // alpha index 2 sits at (3, 2): entries (i, j) with j <= 2 < 3 <= i vanish.
        for i in 3..6 {
            for j in 0..3 {
                assert_eq!(r.get(i, j), 0.0, "({i},{j})");
            }
        }
        assert_eq!(
            extract_and_check_alphas(&r, spin, 0.4).unwrap(),
            a
        );
    }

    #[test]
    fn alpha_count_checked() {
        let err = AlphaParams::new(Spin::new(3), vec![1.0]).unwrap_err();
        assert_eq!(err, Error::AlphaCount { expected: 3, got: 1 });
        assert!(AlphaParams::new(Spin::new(1), vec![f64::NAN]).is_err());
    }

    #[test]
    fn negative_branch() {
        let spin = Spin::new(4);
        let r = build_r_branch(spin, 0.3, &AlphaParams::new(spin, vec![0.0; 4]).unwrap(), Branch::Negative)
            .unwrap();
        let s = build_s_diag(spin, 0.3).unwrap();
        assert!(defining_residual(&s, &r, Deformation::new(0.3).unwrap()) < 1e-14);
        assert!(build_r_branch(spin, 0.3, &AlphaParams::ones(spin), Branch::Negative).is_err());
    }

    #[test]
    fn non_member_rejected() {
        let spin = Spin::new(3);
        let mut r = build_r_closed_form(spin, 0.5, &AlphaParams::ones(spin)).unwrap();
        r.set(3, 0, r.get(3, 0) * 1.01);
        assert!(matches!(
            extract_and_check_alphas(&r, spin, 0.5),
            Err(Error::NotInFamily { row: 3, col: 0, .. })
        ));
        let mut r = build_r_closed_form(spin, 0.5, &AlphaParams::ones(spin)).unwrap();
        r.set(0, 2, 0.1);
        assert!(matches!(
            extract_and_check_alphas(&r, spin, 0.5),
            Err(Error::NotTriangular { .. })
        ));
    }

    #[test]
    fn guard_rail_applies() {
        assert!(matches!(
            build_s_diag(Spin::new(24), 1.1),
            Err(Error::GuardRail { .. })
        ));
    }
}
