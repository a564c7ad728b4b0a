//! The `t -> 0` contraction: `s -> t s1`, `r -> 1 + t r1`, `R -> 1 + tH`
//! with `s1 = J+ + J-`, `r1 = H + J+ - J-` generating su(2) in the form
//! `[s1, r1] = -2 r1`, `r1 H = (r1^2 - s1^2)/2 - s1 + C`.

use crate::error::{Error, Result};
use crate::qcore::{commutator, rel_residual, RealMatrix, Spin};
use crate::standard_rep::{build_standard, derive_generators};

const TRIPLE_TOL: f64 = 1e-12;
/// Largest `t` accepted by [`limit_residuals`].
pub const LIMIT_T_MAX: f64 = 0.1;

/// Undeformed generators.
#[derive(Debug, Clone)]
pub struct ClassicalTriple {
    pub spin: Spin,
    pub s1: RealMatrix,
    pub r1: RealMatrix,
    pub h: RealMatrix,
    /// `2l(l+1)`.
    pub casimir: f64,
}

impl ClassicalTriple {
    /// `rel_residual([s1, r1], -2 r1)`.
    pub fn commutator_residual(&self) -> f64 {
        let c = commutator(&self.s1, &self.r1).expect("dim");
        rel_residual(&c, &self.r1.scale(-2.0)).expect("dim")
    }

    /// `rel_residual(r1 H, (r1^2 - s1^2)/2 - s1 + C)`.
    pub fn h_resolution_residual(&self) -> f64 {
        let d = self.spin.dim();
        let rhs = (&self.r1 * &self.r1 - &self.s1 * &self.s1).scale(0.5) - &self.s1
            + RealMatrix::identity(d).scale(self.casimir);
        rel_residual(&(&self.r1 * &self.h), &rhs).expect("dim")
    }
}

/// Builds the undeformed triple from `(J+)_{j,j+1} = sqrt(j (2l + 1 - j))`
/// (1-based `j`) and checks both identities.
pub fn undeformed_su2(spin: Spin) -> Result<ClassicalTriple> {
    let d = spin.dim();
    let n = f64::from(spin.two_l()) + 1.0;
    let jp = RealMatrix::from_fn(d, |i, j| {
        if j == i + 1 {
            let k = (i + 1) as f64;
            (k * (n - k)).sqrt()
        } else {
            0.0
        }
    });
    let jm = jp.transpose();
    let h = RealMatrix::from_diagonal(&spin.weights().iter().map(|&w| w as f64).collect::<Vec<_>>());
    let triple = ClassicalTriple {
        spin,
        s1: &jp + &jm,
        r1: &h + &jp - &jm,
        h,
        casimir: spin.classical_casimir(),
    };
    for (relation, residual) in [
        ("[s1, r1] = -2 r1", triple.commutator_residual()),
        ("r1 H = (r1^2 - s1^2)/2 - s1 + C", triple.h_resolution_residual()),
    ] {
        if residual > TRIPLE_TOL {
            return Err(Error::Verification {
                relation,
                residual,
                tol: TRIPLE_TOL,
            });
        }
    }
    Ok(triple)
}

/// Distances of the rescaled deformed generators from their limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitReport {
    pub t: f64,
    /// `s / t` vs `s1`.
    pub s: f64,
    /// `(r - 1) / t` vs `r1`.
    pub r: f64,
    /// `(R - 1) / t` vs `H`.
    pub big_r: f64,
}

impl LimitReport {
    pub fn as_array(&self) -> [f64; 3] {
        [self.s, self.r, self.big_r]
    }
}

/// Scale-aware distances at one `t` in `(0, 0.1]`.
pub fn limit_residuals(spin: Spin, t: f64) -> Result<LimitReport> {
    if !(t > 0.0 && t <= LIMIT_T_MAX) {
        return Err(Error::InvalidInput(format!(
            "limit residuals need 0 < t <= {LIMIT_T_MAX}, got {t}"
        )));
    }
    let triple = undeformed_su2(spin)?;
    let gen = derive_generators(&build_standard(spin, t)?)?;
    let d = spin.dim();
    let id = RealMatrix::identity(d);
    Ok(LimitReport {
        t,
        s: rel_residual(&gen.s.scale(1.0 / t), &triple.s1)?,
        r: rel_residual(&(&gen.r - &id).scale(1.0 / t), &triple.r1)?,
        big_r: rel_residual(&(&gen.big_r - &id).scale(1.0 / t), &triple.h)?,
    })
}

/// One row of a halving table; `orders` compares with the previous row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub report: LimitReport,
    pub orders: Option<[f64; 3]>,
}

/// Residuals at `t_start / 2^k`, `k = 0..=halvings`, with observed orders
/// `log2(res(2t) / res(t))`.
pub fn convergence_table(spin: Spin, t_start: f64, halvings: usize) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(halvings + 1);
    let mut t = t_start;
    for _ in 0..=halvings {
        let report = limit_residuals(spin, t)?;
        let orders = rows.last().map(|prev| {
            let (a, b) = (prev.report.as_array(), report.as_array());
            [0, 1, 2].map(|i| (a[i] / b[i]).log2())
        });
        rows.push(ConvergenceRow { report, orders });
        t /= 2.0;
    }
    Ok(rows)
}
