//! Spin-l representation of SU_q(2) in the conventional basis where `J_z`
//! (and so `H = 2J_z`) is diagonal, the derived generators `T±`, `R`, `Q±`,
//! `s`, `r`, and the change of basis to the eigenbasis of `s`.

use crate::error::{Error, Result};
use crate::qcore::{
    commutator, cosh_m1, qnumber, rel_residual, Deformation, RealMatrix, Spin,
};

/// Constructor gate for the defining relations; exceeding it means a bug.
const BUILD_TOL: f64 = 1e-10;
const DERIVE_TOL: f64 = 1e-11;
const CASIMIR_SCALAR_TOL: f64 = 1e-10;
/// A pivot below this (relative to the shifted matrix scale) counts as zero.
const PIVOT_ZERO_TOL: f64 = 1e-11;

/// `H`, `J+`, `J-` for one spin and deformation.
#[derive(Debug, Clone)]
pub struct StandardRep {
    pub spin: Spin,
    pub deformation: Deformation,
    pub h: RealMatrix,
    pub jp: RealMatrix,
    pub jm: RealMatrix,
}

/// Generators derived from a [`StandardRep`]:
/// `T± = e^{Ht/4} J± e^{Ht/4}`, `R = e^{tH}`, `Q± = T± ± R/(2 sinh t)`,
/// `s = (Q+ + Q-) sinh t`, `r = (Q+ - Q-) sinh t`.
#[derive(Debug, Clone)]
pub struct DerivedGenerators {
    pub deformation: Deformation,
    pub tp: RealMatrix,
    pub tm: RealMatrix,
    /// The group-like generator `R = exp(tH)`.
    pub big_r: RealMatrix,
    pub qp: RealMatrix,
    pub qm: RealMatrix,
    pub s: RealMatrix,
    pub r: RealMatrix,
}

/// Change of basis to the eigenbasis of `s`. Column `j` of `u` is the
/// eigenvector for `sinh(t mu_j)`, so `u_inv * s * u` is diagonal in the
/// same row order as the triangular construction.
#[derive(Debug, Clone)]
pub struct BasisChange {
    pub u: RealMatrix,
    pub u_inv: RealMatrix,
}

impl BasisChange {
    /// `u_inv * m * u`.
    pub fn conjugate(&self, m: &RealMatrix) -> RealMatrix {
        &self.u_inv * m * &self.u
    }

    /// `u * m * u_inv`, the inverse of [`BasisChange::conjugate`].
    pub fn unconjugate(&self, m: &RealMatrix) -> RealMatrix {
        &self.u * m * &self.u_inv
    }
}

/// Builds `H`, `J±` with the symmetric q-deformed matrix elements
/// `(J+)_{j,j+1} = sqrt([l - m_{j+1}] [l + m_{j+1} + 1])` and verifies
/// `[H, J±] = ±2 J±` and `[J+, J-] = sinh(tH) / sinh t` before returning.
pub fn build_standard(spin: Spin, t: f64) -> Result<StandardRep> {
    let deformation = Deformation::new(t)?;
    deformation.check_guard_rail(spin)?;
    let rep = build_unchecked(spin, deformation);
    rep.verify(BUILD_TOL)?;
    Ok(rep)
}

pub(crate) fn build_unchecked(spin: Spin, deformation: Deformation) -> StandardRep {
    let d = spin.dim();
    let t = deformation.t();
    let l = spin.l();
    let m = spin.magnetic();
    let h = RealMatrix::from_diagonal(&spin.weights().iter().map(|&w| w as f64).collect::<Vec<_>>());
    let mut jp = RealMatrix::zeros(d);
    for j in 0..d.saturating_sub(1) {
        let mm = m[j + 1];
        let elem = (qnumber(l - mm, t) * qnumber(l + mm + 1.0, t)).sqrt();
        jp.set(j, j + 1, elem);
    }
    let jm = jp.transpose();
    StandardRep {
        spin,
        deformation,
        h,
        jp,
        jm,
    }
}

impl StandardRep {
    /// Residuals of `[H, J+] = 2J+`, `[H, J-] = -2J-` and
    /// `[J+, J-] = sinh(tH)/sinh t`.
    pub fn relation_residuals(&self) -> [f64; 3] {
        let t = self.deformation.t();
        let hp = commutator(&self.h, &self.jp).expect("same dim");
        let hm = commutator(&self.h, &self.jm).expect("same dim");
        let pm = commutator(&self.jp, &self.jm).expect("same dim");
        let target = RealMatrix::from_diagonal(
            &self
                .h
                .diagonal()
                .iter()
                .map(|&x| qnumber(x, t))
                .collect::<Vec<_>>(),
        );
        [
            rel_residual(&hp, &self.jp.scale(2.0)).expect("same dim"),
            rel_residual(&hm, &self.jm.scale(-2.0)).expect("same dim"),
            rel_residual(&pm, &target).expect("same dim"),
        ]
    }

    fn verify(&self, tol: f64) -> Result<()> {
        let names = ["[H, J+] = 2J+", "[H, J-] = -2J-", "[J+, J-] = sinh(tH)/sinh t"];
        for (name, res) in names.iter().zip(self.relation_residuals()) {
            if res > tol {
                return Err(Error::Verification {
                    relation: name,
                    residual: res,
                    tol,
                });
            }
        }
        Ok(())
    }

    /// `exp(c H)` as a diagonal matrix.
    pub fn exp_h(&self, c: f64) -> RealMatrix {
        RealMatrix::from_diagonal(
            &self.h.diagonal().iter().map(|&x| (c * x).exp()).collect::<Vec<_>>(),
        )
    }
}

/// Residuals of the `R`-form relations:
/// `R T+ = e^{2t} T+ R`, `R T- = e^{-2t} T- R`,
/// `e^t T+T- - e^{-t} T-T+ = (R^2 - 1)/(2 sinh t)`.
///
/// `r_sq_minus_one` is passed separately so callers holding an exact
/// `R^2 - 1` (diagonal `expm1`) avoid cancellation at small `t`.
pub fn r_form_residuals(
    deformation: Deformation,
    tp: &RealMatrix,
    tm: &RealMatrix,
    big_r: &RealMatrix,
    r_sq_minus_one: &RealMatrix,
) -> [f64; 3] {
    let t = deformation.t();
    let plus = rel_residual(&(big_r * tp), &(tp * big_r).scale((2.0 * t).exp())).expect("dim");
    let minus = rel_residual(&(big_r * tm), &(tm * big_r).scale((-2.0 * t).exp())).expect("dim");
    // Compared as e^t T+T- = e^{-t} T-T+ + (...) so the residual is measured
    // against the size of the products, not of their difference.
    let lhs = (tp * tm).scale(t.exp());
    let rhs = (tm * tp).scale((-t).exp()) + r_sq_minus_one.scale(0.5 / deformation.sinh());
    let qcomm = rel_residual(&lhs, &rhs).expect("dim");
    [plus, minus, qcomm]
}

/// Derives `T±`, `R`, `Q±`, `s`, `r` and checks the `R`-form relations.
pub fn derive_generators(rep: &StandardRep) -> Result<DerivedGenerators> {
    let gen = derive_unchecked(rep);
    let r2m1 = RealMatrix::from_diagonal(
        &rep.h
            .diagonal()
            .iter()
            .map(|&x| (2.0 * rep.deformation.t() * x).exp_m1())
            .collect::<Vec<_>>(),
    );
    let names = [
        "R T+ = e^{2t} T+ R",
        "R T- = e^{-2t} T- R",
        "e^t T+T- - e^-t T-T+ = (R^2-1)/(2 sinh t)",
    ];
    let res = r_form_residuals(gen.deformation, &gen.tp, &gen.tm, &gen.big_r, &r2m1);
    for (name, res) in names.iter().zip(res) {
        if res > DERIVE_TOL {
            return Err(Error::Verification {
                relation: name,
                residual: res,
                tol: DERIVE_TOL,
            });
        }
    }
    Ok(gen)
}

pub(crate) fn derive_unchecked(rep: &StandardRep) -> DerivedGenerators {
    let def = rep.deformation;
    let t = def.t();
    let quarter = rep.exp_h(t / 4.0);
    let tp = &quarter * &rep.jp * &quarter;
    let tm = &quarter * &rep.jm * &quarter;
    let big_r = rep.exp_h(t);
    let half_r = big_r.scale(0.5 / def.sinh());
    let qp = &tp + &half_r;
    let qm = &tm - &half_r;
    let s = (&tp + &tm).scale(def.sinh());
    let r = (&tp - &tm).scale(def.sinh()) + &big_r;
    DerivedGenerators {
        deformation: def,
        tp,
        tm,
        big_r,
        qp,
        qm,
        s,
        r,
    }
}

impl DerivedGenerators {
    /// Residual of `e^t Q+Q- - e^{-t} Q-Q+ = -1/(2 sinh t)`, measured as
    /// `e^t Q+Q- = e^{-t} Q-Q+ - 1/(2 sinh t)`.
    pub fn q_relation_residual(&self) -> f64 {
        let def = self.deformation;
        let t = def.t();
        let lhs = (&self.qp * &self.qm).scale(t.exp());
        let rhs = (&self.qm * &self.qp).scale((-t).exp())
            - RealMatrix::identity(self.s.dim()).scale(0.5 / def.sinh());
        rel_residual(&lhs, &rhs).expect("dim")
    }
}

/// Casimir value `c` where
/// `C = J+J- + J-J+ + (cosh t / sinh^2 t)(cosh(tH) - 1) = c I`.
pub fn casimir_value(rep: &StandardRep) -> Result<f64> {
    let def = rep.deformation;
    let t = def.t();
    let coeff = def.cosh() / (def.sinh() * def.sinh());
    let tail = RealMatrix::from_diagonal(
        &rep.h
            .diagonal()
            .iter()
            .map(|&x| coeff * cosh_m1(t * x))
            .collect::<Vec<_>>(),
    );
    let c_mat = &rep.jp * &rep.jm + &rep.jm * &rep.jp + tail;
    let diag = c_mat.diagonal();
    let c = diag.iter().sum::<f64>() / diag.len() as f64;
    let res = rel_residual(&c_mat, &RealMatrix::identity(diag.len()).scale(c))?;
    if res > CASIMIR_SCALAR_TOL {
        return Err(Error::Verification {
            relation: "Casimir is scalar",
            residual: res,
            tol: CASIMIR_SCALAR_TOL,
        });
    }
    Ok(c)
}

/// Null vector of `a` by Gaussian elimination with complete pivoting.
/// Errors unless exactly one pivot vanishes.
fn null_vector(a: &RealMatrix, eigenvalue: f64) -> Result<Vec<f64>> {
    let n = a.dim();
    let mut m = a.to_rows();
    let mut cols: Vec<usize> = (0..n).collect();
    let scale = 1.0 + a.max_abs();
    let mut rank = n;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, -1.0);
        for (i, row) in m.iter().enumerate().skip(k) {
            for (j, &x) in row.iter().enumerate().skip(k) {
                if x.abs() > best {
                    best = x.abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= PIVOT_ZERO_TOL * scale {
            rank = k;
            break;
        }
        m.swap(k, pi);
        for row in m.iter_mut() {
            row.swap(k, pj);
        }
        cols.swap(k, pj);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
    }
    let nullity = n - rank;
    if nullity != 1 {
        return Err(Error::EigenvalueClaim {
            eigenvalue,
            nullity,
        });
    }
    // Permuted unknowns y with y[n-1] = 1; back-substitute the upper block.
    let mut y = vec![0.0; n];
    y[n - 1] = 1.0;
    for k in (0..n - 1).rev() {
        let acc: f64 = (k + 1..n).map(|j| m[k][j] * y[j]).sum();
        y[k] = -acc / m[k][k];
    }
    let mut x = vec![0.0; n];
    for (k, &c) in cols.iter().enumerate() {
        x[c] = y[k];
    }
    Ok(x)
}

/// Eigenvectors of `s` for the known eigenvalues `sinh(t mu_j)`, one
/// shifted elimination per eigenvalue. Columns are scaled so their first
/// significant component (above `1e-12` of the column maximum) is 1.
pub fn s_eigenbasis(gen: &DerivedGenerators, spin: Spin) -> Result<BasisChange> {
    let cols = eigenvectors(gen, spin)?
        .into_iter()
        .map(|mut v| {
            let max = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            let lead = *v
                .iter()
                .find(|x| x.abs() > 1e-12 * max)
                .expect("non-zero eigenvector");
            v.iter_mut().for_each(|x| *x /= lead);
            v
        })
        .collect::<Vec<_>>();
    let u = RealMatrix::from_fn(spin.dim(), |i, j| cols[j][i]);
    let u_inv = u
        .inverse()
        .ok_or(Error::EigenvalueClaim {
            eigenvalue: f64::NAN,
            nullity: 0,
        })?;
    Ok(BasisChange { u, u_inv })
}

/// Orthonormal eigenbasis of the symmetric `s` (unit columns, inverse is
/// the transpose). Column signs are chosen so that the conjugated `r` has a
/// non-negative subdiagonal.
pub fn s_eigenbasis_orthonormal(gen: &DerivedGenerators, spin: Spin) -> Result<BasisChange> {
    let d = spin.dim();
    let mut cols = eigenvectors(gen, spin)?;
    for v in cols.iter_mut() {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let mut u = RealMatrix::from_fn(d, |i, j| cols[j][i]);
    let conj = &u.transpose() * &gen.r * &u;
    let mut sign = vec![1.0; d];
    for j in 1..d {
        let sub = conj.get(j, j - 1) * sign[j - 1];
        sign[j] = if sub < 0.0 { -1.0 } else { 1.0 };
    }
    u = RealMatrix::from_fn(d, |i, j| u.get(i, j) * sign[j]);
    let u_inv = u.transpose();
    Ok(BasisChange { u, u_inv })
}

fn eigenvectors(gen: &DerivedGenerators, spin: Spin) -> Result<Vec<Vec<f64>>> {
    let d = spin.dim();
    let t = gen.deformation.t();
    spin.weights()
        .into_iter()
        .map(|w| {
            let lambda = (t * w as f64).sinh();
            let shifted = &gen.s - &RealMatrix::identity(d).scale(lambda);
            null_vector(&shifted, lambda)
        })
        .collect()
}

/// Predicted spectrum `sinh(t mu_j)` of `s`, in row order.
pub fn predicted_s_spectrum(spin: Spin, t: f64) -> Vec<f64> {
    spin.weights().into_iter().map(|w| (t * w as f64).sinh()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spin_half_matrices() {
        let rep = build_standard(Spin::new(1), 0.3).unwrap();
        assert_eq!(rep.h, RealMatrix::from_diagonal(&[1.0, -1.0]));
        assert_eq!(
            rep.jp,
            RealMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap()
        );
        for t in [0.05, 0.3, 1.0, -0.7] {
            let rep = build_standard(Spin::new(1), t).unwrap();
            assert!(rep.relation_residuals()[2] <= 1e-14);
        }
    }

    #[test]
    fn spin_one_superdiagonal() {
        for t in [0.1_f64, 0.6] {
            let rep = build_standard(Spin::new(2), t).unwrap();
            let expected = (2.0 * f64::cosh(t)).sqrt();
            assert_relative_eq!(rep.jp.get(0, 1), expected, max_relative = 1e-15);
            assert_relative_eq!(rep.jp.get(1, 2), expected, max_relative = 1e-15);
            assert!(rep.relation_residuals().iter().all(|&r| r <= 1e-14));
        }
    }

    #[test]
    fn spin_half_derived() {
        let t: f64 = 0.4;
        let rep = build_standard(Spin::new(1), t).unwrap();
        let gen = derive_generators(&rep).unwrap();
        assert!(rel_residual(&gen.tp, &rep.jp).unwrap() < 1e-16);
        assert!(rel_residual(&gen.big_r, &RealMatrix::from_diagonal(&[t.exp(), (-t).exp()])).unwrap() < 1e-16);
        let expected_s = (&rep.jp + &rep.jm).scale(t.sinh());
        assert!(rel_residual(&gen.s, &expected_s).unwrap() < 1e-16);
        let mut ev: Vec<f64> = gen.s.eigenvalues().into_iter().map(|z| z.0).collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_relative_eq!(ev[0], t.sinh(), max_relative = 1e-14);
        assert_relative_eq!(ev[1], -t.sinh(), max_relative = 1e-14);
    }

    #[test]
    fn q_relation_holds() {
        for two_l in 0..=10 {
            for t in [0.05, 0.3, 1.0] {
                let rep = build_standard(Spin::new(two_l), t).unwrap();
                let gen = derive_generators(&rep).unwrap();
                assert!(gen.q_relation_residual() <= 1e-11, "two_l={two_l} t={t}");
                assert_eq!(
                    &gen.qp + &gen.qm,
                    &gen.tp + &gen.tm,
                    "Q+ + Q- = T+ + T-"
                );
            }
        }
    }

    #[test]
    fn casimir_spin_half_and_one() {
        for t in [0.1_f64, 0.5, 1.2] {
            let sh2 = t.sinh().powi(2);
            let c = casimir_value(&build_standard(Spin::new(1), t).unwrap()).unwrap();
            assert_relative_eq!(c * sh2, 2.0 * (1.5 * t).sinh() * (0.5 * t).sinh(), max_relative = 1e-13);
            let c = casimir_value(&build_standard(Spin::new(2), t).unwrap()).unwrap();
            assert_relative_eq!(c * sh2, (3.0 * t).cosh() - t.cosh(), max_relative = 1e-13);
            assert_relative_eq!(c * sh2, 2.0 * (2.0 * t).sinh() * t.sinh(), max_relative = 1e-13);
        }
    }

    #[test]
    fn casimir_small_t_limit() {
        // c = 2l(l+1) + O(t^2); the t^2 coefficient is bounded by l^4 for these spins.
        for two_l in 0..=8 {
            let spin = Spin::new(two_l);
            let c = casimir_value(&build_standard(spin, 1e-6).unwrap()).unwrap();
            assert!((c - spin.classical_casimir()).abs() < 1e-9, "two_l={two_l}: {c}");
        }
    }

    #[test]
    fn eigenbasis_spectra() {
        for (two_l, t) in [(1, 0.3), (2, 0.3), (5, 0.8), (12, 0.2)] {
            let spin = Spin::new(two_l);
            let gen = derive_generators(&build_standard(spin, t).unwrap()).unwrap();
            let bc = s_eigenbasis(&gen, spin).unwrap();
            let diag = bc.conjugate(&gen.s);
            let expected = RealMatrix::from_diagonal(&predicted_s_spectrum(spin, t));
            assert!(rel_residual(&diag, &expected).unwrap() <= 1e-9);
            assert!(rel_residual(&(&bc.u * &bc.u_inv), &RealMatrix::identity(spin.dim())).unwrap() <= 1e-10);
            for j in 0..spin.dim() {
                let col: Vec<f64> = (0..spin.dim()).map(|i| bc.u.get(i, j)).collect();
                let lead = col.iter().find(|x| x.abs() > 0.0).unwrap();
                assert_eq!(*lead, 1.0);
            }
        }
    }

    #[test]
    fn wrong_eigenvalue_is_rejected() {
        let spin = Spin::new(2);
        let gen = derive_generators(&build_standard(spin, 0.3).unwrap()).unwrap();
        let shifted = &gen.s - &RealMatrix::identity(3).scale(0.123);
        assert!(matches!(
            null_vector(&shifted, 0.123),
            Err(Error::EigenvalueClaim { nullity: 0, .. })
        ));
    }

    #[test]
    fn conjugated_r_is_lower_triangular() {
        for (two_l, t) in [(1, 0.3), (2, 0.5), (6, 0.2), (9, -0.4)] {
            let spin = Spin::new(two_l);
            let gen = derive_generators(&build_standard(spin, t).unwrap()).unwrap();
            for bc in [s_eigenbasis(&gen, spin).unwrap(), s_eigenbasis_orthonormal(&gen, spin).unwrap()] {
                let rc = bc.conjugate(&gen.r);
                assert!(rc.max_abs_upper() <= 1e-9 * (1.0 + rc.max_abs()));
                for (j, w) in spin.weights().into_iter().enumerate() {
                    assert_relative_eq!(rc.get(j, j), (t * w as f64).cosh(), max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn guard_rail_enforced() {
        assert!(matches!(build_standard(Spin::new(30), 1.0), Err(Error::GuardRail { .. })));
        assert!(matches!(build_standard(Spin::new(2), 0.0), Err(Error::InvalidDeformation(_))));
    }
}
