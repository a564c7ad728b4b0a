//! The group-like generator `R = exp(tH)` rebuilt from the pair `(s, r)`.
//!
//! With `K = cosh t (C sinh^2 t + (1 - r) cosh t + s sinh t)` the Casimir
//! relation reads `R K = (s^2 - r^2 + 1)/2`. `K` is lower triangular in the
//! triangular realisation, so the equation is solvable only when a diagonal
//! pivot of `K` vanishes; the corresponding values of `C` are the admissible
//! Casimirs. The solutions form an affine family; its free weights are fixed
//! by the spectral conditions `Tr R^k = sum_m e^{2tkm}` together with the
//! intertwining relations `R T± = e^{±2t} T± R`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::qcore::{
    balanced_residual, frobenius_dot, product_residual, rel_residual, spectrum_residual, Deformation, RealMatrix,
    Spin,
};
use crate::standard_rep::{
    build_standard, derive_generators, r_form_residuals, s_eigenbasis_orthonormal, BasisChange,
    DerivedGenerators,
};
use crate::triangular_rep::{
    extract_and_check_alphas, triangular_pair, AlphaParams, SRPair,
};

/// A diagonal pivot of `K` counts as zero below this, relative to
/// `1 + max|K|`. Also the consistency tolerance of singular rows.
pub const PIVOT_TOL: f64 = 1e-10;
pub const MAX_NEWTON_ITER: usize = 100;
/// Largest stacked residual accepted from the spectral fix.
pub const NEWTON_ACCEPT: f64 = 1e-9;

/// One admissible value of the Casimir.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirChoice {
    pub value: f64,
    /// `n` in `C sinh^2 t = cosh(nt) - cosh t`.
    pub n: u32,
    /// 0-based rows whose `K` pivot vanishes for this value.
    pub vanishing: Vec<usize>,
    /// Whether this is the value taken in the irreducible representation.
    pub physical: bool,
}

/// Solutions of `R K = rhs`: `particular + sum_{row, k} w[row * nullity + k]
/// e_row null_vectors[k]^T`. The particular solution vanishes at the
/// singular pivot columns and each null vector is 1 at its own pivot, so for
/// a single pivot `p` the weight of row `j` is just `R[j][p]`.
#[derive(Debug, Clone)]
pub struct RFamily {
    pub particular: RealMatrix,
    pub null_vectors: Vec<Vec<f64>>,
    pub pivots: Vec<usize>,
    pub w: Option<Vec<f64>>,
}

impl RFamily {
    pub fn dim(&self) -> usize {
        self.particular.dim()
    }

    pub fn nullity(&self) -> usize {
        self.null_vectors.len()
    }

    /// Number of free weights, `dim * nullity`.
    pub fn weight_count(&self) -> usize {
        self.dim() * self.nullity()
    }

    /// Basis matrices `N` of the homogeneous solutions, in weight order.
    pub fn freedoms(&self) -> Vec<RealMatrix> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.weight_count());
        for row in 0..d {
            for v in &self.null_vectors {
                out.push(RealMatrix::from_fn(d, |i, j| if i == row { v[j] } else { 0.0 }));
            }
        }
        out
    }

    /// The family member with weights `w`.
    pub fn member(&self, w: &[f64]) -> Result<RealMatrix> {
        if w.len() != self.weight_count() {
            return Err(Error::InvalidInput(format!(
                "family has {} weights, got {}",
                self.weight_count(),
                w.len()
            )));
        }
        let d = self.dim();
        let n = self.nullity();
        let mut r = self.particular.clone();
        for row in 0..d {
            for (k, v) in self.null_vectors.iter().enumerate() {
                let wk = w[row * n + k];
                for (j, vj) in v.iter().enumerate() {
                    r.set(row, j, r.get(row, j) + wk * vj);
                }
            }
        }
        Ok(r)
    }

    /// The member with the stored weights, if fixed.
    pub fn fixed(&self) -> Option<RealMatrix> {
        self.w.as_ref().and_then(|w| self.member(w).ok())
    }

    /// Least-squares weights of an arbitrary matrix, row by row.
    pub fn project(&self, m: &RealMatrix) -> Vec<f64> {
        let d = self.dim();
        let n = self.nullity();
        if n == 0 {
            return Vec::new();
        }
        let basis = DMatrix::from_fn(d, n, |i, k| self.null_vectors[k][i]);
        let svd = basis.svd(true, true);
        let mut w = vec![0.0; d * n];
        for row in 0..d {
            let diff = DVector::from_fn(d, |j, _| m.get(row, j) - self.particular.get(row, j));
            let sol = svd.solve(&diff, 0.0).expect("svd with u and v");
            for k in 0..n {
                w[row * n + k] = sol[k];
            }
        }
        w
    }
}

/// `K = cosh t (C sinh^2 t I + (I - r) cosh t + s sinh t)`.
pub fn build_k(sr: &SRPair, casimir: f64) -> RealMatrix {
    let def = sr.deformation;
    let (sh, ch) = (def.sinh(), def.cosh());
    let d = sr.s.dim();
    let id = RealMatrix::identity(d);
    let inner = id.scale(casimir * sh * sh) + (&id - &sr.r).scale(ch) + sr.s.scale(sh);
    inner.scale(ch)
}

/// `(s^2 - r^2 + 1)/2`, the right side of `R K = rhs`.
pub fn casimir_rhs(sr: &SRPair) -> RealMatrix {
    sr.delta().scale(0.5)
}

/// Entrywise magnitude of the terms summed into [`casimir_rhs`],
/// `(|s||s| + |r||r| + 1)/2`. Consistency checks on `rhs` are relative to
/// it, since entries such as the diagonal vanish by cancellation.
pub fn casimir_rhs_scale(sr: &SRPair) -> RealMatrix {
    let d = sr.s.dim();
    let abs = |m: &RealMatrix| RealMatrix::from_fn(d, |i, j| m.get(i, j).abs());
    let (s, r) = (abs(&sr.s), abs(&sr.r));
    (&s * &s + &r * &r + RealMatrix::identity(d)).scale(0.5)
}

/// `C_n sinh^2 t = cosh(nt) - cosh t = 2 sinh((n+1)t/2) sinh((n-1)t/2)`.
fn casimir_from_n(n: u32, def: Deformation) -> f64 {
    let t = def.t();
    let n = f64::from(n);
    2.0 * ((n + 1.0) * t / 2.0).sinh() * ((n - 1.0) * t / 2.0).sinh() / (def.sinh() * def.sinh())
}

/// Casimir of the irreducible representation,
/// `C sinh^2 t = 2 sinh(tl) sinh(t(l+1))`.
pub fn physical_casimir(spin: Spin, t: f64) -> Result<f64> {
    let def = Deformation::new(t)?;
    Ok(casimir_from_n(spin.two_l() + 1, def))
}

/// All `C` making one or more pivots of `K` vanish in the triangular
/// realisation. Pivot `j` vanishes for `n_j = |2l + 1 - 2j|`; rows with
/// equal `n_j` share one value.
pub fn admissible_casimirs(spin: Spin, t: f64) -> Result<Vec<CasimirChoice>> {
    let def = Deformation::new(t)?;
    let two_l = i64::from(spin.two_l());
    let mut out: Vec<CasimirChoice> = Vec::new();
    for j0 in 0..spin.dim() {
        let n = (two_l - 1 - 2 * j0 as i64).unsigned_abs() as u32;
        match out.iter_mut().find(|c| c.n == n) {
            Some(c) => c.vanishing.push(j0),
            None => out.push(CasimirChoice {
                value: casimir_from_n(n, def),
                n,
                vanishing: vec![j0],
                physical: n == spin.two_l() + 1,
            }),
        }
    }
    Ok(out)
}

/// Unknowns of one row as affine functions of the free parameters.
#[derive(Clone)]
struct Affine {
    c: f64,
    g: Vec<f64>,
}

/// Solves `rho K = b` for a lower-triangular `K` by substitution from the
/// last column, introducing a parameter at every vanishing pivot and
/// eliminating one whenever a singular column constrains earlier choices.
fn solve_row(
    k: &RealMatrix,
    b: &[f64],
    b_scale: &[f64],
    zero: &[bool],
) -> std::result::Result<(Vec<f64>, Vec<Vec<f64>>), (usize, f64)> {
    let d = k.dim();
    let params = zero.iter().filter(|z| **z).count();
    let mut rho: Vec<Affine> = vec![
        Affine {
            c: 0.0,
            g: vec![0.0; params],
        };
        d
    ];
    let mut alive = vec![false; params];
    let mut next = 0;
    for j in (0..d).rev() {
        let mut e = Affine {
            c: b[j],
            g: vec![0.0; params],
        };
        let mut scale_c = b_scale[j].max(b[j].abs());
        let mut scale_g = 0.0_f64;
        for i in j + 1..d {
            let kij = k.get(i, j);
            e.c -= rho[i].c * kij;
            scale_c += (rho[i].c * kij).abs();
            for f in 0..params {
                e.g[f] -= rho[i].g[f] * kij;
                scale_g = scale_g.max((rho[i].g[f] * kij).abs());
            }
        }
        if !zero[j] {
            let p = k.get(j, j);
            rho[j] = Affine {
                c: e.c / p,
                g: e.g.iter().map(|x| x / p).collect(),
            };
            continue;
        }
        // Singular column: e.c + e.g . theta = 0 must hold.
        let (fstar, gmax) = e
            .g
            .iter()
            .enumerate()
            .filter(|(f, _)| alive[*f])
            .fold((usize::MAX, 0.0_f64), |acc, (f, x)| {
                if x.abs() > acc.1 {
                    (f, x.abs())
                } else {
                    acc
                }
            });
        if fstar == usize::MAX || gmax <= PIVOT_TOL * (1.0 + scale_g) {
            if e.c.abs() > PIVOT_TOL * (1.0 + scale_c) {
                return Err((j, e.c));
            }
        } else {
            let gf = e.g[fstar];
            let shift_c = -e.c / gf;
            let shift_g: Vec<f64> = e.g.iter().map(|x| -x / gf).collect();
            for r in rho.iter_mut().skip(j + 1) {
                let coeff = r.g[fstar];
                if coeff == 0.0 {
                    continue;
                }
                r.c += coeff * shift_c;
                for f in 0..params {
                    if f != fstar {
                        r.g[f] += coeff * shift_g[f];
                    }
                }
                r.g[fstar] = 0.0;
            }
            alive[fstar] = false;
        }
        let mut g = vec![0.0; params];
        g[next] = 1.0;
        alive[next] = true;
        next += 1;
        rho[j] = Affine { c: 0.0, g };
    }
    let consts = rho.iter().map(|a| a.c).collect();
    let gens = (0..params)
        .filter(|&f| alive[f])
        .map(|f| rho.iter().map(|a| a.g[f]).collect())
        .collect();
    Ok((consts, gens))
}

/// Diagonal pivots of `K` that count as zero.
pub fn vanishing_pivots(k: &RealMatrix) -> Vec<usize> {
    let tol = PIVOT_TOL * (1.0 + k.max_abs());
    (0..k.dim()).filter(|&j| k.get(j, j).abs() <= tol).collect()
}

/// All solutions of `R K = rhs` for lower-triangular `K` with at least one
/// vanishing pivot; consistency is judged relative to `|rhs|`.
pub fn solve_r_family(k: &RealMatrix, rhs: &RealMatrix) -> Result<RFamily> {
    let d = rhs.dim();
    let scale = RealMatrix::from_fn(d, |i, j| rhs.get(i, j).abs());
    solve_r_family_scaled(k, rhs, &scale)
}

/// [`solve_r_family`] for `R K = (s^2 - r^2 + 1)/2` of a pair, with
/// consistency judged against [`casimir_rhs_scale`].
pub fn solve_casimir_family(sr: &SRPair, k: &RealMatrix) -> Result<RFamily> {
    solve_r_family_scaled(k, &casimir_rhs(sr), &casimir_rhs_scale(sr))
}

/// [`solve_r_family`] with an entrywise magnitude `rhs_scale` of the terms
/// that produced `rhs`.
pub fn solve_r_family_scaled(k: &RealMatrix, rhs: &RealMatrix, rhs_scale: &RealMatrix) -> Result<RFamily> {
    let d = k.dim();
    for m in [rhs, rhs_scale] {
        if m.dim() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: m.dim(),
            });
        }
    }
    let scale = 1.0 + k.max_abs();
    for i in 0..d {
        for j in i + 1..d {
            if k.get(i, j).abs() > PIVOT_TOL * scale {
                return Err(Error::NotTriangular { row: i, col: j });
            }
        }
    }
    let pivots = vanishing_pivots(k);
    if pivots.is_empty() {
        return Err(Error::NoSingularPivot);
    }
    let zero: Vec<bool> = (0..d).map(|j| pivots.contains(&j)).collect();
    let mut particular = RealMatrix::zeros(d);
    let mut null_vectors = Vec::new();
    for row in 0..d {
        let b: Vec<f64> = (0..d).map(|j| rhs.get(row, j)).collect();
        let b_scale: Vec<f64> = (0..d).map(|j| rhs_scale.get(row, j)).collect();
        let (consts, gens) =
            solve_row(k, &b, &b_scale, &zero).map_err(|(pivot, mismatch)| Error::NoSolution {
                row,
                pivot,
                mismatch,
            })?;
        for (j, c) in consts.into_iter().enumerate() {
            particular.set(row, j, c);
        }
        if row == 0 {
            null_vectors = gens;
        }
    }
    Ok(RFamily {
        particular,
        null_vectors,
        pivots,
        w: None,
    })
}

/// Output of [`fix_r_by_spectrum`].
#[derive(Debug, Clone)]
pub struct FixedR {
    /// `R` in the gauge of the caller's pair.
    pub r: RealMatrix,
    /// Weights of `r` in the caller's family.
    pub weights: Vec<f64>,
    /// `R` in the orthonormal eigenbasis of `s` (the natural gauge).
    pub natural_r: RealMatrix,
    /// Subdiagonal of `r` in the natural gauge.
    pub natural_alphas: Vec<f64>,
    /// Diagonal `D` with `R = D natural_r D^{-1}`.
    pub gauge: Vec<f64>,
    pub iterations: usize,
    /// Largest entry of the stacked residual at the solution.
    pub residual: f64,
}

/// `T± = (s ± r ∓ R) / (2 sinh t)`.
pub fn ladder_from_r(s: &RealMatrix, r: &RealMatrix, big_r: &RealMatrix, def: Deformation) -> (RealMatrix, RealMatrix) {
    let k = 0.5 / def.sinh();
    let tp = (s + r - big_r).scale(k);
    let tm = (s - r + big_r).scale(k);
    (tp, tm)
}

/// Power sums `sum_j e^{k t mu_j}` of the target spectrum, `k = 1..=d`.
fn trace_targets(spin: Spin, t: f64) -> Vec<f64> {
    (1..=spin.dim())
        .map(|k| spin.weights().iter().map(|&w| (k as f64 * t * w as f64).exp()).sum())
        .collect()
}

/// Stacked residual (scaled trace conditions, then the three intertwining
/// relations scaled by `(1 + max|R|)^-2`) and its Jacobian in the weights
/// of a single-pivot family.
struct SpectralSystem<'a> {
    s: &'a RealMatrix,
    r: &'a RealMatrix,
    def: Deformation,
    family: &'a RFamily,
    targets: Vec<f64>,
}

impl SpectralSystem<'_> {
    fn residual(&self, big_r: &RealMatrix, scale: f64) -> DVector<f64> {
        let d = big_r.dim();
        let t = self.def.t();
        let mut out = Vec::with_capacity(d + 3 * d * d);
        let mut p = RealMatrix::identity(d);
        for target in &self.targets {
            p = &p * big_r;
            out.push((p.trace() - target) / target);
        }
        let (tp, tm) = ladder_from_r(self.s, self.r, big_r, self.def);
        let ep = big_r * &tp - (&tp * big_r).scale((2.0 * t).exp());
        let em = big_r * &tm - (&tm * big_r).scale((-2.0 * t).exp());
        let q = (&tp * &tm).scale(t.exp())
            - (&tm * &tp).scale((-t).exp())
            - (big_r * big_r - RealMatrix::identity(d)).scale(0.5 / self.def.sinh());
        for m in [ep, em, q] {
            out.extend(m.as_dmatrix().iter().map(|x| x * scale));
        }
        DVector::from_vec(out)
    }

    fn jacobian(&self, big_r: &RealMatrix, scale: f64) -> DMatrix<f64> {
        let d = big_r.dim();
        let t = self.def.t();
        let v = &self.family.null_vectors[0];
        let rows = d + 3 * d * d;
        let mut jac = DMatrix::zeros(rows, d);
        let (tp, tm) = ladder_from_r(self.s, self.r, big_r, self.def);
        let mut powers = vec![RealMatrix::identity(d)];
        for _ in 1..d {
            let next = powers.last().expect("non-empty") * big_r;
            powers.push(next);
        }
        let k = 0.5 / self.def.sinh();
        for col in 0..d {
            let dr = RealMatrix::from_fn(d, |i, j| if i == col { v[j] } else { 0.0 });
            for (kk, target) in self.targets.iter().enumerate() {
                let vp: f64 = (0..d).map(|i| v[i] * powers[kk].get(i, col)).sum();
                jac[(kk, col)] = (kk as f64 + 1.0) * vp / target;
            }
            let dtp = dr.scale(-k);
            let dtm = dr.scale(k);
            let dep = &dr * &tp + big_r * &dtp - (&dtp * big_r + &tp * &dr).scale((2.0 * t).exp());
            let dem = &dr * &tm + big_r * &dtm - (&dtm * big_r + &tm * &dr).scale((-2.0 * t).exp());
            let dq = (&dtp * &tm + &tp * &dtm).scale(t.exp())
                - (&dtm * &tp + &tm * &dtp).scale((-t).exp())
                - (&dr * big_r + big_r * &dr).scale(0.5 / self.def.sinh());
            for (block, m) in [dep, dem, dq].iter().enumerate() {
                for (idx, x) in m.as_dmatrix().iter().enumerate() {
                    jac[(d + block * d * d + idx, col)] = x * scale;
                }
            }
        }
        jac
    }
}

/// Damped Gauss-Newton on a single-pivot family. Returns the weights, the
/// iteration count and the final max-residual.
fn gauss_newton(sys: &SpectralSystem<'_>, w0: Vec<f64>) -> Result<(Vec<f64>, usize, f64)> {
    let mut w = DVector::from_vec(w0);
    let member = |w: &DVector<f64>| sys.family.member(w.as_slice()).expect("weight count");
    let mut big_r = member(&w);
    let mut scale = (1.0 + big_r.max_abs()).powi(-2);
    let mut res = sys.residual(&big_r, scale);
    let mut iterations = 0;
    while iterations < MAX_NEWTON_ITER {
        iterations += 1;
        let jac = sys.jacobian(&big_r, scale);
        let svd = jac.svd(true, true);
        let cut = 1e-13 * svd.singular_values.max();
        let step = svd
            .solve(&(-&res), cut)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut lambda = 1.0;
        let norm0 = res.norm();
        let mut accepted = None;
        while lambda >= 1.0 / 1024.0 {
            let trial = &w + &step * lambda;
            let r_trial = member(&trial);
            let res_trial = sys.residual(&r_trial, scale);
            if res_trial.norm() < norm0 {
                accepted = Some((trial, r_trial));
                break;
            }
            lambda *= 0.5;
        }
        let Some((trial, r_trial)) = accepted else {
            break;
        };
        let small = step.amax() * lambda <= 1e-15 * (1.0 + w.amax());
        w = trial;
        big_r = r_trial;
        scale = (1.0 + big_r.max_abs()).powi(-2);
        res = sys.residual(&big_r, scale);
        if small {
            break;
        }
    }
    let residual = res.amax();
    if !residual.is_finite() || residual > NEWTON_ACCEPT {
        return Err(Error::NonConvergence {
            iterations,
            residual,
        });
    }
    Ok((w.as_slice().to_vec(), iterations, residual))
}

/// The caller's alphas, read from the pair if not stored on it.
fn pair_alphas(sr: &SRPair) -> Result<AlphaParams> {
    match &sr.alphas {
        Some(a) => Ok(a.clone()),
        None => extract_and_check_alphas(&sr.r, sr.spin, sr.t()),
    }
}

/// The natural-gauge pair: the triangular pair whose alphas are the
/// subdiagonal of the standard `r` in the orthonormal `s`-eigenbasis, the
/// basis itself and the standard generators.
pub struct NaturalGauge {
    pub pair: SRPair,
    pub basis: BasisChange,
    pub generators: DerivedGenerators,
}

pub fn natural_gauge(spin: Spin, t: f64) -> Result<NaturalGauge> {
    let rep = build_standard(spin, t)?;
    let generators = derive_generators(&rep)?;
    let basis = s_eigenbasis_orthonormal(&generators, spin)?;
    let conj = basis.conjugate(&generators.r);
    let beta: Vec<f64> = (1..spin.dim()).map(|i| conj.get(i, i - 1)).collect();
    let pair = triangular_pair(spin, t, &AlphaParams::new(spin, beta)?)?;
    Ok(NaturalGauge {
        pair,
        basis,
        generators,
    })
}

/// Diagonal `D` with `D_0 = 1`, `D_i = D_{i-1} alpha_i / beta_i`, taking
/// the natural gauge `beta` to the caller's `alpha`.
pub fn gauge_map(alpha: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
    let mut d = vec![1.0];
    for (i, (&a, &b)) in alpha.iter().zip(beta).enumerate() {
        if a == 0.0 {
            return Err(Error::DegenerateGauge { index: i + 1 });
        }
        if b == 0.0 {
            return Err(Error::DegenerateGauge { index: i + 1 });
        }
        let prev = *d.last().expect("non-empty");
        d.push(prev * a / b);
    }
    Ok(d)
}

/// Fixes the free weights of the physical family of `sr` by the spectral
/// and intertwining conditions. The iteration runs in the natural gauge,
/// seeded by projecting the standard `exp(tH)` onto its family, and the
/// result is carried to the caller's gauge by a diagonal similarity.
pub fn fix_r_by_spectrum(family: &RFamily, sr: &SRPair) -> Result<FixedR> {
    let spin = sr.spin;
    let t = sr.t();
    if family.nullity() != 1 {
        return Err(Error::InvalidInput(format!(
            "spectral fixing needs a single vanishing pivot, family has {}",
            family.nullity()
        )));
    }
    let alphas = pair_alphas(sr)?;
    let nat = natural_gauge(spin, t)?;
    let beta = nat.pair.alphas.clone().expect("triangular pair").values().to_vec();
    let gauge = gauge_map(alphas.values(), &beta)?;

    let casimir = physical_casimir(spin, t)?;
    let k_nat = build_k(&nat.pair, casimir);
    let fam_nat = solve_casimir_family(&nat.pair, &k_nat)?;
    if fam_nat.nullity() != 1 {
        return Err(Error::InvalidInput("natural family is not single-pivot".into()));
    }
    let oracle = nat.basis.conjugate(&nat.generators.big_r);
    let seed = fam_nat.project(&oracle);
    let sys = SpectralSystem {
        s: &nat.pair.s,
        r: &nat.pair.r,
        def: nat.pair.deformation,
        family: &fam_nat,
        targets: trace_targets(spin, t),
    };
    let (w_nat, iterations, residual) = gauss_newton(&sys, seed)?;
    let natural_r = fam_nat.member(&w_nat)?;
    let r = natural_r.diagonal_similarity(&gauge);
    let weights = family.project(&r);
    Ok(FixedR {
        r,
        weights,
        natural_r,
        natural_alphas: beta,
        gauge,
        iterations,
        residual,
    })
}

/// Residual report for a candidate `R` against a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RReport {
    pub intertwining_plus: f64,
    pub intertwining_minus: f64,
    pub q_commutator: f64,
    /// `R K = (s^2 - r^2 + 1)/2` for the physical Casimir, as a backward
    /// error relative to `|R||K|`.
    pub casimir_equation: f64,
    /// Least-squares `c` in `[K, s + r] = c (s^2 - r^2 + 1)`; `None` when
    /// `s^2 - r^2 + 1` vanishes (dimension 1).
    pub k_constant: Option<f64>,
    pub k_direction: f64,
    pub spectrum: f64,
    pub determinant: f64,
    pub condition: f64,
}

impl RReport {
    /// Largest residual among the intertwining relations.
    pub fn max_relation(&self) -> f64 {
        self.intertwining_plus
            .max(self.intertwining_minus)
            .max(self.q_commutator)
    }
}

/// Verifies `R` against `sr`: both intertwining relations and the
/// q-commutator with `T±` rebuilt from `(s, r, R)`, the Casimir equation,
/// the direction of `[K, s + r]`, the spectrum, determinant and condition.
pub fn verify_r(big_r: &RealMatrix, sr: &SRPair) -> Result<RReport> {
    let d = sr.s.dim();
    if big_r.dim() != d {
        return Err(Error::DimensionMismatch {
            left: big_r.dim(),
            right: d,
        });
    }
    let def = sr.deformation;
    let (tp, tm) = ladder_from_r(&sr.s, &sr.r, big_r, def);
    let r2m1 = big_r * big_r - RealMatrix::identity(d);
    let [intertwining_plus, intertwining_minus, q_commutator] =
        r_form_residuals(def, &tp, &tm, big_r, &r2m1);

    let casimir = physical_casimir(sr.spin, sr.t())?;
    let k = build_k(sr, casimir);
    let casimir_equation = product_residual(big_r, &k, &casimir_rhs(sr))?;

    let sigma = &sr.s + &sr.r;
    let delta = sr.delta();
    let kc = &k * &sigma - &sigma * &k;
    let dd = frobenius_dot(&delta, &delta);
    let (k_constant, k_direction) = if dd > 0.0 {
        let c = frobenius_dot(&kc, &delta) / dd;
        let id = RealMatrix::identity(d);
        let res = balanced_residual(
            &[&k * &sigma, (&sr.r * &sr.r).scale(c)],
            &[&sigma * &k, (&sr.s * &sr.s + id).scale(c)],
        )?;
        (Some(c), res)
    } else {
        (None, kc.max_abs() / (1.0 + (&k * &sigma).max_abs()))
    };

    let predicted: Vec<f64> = sr.spin.weights().iter().map(|&w| (sr.t() * w as f64).exp()).collect();
    Ok(RReport {
        intertwining_plus,
        intertwining_minus,
        q_commutator,
        casimir_equation,
        k_constant,
        k_direction,
        spectrum: spectrum_residual(&big_r.eigenvalues(), &predicted),
        determinant: big_r.determinant(),
        condition: big_r.condition_number(),
    })
}

/// Closed form of the fitted constant: `[K, s + r] = e^t sinh t (s^2 - r^2 + 1)`.
pub fn k_commutator_constant(t: f64) -> f64 {
    t.exp() * t.sinh()
}

/// Weights of the spin-1/2 physical family for the two constants
/// `(a, b)` of its general solution
/// `R = [[a alpha cosh t, a (cosh 2t - 1)], [b alpha cosh t, 1/cosh t + b (cosh 2t - 1)]]`.
pub fn spin_half_weights(t: f64, a: f64, b: f64) -> Vec<f64> {
    let c2m1 = (2.0 * t).cosh() - 1.0;
    vec![a * c2m1, 1.0 / t.cosh() + b * c2m1]
}

/// End-to-end result for one `(spin, t, alpha)`.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub pair: SRPair,
    pub casimir: f64,
    pub k: RealMatrix,
    pub family: RFamily,
    pub fixed: FixedR,
    pub report: RReport,
}

/// Triangular pair, physical `K`, family, spectral fix and report.
pub fn run_pipeline(spin: Spin, t: f64, alphas: &AlphaParams) -> Result<Pipeline> {
    let pair = triangular_pair(spin, t, alphas)?;
    let casimir = physical_casimir(spin, t)?;
    let k = build_k(&pair, casimir);
    let mut family = solve_casimir_family(&pair, &k)?;
    let fixed = fix_r_by_spectrum(&family, &pair)?;
    family.w = Some(fixed.weights.clone());
    let report = verify_r(&fixed.r, &pair)?;
    Ok(Pipeline {
        pair,
        casimir,
        k,
        family,
        fixed,
        report,
    })
}

/// `R(t) R(-t) = I` checked two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct InversePair {
    /// Both pipeline outputs carried back to the `J_z` basis through their
    /// own gauge maps and eigenbases, then multiplied.
    pub common_basis: f64,
    /// Literal product of the two triangular-basis matrices with the
    /// `-t` pipeline run at `alpha -> -alpha`. Only meaningful for
    /// dimension 2; for larger dimension `R(t)^{-1}` is not a diagonal
    /// similarity of `R(-t)` and this residual is large.
    pub literal: f64,
}

/// Runs the pipeline at `t` with `alphas` and at `-t` with the sign-flipped
/// alphas and compares `R(t) R(-t)` with the identity.
pub fn inverse_pair_residual(spin: Spin, t: f64, alphas: &AlphaParams) -> Result<InversePair> {
    let neg = AlphaParams::new(spin, alphas.values().iter().map(|a| -a).collect())?;
    let plus = run_pipeline(spin, t, alphas)?;
    let minus = run_pipeline(spin, -t, &neg)?;
    let to_standard = |p: &Pipeline, t: f64| -> Result<RealMatrix> {
        let nat = natural_gauge(spin, t)?;
        let inv: Vec<f64> = p.fixed.gauge.iter().map(|g| 1.0 / g).collect();
        let r_nat = p.fixed.r.diagonal_similarity(&inv);
        Ok(nat.basis.unconjugate(&r_nat))
    };
    let a = to_standard(&plus, t)?;
    let b = to_standard(&minus, -t)?;
    let id = RealMatrix::identity(spin.dim());
    Ok(InversePair {
        common_basis: rel_residual(&(&a * &b), &id)?,
        literal: rel_residual(&(&plus.fixed.r * &minus.fixed.r), &id)?,
    })
}
