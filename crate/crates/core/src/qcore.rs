//! Scalar and matrix primitives shared by every construction: the
//! deformation parameter, spin labels, q-numbers, commutators and the
//! scale-aware residual used for all identity checks.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Upper bound on `|t| * (2l + 1)` for deformed builders. Beyond it matrix
/// entries reach ~e^26 and relative comparisons in binary64 stop meaning
/// anything.
pub const GUARD_RAIL: f64 = 26.0;

/// Below this `|t|` the q-number falls back to its undeformed limit.
pub const QNUMBER_LIMIT_THRESHOLD: f64 = 1e-12;

/// Deformation parameter `t = log q` together with its hyperbolic constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation {
    t: f64,
    sinh: f64,
    cosh: f64,
    tanh: f64,
}

impl Deformation {
    /// A deformation usable by the deformed builders: finite and non-zero.
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() || t == 0.0 {
            return Err(Error::InvalidDeformation(t));
        }
        Ok(Self::unchecked(t))
    }

    pub(crate) fn unchecked(t: f64) -> Self {
        Self {
            t,
            sinh: t.sinh(),
            cosh: t.cosh(),
            tanh: t.tanh(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn sinh(&self) -> f64 {
        self.sinh
    }

    pub fn cosh(&self) -> f64 {
        self.cosh
    }

    pub fn tanh(&self) -> f64 {
        self.tanh
    }

    /// The same deformation with `t -> -t`.
    pub fn negated(&self) -> Self {
        Self::unchecked(-self.t)
    }

    /// Rejects `(spin, t)` combinations beyond [`GUARD_RAIL`].
    pub fn check_guard_rail(&self, spin: Spin) -> Result<()> {
        let product = self.t.abs() * spin.dim() as f64;
        if product > GUARD_RAIL {
            return Err(Error::GuardRail {
                two_l: spin.two_l(),
                t: self.t,
                product,
                limit: GUARD_RAIL,
            });
        }
        Ok(())
    }
}

/// Spin label `l`, stored as the integer `2l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    two_l: u32,
}

impl Spin {
    pub fn new(two_l: u32) -> Self {
        Self { two_l }
    }

    pub fn two_l(&self) -> u32 {
        self.two_l
    }

    pub fn l(&self) -> f64 {
        f64::from(self.two_l) / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_l as usize + 1
    }

    /// Weight `mu_j = 2l + 2 - 2j` of row `j` (1-based), which is also the
    /// eigenvalue `2m_j` of `H` on that row.
    pub fn weight(&self, j: usize) -> i64 {
        i64::from(self.two_l) + 2 - 2 * j as i64
    }

    /// All weights, strictly decreasing from `2l` to `-2l`.
    pub fn weights(&self) -> Vec<i64> {
        (1..=self.dim()).map(|j| self.weight(j)).collect()
    }

    /// Magnetic quantum numbers `m_j = l + 1 - j`.
    pub fn magnetic(&self) -> Vec<f64> {
        self.weights().into_iter().map(|w| w as f64 / 2.0).collect()
    }

    /// Classical su(2) Casimir `2l(l+1)` in the normalisation with `H = 2J_z`.
    pub fn classical_casimir(&self) -> f64 {
        2.0 * self.l() * (self.l() + 1.0)
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.two_l % 2 == 0 {
            write!(f, "{}", self.two_l / 2)
        } else {
            write!(f, "{}/2", self.two_l)
        }
    }
}

/// q-number `[n]_q = sinh(t n) / sinh t`, continuous at `t = 0`.
pub fn qnumber(n: f64, t: f64) -> f64 {
    if t.abs() < QNUMBER_LIMIT_THRESHOLD {
        n
    } else {
        (t * n).sinh() / t.sinh()
    }
}

/// `cosh(x) - 1` without cancellation for small `x`.
pub fn cosh_m1(x: f64) -> f64 {
    let h = (0.5 * x).sinh();
    2.0 * h * h
}

/// Dense square matrix of reals; every generator is carried by one.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix(DMatrix<f64>);

impl RealMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Builds from row-major nested vectors; rejects ragged, non-square or
    /// non-finite input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: row.len(),
                });
            }
        }
        let m = Self(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
        if !m.is_finite() {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(m)
    }

    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[(i, j)] = value;
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(&self.0 * c)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// `diag(d) * self * diag(d)^{-1}`.
    pub fn diagonal_similarity(&self, d: &[f64]) -> Self {
        Self(DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            d[i] * self.0[(i, j)] / d[j]
        }))
    }

    /// Largest strictly-upper-triangular magnitude.
    pub fn max_abs_upper(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                m = m.max(self.0[(i, j)].abs());
            }
        }
        m
    }

    /// Largest off-diagonal magnitude.
    pub fn max_abs_offdiag(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.0[(i, j)].abs());
                }
            }
        }
        m
    }

    pub fn inverse(&self) -> Option<Self> {
        self.0.clone().try_inverse().map(Self)
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Eigenvalues as `(re, im)` pairs, unordered.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        if self.dim() == 0 {
            return Vec::new();
        }
        self.0
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|z| (z.re, z.im))
            .collect()
    }

    /// Eigenvalues of the symmetric part `(A + A^T)/2`, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let sym = (&self.0 + self.0.transpose()) * 0.5;
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Condition number in the 2-norm.
    pub fn condition_number(&self) -> f64 {
        let sv = self.0.clone().singular_values();
        let max = sv.iter().cloned().fold(0.0_f64, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// `self^k` by repeated multiplication.
    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.dim());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prec = f.precision().unwrap_or(6);
        for i in 0..self.dim() {
            write!(f, "[")?;
            for j in 0..self.dim() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:>w$.p$}", self.0[(i, j)], w = prec + 4, p = prec)?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&RealMatrix> for &RealMatrix {
            type Output = RealMatrix;
            fn $method(self, rhs: &RealMatrix) -> RealMatrix {
                RealMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $trait<RealMatrix> for RealMatrix {
            type Output = RealMatrix;
            fn $method(self, rhs: RealMatrix) -> RealMatrix {
                RealMatrix(self.0 $op rhs.0)
            }
        }
        impl $trait<&RealMatrix> for RealMatrix {
            type Output = RealMatrix;
            fn $method(self, rhs: &RealMatrix) -> RealMatrix {
                RealMatrix(self.0 $op &rhs.0)
            }
        }
        impl $trait<RealMatrix> for &RealMatrix {
            type Output = RealMatrix;
            fn $method(self, rhs: RealMatrix) -> RealMatrix {
                RealMatrix(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<f64> for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: f64) -> RealMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: f64) -> RealMatrix {
        RealMatrix(self.0 * rhs)
    }
}

impl Neg for &RealMatrix {
    type Output = RealMatrix;
    fn neg(self) -> RealMatrix {
        RealMatrix(-&self.0)
    }
}

/// `AB - BA`.
pub fn commutator(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    a.check_same_dim(b)?;
    Ok(a * b - b * a)
}

/// `max|A - B| / (1 + max|A| + max|B|)`.
///
/// Scale-aware so that matrices carrying `sinh` of large arguments are
/// compared relatively while near-zero matrices are compared absolutely.
pub fn rel_residual(a: &RealMatrix, b: &RealMatrix) -> Result<f64> {
    a.check_same_dim(b)?;
    let diff = (a - b).max_abs();
    Ok(diff / (1.0 + a.max_abs() + b.max_abs()))
}

/// Residual of `sum(lhs) = sum(rhs)` where both sides are given as lists of
/// terms that are only ever added. Rearranging an identity so that no side
/// is a difference of large terms keeps the residual at the rounding floor
/// of the terms themselves.
pub fn balanced_residual(lhs: &[RealMatrix], rhs: &[RealMatrix]) -> Result<f64> {
    let sum = |terms: &[RealMatrix]| -> Result<RealMatrix> {
        let mut it = terms.iter();
        let first = it
            .next()
            .ok_or_else(|| Error::InvalidInput("empty side in identity".into()))?
            .clone();
        it.try_fold(first, |acc, m| {
            acc.check_same_dim(m)?;
            Ok(acc + m)
        })
    };
    rel_residual(&sum(lhs)?, &sum(rhs)?)
}

/// Backward-error residual of `A B = C`:
/// `max|AB - C| / (1 + max(|A||B|) + max|C|)` with `|A||B|` the product of
/// entrywise magnitudes, so cancellation inside `AB` is not penalised.
pub fn product_residual(a: &RealMatrix, b: &RealMatrix, c: &RealMatrix) -> Result<f64> {
    a.check_same_dim(b)?;
    a.check_same_dim(c)?;
    let diff = (a * b - c).max_abs();
    let mag = a.0.abs() * b.0.abs();
    let mag = mag.iter().fold(0.0_f64, |m, x| m.max(*x));
    Ok(diff / (1.0 + mag + c.max_abs()))
}

/// Scalar form of [`rel_residual`].
pub fn rel_residual_scalar(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs() + b.abs())
}

/// Distance between a computed spectrum and a predicted real one: both are
/// sorted (by real part) and compared pairwise, imaginary parts counting as
/// error, relative to `1 + max|predicted|`.
pub fn spectrum_residual(computed: &[(f64, f64)], predicted: &[f64]) -> f64 {
    if computed.len() != predicted.len() {
        return f64::INFINITY;
    }
    let mut c = computed.to_vec();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut p = predicted.to_vec();
    p.sort_by(f64::total_cmp);
    let scale = 1.0 + p.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    c.iter()
        .zip(&p)
        .map(|(&(re, im), &x)| (re - x).hypot(im))
        .fold(0.0_f64, f64::max)
        / scale
}

/// Frobenius inner product.
pub fn frobenius_dot(a: &RealMatrix, b: &RealMatrix) -> f64 {
    a.0.dot(&b.0)
}
