//! Exact rational linear algebra for small dense matrices, plus the handful
//! of polynomial routines the monodromy layer needs.
//!
//! Everything here is exact: no floating point enters except through the
//! explicit conversion helpers. Matrices are square, row major, and tiny
//! (rank ≤ 8 in practice), so simple O(n³) algorithms are used throughout.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Exact rational scalar used across the crate.
pub type Rat = BigRational;

/// Build a rational from an integer pair, reducing on construction.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn rat_int(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

/// Natural logarithm of |r|, stable for numerators and denominators far
/// beyond f64 range. Returns −∞ for zero.
pub fn ln_abs(r: &Rat) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    ln_abs_bigint(r.numer()) - ln_abs_bigint(r.denom())
}

fn ln_abs_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 52 {
        return x.abs().to_f64().expect("small integer fits f64").ln();
    }
    // Top 52 bits carry the mantissa; the rest contributes bit-shift times ln 2.
    let shift = bits - 52;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().expect("52-bit mantissa fits f64").ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Square matrix with exact rational entries, row major.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatMat {
    n: usize,
    data: Vec<Rat>,
}

impl RatMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Rat::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    /// Build from rows; panics unless the shape is square.
    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Build from integer rows (convenience for tables of small entries).
    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| rat_int(v)).collect())
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul(&self, rhs: &RatMat) -> RatMat {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = RatMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let term = a * &rhs[(k, j)];
                    out[(i, j)] += term;
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &RatMat) -> RatMat {
        assert_eq!(self.n, rhs.n);
        let mut out = self.clone();
        for (o, r) in out.data.iter_mut().zip(&rhs.data) {
            *o -= r;
        }
        out
    }

    pub fn transpose(&self) -> RatMat {
        let n = self.n;
        let mut out = RatMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn trace(&self) -> Rat {
        (0..self.n).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn is_identity(&self) -> bool {
        *self == RatMat::identity(self.n)
    }

    /// Gauss–Jordan inverse; `None` for singular input.
    pub fn inverse(&self) -> Option<RatMat> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = RatMat::identity(n);
        for col in 0..n {
            let pivot_row = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let pivot = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] /= &pivot;
                inv[(col, j)] /= &pivot;
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let factor = a[(r, col)].clone();
                for j in 0..n {
                    let t = &factor * &a[(col, j)];
                    a[(r, j)] -= t;
                    let t = &factor * &inv[(col, j)];
                    inv[(r, j)] -= t;
                }
            }
        }
        Some(inv)
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for col in 0..self.n {
            self.data.swap(i * self.n + col, j * self.n + col);
        }
    }

    /// Rank via fraction-free row echelon reduction.
    pub fn rank(&self) -> usize {
        let n = self.n;
        let mut a = self.clone();
        let mut rank = 0;
        for col in 0..n {
            let Some(pivot_row) = (rank..n).find(|&r| !a[(r, col)].is_zero()) else {
                continue;
            };
            a.swap_rows(pivot_row, rank);
            let pivot = a[(rank, col)].clone();
            for r in (rank + 1)..n {
                if a[(r, col)].is_zero() {
                    continue;
                }
                let factor = &a[(r, col)] / &pivot;
                for j in col..n {
                    let t = &factor * &a[(rank, j)];
                    a[(r, j)] -= t;
                }
            }
            rank += 1;
        }
        rank
    }

    /// Characteristic polynomial, monic, coefficients from constant term up.
    ///
    /// Faddeev–LeVerrier recurrence: exact divisions only.
    pub fn char_poly(&self) -> RatPoly {
        let n = self.n;
        let mut coeffs = vec![Rat::zero(); n + 1];
        coeffs[n] = Rat::one();
        let mut m = RatMat::identity(n);
        for k in 1..=n {
            m = self.mul(&m);
            let c = -(m.trace() / rat_int(k as i64));
            for i in 0..n {
                m[(i, i)] += &c;
            }
            coeffs[n - k] = c;
        }
        RatPoly::new(coeffs)
    }

    /// Lossy conversion for the floating-point simulation layer.
    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            rat_to_f64(&self[(i, j)])
        })
    }
}

impl std::ops::Index<(usize, usize)> for RatMat {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for RatMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RatMat {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                write!(f, "{} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Convert a rational to f64 through big-integer division, accurate to one
/// ulp even when numerator and denominator overflow f64 individually.
pub fn rat_to_f64(r: &Rat) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    // Scale so the integer quotient keeps 80 significant bits.
    let num_bits = r.numer().bits() as i64;
    let den_bits = r.denom().bits() as i64;
    let shift = 80 - (num_bits - den_bits);
    let (num, den) = if shift >= 0 {
        (r.numer() << shift as u64, r.denom().clone())
    } else {
        (r.numer().clone(), r.denom() << (-shift) as u64)
    };
    let q = &num / &den;
    q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-shift as i32)
}

/// Dense univariate polynomial with rational coefficients, low degree first.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RatPoly {
    coeffs: Vec<Rat>,
}

impl RatPoly {
    /// Normalizes by trimming trailing zeros (the zero polynomial keeps one).
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rat::zero());
        }
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    pub fn one() -> Self {
        Self::new(vec![Rat::one()])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// X^n − 1.
    pub fn x_pow_minus_one(n: usize) -> Self {
        let mut coeffs = vec![Rat::zero(); n + 1];
        coeffs[0] = -Rat::one();
        coeffs[n] = Rat::one();
        Self::new(coeffs)
    }

    pub fn mul(&self, rhs: &RatPoly) -> RatPoly {
        let mut out = vec![Rat::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RatPoly::new(out)
    }

    /// Exact division: returns the quotient only when the remainder vanishes.
    pub fn div_exact(&self, divisor: &RatPoly) -> Option<RatPoly> {
        if divisor.coeffs.iter().all(Zero::is_zero) {
            return None;
        }
        if self.degree() < divisor.degree() {
            return None;
        }
        let mut rem = self.coeffs.clone();
        let dd = divisor.degree();
        let lead = divisor.coeffs[dd].clone();
        let qlen = self.degree() - dd + 1;
        let mut quot = vec![Rat::zero(); qlen];
        for k in (0..qlen).rev() {
            let c = &rem[k + dd] / &lead;
            if c.is_zero() {
                continue;
            }
            for (j, d) in divisor.coeffs.iter().enumerate() {
                let t = &c * d;
                rem[k + j] -= t;
            }
            quot[k] = c;
        }
        if rem.iter().all(Zero::is_zero) {
            Some(RatPoly::new(quot))
        } else {
            None
        }
    }

    /// Formal derivative.
    pub fn derivative(&self) -> RatPoly {
        if self.degree() == 0 {
            return RatPoly::new(vec![Rat::zero()]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Rat::from_integer(i.into()))
            .collect();
        RatPoly::new(coeffs)
    }

    /// Euclidean division: (quotient, remainder) with deg(rem) < deg(divisor).
    /// Panics on a zero divisor.
    pub fn div_rem(&self, divisor: &RatPoly) -> (RatPoly, RatPoly) {
        assert!(
            !divisor.coeffs.iter().all(Zero::is_zero),
            "division by the zero polynomial"
        );
        let dd = divisor.degree();
        if self.degree() < dd || (self.degree() == 0 && self.coeffs[0].is_zero()) {
            return (RatPoly::new(vec![Rat::zero()]), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let lead = divisor.coeffs[dd].clone();
        let qlen = self.degree() - dd + 1;
        let mut quot = vec![Rat::zero(); qlen];
        for k in (0..qlen).rev() {
            let c = &rem[k + dd] / &lead;
            if c.is_zero() {
                continue;
            }
            for (j, d) in divisor.coeffs.iter().enumerate() {
                let t = &c * d;
                rem[k + j] -= t;
            }
            quot[k] = c;
        }
        rem.truncate(dd.max(1));
        (RatPoly::new(quot), RatPoly::new(rem))
    }

    /// Monic greatest common divisor via the Euclidean algorithm; gcd with
    /// the zero polynomial is the other argument made monic.
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let is_zero = |p: &RatPoly| p.coeffs.iter().all(Zero::is_zero);
        let mut a = self.clone();
        let mut b = other.clone();
        while !is_zero(&b) {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        if is_zero(&a) {
            return a;
        }
        let lead = a.coeffs[a.degree()].clone();
        RatPoly::new(a.coeffs.iter().map(|c| c / &lead).collect())
    }

    /// Roots computed numerically from the exact coefficients. Assumes a
    /// monic-normalizable polynomial of degree ≥ 1; accuracy is best when
    /// the input is square-free (every call site peels multiplicities off
    /// first).
    pub fn roots_f64(&self) -> Vec<Complex64> {
        let deg = self.degree();
        let lead = self.coeffs[deg].clone();
        let tail: Vec<Complex64> = self.coeffs[..deg]
            .iter()
            .map(|c| Complex64::new(rat_to_f64(&(c / &lead)), 0.0))
            .collect();
        durand_kerner(&tail)
    }
}

/// All roots of X^d + tail[d−1]·X^{d−1} + … + tail[0] by the Durand-Kerner
/// simultaneous iteration, with a hard iteration cap.
///
/// QR companion eigensolvers are not usable here: the Francis double shift
/// can cycle forever on spectra symmetric about both axes (biquadratics
/// such as X⁴ + aX² + b, which arise from self-dual monodromy matrices).
/// The fixed-point iteration converges superlinearly for the square-free
/// inputs this crate produces, and the cap bounds the cost unconditionally.
pub fn durand_kerner(tail: &[Complex64]) -> Vec<Complex64> {
    let deg = tail.len();
    if deg == 0 {
        return Vec::new();
    }
    let eval = |z: Complex64| {
        let mut acc = Complex64::new(1.0, 0.0);
        for c in tail.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    // Cauchy bound: every root has modulus below 1 + max |tail|. Starting
    // angles carry an offset so no iterate sits on a symmetry axis.
    let radius = 1.0 + tail.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            Complex64::from_polar(
                radius,
                0.4 + std::f64::consts::TAU * k as f64 / deg as f64,
            )
        })
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for k in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.is_zero() {
                continue;
            }
            let delta = eval(z[k]) / denom;
            z[k] -= delta;
            moved = moved.max(delta.norm());
        }
        if moved <= 1e-14 * radius {
            break;
        }
    }
    z
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() && self.degree() > 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if i == 0 {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "X^{i}")?;
            } else {
                write!(f, "({c})X^{i}")?;
            }
        }
        Ok(())
    }
}

/// Euler totient by trial division (arguments stay tiny here).
pub fn euler_phi(mut m: u64) -> u64 {
    let mut result = m;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            while m % p == 0 {
                m /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if m > 1 {
        result -= result / m;
    }
    result
}

/// The m-th cyclotomic polynomial, by the recursive identity
/// X^m − 1 = Π_{d | m} Φ_d.
pub fn cyclotomic(m: u64) -> RatPoly {
    let mut quotient = RatPoly::x_pow_minus_one(m as usize);
    for d in 1..m {
        if m % d == 0 {
            quotient = quotient
                .div_exact(&cyclotomic(d))
                .expect("cyclotomic polynomials divide X^m - 1");
        }
    }
    quotient
}

/// Split a monic rational polynomial into its cyclotomic part and a
/// cyclotomic-free remainder. Returns (number of unit-circle roots coming
/// from cyclotomic factors, remainder polynomial).
pub fn strip_cyclotomic_factors(poly: &RatPoly) -> (usize, RatPoly) {
    let mut rem = poly.clone();
    let mut unit_roots = 0;
    let mut m = 1u64;
    // φ(m) ≥ √(m/2), so factors of degree ≤ deg live below 2·deg² + 1.
    let bound = 2 * (poly.degree() as u64).pow(2) + 2;
    while m <= bound && rem.degree() > 0 {
        if euler_phi(m) <= rem.degree() as u64 {
            let phi_m = cyclotomic(m);
            while let Some(q) = rem.div_exact(&phi_m) {
                unit_roots += phi_m.degree();
                rem = q;
                if rem.degree() == 0 {
                    break;
                }
            }
        }
        m += 1;
    }
    (unit_roots, rem)
}
