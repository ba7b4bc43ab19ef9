//! Exact truncated power series over the rationals, and the pipeline built
//! from them: the degree-zero period of the quintic family, its logarithmic
//! partner, their Wronskian, the modular coordinate λ(q) as a theta-function
//! quotient, the pullback of the Wronskian to the q-disc, and the growth
//! diagnostic comparing exp(C√n) against exp(Cn) coefficient models.
//!
//! Conventions:
//! - A series of order N stores exact coefficients c₀…c_N; every operation
//!   truncates to the smallest participating order and stays exact.
//! - tW(t) = ψ₀² + t(ψ₀φ′ − ψ₀′φ) where ψ₀ = Σ (5n)!/n!⁵ tⁿ and
//!   φ = Σ (5n)!/n!⁵ (Σ_{k=n+1}^{5n} 1/k) tⁿ is the regular part of the
//!   logarithmic solution; constant term 1.
//! - λ(q) = q/5⁵ · (Σ q^{n²+n} / Σ q^{n²})⁴ over n ∈ ℤ, constant term 0.
//! - qF(q) = q·(W∘λ)(q) = (tW∘λ)·(q/λ); the pipeline output is the
//!   coefficient list of 1/(qF).
//! - Heavy operations (mul, compose, reciprocal) run internally on a
//!   scaled-integer representation (one shared denominator, reduction
//!   deferred) so per-coefficient gcd work never dominates the pipeline.

use crate::exact::{ln_abs, rat_int, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

/// Error type for series construction and the pipeline operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    /// Composition requires the inner series to have zero constant term.
    #[error("composition requires inner constant term zero, got {0}")]
    CompositionConstantTerm(String),
    /// Reciprocal requires a nonzero constant term.
    #[error("reciprocal of a series with zero constant term")]
    ReciprocalZeroConstant,
    /// A log(t) coefficient survived the Wronskian assembly at this order;
    /// only an internal arithmetic bug can trigger it.
    #[error("log coefficient failed to cancel at order {0}")]
    LogCancellationFailure(usize),
    /// The pulled-back Wronskian lost its simple pole: q·(W∘λ) acquired a
    /// zero constant term.
    #[error("q·(W∘λ) has zero constant term; pole order mismatch")]
    PoleOrderMismatch,
    /// Growth fitting hit a zero coefficient inside the fit window.
    #[error("zero coefficient at n = {0} inside the fit window")]
    ZeroCoefficientInWindow(usize),
    /// Growth fitting asked for an empty or degenerate window.
    #[error("invalid fit window: {0}")]
    InvalidWindow(String),
}

/// Truncated power series Σ_{n=0}^{N} cₙtⁿ with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalSeries {
    coeffs: Vec<Rat>,
}

impl RationalSeries {
    /// Series from its coefficient list; an empty list is the zero series of
    /// order 0.
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(Rat::zero());
        }
        Self { coeffs }
    }

    /// Series from small integer coefficients.
    pub fn from_ints(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    /// Zero series of the given order.
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![Rat::zero(); order + 1],
        }
    }

    /// Truncation order N.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of tⁿ; zero beyond the truncation order.
    pub fn coeff(&self, n: usize) -> Rat {
        self.coeffs.get(n).cloned().unwrap_or_else(Rat::zero)
    }

    /// All stored coefficients, c₀ first.
    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// Same series re-truncated (or zero-padded) to the given order.
    /// Padding asserts that the series is exact beyond its stored order,
    /// which is only sound for polynomials.
    pub fn with_order(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Rat::zero());
        Self { coeffs }
    }

    /// Coefficient-wise sum, truncated to the smaller order.
    pub fn add(&self, rhs: &RationalSeries) -> RationalSeries {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        RationalSeries::new(
            (0..n)
                .map(|i| &self.coeffs[i] + &rhs.coeffs[i])
                .collect(),
        )
    }

    /// Coefficient-wise difference, truncated to the smaller order.
    pub fn sub(&self, rhs: &RationalSeries) -> RationalSeries {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        RationalSeries::new(
            (0..n)
                .map(|i| &self.coeffs[i] - &rhs.coeffs[i])
                .collect(),
        )
    }

    /// Multiplication by t: shifts coefficients up and grows the order by
    /// one (exact, nothing is dropped).
    pub fn shift_up(&self) -> RationalSeries {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(Rat::zero());
        coeffs.extend_from_slice(&self.coeffs);
        RationalSeries::new(coeffs)
    }

    /// Division by t for a series with zero constant term; drops the order
    /// by one (or yields the zero series of order 0 at order 0).
    pub fn shift_down(&self) -> RationalSeries {
        assert!(
            self.coeffs[0].is_zero(),
            "shift_down needs a zero constant term"
        );
        RationalSeries::new(self.coeffs[1..].to_vec())
    }

    /// Coefficient-wise scalar multiple.
    pub fn scale(&self, k: &Rat) -> RationalSeries {
        RationalSeries::new(self.coeffs.iter().map(|c| c * k).collect())
    }
}

/// S(t) + log(t)·T(t) with both parts truncated at the same order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogSeries {
    /// The regular part S.
    pub regular: RationalSeries,
    /// The coefficient series T of log(t).
    pub log_part: RationalSeries,
}

/// Internal scaled-integer form: coefficients nums[i]/den with a single
/// shared positive denominator and reduction deferred to conversion back.
struct ScaledSeries {
    nums: Vec<BigInt>,
    den: BigInt,
}

impl ScaledSeries {
    fn from_rational(s: &RationalSeries) -> Self {
        let mut den = BigInt::one();
        for c in s.coeffs() {
            den = den.lcm(c.denom());
        }
        let nums = s
            .coeffs()
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        Self { nums, den }
    }

    fn to_rational(&self) -> RationalSeries {
        RationalSeries::new(
            self.nums
                .iter()
                .map(|n| Rat::new(n.clone(), self.den.clone()))
                .collect(),
        )
    }

    /// Product truncated at `order`.
    fn mul_trunc(&self, rhs: &ScaledSeries, order: usize) -> ScaledSeries {
        let mut nums = vec![BigInt::zero(); order + 1];
        for (i, a) in self.nums.iter().enumerate().take(order + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.nums.iter().enumerate().take(order + 1 - i) {
                if b.is_zero() {
                    continue;
                }
                nums[i + j] += a * b;
            }
        }
        ScaledSeries {
            nums,
            den: &self.den * &rhs.den,
        }
    }

    /// Adds a scalar to the constant coefficient.
    fn add_constant(&mut self, c: &Rat) {
        let den = self.den.lcm(c.denom());
        if den != self.den {
            let factor = &den / &self.den;
            for n in &mut self.nums {
                *n *= &factor;
            }
            self.den = den;
        }
        self.nums[0] += c.numer() * (&self.den / c.denom());
    }

    /// Divides out gcd(all nums, den); keeps den positive. The reduced form
    /// is what keeps Newton iterations from compounding denominators.
    fn reduce(&mut self) {
        let mut g = self.den.clone();
        for n in &self.nums {
            if g.is_one() {
                break;
            }
            g = g.gcd(n);
        }
        if !g.is_one() {
            self.den = &self.den / &g;
            for n in &mut self.nums {
                *n = &*n / &g;
            }
        }
        if self.den.is_negative() {
            self.den = -self.den.clone();
            for n in &mut self.nums {
                *n = -n.clone();
            }
        }
    }
}

/// Exact product, truncated to the smaller operand order.
pub fn series_mul(a: &RationalSeries, b: &RationalSeries) -> RationalSeries {
    let order = a.order().min(b.order());
    ScaledSeries::from_rational(a)
        .mul_trunc(&ScaledSeries::from_rational(b), order)
        .to_rational()
}

/// Exact composition outer(inner) for an inner series with zero constant
/// term, truncated to the smaller operand order. Horner evaluation: N
/// truncated products.
pub fn series_compose(
    outer: &RationalSeries,
    inner: &RationalSeries,
) -> Result<RationalSeries, SeriesError> {
    if !inner.coeff(0).is_zero() {
        return Err(SeriesError::CompositionConstantTerm(
            inner.coeff(0).to_string(),
        ));
    }
    let order = outer.order().min(inner.order());
    let g = ScaledSeries::from_rational(&inner.with_order(order));
    let mut acc = ScaledSeries {
        nums: vec![BigInt::zero(); order + 1],
        den: BigInt::one(),
    };
    acc.add_constant(&outer.coeff(order));
    for k in (0..order).rev() {
        acc = acc.mul_trunc(&g, order);
        acc.add_constant(&outer.coeff(k));
    }
    Ok(acc.to_rational())
}

/// Exact multiplicative inverse of a series with nonzero constant term,
/// through the operand's order. Newton iteration x ← x·(2 − S·x) doubles
/// the correct order each round; the scaled form is reduced between rounds
/// so denominators do not compound.
pub fn series_reciprocal(s: &RationalSeries) -> Result<RationalSeries, SeriesError> {
    let c0 = s.coeff(0);
    if c0.is_zero() {
        return Err(SeriesError::ReciprocalZeroConstant);
    }
    let order = s.order();
    let full = ScaledSeries::from_rational(s);
    let mut x = ScaledSeries {
        nums: vec![c0.denom().clone()],
        den: c0.numer().clone(),
    };
    x.reduce();
    let mut correct = 0usize;
    while correct < order {
        correct = (2 * correct + 1).min(order);
        let sx = full.mul_trunc(&x, correct);
        let mut two_minus = ScaledSeries {
            nums: sx.nums.iter().map(|n| -n).collect(),
            den: sx.den,
        };
        two_minus.add_constant(&rat_int(2));
        x = x.mul_trunc(&two_minus, correct);
        x.reduce();
    }
    Ok(x.to_rational())
}

/// Formal derivative: coefficient n is (n+1)·c_{n+1}; order drops by one.
pub fn series_derivative(s: &RationalSeries) -> RationalSeries {
    if s.order() == 0 {
        return RationalSeries::zero(0);
    }
    RationalSeries::new(
        s.coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| c * Rat::from_integer(n.into()))
            .collect(),
    )
}

/// The degree-zero period Σ_{n} (5n)!/n!⁵ tⁿ through order N, built from the
/// exact ratio c_{n+1}/cₙ = 5(5n+1)(5n+2)(5n+3)(5n+4)/(n+1)⁴.
pub fn psi0_series(n: usize) -> RationalSeries {
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut c = BigInt::one();
    coeffs.push(Rat::from_integer(c.clone()));
    for k in 0..n {
        let k = k as u64;
        c *= BigInt::from(5u64)
            * BigInt::from(5 * k + 1)
            * BigInt::from(5 * k + 2)
            * BigInt::from(5 * k + 3)
            * BigInt::from(5 * k + 4);
        c /= BigInt::from(k + 1).pow(4);
        coeffs.push(Rat::from_integer(c.clone()));
    }
    RationalSeries::new(coeffs)
}

/// The logarithmic solution log(t)·ψ₀ + φ through order N, with
/// φₙ = (5n)!/n!⁵ · Σ_{k=n+1}^{5n} 1/k (empty sum at n = 0).
pub fn psi1_series(n: usize) -> LogSeries {
    let psi0 = psi0_series(n);
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut harmonic = Rat::zero();
    coeffs.push(Rat::zero());
    for k in 0..n {
        let k = k as i64;
        for j in 1..=5 {
            harmonic += rat(1, 5 * k + j);
        }
        harmonic -= rat(1, k + 1);
        coeffs.push(psi0.coeff(k as usize + 1) * &harmonic);
    }
    LogSeries {
        regular: RationalSeries::new(coeffs),
        log_part: psi0,
    }
}

fn rat(num: i64, den: i64) -> Rat {
    crate::exact::rat(num, den)
}

/// t·W(t) for the Wronskian W = ψ₀ψ₁′ − ψ₀′ψ₁ of the two solutions, through
/// order N ≥ 1. With ψ₁ = log(t)ψ₀ + φ the product rule gives
/// W = ψ₀²/t + (ψ₀φ′ − ψ₀′φ) + log(t)·(ψ₀ψ₀′ − ψ₀′ψ₀); the log coefficient
/// is assembled and checked to vanish exactly at every order before being
/// dropped. Constant term 1.
pub fn wronskian_series(n: usize) -> Result<RationalSeries, SeriesError> {
    assert!(n >= 1, "wronskian_series needs order at least 1");
    let psi0 = psi0_series(n);
    let phi = psi1_series(n).regular;
    let psi0_prime = series_derivative(&psi0);
    let phi_prime = series_derivative(&phi);
    // Log coefficient of t·W: t·(ψ₀ψ₀′ − ψ₀′ψ₀), assembled through the same
    // multiplication path as the main term.
    let log_coeff = series_mul(&psi0, &psi0_prime).sub(&series_mul(&psi0_prime, &psi0));
    for (order, c) in log_coeff.coeffs().iter().enumerate() {
        if !c.is_zero() {
            return Err(SeriesError::LogCancellationFailure(order));
        }
    }
    let cross = series_mul(&psi0, &phi_prime).sub(&series_mul(&psi0_prime, &phi));
    let tw = series_mul(&psi0, &psi0)
        .with_order(n)
        .add(&cross.with_order(n - 1).shift_up());
    debug_assert!(tw.coeff(0).is_one());
    Ok(tw)
}

/// λ(q) = q/5⁵ · (Σ_{n∈ℤ} q^{n²+n} / Σ_{n∈ℤ} q^{n²})⁴ through order N ≥ 1,
/// with the theta sums truncated exactly: numerator 2Σ_{n≥0} q^{n(n+1)},
/// denominator 1 + 2Σ_{n≥1} q^{n²}. Constant term 0.
pub fn lambda_q_series(n: usize) -> RationalSeries {
    assert!(n >= 1, "lambda_q_series needs order at least 1");
    let inner = n - 1;
    let mut num_coeffs = vec![Rat::zero(); inner + 1];
    let mut den_coeffs = vec![Rat::zero(); inner + 1];
    den_coeffs[0] = Rat::one();
    let mut k = 0u64;
    while (k * (k + 1)) as usize <= inner {
        num_coeffs[(k * (k + 1)) as usize] += rat_int(2);
        k += 1;
    }
    let mut k = 1u64;
    while (k * k) as usize <= inner {
        den_coeffs[(k * k) as usize] += rat_int(2);
        k += 1;
    }
    let num = RationalSeries::new(num_coeffs);
    let den = RationalSeries::new(den_coeffs);
    let quotient = series_mul(
        &num,
        &series_reciprocal(&den).expect("theta denominator has constant term 1"),
    );
    let squared = series_mul(&quotient, &quotient);
    let fourth = series_mul(&squared, &squared);
    fourth.with_order(n - 1).shift_up().scale(&rat(1, 3125))
}

/// Coefficients of 1/(qF) through order N ≥ 2, where
/// qF(q) = q·(W∘λ)(q) = (tW∘λ)·(q/λ) is regular with nonzero constant term
/// (the simple pole of W at t = 0 cancels against the simple zero of λ).
pub fn inverse_f_coefficients(n: usize) -> Result<RationalSeries, SeriesError> {
    assert!(n >= 2, "inverse_f_coefficients needs order at least 2");
    let tw = wronskian_series(n)?;
    let lambda = lambda_q_series(n);
    let lambda_over_q = lambda.shift_down().with_order(n);
    let pulled_back = series_compose(&tw, &lambda)?;
    let qf = series_mul(
        &pulled_back,
        &series_reciprocal(&lambda_over_q).map_err(|_| SeriesError::PoleOrderMismatch)?,
    );
    if qf.coeff(0).is_zero() {
        return Err(SeriesError::PoleOrderMismatch);
    }
    series_reciprocal(&qf)
}

/// Least-squares comparison of log|cₙ| against C√n + b and against an + b
/// over the window [n₀, N].
#[derive(Clone, Debug, Serialize)]
pub struct GrowthFit {
    /// Slope of the √n model.
    pub c: f64,
    /// Intercept of the √n model.
    pub intercept: f64,
    /// Root-mean-square residual of the √n model.
    pub rms_sqrt: f64,
    /// Root-mean-square residual of the linear-in-n model.
    pub rms_linear: f64,
    /// Fit window (n₀, N), inclusive.
    pub window: (usize, usize),
}

fn least_squares_rms(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Fits log|cₙ| on [n₀, N] to the √n and linear models and reports both
/// residuals; the window needs at least two points and nonzero coefficients
/// throughout.
pub fn growth_fit(coeffs: &RationalSeries, n0: usize) -> Result<GrowthFit, SeriesError> {
    let n = coeffs.order();
    if n0 + 1 > n {
        return Err(SeriesError::InvalidWindow(format!(
            "need n0 + 1 <= order, got n0 = {n0}, order = {n}"
        )));
    }
    let mut xs_sqrt = Vec::with_capacity(n - n0 + 1);
    let mut xs_lin = Vec::with_capacity(n - n0 + 1);
    let mut ys = Vec::with_capacity(n - n0 + 1);
    for k in n0..=n {
        let c = coeffs.coeff(k);
        if c.is_zero() {
            return Err(SeriesError::ZeroCoefficientInWindow(k));
        }
        xs_sqrt.push((k as f64).sqrt());
        xs_lin.push(k as f64);
        ys.push(ln_abs(&c));
    }
    let (c, intercept, rms_sqrt) = least_squares_rms(&xs_sqrt, &ys);
    let (_, _, rms_linear) = least_squares_rms(&xs_lin, &ys);
    Ok(GrowthFit {
        c,
        intercept,
        rms_sqrt,
        rms_linear,
        window: (n0, n),
    })
}

/// CSV dump of a coefficient list: `n,numerator,denominator,log_abs` with
/// the natural log of |cₙ| as a decimal (zero coefficients print an empty
/// log column).
pub fn coefficients_csv(s: &RationalSeries) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "numerator", "denominator", "log_abs"])
        .expect("in-memory csv write");
    for (n, c) in s.coeffs().iter().enumerate() {
        let log_abs = if c.is_zero() {
            String::new()
        } else {
            format!("{:.6}", ln_abs(c))
        };
        w.write_record([
            n.to_string(),
            c.numer().to_string(),
            c.denom().to_string(),
            log_abs,
        ])
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_geometric() {
        let s = RationalSeries::from_ints(&[1, 1, 0, 0, 0]);
        let r = series_reciprocal(&s).unwrap();
        assert_eq!(r, RationalSeries::from_ints(&[1, -1, 1, -1, 1]));
        assert!(matches!(
            series_reciprocal(&RationalSeries::from_ints(&[0, 1])),
            Err(SeriesError::ReciprocalZeroConstant)
        ));
    }

    #[test]
    fn reciprocal_times_original_is_one() {
        let s = RationalSeries::new(vec![rat(3, 2), rat(-1, 7), rat_int(4), rat(5, 3)]);
        let r = series_reciprocal(&s).unwrap();
        let prod = series_mul(&s, &r);
        assert_eq!(prod, RationalSeries::from_ints(&[1, 0, 0, 0]));
    }

    #[test]
    fn compose_polynomial_example() {
        // (t + t²)² = t² + 2t³ + t⁴, exact because both are polynomials
        // padded to order 4.
        let outer = RationalSeries::from_ints(&[0, 0, 1]).with_order(4);
        let inner = RationalSeries::from_ints(&[0, 1, 1]).with_order(4);
        let got = series_compose(&outer, &inner).unwrap();
        assert_eq!(got, RationalSeries::from_ints(&[0, 0, 1, 2, 1]));
        assert!(matches!(
            series_compose(&outer, &RationalSeries::from_ints(&[1, 1])),
            Err(SeriesError::CompositionConstantTerm(_))
        ));
    }

    #[test]
    fn derivative_shifts_coefficients() {
        let s = RationalSeries::from_ints(&[7, 3, 5, 2]);
        assert_eq!(series_derivative(&s), RationalSeries::from_ints(&[3, 10, 6]));
        assert_eq!(
            series_derivative(&RationalSeries::from_ints(&[9])),
            RationalSeries::zero(0)
        );
    }

    #[test]
    fn psi0_small_coefficients() {
        let s = psi0_series(3);
        assert_eq!(s.coeff(0), rat_int(1));
        assert_eq!(s.coeff(1), rat_int(120));
        assert_eq!(s.coeff(2), rat_int(113400));
        // (15)!/(3!)⁵ = 168168000.
        assert_eq!(s.coeff(3), rat_int(168_168_000));
        // Defining ratio at n = 2: c₃/c₂ = 5·11·12·13·14/3⁴.
        assert_eq!(
            s.coeff(3) / s.coeff(2),
            rat(5 * 11 * 12 * 13 * 14, 81)
        );
    }

    #[test]
    fn psi1_regular_part() {
        let s = psi1_series(2);
        assert_eq!(s.regular.coeff(0), rat_int(0));
        // 120·(1/2 + 1/3 + 1/4 + 1/5) = 154.
        assert_eq!(s.regular.coeff(1), rat_int(154));
        // 113400·(1/3 + … + 1/10) = 113400·3601/2520 = 162045.
        assert_eq!(s.regular.coeff(2), rat_int(162_045));
        assert_eq!(s.log_part, psi0_series(2));
    }

    #[test]
    fn wronskian_against_scalar_expansion() {
        // Independent expansion with scalar arithmetic through order 3:
        // tW = ψ₀² + t(ψ₀φ′ − ψ₀′φ) with φₙ = cₙ(H₅ₙ − Hₙ).
        let c = [
            rat_int(1),
            rat_int(120),
            rat_int(113_400),
            rat_int(168_168_000),
        ];
        let h = |from: i64, to: i64| -> Rat {
            (from..=to).map(|k| rat(1, k)).fold(Rat::zero(), |a, b| a + b)
        };
        let phi = [
            Rat::zero(),
            &c[1] * h(2, 5),
            &c[2] * h(3, 10),
            &c[3] * h(4, 15),
        ];
        // (ψ₀²)ₘ + Σ_{i+j=m−1} cᵢ(j+1)φ_{j+1} − (i+1)c_{i+1}φ_j.
        let mut expected = vec![Rat::zero(); 4];
        for m in 0..=3usize {
            for i in 0..=m {
                expected[m] += &c[i] * &c[m - i];
            }
            if m >= 1 {
                for i in 0..=(m - 1) {
                    let j = m - 1 - i;
                    expected[m] += &c[i] * rat_int(j as i64 + 1) * &phi[j + 1];
                    expected[m] -= rat_int(i as i64 + 1) * &c[i + 1] * &phi[j];
                }
            }
        }
        let tw = wronskian_series(3).unwrap();
        assert_eq!(tw.coeffs(), &expected[..]);
        // Frozen spot values.
        assert_eq!(tw.coeff(0), rat_int(1));
        assert_eq!(tw.coeff(1), rat_int(394));
        assert_eq!(tw.coeff(2), rat_int(565_290));
    }

    #[test]
    fn lambda_theta_quotient() {
        let lambda = lambda_q_series(3);
        assert_eq!(lambda.coeff(0), Rat::zero());
        // Hand expansion: quotient = 2 − 4q + 10q² − …, fourth power
        // 16 − 128q + 704q² − …, then shift and divide by 5⁵.
        assert_eq!(lambda.coeff(1), rat(16, 3125));
        assert_eq!(lambda.coeff(2), rat(-128, 3125));
        assert_eq!(lambda.coeff(3), rat(704, 3125));
    }

    #[test]
    fn inverse_f_small_order() {
        let inv = inverse_f_coefficients(12).unwrap();
        // qF(0) = tW(0)·(q/λ)(0) = 3125/16, so 1/(qF) starts at 16/3125.
        assert_eq!(inv.coeff(0), rat(16, 3125));
        // Defining identity against an independently assembled qF.
        let tw = wronskian_series(12).unwrap();
        let lambda = lambda_q_series(12);
        let qf = series_mul(
            &series_compose(&tw, &lambda).unwrap(),
            &series_reciprocal(&lambda.shift_down().with_order(12)).unwrap(),
        );
        assert_eq!(qf.coeff(0), rat(3125, 16));
        assert_eq!(series_mul(&inv, &qf), RationalSeries::from_ints(&[1]).with_order(12));
    }

    #[test]
    fn growth_fit_synthetic_models() {
        // cₙ = exp(2√n): the √n model fits with slope ≈ 2 and near-zero
        // residual.
        let coeffs: Vec<Rat> = (0..=80)
            .map(|n| Rat::from_float((2.0 * (n as f64).sqrt()).exp()).unwrap())
            .collect();
        let fit = growth_fit(&RationalSeries::new(coeffs), 10).unwrap();
        assert!((fit.c - 2.0).abs() < 1e-6);
        assert!(fit.rms_sqrt < 1e-9);
        assert!(fit.rms_linear > 1e-2);
        assert_eq!(fit.window, (10, 80));

        // cₙ = 2ⁿ: the linear model wins.
        let coeffs: Vec<Rat> = (0..=60).map(|n| Rat::from_integer(BigInt::one() << n)).collect();
        let fit = growth_fit(&RationalSeries::new(coeffs), 10).unwrap();
        assert!(fit.rms_linear < 1e-9);
        assert!(fit.rms_sqrt > 1e-2);

        let mut coeffs: Vec<Rat> = (0..=30).map(|_| rat_int(1)).collect();
        coeffs[20] = Rat::zero();
        assert!(matches!(
            growth_fit(&RationalSeries::new(coeffs), 10),
            Err(SeriesError::ZeroCoefficientInWindow(20))
        ));
        assert!(matches!(
            growth_fit(&RationalSeries::from_ints(&[1, 1]), 5),
            Err(SeriesError::InvalidWindow(_))
        ));
    }

    #[test]
    fn coefficients_csv_format() {
        let csv = coefficients_csv(&RationalSeries::new(vec![
            rat_int(1),
            rat(-3, 7),
            Rat::zero(),
        ]));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,numerator,denominator,log_abs");
        assert_eq!(lines[1], "0,1,1,0.000000");
        assert!(lines[2].starts_with("1,-3,7,-0.8472"));
        assert_eq!(lines[3], "2,0,1,");
        assert_eq!(lines.len(), 4);
    }

    /// Timing probe for the full order-200 pipeline; run manually with
    /// `cargo test -p hyperlyap --lib -- --ignored --nocapture`.
    #[test]
    #[ignore]
    fn inverse_f_order_200_timing() {
        let start = std::time::Instant::now();
        let inv = inverse_f_coefficients(200).unwrap();
        let elapsed = start.elapsed();
        println!(
            "order-200 pipeline: {:.2?}, last coefficient ~{} bits",
            elapsed,
            inv.coeff(200).numer().bits()
        );
        assert_eq!(inv.order(), 200);
    }
}
