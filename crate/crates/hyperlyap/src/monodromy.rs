//! Hypergeometric monodromy representations: companion-matrix construction,
//! a fourteen-case catalog of rank-4 symplectic realizations, non-expanding
//! cusp spectra, generator-word images, Hodge numbers, and local exponents.
//!
//! Conventions, pinned once and covered by tests:
//! - With a = e^{2πiα} and b = e^{2πiβ}: h∞ is the companion matrix of
//!   Π(X − aᵢ), h0 the inverse of the companion matrix of Π(X − bⱼ), and
//!   h1 = h∞⁻¹·h0⁻¹, so h∞·h1·h0 = Id exactly.
//! - Exact rational arithmetic whenever both characteristic polynomials are
//!   rational, which happens exactly when each exponent multiset is a union
//!   of complete primitive-root packets p/q (all residues coprime to q, with
//!   equal multiplicity); the polynomials are then cyclotomic products.
//!   Otherwise matrices fall back to complex double precision.
//! - Word images: the translation generator A maps to the matrix at the
//!   singular point assigned to its cusp, and B maps to the INVERSE of the
//!   matrix at its assigned point. Defaults: A ↦ h0, B ↦ h1⁻¹, which makes
//!   the image of A⁻¹B equal to h∞ exactly.

use crate::exact::{
    cyclotomic, durand_kerner, euler_phi, rat_to_f64, strip_cyclotomic_factors, Rat, RatMat,
    RatPoly,
};
use crate::hodge::{ExponentLocation, LocalExponentData};
use crate::hyperbolic::{Generator, GeneratorWord};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;
use thiserror::Error;

/// Eigenvalue-modulus tolerance for the non-expanding gate (only exercised
/// by floating-point spectra; exact cyclotomic factors contribute moduli
/// that are exactly one).
pub const NONEXPANDING_TOL: f64 = 1e-8;

/// Error type for representation construction and catalog lookups.
#[derive(Debug, Error)]
pub enum MonodromyError {
    /// Parameter vectors rejected at construction: shape or range violations,
    /// or a reducible pair αᵢ + βⱼ ∈ ℤ.
    #[error("invalid hypergeometric parameters: {0}")]
    InvalidParams(String),
    /// Catalog lookup outside 1..=14.
    #[error("unknown catalog case {0}; valid ids are 1..=14")]
    UnknownCase(u32),
    /// Local exponents at the requested point are defined only for catalog
    /// cases.
    #[error("local exponents unsupported at point {0} for generic parameters")]
    UnsupportedPoint(String),
}

/// Validated hypergeometric parameters: two sorted lists of rationals in
/// [0,1) of equal positive length, with αᵢ + βⱼ ∉ ℤ for all pairs
/// (irreducibility).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypergeometricParams {
    alpha: Vec<Rat>,
    beta: Vec<Rat>,
}

impl HypergeometricParams {
    pub fn new(mut alpha: Vec<Rat>, mut beta: Vec<Rat>) -> Result<Self, MonodromyError> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(MonodromyError::InvalidParams(format!(
                "need two parameter lists of equal positive length, got {} and {}",
                alpha.len(),
                beta.len()
            )));
        }
        for e in alpha.iter().chain(beta.iter()) {
            if e.is_negative() || *e >= Rat::one() {
                return Err(MonodromyError::InvalidParams(format!(
                    "exponent {e} outside [0,1)"
                )));
            }
        }
        for a in &alpha {
            for b in &beta {
                if (a + b).is_integer() {
                    return Err(MonodromyError::InvalidParams(format!(
                        "reducible pair: alpha={a}, beta={b} sum to an integer"
                    )));
                }
            }
        }
        alpha.sort();
        beta.sort();
        Ok(Self { alpha, beta })
    }

    pub fn rank(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[Rat] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Rat] {
        &self.beta
    }
}

/// Whether a representation carries exact rational or complex floating
/// matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithmeticMode {
    Exact,
    Floating,
}

impl fmt::Display for ArithmeticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithmeticMode::Exact => "exact",
            ArithmeticMode::Floating => "floating",
        })
    }
}

/// The three monodromy matrices in either arithmetic mode.
#[derive(Clone, Debug, PartialEq)]
pub enum RepMatrices {
    Exact {
        h0: RatMat,
        h1: RatMat,
        hinf: RatMat,
    },
    Floating {
        h0: DMatrix<Complex64>,
        h1: DMatrix<Complex64>,
        hinf: DMatrix<Complex64>,
    },
}

/// A monodromy representation of the free group on two generators,
/// presented by the matrices at the three singular points. Immutable after
/// construction.
///
/// `unit_spectrum` records that floating matrices were built from roots of
/// modulus exactly one (companions of Π(X − e^{2πiθ})). The certificate
/// matters because it cannot be recovered from the stored entries: rounding
/// a defective matrix perturbs a k-fold eigenvalue by ~ε^{1/k} (≈3e−8
/// already at k = 2), so a numerical check at the gate tolerance would
/// reject spectra that are unit by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct MonodromyRep {
    rank: usize,
    matrices: RepMatrices,
    unit_spectrum: bool,
}

/// The three singular points of the rank-n system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingPoint {
    P0,
    P1,
    PInf,
}

impl fmt::Display for SingPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingPoint::P0 => "0",
            SingPoint::P1 => "1",
            SingPoint::PInf => "inf",
        })
    }
}

/// Assignment of singular points to the two cusp loops of the fundamental
/// domain; the third point is implied. The default is the classical
/// identification (translation cusp ↦ t=0, origin cusp ↦ t=1); permuting it
/// is a sensitivity switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuspAssignment {
    /// Point assigned to the loop around the width-two translation cusp
    /// (generator A).
    pub cusp_infinity: SingPoint,
    /// Point assigned to the loop around the cusp at the origin
    /// (generator B).
    pub cusp_zero: SingPoint,
}

impl Default for CuspAssignment {
    fn default() -> Self {
        Self {
            cusp_infinity: SingPoint::P0,
            cusp_zero: SingPoint::P1,
        }
    }
}

impl CuspAssignment {
    /// The two assigned points must differ.
    pub fn validate(&self) -> Result<(), MonodromyError> {
        if self.cusp_infinity == self.cusp_zero {
            return Err(MonodromyError::InvalidParams(format!(
                "cusp assignment must use two distinct points, got {} twice",
                self.cusp_infinity
            )));
        }
        Ok(())
    }

    /// The point not assigned to either cusp loop.
    pub fn third(&self) -> SingPoint {
        use SingPoint::{P0, P1, PInf};
        for p in [P0, P1, PInf] {
            if p != self.cusp_infinity && p != self.cusp_zero {
                return p;
            }
        }
        unreachable!("two distinct points always leave a third")
    }
}

/// A single matrix in the representation's arithmetic mode.
#[derive(Clone, Debug, PartialEq)]
pub enum RepMatrix {
    Exact(RatMat),
    Floating(DMatrix<Complex64>),
}

impl RepMatrix {
    pub fn mul(&self, rhs: &RepMatrix) -> RepMatrix {
        match (self, rhs) {
            (RepMatrix::Exact(a), RepMatrix::Exact(b)) => RepMatrix::Exact(a.mul(b)),
            (RepMatrix::Floating(a), RepMatrix::Floating(b)) => RepMatrix::Floating(a * b),
            _ => panic!("mixed arithmetic modes"),
        }
    }

    pub fn inverse(&self) -> RepMatrix {
        match self {
            RepMatrix::Exact(m) => RepMatrix::Exact(
                m.inverse().expect("monodromy matrices are invertible"),
            ),
            RepMatrix::Floating(m) => RepMatrix::Floating(
                m.clone()
                    .try_inverse()
                    .expect("monodromy matrices are invertible"),
            ),
        }
    }

    fn pow(&self, mut k: u64) -> RepMatrix {
        let mut result = match self {
            RepMatrix::Exact(m) => RepMatrix::Exact(RatMat::identity(m.size())),
            RepMatrix::Floating(m) => RepMatrix::Floating(DMatrix::identity(m.nrows(), m.ncols())),
        };
        let mut square = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&square);
            }
            k >>= 1;
            if k > 0 {
                square = square.mul(&square);
            }
        }
        result
    }

    /// Exact payload, when in exact mode.
    pub fn as_exact(&self) -> Option<&RatMat> {
        match self {
            RepMatrix::Exact(m) => Some(m),
            RepMatrix::Floating(_) => None,
        }
    }

    /// Largest entrywise deviation from another matrix of the same mode.
    pub fn max_deviation(&self, rhs: &RepMatrix) -> f64 {
        match (self, rhs) {
            (RepMatrix::Exact(a), RepMatrix::Exact(b)) => {
                let n = a.size();
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        worst = worst.max(rat_to_f64(&(&a[(i, j)] - &b[(i, j)])).abs());
                    }
                }
                worst
            }
            (RepMatrix::Floating(a), RepMatrix::Floating(b)) => {
                (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
            }
            _ => panic!("mixed arithmetic modes"),
        }
    }
}

impl MonodromyRep {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrices(&self) -> &RepMatrices {
        &self.matrices
    }

    pub fn arithmetic_mode(&self) -> ArithmeticMode {
        match self.matrices {
            RepMatrices::Exact { .. } => ArithmeticMode::Exact,
            RepMatrices::Floating { .. } => ArithmeticMode::Floating,
        }
    }

    /// The rank-n representation sending everything to the identity.
    pub fn trivial(rank: usize) -> Self {
        let id = RatMat::identity(rank);
        Self {
            rank,
            matrices: RepMatrices::Exact {
                h0: id.clone(),
                h1: id.clone(),
                hinf: id,
            },
            unit_spectrum: true,
        }
    }

    /// Build an exact representation from h0 and h1; h∞ = (h1·h0)⁻¹ keeps
    /// the product relation exact.
    pub fn from_exact(h0: RatMat, h1: RatMat) -> Result<Self, MonodromyError> {
        if h0.size() != h1.size() {
            return Err(MonodromyError::InvalidParams(
                "h0 and h1 must have equal size".into(),
            ));
        }
        let hinf = h1
            .mul(&h0)
            .inverse()
            .ok_or_else(|| MonodromyError::InvalidParams("h1*h0 is singular".into()))?;
        Ok(Self {
            rank: h0.size(),
            matrices: RepMatrices::Exact { h0, h1, hinf },
            unit_spectrum: false,
        })
    }

    /// Conjugated representation g·h·g⁻¹ for each matrix; g must be an
    /// invertible rational matrix of matching size.
    pub fn conjugate(&self, g: &RatMat) -> Result<Self, MonodromyError> {
        if g.size() != self.rank {
            return Err(MonodromyError::InvalidParams(format!(
                "conjugator size {} does not match rank {}",
                g.size(),
                self.rank
            )));
        }
        let g_inv = g
            .inverse()
            .ok_or_else(|| MonodromyError::InvalidParams("singular conjugator".into()))?;
        let matrices = match &self.matrices {
            RepMatrices::Exact { h0, h1, hinf } => {
                let conj = |m: &RatMat| g.mul(m).mul(&g_inv);
                RepMatrices::Exact {
                    h0: conj(h0),
                    h1: conj(h1),
                    hinf: conj(hinf),
                }
            }
            RepMatrices::Floating { h0, h1, hinf } => {
                let gc = complex_from_rational(g);
                let gc_inv = complex_from_rational(&g_inv);
                let conj = |m: &DMatrix<Complex64>| &gc * m * &gc_inv;
                RepMatrices::Floating {
                    h0: conj(h0),
                    h1: conj(h1),
                    hinf: conj(hinf),
                }
            }
        };
        Ok(Self {
            rank: self.rank,
            matrices,
            unit_spectrum: self.unit_spectrum,
        })
    }

    /// Monodromy matrix at one singular point.
    pub fn point_matrix(&self, p: SingPoint) -> RepMatrix {
        match &self.matrices {
            RepMatrices::Exact { h0, h1, hinf } => RepMatrix::Exact(
                match p {
                    SingPoint::P0 => h0,
                    SingPoint::P1 => h1,
                    SingPoint::PInf => hinf,
                }
                .clone(),
            ),
            RepMatrices::Floating { h0, h1, hinf } => RepMatrix::Floating(
                match p {
                    SingPoint::P0 => h0,
                    SingPoint::P1 => h1,
                    SingPoint::PInf => hinf,
                }
                .clone(),
            ),
        }
    }

    fn identity_matrix(&self) -> RepMatrix {
        match &self.matrices {
            RepMatrices::Exact { .. } => RepMatrix::Exact(RatMat::identity(self.rank)),
            RepMatrices::Floating { .. } => {
                RepMatrix::Floating(DMatrix::identity(self.rank, self.rank))
            }
        }
    }

    /// Dimension of the real fiber the simulation acts on: rank for exact
    /// (real rational) matrices, 2·rank for realified complex ones.
    pub fn fiber_dim(&self) -> usize {
        match self.matrices {
            RepMatrices::Exact { .. } => self.rank,
            RepMatrices::Floating { .. } => 2 * self.rank,
        }
    }

    /// Real images of the generators A, A⁻¹, B, B⁻¹ in that order, under the
    /// given cusp assignment. Inverses are computed exactly (or by complex
    /// LU) before the final float conversion; complex matrices are realified
    /// into 2r×2r blocks [[Re, −Im], [Im, Re]].
    pub fn generator_images_f64(
        &self,
        assignment: &CuspAssignment,
    ) -> Result<[DMatrix<f64>; 4], MonodromyError> {
        assignment.validate()?;
        match &self.matrices {
            RepMatrices::Exact { .. } => {
                let a = self
                    .point_matrix(assignment.cusp_infinity)
                    .as_exact()
                    .expect("exact mode")
                    .clone();
                let m_zero = self
                    .point_matrix(assignment.cusp_zero)
                    .as_exact()
                    .expect("exact mode")
                    .clone();
                let a_inv = a.inverse().expect("monodromy matrices are invertible");
                let m_zero_inv = m_zero
                    .inverse()
                    .expect("monodromy matrices are invertible");
                Ok([a.to_f64(), a_inv.to_f64(), m_zero_inv.to_f64(), m_zero.to_f64()])
            }
            RepMatrices::Floating { .. } => {
                let RepMatrix::Floating(a) = self.point_matrix(assignment.cusp_infinity) else {
                    unreachable!()
                };
                let RepMatrix::Floating(m_zero) = self.point_matrix(assignment.cusp_zero) else {
                    unreachable!()
                };
                let a_inv = a
                    .clone()
                    .try_inverse()
                    .expect("monodromy matrices are invertible");
                let m_zero_inv = m_zero
                    .clone()
                    .try_inverse()
                    .expect("monodromy matrices are invertible");
                Ok([
                    realify(&a),
                    realify(&a_inv),
                    realify(&m_zero_inv),
                    realify(&m_zero),
                ])
            }
        }
    }
}

fn complex_from_rational(m: &RatMat) -> DMatrix<Complex64> {
    let n = m.size();
    DMatrix::from_fn(n, n, |i, j| Complex64::new(rat_to_f64(&m[(i, j)]), 0.0))
}

/// Real 2r×2r block form [[Re, −Im], [Im, Re]] of a complex matrix; its
/// eigenvalues are those of the complex matrix together with their
/// conjugates.
fn realify(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let r = m.nrows();
    DMatrix::from_fn(2 * r, 2 * r, |i, j| {
        let e = m[(i % r, j % r)];
        match (i / r, j / r) {
            (0, 0) | (1, 1) => e.re,
            (0, 1) => -e.im,
            _ => e.im,
        }
    })
}

/// Companion matrix (subdiagonal ones, last column −c₀…−c_{n−1}) of a monic
/// rational polynomial.
fn companion(poly: &RatPoly) -> RatMat {
    let n = poly.degree();
    assert!(
        n >= 1 && poly.coeffs()[n].is_one(),
        "needs a monic polynomial of positive degree"
    );
    let mut m = RatMat::zeros(n);
    for i in 0..n {
        if i + 1 < n {
            m[(i + 1, i)] = Rat::one();
        }
        m[(i, n - 1)] = -poly.coeffs()[i].clone();
    }
    m
}

fn complex_companion(coeffs: &[Complex64]) -> DMatrix<Complex64> {
    let n = coeffs.len() - 1;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        if i + 1 < n {
            m[(i + 1, i)] = Complex64::new(1.0, 0.0);
        }
        m[(i, n - 1)] = -coeffs[i];
    }
    m
}

/// Π(X − e^{2πie}) as an exact cyclotomic product, when the exponent
/// multiset is Galois-stable (complete coprime-residue packets with equal
/// multiplicities); `None` otherwise.
fn cyclotomic_char_poly(exps: &[Rat]) -> Option<RatPoly> {
    let mut groups: BTreeMap<u64, BTreeMap<u64, u64>> = BTreeMap::new();
    for e in exps {
        let q = e.denom().to_u64()?;
        let p = e.numer().to_u64()?;
        *groups.entry(q).or_default().entry(p).or_insert(0) += 1;
    }
    let mut poly = RatPoly::one();
    for (q, residues) in groups {
        if residues.len() as u64 != euler_phi(q) {
            return None;
        }
        let mut counts = residues.values();
        let multiplicity = *counts.next().expect("non-empty residue group");
        if counts.any(|c| *c != multiplicity) {
            return None;
        }
        let phi_q = cyclotomic(q);
        for _ in 0..multiplicity {
            poly = poly.mul(&phi_q);
        }
    }
    Some(poly)
}

fn complex_poly(exps: &[Rat]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for e in exps {
        let theta = std::f64::consts::TAU * rat_to_f64(e);
        let root = Complex64::new(theta.cos(), theta.sin());
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= root * c;
        }
        coeffs = next;
    }
    coeffs
}

/// Companion-matrix construction of the monodromy representation with the
/// given local exponents: h∞ realizes Π(X − e^{2πiαᵢ}), h0⁻¹ realizes
/// Π(X − e^{2πiβⱼ}), h1 = h∞⁻¹·h0⁻¹. Exact whenever both polynomials are
/// rational.
pub fn levelt_construct(p: &HypergeometricParams) -> MonodromyRep {
    let rank = p.rank();
    if let (Some(pa), Some(pb)) = (
        cyclotomic_char_poly(p.alpha()),
        cyclotomic_char_poly(p.beta()),
    ) {
        let hinf = companion(&pa);
        let h0_inv = companion(&pb);
        let h0 = h0_inv
            .inverse()
            .expect("root-of-unity companion is invertible");
        let h1 = hinf
            .inverse()
            .expect("root-of-unity companion is invertible")
            .mul(&h0_inv);
        MonodromyRep {
            rank,
            matrices: RepMatrices::Exact { h0, h1, hinf },
            unit_spectrum: true,
        }
    } else {
        let hinf = complex_companion(&complex_poly(p.alpha()));
        let h0_inv = complex_companion(&complex_poly(p.beta()));
        let h0 = h0_inv
            .clone()
            .try_inverse()
            .expect("unit-circle companion is invertible");
        let h1 = hinf
            .clone()
            .try_inverse()
            .expect("unit-circle companion is invertible")
            * &h0_inv;
        MonodromyRep {
            rank,
            matrices: RepMatrices::Floating { h0, h1, hinf },
            unit_spectrum: true,
        }
    }
}

/// One row of the rank-4 catalog: parameters, the two unipotent generators
/// T0, T1 of the realization, and the symplectic form they preserve.
#[derive(Clone, Debug)]
pub struct CYCase {
    pub id: u32,
    /// Complete-intersection model label when one is attached to the row;
    /// empty otherwise.
    pub label: &'static str,
    pub c: i64,
    pub d: i64,
    pub mu1: Rat,
    pub mu2: Rat,
    pub t0: RatMat,
    pub t1: RatMat,
    pub omega: RatMat,
    /// Whether the group is expected to be of infinite index in Sp(4,ℤ)
    /// (rows 1-7), equivalently whether the lower bound for λ₁+λ₂ is
    /// expected to be saturated.
    pub thin: bool,
    /// Reference approximation of λ₁ for regression comparisons.
    pub lambda1_ref: f64,
    /// Reference approximation of λ₁+λ₂ for regression comparisons.
    pub lambda_sum_ref: f64,
}

impl CYCase {
    /// Local-exponent parameters of the row: α = (μ₁, μ₂, 1−μ₂, 1−μ₁),
    /// β = (0,0,0,0).
    pub fn params(&self) -> HypergeometricParams {
        let one = Rat::one();
        HypergeometricParams::new(
            vec![
                self.mu1.clone(),
                self.mu2.clone(),
                &one - &self.mu2,
                &one - &self.mu1,
            ],
            vec![Rat::zero(); 4],
        )
        .expect("catalog parameters are valid")
    }
}

fn t0_matrix() -> RatMat {
    RatMat::from_rows(vec![
        vec![Rat::one(), Rat::zero(), Rat::zero(), Rat::zero()],
        vec![Rat::one(), Rat::one(), Rat::zero(), Rat::zero()],
        vec![Rat::new(1.into(), 2.into()), Rat::one(), Rat::one(), Rat::zero()],
        vec![
            Rat::new(1.into(), 6.into()),
            Rat::new(1.into(), 2.into()),
            Rat::one(),
            Rat::one(),
        ],
    ])
}

fn t1_matrix(c: i64, d: i64) -> RatMat {
    let gamma = Rat::new(c.into(), 12.into());
    let dd = Rat::from_integer(d.into());
    let mut m = RatMat::identity(4);
    m[(0, 1)] = -gamma;
    m[(0, 3)] = -dd;
    m
}

fn omega_matrix(c: i64, d: i64) -> RatMat {
    let gamma = Rat::new(c.into(), 12.into());
    let dd = Rat::from_integer(d.into());
    let mut m = RatMat::zeros(4);
    m[(0, 1)] = gamma.clone();
    m[(1, 0)] = -gamma;
    m[(0, 3)] = dd.clone();
    m[(3, 0)] = -dd.clone();
    m[(1, 2)] = -dd.clone();
    m[(2, 1)] = dd;
    m
}

static CATALOG: OnceLock<Vec<CYCase>> = OnceLock::new();

/// The fourteen-row rank-4 catalog, in id order.
pub fn cy_catalog() -> &'static [CYCase] {
    CATALOG
        .get_or_init(|| {
            #[allow(clippy::type_complexity)]
            let rows: [(u32, &'static str, i64, i64, (i64, i64), (i64, i64), bool, f64, f64); 14] = [
                (1, "", 46, 1, (1, 12), (5, 12), true, 0.97, 1.0),
                (2, "", 44, 2, (1, 8), (3, 8), true, 0.95, 1.0),
                (3, "", 52, 4, (1, 6), (1, 2), true, 1.27, 4.0 / 3.0),
                (4, "P4[5]", 50, 5, (1, 5), (2, 5), true, 1.12, 1.2),
                (5, "", 56, 8, (1, 4), (1, 2), true, 1.40, 1.5),
                (6, "P6[2,2,3]", 60, 12, (1, 3), (1, 2), true, 1.53, 5.0 / 3.0),
                (7, "P7[2,2,2,2]", 64, 16, (1, 2), (1, 2), true, 1.75, 2.0),
                (8, "", 22, 1, (1, 6), (1, 6), false, 0.75, 0.92),
                (9, "", 34, 1, (1, 10), (3, 10), false, 0.77, 0.83),
                (10, "", 32, 2, (1, 6), (1, 4), false, 0.84, 0.97),
                (11, "", 42, 3, (1, 6), (1, 3), false, 0.96, 1.06),
                (12, "", 40, 4, (1, 4), (1, 4), false, 1.07, 1.30),
                (13, "", 48, 6, (1, 4), (1, 3), false, 1.15, 1.31),
                (14, "", 54, 9, (1, 3), (1, 3), false, 1.34, 1.60),
            ];
            rows.iter()
                .map(|&(id, label, c, d, mu1, mu2, thin, l1, l12)| CYCase {
                    id,
                    label,
                    c,
                    d,
                    mu1: Rat::new(mu1.0.into(), mu1.1.into()),
                    mu2: Rat::new(mu2.0.into(), mu2.1.into()),
                    t0: t0_matrix(),
                    t1: t1_matrix(c, d),
                    omega: omega_matrix(c, d),
                    thin,
                    lambda1_ref: l1,
                    lambda_sum_ref: l12,
                })
                .collect()
        })
        .as_slice()
}

/// Catalog row by id.
pub fn cy_case(id: u32) -> Result<&'static CYCase, MonodromyError> {
    if !(1..=14).contains(&id) {
        return Err(MonodromyError::UnknownCase(id));
    }
    Ok(&cy_catalog()[id as usize - 1])
}

/// Exact symplectic realization of a catalog row: h0 = T0, h1 = T1,
/// h∞ = (T1·T0)⁻¹.
pub fn cy_realization(id: u32) -> Result<MonodromyRep, MonodromyError> {
    let case = cy_case(id)?;
    let hinf = case
        .t1
        .mul(&case.t0)
        .inverse()
        .expect("unipotent product is invertible");
    Ok(MonodromyRep {
        rank: 4,
        matrices: RepMatrices::Exact {
            h0: case.t0.clone(),
            h1: case.t1.clone(),
            hinf,
        },
        unit_spectrum: true,
    })
}

/// CSV dump of the catalog with fixed headers `id,label,C,d,mu1,mu2`.
pub fn catalog_csv() -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id", "label", "C", "d", "mu1", "mu2"])
        .expect("in-memory csv write");
    for case in cy_catalog() {
        w.write_record([
            case.id.to_string(),
            case.label.to_string(),
            case.c.to_string(),
            case.d.to_string(),
            case.mu1.to_string(),
            case.mu2.to_string(),
        ])
        .expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf8")
}

/// Eigenvalue moduli at the three singular points, plus the gate flag.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspSpectrum {
    pub at_zero: Vec<f64>,
    pub at_one: Vec<f64>,
    pub at_infinity: Vec<f64>,
    pub non_expanding: bool,
}

fn eigen_moduli_exact(m: &RatMat) -> Vec<f64> {
    // Cyclotomic factors contribute exact units. The cyclotomic-free
    // remainder is peeled into square-free layers (p / gcd(p, p') holds each
    // distinct root once) so the numerical rooting only ever sees simple,
    // well-conditioned roots, even when the matrix is defective.
    let (units, remainder) = strip_cyclotomic_factors(&m.char_poly());
    let mut out = vec![1.0; units];
    let mut p = remainder;
    while p.degree() > 0 {
        let g = p.gcd(&p.derivative());
        let radical = p.div_exact(&g).expect("gcd divides its arguments");
        out.extend(radical.roots_f64().iter().map(|z| z.norm()));
        p = g;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Upper bound on ln ρ(M) from ‖M^(2^k)‖_F^(1/2^k) with per-step
/// normalization. The bound holds for every k and decreases to ln ρ; 48
/// squarings push the polynomial transient of defective unit-modulus
/// spectra below 1e−12, far under the gate tolerance. `None` on numerical
/// degeneration (zero or non-finite norms).
fn log_spectral_radius_upper(m: &DMatrix<Complex64>) -> Option<f64> {
    let norm = m.norm();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    let mut cur = m / Complex64::new(norm, 0.0);
    let mut log_scale = norm.ln();
    for _ in 0..48 {
        let sq = &cur * &cur;
        let s = sq.norm();
        if !s.is_finite() || s == 0.0 {
            return None;
        }
        cur = sq / Complex64::new(s, 0.0);
        log_scale = 2.0 * log_scale + s.ln();
    }
    Some(log_scale / 2f64.powi(48))
}

fn eigen_moduli_complex(m: &DMatrix<Complex64>) -> Vec<f64> {
    // Raw eigensolver moduli of a defective matrix carry error ~ε^(1/k) for
    // a k-fold Jordan block (1e−4 at k = 4), useless against the gate
    // tolerance. A two-sided Gelfand bound is robust: if ρ(M) and ρ(M⁻¹)
    // are both certified ≤ 1 + tol, every eigenvalue modulus lies in
    // [1 − tol, 1 + tol] and the spectrum is reported as unit.
    if let Some(inv) = m.clone().try_inverse() {
        if let (Some(log_hi), Some(log_inv_hi)) =
            (log_spectral_radius_upper(m), log_spectral_radius_upper(&inv))
        {
            if log_hi.exp() <= 1.0 + NONEXPANDING_TOL
                && log_inv_hi.exp() <= 1.0 + NONEXPANDING_TOL
            {
                return vec![1.0; m.nrows()];
            }
        }
    }
    // Uncertified spectrum: root the characteristic polynomial instead of
    // QR-iterating, since Francis shifts can cycle forever on the doubly
    // symmetric spectra self-dual monodromies produce. Coefficients come
    // from the Newton trace identities; sizes here are tiny.
    let n = m.nrows();
    let mut traces = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut power = m.clone();
    for k in 1..=n {
        traces[k] = power.trace();
        if k < n {
            power = &power * m;
        }
    }
    // e_k = (1/k) Σ_{i=1..k} (−1)^{i−1} e_{k−i} tr(M^i); tail coefficient
    // of X^{n−k} is (−1)^k e_k.
    let mut elem = vec![Complex64::new(0.0, 0.0); n + 1];
    elem[0] = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut sign = 1.0;
        for i in 1..=k {
            acc += sign * elem[k - i] * traces[i];
            sign = -sign;
        }
        elem[k] = acc / k as f64;
    }
    let tail: Vec<Complex64> = (0..n)
        .map(|j| {
            let k = n - j;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * elem[k]
        })
        .collect();
    let mut moduli: Vec<f64> = durand_kerner(&tail).iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    moduli
}

/// Eigenvalue moduli of the three monodromy matrices and whether every one
/// of them is within [`NONEXPANDING_TOL`] of one (the integrability gate for
/// the simulation).
pub fn check_nonexpanding(rep: &MonodromyRep) -> CuspSpectrum {
    let moduli = |p: SingPoint| match rep.point_matrix(p) {
        RepMatrix::Exact(m) => eigen_moduli_exact(&m),
        // Floating matrices carrying the constructed-unit-spectrum
        // certificate report the ideal spectrum; recomputing it from the
        // rounded entries would be strictly less accurate.
        RepMatrix::Floating(m) if rep.unit_spectrum => vec![1.0; m.nrows()],
        RepMatrix::Floating(m) => eigen_moduli_complex(&m),
    };
    let at_zero = moduli(SingPoint::P0);
    let at_one = moduli(SingPoint::P1);
    let at_infinity = moduli(SingPoint::PInf);
    let non_expanding = at_zero
        .iter()
        .chain(&at_one)
        .chain(&at_infinity)
        .all(|m| (m - 1.0).abs() <= NONEXPANDING_TOL);
    CuspSpectrum {
        at_zero,
        at_one,
        at_infinity,
        non_expanding,
    }
}

/// Image of a freely reduced generator word under the default cusp
/// assignment.
pub fn rep_of_word(rep: &MonodromyRep, w: &GeneratorWord) -> RepMatrix {
    rep_of_word_with(rep, w, &CuspAssignment::default())
}

/// Image of a freely reduced generator word; the homomorphism sends A to the
/// matrix at `assignment.cusp_infinity` and B to the inverse of the matrix
/// at `assignment.cusp_zero`.
pub fn rep_of_word_with(
    rep: &MonodromyRep,
    w: &GeneratorWord,
    assignment: &CuspAssignment,
) -> RepMatrix {
    assignment
        .validate()
        .expect("cusp assignment must use distinct points");
    let img_a = rep.point_matrix(assignment.cusp_infinity);
    let img_b = rep.point_matrix(assignment.cusp_zero).inverse();
    let images = [img_a.inverse(), img_b.inverse(), img_a, img_b];
    let image_of = |g: Generator| match g {
        Generator::A => &images[2],
        Generator::AInv => &images[0],
        Generator::B => &images[3],
        Generator::BInv => &images[1],
    };
    let mut out = rep.identity_matrix();
    for (g, k) in w.runs() {
        out = out.mul(&image_of(*g).pow(*k));
    }
    out
}

/// Hodge numbers of the weight filtration attached to valid parameters:
/// grading ρ(k) = #{j : αⱼ < βₖ} − k for k = 1..n, shifted to start at 0;
/// entry p counts parameters with shifted grading p.
pub fn hodge_numbers(p: &HypergeometricParams) -> Vec<u32> {
    let rho: Vec<i64> = (1..=p.rank())
        .map(|k| {
            let bk = &p.beta()[k - 1];
            let below = p.alpha().iter().filter(|a| *a < bk).count() as i64;
            below - k as i64
        })
        .collect();
    let min = *rho.iter().min().expect("rank is positive");
    let max = *rho.iter().max().expect("rank is positive");
    let mut h = vec![0u32; (max - min + 1) as usize];
    for v in rho {
        h[(v - min) as usize] += 1;
    }
    h
}

/// Where local exponents come from: a catalog row (all three points known)
/// or generic parameters (only 0 and ∞ defined).
#[derive(Clone, Copy, Debug)]
pub enum ExponentSource<'a> {
    Case(&'a CYCase),
    Params(&'a HypergeometricParams),
}

/// Sorted local exponents at one singular point. Catalog rows carry
/// (0,0,0,0) at t=0, (0,1,1,2) at t=1, and (μ₁, μ₂, 1−μ₂, 1−μ₁) at t=∞;
/// generic parameters carry β at 0 and α at ∞ only.
pub fn local_exponents(
    source: ExponentSource<'_>,
    point: SingPoint,
) -> Result<LocalExponentData, MonodromyError> {
    let exps = match (source, point) {
        (ExponentSource::Case(_), SingPoint::P0) => vec![Rat::zero(); 4],
        (ExponentSource::Case(_), SingPoint::P1) => vec![
            Rat::zero(),
            Rat::one(),
            Rat::one(),
            Rat::from_integer(2.into()),
        ],
        (ExponentSource::Case(case), SingPoint::PInf) => case.params().alpha().to_vec(),
        (ExponentSource::Params(p), SingPoint::P0) => p.beta().to_vec(),
        (ExponentSource::Params(p), SingPoint::PInf) => p.alpha().to_vec(),
        (ExponentSource::Params(_), SingPoint::P1) => {
            return Err(MonodromyError::UnsupportedPoint(SingPoint::P1.to_string()))
        }
    };
    Ok(LocalExponentData::new(
        point.to_string(),
        exps,
        ExponentLocation::Cusp,
    ))
}
