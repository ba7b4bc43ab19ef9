//! Upper-half-plane geometry, the geodesic frame flow, and reduction to the
//! fundamental domain of Γ(2).
//!
//! Conventions used throughout:
//!
//! * points are z = x + iy with y > 0, carrying the metric |dz|²/(2y)² of
//!   constant curvature −4, so that the time-t geodesic flow on frames is
//!   right multiplication by diag(e^t, e^{−t}) and moves i to e^{2t}·i;
//! * frames are real 2×2 matrices of determinant one acting by Möbius
//!   transformations; M and −M act identically and are never distinguished;
//! * Γ(2) is free on the generators A: z ↦ z + 2 and B: z ↦ z/(2z + 1),
//!   with fundamental domain {|Re z| ≤ 1, |2z − 1| ≥ 1, |2z + 1| ≥ 1};
//! * reduction to the domain emits the word of side pairings applied, so a
//!   cocycle over the flow can replay it on the fiber.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Boundary tolerance for the fundamental-domain membership tests.
///
/// Points within this margin of a wall count as inside, which makes
/// reduction idempotent under floating-point noise.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Cap on side-pairing applications in one reduction call. A translation
/// burst A^k counts once; exceeding the cap signals numerical breakdown
/// (the walk no longer makes progress toward the domain).
pub const MAX_APPLICATIONS: u64 = 1_000_000;

/// Errors from the geometry layer.
#[derive(Debug, Error)]
pub enum HyperbolicError {
    /// Reduction failed to reach the fundamental domain within
    /// [`MAX_APPLICATIONS`] side pairings.
    #[error("domain reduction did not terminate within {0} side-pairing applications")]
    NonTermination(u64),
}

/// A point x + iy of the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    pub x: f64,
    /// Imaginary part; must stay positive.
    pub y: f64,
}

impl UpperHalfPoint {
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(y > 0.0, "upper-half-plane point needs y > 0");
        Self { x, y }
    }

    /// The basepoint i of the identity frame.
    pub const I: UpperHalfPoint = UpperHalfPoint { x: 0.0, y: 1.0 };
}

impl fmt::Display for UpperHalfPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", self.x, self.y)
    }
}

/// A real 2×2 matrix [[a, b], [c, d]] of determinant one, up to sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Horizontal translation z ↦ z + t.
    pub fn translation(t: f64) -> Self {
        Self::new(1.0, t, 0.0, 1.0)
    }

    /// Rotation matrix of angle theta; stabilizes the basepoint i.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// diag(e^t, e^{−t}), the time-t geodesic flow at the identity frame.
    pub fn diagonal_flow(t: f64) -> Self {
        Self::new(t.exp(), 0.0, 0.0, (-t).exp())
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Matrix product self · rhs.
    pub fn mul(&self, rhs: &Isometry) -> Isometry {
        Isometry::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    /// Inverse, assuming determinant one (adjugate).
    pub fn inverse(&self) -> Isometry {
        Isometry::new(self.d, -self.b, -self.c, self.a)
    }

    /// Rescale so the determinant returns to one. The determinant of every
    /// matrix produced by this module is positive; drift is all that gets
    /// corrected here.
    pub fn renormalize(&self) -> Isometry {
        let det = self.det();
        assert!(
            det.is_finite() && det > 0.0,
            "isometry determinant degenerated to {det}"
        );
        let s = det.sqrt();
        Isometry::new(self.a / s, self.b / s, self.c / s, self.d / s)
    }

    /// Max absolute entry difference against another matrix, after aligning
    /// signs (M and −M are the same isometry).
    pub fn projective_distance(&self, other: &Isometry) -> f64 {
        let direct = (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs());
        let flipped = (self.a + other.a)
            .abs()
            .max((self.b + other.b).abs())
            .max((self.c + other.c).abs())
            .max((self.d + other.d).abs());
        direct.min(flipped)
    }
}

/// A point of the unit tangent bundle, encoded as the frame carrying the
/// identity frame at i to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub frame: Isometry,
}

impl FrameState {
    pub const IDENTITY: FrameState = FrameState {
        frame: Isometry::IDENTITY,
    };

    pub fn new(frame: Isometry) -> Self {
        Self { frame }
    }
}

/// One of the four generator labels of Γ(2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    /// z ↦ z + 2, matrix [[1, 2], [0, 1]].
    A,
    /// z ↦ z − 2.
    AInv,
    /// z ↦ z/(2z + 1), matrix [[1, 0], [2, 1]].
    B,
    /// z ↦ z/(−2z + 1).
    BInv,
}

impl Generator {
    pub fn inverse(self) -> Generator {
        match self {
            Generator::A => Generator::AInv,
            Generator::AInv => Generator::A,
            Generator::B => Generator::BInv,
            Generator::BInv => Generator::B,
        }
    }

    /// True when the two labels are powers of the same letter.
    pub fn same_letter(self, other: Generator) -> bool {
        matches!(
            (self, other),
            (Generator::A | Generator::AInv, Generator::A | Generator::AInv)
                | (Generator::B | Generator::BInv, Generator::B | Generator::BInv)
        )
    }

    pub fn matrix(self) -> Isometry {
        match self {
            Generator::A => Isometry::new(1.0, 2.0, 0.0, 1.0),
            Generator::AInv => Isometry::new(1.0, -2.0, 0.0, 1.0),
            Generator::B => Isometry::new(1.0, 0.0, 2.0, 1.0),
            Generator::BInv => Isometry::new(1.0, 0.0, -2.0, 1.0),
        }
    }

    /// The k-th power of the generator matrix, exact because all four
    /// generators are parabolic: only one off-diagonal entry scales with k.
    pub fn matrix_power(self, k: u64) -> Isometry {
        let k = k as f64;
        match self {
            Generator::A => Isometry::new(1.0, 2.0 * k, 0.0, 1.0),
            Generator::AInv => Isometry::new(1.0, -2.0 * k, 0.0, 1.0),
            Generator::B => Isometry::new(1.0, 0.0, 2.0 * k, 1.0),
            Generator::BInv => Isometry::new(1.0, 0.0, -2.0 * k, 1.0),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::A => write!(f, "A"),
            Generator::AInv => write!(f, "A^-1"),
            Generator::B => write!(f, "B"),
            Generator::BInv => write!(f, "B^-1"),
        }
    }
}

/// A freely reduced word in the generators, stored as maximal runs
/// (label, multiplicity) so that deep cusp windings stay O(1) in memory.
///
/// The word acts on frames on the left: `matrix()` is the product of the
/// labels in list order, and reduction returns words with
/// frame_out = matrix(word) · frame_in up to sign.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorWord {
    runs: Vec<(Generator, u64)>,
}

impl GeneratorWord {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_labels(labels: impl IntoIterator<Item = Generator>) -> Self {
        let mut w = Self::empty();
        for g in labels {
            w.push(g);
        }
        w
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Total number of labels (counting multiplicities).
    pub fn len(&self) -> u64 {
        self.runs.iter().map(|&(_, k)| k).sum()
    }

    /// The maximal runs (label, multiplicity), multiplicities ≥ 1 and
    /// adjacent runs never on the same letter.
    pub fn runs(&self) -> &[(Generator, u64)] {
        &self.runs
    }

    /// Iterate over the labels with multiplicities expanded.
    pub fn labels(&self) -> impl Iterator<Item = Generator> + '_ {
        self.runs.iter().flat_map(|&(g, k)| (0..k).map(move |_| g))
    }

    /// Append one label at the tail, cancelling an inverse pair if it forms.
    pub fn push(&mut self, g: Generator) {
        self.push_power(g, 1);
    }

    /// Append g^k at the tail, with free reduction across run boundaries.
    pub fn push_power(&mut self, g: Generator, mut k: u64) {
        while k > 0 {
            match self.runs.last_mut() {
                Some((last, m)) if *last == g => {
                    *m += k;
                    return;
                }
                Some((last, m)) if *last == g.inverse() => {
                    let cancel = k.min(*m);
                    *m -= cancel;
                    k -= cancel;
                    if *m == 0 {
                        self.runs.pop();
                    }
                }
                _ => {
                    self.runs.push((g, k));
                    return;
                }
            }
        }
    }

    /// Prepend g^k at the head (used by reduction, where later pairings act
    /// on the left of the frame).
    pub fn push_power_front(&mut self, g: Generator, mut k: u64) {
        while k > 0 {
            match self.runs.first_mut() {
                Some((first, m)) if *first == g => {
                    *m += k;
                    return;
                }
                Some((first, m)) if *first == g.inverse() => {
                    let cancel = k.min(*m);
                    *m -= cancel;
                    k -= cancel;
                    if *m == 0 {
                        self.runs.remove(0);
                    }
                }
                _ => {
                    self.runs.insert(0, (g, k));
                    return;
                }
            }
        }
    }

    /// Concatenate two words with free reduction at the seam.
    pub fn concat(&self, rhs: &GeneratorWord) -> GeneratorWord {
        let mut out = self.clone();
        for &(g, k) in &rhs.runs {
            out.push_power(g, k);
        }
        out
    }

    /// Product of the generator matrices in list order.
    pub fn matrix(&self) -> Isometry {
        let mut m = Isometry::IDENTITY;
        for &(g, k) in &self.runs {
            m = m.mul(&g.matrix_power(k)).renormalize();
        }
        m
    }
}

impl fmt::Display for GeneratorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.runs.is_empty() {
            return write!(f, "e");
        }
        let mut first = true;
        for &(g, k) in &self.runs {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if k == 1 {
                write!(f, "{g}")?;
            } else {
                match g {
                    Generator::A => write!(f, "A^{k}")?,
                    Generator::AInv => write!(f, "A^-{k}")?,
                    Generator::B => write!(f, "B^{k}")?,
                    Generator::BInv => write!(f, "B^-{k}")?,
                }
            }
        }
        Ok(())
    }
}

/// Apply the Möbius transformation of m to z.
///
/// The image stays in the upper half plane because the determinant is
/// positive: Im((az+b)/(cz+d)) = det(m)·y / |cz+d|².
pub fn mobius_apply(m: &Isometry, z: UpperHalfPoint) -> UpperHalfPoint {
    let re = m.c * z.x + m.d;
    let im = m.c * z.y;
    let den = re * re + im * im;
    let x = ((m.a * z.x + m.b) * re + m.a * z.y * im) / den;
    let y = m.det() * z.y / den;
    UpperHalfPoint { x, y }
}

/// The basepoint of a frame: the image of i.
pub fn basepoint(s: &FrameState) -> UpperHalfPoint {
    mobius_apply(&s.frame, UpperHalfPoint::I)
}

/// Flow the frame for geodesic time dt (curvature −4 clock: the basepoint
/// of the identity frame moves i ↦ e^{2dt}·i, at distance |dt|).
pub fn geodesic_step(s: &FrameState, dt: f64) -> FrameState {
    debug_assert!(dt.is_finite());
    let f = &s.frame;
    let (e, einv) = (dt.exp(), (-dt).exp());
    // Right multiplication by diag(e^dt, e^{-dt}) scales the columns.
    let stepped = Isometry::new(f.a * e, f.b * einv, f.c * e, f.d * einv);
    FrameState::new(stepped.renormalize())
}

/// Rotate the frame by theta about its basepoint.
pub fn rotate_frame(s: &FrameState, theta: f64) -> FrameState {
    FrameState::new(s.frame.mul(&Isometry::rotation(theta)).renormalize())
}

/// Hyperbolic distance between two points in the curvature −4 metric.
pub fn hyperbolic_distance(z: UpperHalfPoint, w: UpperHalfPoint) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    let cosh = 1.0 + (dx * dx + dy * dy) / (2.0 * z.y * w.y);
    0.5 * cosh.acosh()
}

/// True when z lies in the fundamental domain, with walls counted as inside
/// up to `tol`.
pub fn in_domain(z: UpperHalfPoint, tol: f64) -> bool {
    if z.x.abs() > 1.0 + tol {
        return false;
    }
    let two_x = 2.0 * z.x;
    let four_y2 = 4.0 * z.y * z.y;
    let plus = (two_x + 1.0) * (two_x + 1.0) + four_y2;
    let minus = (two_x - 1.0) * (two_x - 1.0) + four_y2;
    plus >= 1.0 - tol && minus >= 1.0 - tol
}

/// Move the frame back into the fundamental domain, returning the reduced
/// frame and the word of side pairings applied (leftmost label = last
/// applied), so frame_out = matrix(word) · frame_in up to sign and
/// renormalization.
///
/// Strategy: translate Re into [−1, 1] in one burst, then invert through
/// whichever boundary circle is violated; inversions strictly increase y and
/// translations preserve it, so the walk terminates. Each burst or inversion
/// counts once toward [`MAX_APPLICATIONS`].
pub fn reduce_to_domain(
    s: &FrameState,
) -> Result<(FrameState, GeneratorWord), HyperbolicError> {
    let mut frame = s.frame;
    let mut word = GeneratorWord::empty();
    let mut applications: u64 = 0;

    loop {
        let z = basepoint(&FrameState::new(frame));
        if z.x.abs() > 1.0 + DOMAIN_TOL {
            // One burst A^{-k} brings Re z into [-1, 1] exactly.
            let k = (z.x / 2.0).round();
            let (g, reps) = if k > 0.0 {
                (Generator::AInv, k as u64)
            } else {
                (Generator::A, (-k) as u64)
            };
            frame = g.matrix_power(reps).mul(&frame).renormalize();
            word.push_power_front(g, reps);
            applications += 1;
        } else {
            let two_x = 2.0 * z.x;
            let four_y2 = 4.0 * z.y * z.y;
            let plus = (two_x + 1.0) * (two_x + 1.0) + four_y2;
            let minus = (two_x - 1.0) * (two_x - 1.0) + four_y2;
            if plus < 1.0 - DOMAIN_TOL {
                // Inside |2z+1| < 1: B carries it outside (|2Bz−1| = 1/|2z+1|)
                // and raises y by the same factor squared.
                frame = Generator::B.matrix().mul(&frame).renormalize();
                word.push_power_front(Generator::B, 1);
                applications += 1;
            } else if minus < 1.0 - DOMAIN_TOL {
                frame = Generator::BInv.matrix().mul(&frame).renormalize();
                word.push_power_front(Generator::BInv, 1);
                applications += 1;
            } else {
                return Ok((FrameState::new(frame), word));
            }
        }
        if applications > MAX_APPLICATIONS {
            return Err(HyperbolicError::NonTermination(MAX_APPLICATIONS));
        }
    }
}
