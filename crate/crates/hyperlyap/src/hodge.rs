//! Exact rational invariants of parabolic Hodge bundles over punctured
//! curves.
//!
//! - Filtered dimensions and parabolic degrees of [0,1)-weighted cusp
//!   filtrations.
//! - Cokernel lengths of the three Kodaira-Spencer maps of a rank-4 system,
//!   read off from sorted local exponents.
//! - The four parabolic Hodge-line degrees of the rank-4 family, both as a
//!   closed form in (μ₁, μ₂) and re-derived independently from cokernel and
//!   residue bookkeeping.
//! - The lower bound 2·deg_par/(2g−2+s) for partial sums of Lyapunov
//!   exponents, hyperelliptic quotient-degree formulas, and their
//!   large-genus limits.
//! - Slope polygons (Harder-Narasimhan style vs. Lyapunov partial sums) and
//!   dominance checks, plus the orbifold rescaling λᵢ ↦ λᵢ/|χ|.
//!
//! Everything is exact rational except polygon heights sourced from
//! floating simulation data.

use crate::exact::{rat, rat_int, rat_to_f64, Rat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Error type for the exact Hodge-theoretic computations.
#[derive(Debug, Error)]
pub enum HodgeError {
    /// Local-exponent data violating the preconditions of the requested
    /// cokernel or degree computation.
    #[error("invalid local exponents: {0}")]
    InvalidExponents(String),
    /// Parameters outside the hypotheses of a degree formula.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// The base curve must satisfy 2g − 2 + cusps > 0.
    #[error("2g - 2 + cusps must be positive, got {0}")]
    InvalidTopology(i64),
    /// Index arguments outside their admissible range.
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    /// Harder-Narasimhan pieces whose slopes fail to decrease strictly.
    #[error("slopes not strictly decreasing at piece {0}")]
    NotConcave(usize),
}

/// A [0,1)-weighted filtration at a cusp: strictly increasing weights, each
/// carrying a positive graded dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedFiltration {
    pieces: Vec<(Rat, u32)>,
}

impl WeightedFiltration {
    /// Validating constructor; pieces are (weight, graded dimension).
    pub fn new(pieces: Vec<(Rat, u32)>) -> Result<Self, HodgeError> {
        for (i, (w, d)) in pieces.iter().enumerate() {
            if w.is_negative() || *w >= Rat::one() {
                return Err(HodgeError::InvalidParams(format!(
                    "weight {w} outside [0,1)"
                )));
            }
            if *d == 0 {
                return Err(HodgeError::InvalidParams(
                    "graded dimension must be positive".into(),
                ));
            }
            if i > 0 && pieces[i - 1].0 >= *w {
                return Err(HodgeError::InvalidParams(
                    "weights must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[(Rat, u32)] {
        &self.pieces
    }
}

/// Σ weightᵢ · dimᵢ over the graded pieces.
pub fn filtered_dimension(f: &WeightedFiltration) -> Rat {
    f.pieces
        .iter()
        .map(|(w, d)| w * rat_int(i64::from(*d)))
        .sum()
}

/// Ordinary degree plus the filtered dimensions over all cusps.
pub fn parabolic_degree(deg: i64, cusps: &[WeightedFiltration]) -> Rat {
    rat_int(deg) + cusps.iter().map(filtered_dimension).sum::<Rat>()
}

/// Whether exponent data sits at an interior point or at a cusp; the
/// cokernel formulas differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExponentLocation {
    Interior,
    Cusp,
}

/// Sorted local exponents of a differential operator at one point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalExponentData {
    point: String,
    exponents: Vec<Rat>,
    location: ExponentLocation,
}

impl LocalExponentData {
    /// Constructor sorts the exponents ascending.
    pub fn new(point: impl Into<String>, mut exponents: Vec<Rat>, location: ExponentLocation) -> Self {
        exponents.sort();
        Self {
            point: point.into(),
            exponents,
            location,
        }
    }

    pub fn point(&self) -> &str {
        &self.point
    }

    pub fn exponents(&self) -> &[Rat] {
        &self.exponents
    }

    pub fn location(&self) -> ExponentLocation {
        self.location
    }
}

fn fractional_part(r: &Rat) -> Rat {
    r - r.floor()
}

/// Length of the cokernel of the Kodaira-Spencer map τᵢ (i ∈ {0,1,2}) at one
/// point of a rank-4 system, from its sorted local exponents (μ₁,…,μ₄).
///
/// - Interior point (requires four distinct integers): τ₀ has length
///   μ₂−μ₁−1, τ₁ has length μ₃−μ₂−1.
/// - Cusp: τ₀ has length ⌊μ₂⌋−⌊μ₁⌋, τ₁ has length ⌊μ₃⌋−⌊μ₂⌋.
/// - τ₂ always equals τ₀ (Hodge duality pairs the outer maps).
pub fn cokernel_length(exps: &LocalExponentData, tau_index: usize) -> Result<u64, HodgeError> {
    if tau_index > 2 {
        return Err(HodgeError::OutOfRange(format!(
            "tau index must be 0, 1, or 2, got {tau_index}"
        )));
    }
    let e = exps.exponents();
    if e.len() != 4 {
        return Err(HodgeError::InvalidExponents(format!(
            "rank-4 operation needs exactly 4 exponents, got {}",
            e.len()
        )));
    }
    // Duality clause: the outer maps have equal cokernel lengths.
    let pair = if tau_index == 1 { (1, 2) } else { (0, 1) };
    let length = match exps.location() {
        ExponentLocation::Interior => {
            if e.iter().any(|x| !x.is_integer()) {
                return Err(HodgeError::InvalidExponents(
                    "interior exponents must be integers".into(),
                ));
            }
            if e.windows(2).any(|w| w[0] == w[1]) {
                return Err(HodgeError::InvalidExponents(
                    "interior exponents must be distinct".into(),
                ));
            }
            (e[pair.1].to_integer() - e[pair.0].to_integer()) - BigInt::one()
        }
        ExponentLocation::Cusp => e[pair.1].floor().to_integer() - e[pair.0].floor().to_integer(),
    };
    Ok(length
        .to_u64()
        .expect("sorted exponents give non-negative small lengths"))
}

/// Parabolic degrees of the four Hodge lines of the rank-4 family, highest
/// Hodge piece first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HodgeDegrees {
    pub e30: Rat,
    pub e21: Rat,
    pub e12: Rat,
    pub e03: Rat,
}

impl HodgeDegrees {
    pub fn as_array(&self) -> [&Rat; 4] {
        [&self.e30, &self.e21, &self.e12, &self.e03]
    }
}

/// Closed form for the parabolic Hodge-line degrees: (μ₁, μ₂, −μ₂, −μ₁).
///
/// Requires 0 < μ₁ ≤ μ₂ ≤ 1/2.
pub fn cy_hodge_degrees(mu1: &Rat, mu2: &Rat) -> Result<HodgeDegrees, HodgeError> {
    if !(mu1.is_positive() && mu1 <= mu2 && *mu2 <= rat(1, 2)) {
        return Err(HodgeError::InvalidParams(format!(
            "need 0 < mu1 <= mu2 <= 1/2, got ({mu1}, {mu2})"
        )));
    }
    Ok(HodgeDegrees {
        e30: mu1.clone(),
        e21: mu2.clone(),
        e12: -mu2.clone(),
        e03: -mu1.clone(),
    })
}

/// Re-derive the four parabolic Hodge-line degrees from local-exponent data
/// at the three cusps alone, independently of [`cy_hodge_degrees`].
///
/// Bookkeeping: each Kodaira-Spencer map τᵢ lands in the next Hodge line
/// twisted by the degree-one log-differentials sheaf of the thrice-punctured
/// line, so ordinary degrees satisfy deg(next) = deg(prev) + ℓᵢ − 1 with ℓᵢ
/// the total cokernel length. The total ordinary degree equals minus the sum
/// of fractional exponent parts (residue theorem for the connection), which
/// pins the chain; cusp weights (fractional parts, ascending exponents
/// matched to descending Hodge lines) then produce parabolic degrees.
pub fn cy_hodge_degrees_from_cokernels(
    at_zero: &LocalExponentData,
    at_one: &LocalExponentData,
    at_infinity: &LocalExponentData,
) -> Result<HodgeDegrees, HodgeError> {
    let cusps = [at_zero, at_one, at_infinity];
    for c in cusps {
        if c.location() != ExponentLocation::Cusp {
            return Err(HodgeError::InvalidExponents(format!(
                "point {} must carry cusp exponent data",
                c.point()
            )));
        }
    }
    let mut ell = [0i64; 3];
    for c in cusps {
        for (i, e) in ell.iter_mut().enumerate() {
            *e += cokernel_length(c, i)? as i64;
        }
    }
    let total: Rat = -cusps
        .iter()
        .flat_map(|c| c.exponents())
        .map(fractional_part)
        .sum::<Rat>();
    // deg(line i) = d + offsetᵢ with d the top-line degree.
    let offsets = [
        0,
        ell[0] - 1,
        ell[0] + ell[1] - 2,
        ell[0] + ell[1] + ell[2] - 3,
    ];
    let d = (total - rat_int(offsets.iter().sum())) / rat_int(4);
    if !d.is_integer() {
        return Err(HodgeError::InvalidExponents(
            "cokernel and residue data give a non-integral ordinary degree".into(),
        ));
    }
    let line_degree = |i: usize| -> Rat {
        let weights: Rat = cusps
            .iter()
            .map(|c| fractional_part(&c.exponents()[i]))
            .sum();
        &d + rat_int(offsets[i]) + weights
    };
    Ok(HodgeDegrees {
        e30: line_degree(0),
        e21: line_degree(1),
        e12: line_degree(2),
        e03: line_degree(3),
    })
}

/// Lower bound 2·deg_par/(2g − 2 + cusps) for the partial sum of Lyapunov
/// exponents over a rank-k holomorphic parabolic subbundle.
pub fn main_bound(deg_par: &Rat, g: i64, cusps: i64) -> Result<Rat, HodgeError> {
    let denom = 2 * g - 2 + cusps;
    if denom <= 0 {
        return Err(HodgeError::InvalidTopology(denom));
    }
    Ok(rat_int(2) * deg_par / rat_int(denom))
}

/// Hyperelliptic stratum selector: one zero of order 2g−2, or two zeros of
/// order g−1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stratum {
    Minimal,
    Bimodal,
}

fn check_strata_range(g: i64, k: i64) -> Result<(), HodgeError> {
    if g < 1 || k < 1 || k > g {
        return Err(HodgeError::OutOfRange(format!(
            "need 1 <= k <= g with g >= 1, got k={k}, g={g}"
        )));
    }
    Ok(())
}

/// Degree of the k-th successive quotient line bundle of the Hodge bundle
/// over the hyperelliptic locus, in units of |χ|/2:
/// 1 − 2(k−1)/(2g−1) (minimal) or 1 − (k−1)/g (bimodal).
pub fn hyperelliptic_quotient_degree(g: i64, k: i64, stratum: Stratum) -> Result<Rat, HodgeError> {
    check_strata_range(g, k)?;
    Ok(match stratum {
        Stratum::Minimal => Rat::one() - rat(2 * (k - 1), 2 * g - 1),
        Stratum::Bimodal => Rat::one() - rat(k - 1, g),
    })
}

/// Exact lower bounds on hyperelliptic strata: the partial sum
/// λ₁+…+λ_k ≥ k − k(k−1)/(2g−1) (minimal; 2g in place of 2g−1 for bimodal),
/// and a per-exponent bound for λ_k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LargeGenusBound {
    /// Lower bound for λ₁ + … + λ_k.
    pub sum_bound: Rat,
    /// Lower bound for λ_k alone.
    pub lambda_k_bound: Rat,
}

/// Large-genus bounds for the hyperelliptic strata.
///
/// The sum bound is the exact partial sum of the quotient degrees. The
/// per-exponent bound uses λᵢ ≤ 1 (weight one) on the first k−1 exponents
/// and monotonicity on the tail: for every window end m ∈ [k, g],
/// λ_k ≥ (S_m − (k−1))/(m − k + 1) = 1 − m(m−1)/(D·(m−k+1)) with D = 2g−1
/// or 2g; the best window is chosen exactly. At m = k this reduces to
/// S_k − (k−1); larger windows strictly help once k ≥ 3, and the bound tends
/// to 1 as g grows with k fixed.
pub fn large_genus_bound(g: i64, k: i64, stratum: Stratum) -> Result<LargeGenusBound, HodgeError> {
    check_strata_range(g, k)?;
    let d = match stratum {
        Stratum::Minimal => 2 * g - 1,
        Stratum::Bimodal => 2 * g,
    };
    let sum_bound = rat_int(k) - rat(k * (k - 1), d);
    // Minimize f(m) = m(m−1)/(m−k+1) over m ∈ [k, g]; f is convex in m, so
    // scan until the first increase.
    let f = |m: i64| rat(m * (m - 1), m - k + 1);
    let mut best = f(k);
    for m in (k + 1)..=g {
        let v = f(m);
        if v < best {
            best = v;
        } else {
            break;
        }
    }
    let lambda_k_bound = Rat::one() - best / rat_int(d);
    Ok(LargeGenusBound {
        sum_bound,
        lambda_k_bound,
    })
}

/// Vertex of a slope polygon; the exact height is kept alongside its
/// floating image when the source data is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct PolygonVertex {
    pub rank: u32,
    pub height: f64,
    pub exact_height: Option<Rat>,
}

/// Piecewise-linear polygon over integer ranks, starting at (0,0).
#[derive(Clone, Debug, PartialEq)]
pub struct SlopePolygon {
    vertices: Vec<PolygonVertex>,
}

impl SlopePolygon {
    pub fn vertices(&self) -> &[PolygonVertex] {
        &self.vertices
    }

    pub fn max_rank(&self) -> u32 {
        self.vertices.last().map_or(0, |v| v.rank)
    }

    /// Height at an integer abscissa by linear interpolation between
    /// vertices. `None` outside [0, max_rank].
    pub fn height_at(&self, x: u32) -> Option<f64> {
        if x > self.max_rank() {
            return None;
        }
        let i = self.vertices.iter().rposition(|v| v.rank <= x)?;
        let lo = &self.vertices[i];
        if lo.rank == x {
            return Some(lo.height);
        }
        let hi = &self.vertices[i + 1];
        let t = f64::from(x - lo.rank) / f64::from(hi.rank - lo.rank);
        Some(lo.height + t * (hi.height - lo.height))
    }

    /// CSV dump with fixed headers `rank,height`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,height\n");
        for v in &self.vertices {
            out.push_str(&format!("{},{}\n", v.rank, v.height));
        }
        out
    }
}

/// Harder-Narasimhan polygon from successive quotient data (rank, degree),
/// with heights 2·(cumulative degree)/chi_abs. Slopes (degree/rank) must
/// decrease strictly.
pub fn hn_polygon(pieces: &[(u32, Rat)], chi_abs: &Rat) -> Result<SlopePolygon, HodgeError> {
    if !chi_abs.is_positive() {
        return Err(HodgeError::InvalidParams(format!(
            "chi_abs must be positive, got {chi_abs}"
        )));
    }
    let mut vertices = vec![PolygonVertex {
        rank: 0,
        height: 0.0,
        exact_height: Some(Rat::zero()),
    }];
    let mut prev_slope: Option<Rat> = None;
    let mut rank = 0u32;
    let mut deg = Rat::zero();
    for (i, (r, d)) in pieces.iter().enumerate() {
        if *r == 0 {
            return Err(HodgeError::InvalidParams(format!(
                "piece {i} has zero rank"
            )));
        }
        let slope = d / rat_int(i64::from(*r));
        if let Some(p) = &prev_slope {
            if slope >= *p {
                return Err(HodgeError::NotConcave(i));
            }
        }
        prev_slope = Some(slope);
        rank += r;
        deg += d;
        let height = rat_int(2) * &deg / chi_abs;
        vertices.push(PolygonVertex {
            rank,
            height: rat_to_f64(&height),
            exact_height: Some(height),
        });
    }
    Ok(SlopePolygon { vertices })
}

/// Lyapunov polygon: vertices (k, (λ₁+…+λ_k)/chi_abs). Pass chi_abs = 1
/// when the exponents are already normalized to the base curve; pass |χ| to
/// rescale thrice-punctured-sphere exponents to the orbifold scale.
pub fn lyapunov_polygon(lambda: &[f64], chi_abs: f64) -> SlopePolygon {
    let mut vertices = vec![PolygonVertex {
        rank: 0,
        height: 0.0,
        exact_height: None,
    }];
    let mut sum = 0.0;
    for (k, l) in lambda.iter().enumerate() {
        sum += l;
        vertices.push(PolygonVertex {
            rank: k as u32 + 1,
            height: sum / chi_abs,
            exact_height: None,
        });
    }
    SlopePolygon { vertices }
}

/// Height-wise dominance of `upper` over `lower` at every shared integer
/// abscissa. Tolerance per abscissa k ≥ 1 is 3·stderr[k−1] when supplied,
/// else 1e−9 (exact data).
pub fn polygon_dominates(upper: &SlopePolygon, lower: &SlopePolygon, stderr: Option<&[f64]>) -> bool {
    let r = upper.max_rank().min(lower.max_rank());
    for k in 0..=r {
        let tol = match (k, stderr) {
            (0, _) | (_, None) => 1e-9,
            (_, Some(s)) if s.is_empty() => 1e-9,
            (_, Some(s)) => 3.0 * s[(k as usize - 1).min(s.len() - 1)],
        };
        let (Some(hu), Some(hl)) = (upper.height_at(k), lower.height_at(k)) else {
            return false;
        };
        if hu < hl - tol {
            return false;
        }
    }
    true
}

/// Rescale simulated exponents to the orbifold scale: with n the lcm of the
/// μ denominators when 0 < μ₁ < μ₂ < 1/2 (n = ∞ otherwise), |χ| = 1 − 1/n
/// and λᵒʳᵇ = λ/|χ|. Returns the rescaled exponents and the exact |χ|.
///
/// Requires 0 < μ₁ ≤ μ₂ ≤ 1/2.
pub fn orbifold_normalize(lambda: &[f64], mu1: &Rat, mu2: &Rat) -> (Vec<f64>, Rat) {
    assert!(
        mu1.is_positive() && mu1 <= mu2 && *mu2 <= rat(1, 2),
        "need 0 < mu1 <= mu2 <= 1/2, got ({mu1}, {mu2})"
    );
    let chi_abs = if mu1 < mu2 && *mu2 < rat(1, 2) {
        let n = mu1.denom().lcm(mu2.denom());
        Rat::one() - Rat::new(BigInt::one(), n)
    } else {
        Rat::one()
    };
    let c = rat_to_f64(&chi_abs);
    (lambda.iter().map(|l| l / c).collect(), chi_abs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wf(pieces: &[(i64, i64, u32)]) -> WeightedFiltration {
        WeightedFiltration::new(pieces.iter().map(|&(n, d, dim)| (rat(n, d), dim)).collect())
            .unwrap()
    }

    #[test]
    fn filtered_dimension_examples() {
        assert_eq!(filtered_dimension(&wf(&[(0, 1, 4)])), rat_int(0));
        assert_eq!(
            filtered_dimension(&wf(&[(1, 5, 1), (2, 5, 1), (3, 5, 1), (4, 5, 1)])),
            rat_int(2)
        );
        assert_eq!(filtered_dimension(&wf(&[(1, 2, 2)])), rat_int(1));
    }

    #[test]
    fn filtration_rejects_bad_input() {
        assert!(WeightedFiltration::new(vec![(rat_int(1), 1)]).is_err());
        assert!(WeightedFiltration::new(vec![(rat(-1, 2), 1)]).is_err());
        assert!(WeightedFiltration::new(vec![(rat(1, 3), 0)]).is_err());
        assert!(WeightedFiltration::new(vec![(rat(1, 3), 1), (rat(1, 3), 1)]).is_err());
    }

    #[test]
    fn parabolic_degree_examples() {
        assert_eq!(parabolic_degree(3, &[]), rat_int(3));
        assert_eq!(
            parabolic_degree(0, &[wf(&[(1, 5, 1), (2, 5, 1), (3, 5, 1), (4, 5, 1)])]),
            rat_int(2)
        );
        assert_eq!(parabolic_degree(-1, &[wf(&[(1, 2, 2)])]), rat_int(0));
    }

    fn exps(point: &str, vals: &[(i64, i64)], loc: ExponentLocation) -> LocalExponentData {
        LocalExponentData::new(point, vals.iter().map(|&(n, d)| rat(n, d)).collect(), loc)
    }

    #[test]
    fn cokernel_interior_consecutive_integers_vanish() {
        let e = exps("p", &[(0, 1), (1, 1), (2, 1), (3, 1)], ExponentLocation::Interior);
        for tau in 0..3 {
            assert_eq!(cokernel_length(&e, tau).unwrap(), 0);
        }
    }

    #[test]
    fn cokernel_conifold_pattern() {
        let e = exps("1", &[(0, 1), (1, 1), (1, 1), (2, 1)], ExponentLocation::Cusp);
        assert_eq!(cokernel_length(&e, 0).unwrap(), 1);
        assert_eq!(cokernel_length(&e, 1).unwrap(), 0);
        assert_eq!(cokernel_length(&e, 2).unwrap(), 1);
    }

    #[test]
    fn cokernel_unipotent_cusp_vanishes() {
        let e = exps("0", &[(0, 1); 4], ExponentLocation::Cusp);
        for tau in 0..3 {
            assert_eq!(cokernel_length(&e, tau).unwrap(), 0);
        }
    }

    #[test]
    fn cokernel_rejects_bad_interior_data() {
        let half = exps("p", &[(0, 1), (1, 2), (1, 1), (2, 1)], ExponentLocation::Interior);
        assert!(matches!(
            cokernel_length(&half, 0),
            Err(HodgeError::InvalidExponents(_))
        ));
        let repeated = exps("p", &[(0, 1), (1, 1), (1, 1), (2, 1)], ExponentLocation::Interior);
        assert!(cokernel_length(&repeated, 0).is_err());
        let e = exps("p", &[(0, 1), (1, 1), (2, 1), (3, 1)], ExponentLocation::Interior);
        assert!(matches!(
            cokernel_length(&e, 3),
            Err(HodgeError::OutOfRange(_))
        ));
    }

    #[test]
    fn hodge_degrees_closed_form() {
        let d = cy_hodge_degrees(&rat(1, 5), &rat(2, 5)).unwrap();
        assert_eq!(
            (d.e30, d.e21, d.e12, d.e03),
            (rat(1, 5), rat(2, 5), rat(-2, 5), rat(-1, 5))
        );
        let d = cy_hodge_degrees(&rat(1, 2), &rat(1, 2)).unwrap();
        assert_eq!(d.e30, rat(1, 2));
        assert_eq!(d.e03, rat(-1, 2));
        assert!(cy_hodge_degrees(&rat(0, 1), &rat(1, 2)).is_err());
        assert!(cy_hodge_degrees(&rat(1, 3), &rat(2, 3)).is_err());
        assert!(cy_hodge_degrees(&rat(2, 5), &rat(1, 5)).is_err());
    }

    #[test]
    fn hodge_degrees_duality() {
        for (n1, n2) in [(1, 2), (3, 10), (5, 12)] {
            let d = cy_hodge_degrees(&rat(n1, 25), &rat(n2, 25)).unwrap();
            assert_eq!(d.e30, -d.e03.clone());
            assert_eq!(d.e21, -d.e12.clone());
        }
    }

    fn cy_exponent_triple(mu1: Rat, mu2: Rat) -> [LocalExponentData; 3] {
        let one = Rat::one();
        [
            LocalExponentData::new("0", vec![Rat::zero(); 4], ExponentLocation::Cusp),
            LocalExponentData::new(
                "1",
                vec![Rat::zero(), one.clone(), one.clone(), rat_int(2)],
                ExponentLocation::Cusp,
            ),
            LocalExponentData::new(
                "inf",
                vec![mu1.clone(), mu2.clone(), &one - &mu2, &one - &mu1],
                ExponentLocation::Cusp,
            ),
        ]
    }

    #[test]
    fn cokernel_route_matches_closed_form() {
        for (mu1, mu2) in [(rat(1, 5), rat(2, 5)), (rat(1, 2), rat(1, 2)), (rat(1, 6), rat(1, 4))] {
            let [e0, e1, einf] = cy_exponent_triple(mu1.clone(), mu2.clone());
            let via_cokernels = cy_hodge_degrees_from_cokernels(&e0, &e1, &einf).unwrap();
            let closed = cy_hodge_degrees(&mu1, &mu2).unwrap();
            assert_eq!(via_cokernels, closed);
        }
    }

    #[test]
    fn main_bound_examples_and_linearity() {
        assert_eq!(main_bound(&rat(3, 5), 0, 3).unwrap(), rat(6, 5));
        assert_eq!(main_bound(&rat_int(0), 0, 3).unwrap(), rat_int(0));
        assert_eq!(main_bound(&rat_int(1), 0, 3).unwrap(), rat_int(2));
        let a = rat(2, 7);
        let b = rat(3, 11);
        let lhs = main_bound(&(&a + &b), 2, 5).unwrap();
        let rhs = main_bound(&a, 2, 5).unwrap() + main_bound(&b, 2, 5).unwrap();
        assert_eq!(lhs, rhs);
        assert!(matches!(
            main_bound(&rat_int(1), 0, 2),
            Err(HodgeError::InvalidTopology(0))
        ));
    }

    #[test]
    fn hyperelliptic_degrees() {
        assert_eq!(
            hyperelliptic_quotient_degree(2, 1, Stratum::Minimal).unwrap(),
            rat_int(1)
        );
        assert_eq!(
            hyperelliptic_quotient_degree(2, 2, Stratum::Minimal).unwrap(),
            rat(1, 3)
        );
        assert_eq!(
            hyperelliptic_quotient_degree(3, 2, Stratum::Bimodal).unwrap(),
            rat(2, 3)
        );
        assert!(hyperelliptic_quotient_degree(2, 0, Stratum::Minimal).is_err());
        assert!(hyperelliptic_quotient_degree(2, 3, Stratum::Minimal).is_err());
    }

    #[test]
    fn large_genus_sum_matches_quotient_sums() {
        for stratum in [Stratum::Minimal, Stratum::Bimodal] {
            for k in 1..=7 {
                let direct: Rat = (1..=k)
                    .map(|i| hyperelliptic_quotient_degree(7, i, stratum).unwrap())
                    .sum();
                assert_eq!(large_genus_bound(7, k, stratum).unwrap().sum_bound, direct);
            }
        }
    }

    #[test]
    fn large_genus_examples() {
        let b = large_genus_bound(2, 2, Stratum::Minimal).unwrap();
        assert_eq!(b.sum_bound, rat(4, 3));
        for g in [2, 5, 100, 10_000] {
            assert_eq!(
                large_genus_bound(g, 1, Stratum::Minimal).unwrap().lambda_k_bound,
                rat_int(1)
            );
        }
        // Windowed bound at g = 10⁴, k = 5: best window has f = 14.
        let b = large_genus_bound(10_000, 5, Stratum::Minimal).unwrap();
        assert_eq!(b.lambda_k_bound, Rat::one() - rat(14, 19_999));
        assert!(b.lambda_k_bound >= rat(999, 1000));
        // The trend: bounds approach 1 as g grows with k fixed.
        let b6 = large_genus_bound(1_000_000, 5, Stratum::Minimal).unwrap();
        assert!(b6.lambda_k_bound > Rat::one() - rat(1, 100_000));
    }

    #[test]
    fn polygons_single_piece_and_interpolation() {
        let p = hn_polygon(&[(3, rat_int(2))], &rat_int(1)).unwrap();
        assert_eq!(p.max_rank(), 3);
        assert_eq!(p.height_at(0), Some(0.0));
        assert_eq!(p.height_at(3), Some(4.0));
        assert!((p.height_at(2).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.height_at(4), None);
    }

    #[test]
    fn polygon_rejects_non_concave() {
        let r = hn_polygon(&[(1, rat_int(1)), (1, rat_int(2))], &rat_int(2));
        assert!(matches!(r, Err(HodgeError::NotConcave(1))));
    }

    #[test]
    fn hyperelliptic_polygon_dominance_with_equality() {
        // Quotient degrees are in |χ|/2 units, so chi_abs = 2 makes heights
        // equal the plain partial sums (1, 4/3).
        let pieces: Vec<(u32, Rat)> = (1..=2)
            .map(|k| (1, hyperelliptic_quotient_degree(2, k, Stratum::Minimal).unwrap()))
            .collect();
        let hn = hn_polygon(&pieces, &rat_int(2)).unwrap();
        assert_eq!(hn.vertices()[1].exact_height, Some(rat_int(1)));
        assert_eq!(hn.vertices()[2].exact_height, Some(rat(4, 3)));
        let lyap = lyapunov_polygon(&[1.0, 1.0 / 3.0], 1.0);
        assert!(polygon_dominates(&lyap, &hn, None));
        let below = lyapunov_polygon(&[0.9, 1.0 / 3.0], 1.0);
        assert!(!polygon_dominates(&below, &hn, None));
        assert!(polygon_dominates(&below, &hn, Some(&[0.05, 0.05])));
    }

    #[test]
    fn polygon_csv_headers() {
        let p = hn_polygon(&[(1, rat(1, 2))], &rat_int(1)).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("rank,height\n0,0\n"));
        assert!(csv.contains("1,1\n"));
    }

    #[test]
    fn orbifold_chi_values() {
        let (l, chi) = orbifold_normalize(&[0.8], &rat(1, 5), &rat(2, 5));
        assert_eq!(chi, rat(4, 5));
        assert!((l[0] - 1.0).abs() < 1e-12);
        assert_eq!(orbifold_normalize(&[], &rat(1, 6), &rat(1, 2)).1, rat_int(1));
        assert_eq!(orbifold_normalize(&[], &rat(1, 6), &rat(1, 6)).1, rat_int(1));
        assert_eq!(orbifold_normalize(&[], &rat(1, 12), &rat(5, 12)).1, rat(11, 12));
        assert_eq!(orbifold_normalize(&[], &rat(1, 6), &rat(1, 4)).1, rat(11, 12));
    }
}
