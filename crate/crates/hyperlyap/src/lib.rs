//! Lyapunov spectra of hypergeometric flat bundles over the geodesic flow on
//! the thrice-punctured sphere.
//!
//! The crate is organized in five computational layers plus a command layer:
//!
//! * [`hyperbolic`] — upper-half-plane geometry in the curvature −4
//!   normalization, the geodesic frame flow, and reduction to the standard
//!   fundamental domain of Γ(2), emitting generator words;
//! * [`monodromy`] — hypergeometric monodromy representations: companion-matrix
//!   construction from local exponents, the catalog of fourteen rank-4
//!   Calabi–Yau realizations, the non-expanding cusp gate, and the map from
//!   generator words to fiber matrices;
//! * [`lyapunov`] — the cocycle simulation: random geodesics, QR deflation,
//!   aggregation into spectrum estimates with error bars and diagnostics,
//!   checkpoint/resume;
//! * [`hodge`] — exact rational bookkeeping: filtered dimensions, parabolic
//!   degrees, Kodaira–Spencer cokernel lengths, Hodge-bundle degrees, the
//!   lower bound for partial sums of exponents, slope polygons, and the
//!   hyperelliptic-strata formulas;
//! * [`series`] — exact rational power series: the mirror-quintic period,
//!   its Wronskian, the theta-quotient reparametrization, and
//!   coefficient-growth diagnostics;
//! * [`cli`] — run records and the implementations behind the command-line
//!   binary.

pub mod cli;
pub mod exact;
pub mod hodge;
pub mod hyperbolic;
pub mod lyapunov;
pub mod monodromy;
pub mod series;
