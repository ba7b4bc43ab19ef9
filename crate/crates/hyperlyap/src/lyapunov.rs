//! Lyapunov spectrum estimation for flat bundles over the geodesic flow on
//! the triply punctured sphere.
//!
//! The engine simulates a discrete-time Oseledets cocycle:
//!
//! * base dynamics: the geodesic flow of the curvature -4 metric, advanced
//!   in fixed increments `dt` and folded back into the fundamental domain
//!   of the level-two congruence group after every step;
//! * fiber dynamics: each fold multiplies the transported frame on the left
//!   by the monodromy image of the folding word, so the frame accumulates
//!   the cocycle along the trajectory;
//! * deflation: periodic QR with positive diagonal re-orthonormalizes the
//!   frame and adds the log of the diagonal to per-column growth sums
//!   (Benettin's method); exponents are log sums over post-burn-in time.
//!
//! Estimates aggregate independent trajectories whose seeds derive from one
//! master seed through a splitmix64 stream, so output is reproducible for
//! any worker count. Long runs checkpoint to a versioned JSON snapshot that
//! stores every trajectory's frame, transported basis, log sums, and RNG
//! state; resuming reproduces the uninterrupted run bitwise.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{rat_to_f64, Rat};
use crate::hodge;
use crate::hyperbolic::{
    basepoint, geodesic_step, reduce_to_domain, rotate_frame, FrameState, Generator,
    HyperbolicError,
};
use crate::monodromy::{
    check_nonexpanding, ArithmeticMode, CuspAssignment, MonodromyRep, RepMatrices,
};

/// Schema tag written into every snapshot; bump when the layout changes.
pub const SNAPSHOT_SCHEMA_VERSION: u32 = 1;

/// Steps advanced between checkpoint writes in [`estimate_resumable`].
const CHECKPOINT_INTERVAL_STEPS: u64 = 250_000;

/// Largest basis entry tolerated before an extra deflation QR. Long cusp
/// words multiply the basis by quasi-unipotent powers whose conditioning
/// grows polynomially; deflating early keeps Gram-Schmidt cancellation at
/// the roundoff floor. Ordinary ten-step intervals never reach this.
const DEFLATE_MAX_ENTRY: f64 = 1e4;

/// Generator powers are applied in chunks of at most this size with a
/// deflation check between chunks, so one huge parabolic burst cannot
/// push the basis through an ill-conditioned product in a single multiply.
const BURST_CHUNK: u64 = 4;

/// Failure modes of the simulation engine.
#[derive(Debug, Error)]
pub enum LyapunovError {
    /// The non-expanding gate failed: some local monodromy eigenvalue has
    /// modulus off the unit circle, so log-norms are not integrable over
    /// the cusp excursions and the ergodic averages diverge.
    #[error("not integrable: {0}")]
    NotIntegrable(String),
    /// Numerical safety rail tripped (basepoint height out of the guard
    /// window, or a transported column collapsed during QR).
    #[error("precision alarm: {0}")]
    PrecisionAlarm(String),
    /// Snapshot file cannot be trusted: parse failure, schema mismatch, or
    /// inconsistency with the requested run.
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
    /// Rejected configuration or representation/assignment mismatch.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Filesystem failure while reading or writing a snapshot.
    #[error("snapshot io: {0}")]
    SnapshotIo(#[from] std::io::Error),
}

impl From<HyperbolicError> for LyapunovError {
    fn from(e: HyperbolicError) -> Self {
        LyapunovError::PrecisionAlarm(e.to_string())
    }
}

/// Parameters of one simulation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Geodesic time per step, in (0, 1].
    pub dt: f64,
    /// Total steps per trajectory.
    pub steps: u64,
    /// Steps discarded before exponents accumulate; rounded up to the next
    /// orthonormalization event, see [`SimulationConfig::accumulation_boundary`].
    pub burn_in: u64,
    /// Steps between QR re-orthonormalizations, at least 1.
    pub qr_interval: u64,
    /// Number of independent trajectories, at least 1.
    pub trajectories: u32,
    /// Master seed; trajectory i uses the i-th output of a splitmix64
    /// stream seeded here, see [`derive_seed`].
    pub seed: u64,
    /// Alarm threshold: the reduced basepoint must keep
    /// `y_guard <= y <= 1/y_guard`.
    pub y_guard: f64,
    /// Which singular points sit at the two cusp classes of the domain.
    #[serde(default)]
    pub assignment: CuspAssignment,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dt: 0.1,
            steps: 2_000_000,
            burn_in: 10_000,
            qr_interval: 10,
            trajectories: 8,
            seed: 1,
            y_guard: 1e-12,
            assignment: CuspAssignment::default(),
        }
    }
}

impl SimulationConfig {
    /// First step whose QR event contributes to the exponent sums: the
    /// burn-in rounded up to a multiple of `qr_interval`, so that discarded
    /// and counted growth never share an orthonormalization interval.
    pub fn accumulation_boundary(&self) -> u64 {
        self.burn_in.div_ceil(self.qr_interval) * self.qr_interval
    }

    /// Checks every config invariant and the cusp assignment.
    pub fn validate(&self) -> Result<(), LyapunovError> {
        let fail = |msg: String| Err(LyapunovError::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= 1.0) {
            return fail(format!("dt = {} must lie in (0, 1]", self.dt));
        }
        if self.steps == 0 {
            return fail("steps must be positive".into());
        }
        if self.qr_interval == 0 {
            return fail("qr_interval must be at least 1".into());
        }
        if self.trajectories == 0 {
            return fail("trajectories must be at least 1".into());
        }
        if self.burn_in >= self.steps {
            return fail(format!(
                "burn_in = {} must be smaller than steps = {}",
                self.burn_in, self.steps
            ));
        }
        if self.accumulation_boundary() >= self.steps {
            return fail(format!(
                "burn_in = {} rounds up to the orthonormalization grid at step {}, \
                 which leaves no accumulation room before steps = {}",
                self.burn_in,
                self.accumulation_boundary(),
                self.steps
            ));
        }
        if !(self.y_guard.is_finite() && self.y_guard > 0.0 && self.y_guard < 1.0) {
            return fail(format!("y_guard = {} must lie in (0, 1)", self.y_guard));
        }
        self.assignment
            .validate()
            .map_err(|e| LyapunovError::InvalidConfig(e.to_string()))
    }

    /// Geodesic time per trajectory that counts toward the exponents.
    fn counted_time(&self) -> f64 {
        (self.steps - self.accumulation_boundary()) as f64 * self.dt
    }
}

/// Mutable per-trajectory state of the cocycle simulation.
#[derive(Clone, Debug)]
pub struct CocycleState {
    /// Current frame on the base, kept inside the fundamental domain.
    pub frame: FrameState,
    /// Transported fiber basis, one column per exponent; orthonormal right
    /// after every QR event.
    pub b: DMatrix<f64>,
    /// Accumulated log of the positive QR diagonal, one entry per column.
    pub logsums: Vec<f64>,
    /// Geodesic time simulated so far.
    pub elapsed: f64,
}

/// Aggregated spectrum estimate across independent trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    /// Exponents sorted descending; realified complex pairs are collapsed.
    pub lambda: Vec<f64>,
    /// Per-exponent standard error of the mean across trajectories.
    pub stderr: Vec<f64>,
    /// Post-burn-in geodesic time summed over all trajectories.
    pub total_time: f64,
    /// `max_i |lambda_i + lambda_{r-1-i}|`; small for self-dual spectra.
    pub symmetry_defect: f64,
    /// Per-trajectory exponent vectors in trajectory order.
    pub per_trajectory: Vec<Vec<f64>>,
}

/// Lower bound versus measured partial sum for a parabolic subbundle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    /// `2 deg_par / (2g - 2 + cusps)` as a float.
    pub bound: f64,
    /// Sum of the top k estimated exponents.
    pub partial_sum: f64,
    /// `partial_sum - bound`; positive when the estimate clears the bound.
    pub slack: f64,
}

/// Serialized state of one trajectory inside a snapshot.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectorySnapshot {
    /// Frame on the base.
    pub frame: FrameState,
    /// Transported basis in column-major order, r*r entries.
    pub b: Vec<f64>,
    /// Accumulated log sums, r entries.
    pub logsums: Vec<f64>,
    /// RNG stream, position included.
    pub rng: ChaCha8Rng,
}

/// Versioned checkpoint container; all trajectories sit at the same step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    /// Must equal [`SNAPSHOT_SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Hash of the representation matrices, guarding against resuming a
    /// run with a different bundle; see [`rep_fingerprint`].
    pub rep_fingerprint: String,
    /// The configuration the snapshot was produced under.
    pub config: SimulationConfig,
    /// Steps completed by every trajectory below.
    pub step: u64,
    /// One entry per trajectory, in trajectory order.
    pub states: Vec<TrajectorySnapshot>,
}

impl Snapshot {
    /// Parses and version-checks a snapshot file.
    pub fn load(path: &Path) -> Result<Snapshot, LyapunovError> {
        let text = fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| LyapunovError::CorruptSnapshot(format!("unparseable snapshot: {e}")))?;
        let version = value.get("schema_version").and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(SNAPSHOT_SCHEMA_VERSION)) {
            return Err(LyapunovError::CorruptSnapshot(format!(
                "snapshot schema version {version:?} does not match supported version {SNAPSHOT_SCHEMA_VERSION}"
            )));
        }
        serde_json::from_value(value)
            .map_err(|e| LyapunovError::CorruptSnapshot(format!("malformed snapshot: {e}")))
    }

    /// Writes atomically: serialize to a sibling temp file, then rename.
    pub fn save(&self, path: &Path) -> Result<(), LyapunovError> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, serde_json::to_string(self).expect("snapshot serializes"))?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// The i-th trajectory seed: output i of the splitmix64 stream seeded by
/// the master seed. Distinct indices give decorrelated ChaCha streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed;
    let mut out = 0;
    for _ in 0..=index {
        out = splitmix64_next(&mut state);
    }
    out
}

fn splitmix64_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable hash of the representation matrices (rank, arithmetic mode, and
/// every entry; exact entries as reduced fractions, floating entries as
/// bit patterns). Stored in snapshots to refuse cross-bundle resumes.
pub fn rep_fingerprint(rep: &MonodromyRep) -> String {
    use std::fmt::Write;
    let mut desc = format!("rank={};mode={};", rep.rank(), rep.arithmetic_mode());
    match rep.matrices() {
        RepMatrices::Exact { h0, h1, hinf } => {
            for m in [h0, h1, hinf] {
                let n = m.size();
                for i in 0..n {
                    for j in 0..n {
                        write!(desc, "{};", m[(i, j)]).expect("write to string");
                    }
                }
            }
        }
        RepMatrices::Floating { h0, h1, hinf } => {
            for m in [h0, h1, hinf] {
                for v in m.iter() {
                    write!(desc, "{:016x},{:016x};", v.re.to_bits(), v.im.to_bits())
                        .expect("write to string");
                }
            }
        }
    }
    format!("{:016x}", fnv64(desc.as_bytes()))
}

fn fnv64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn ensure_integrable(rep: &MonodromyRep) -> Result<(), LyapunovError> {
    let spectrum = check_nonexpanding(rep);
    if spectrum.non_expanding {
        return Ok(());
    }
    let worst = spectrum
        .at_zero
        .iter()
        .chain(&spectrum.at_one)
        .chain(&spectrum.at_infinity)
        .fold(0.0f64, |acc, &m| acc.max(m));
    Err(LyapunovError::NotIntegrable(format!(
        "a local monodromy eigenvalue has modulus {worst:.6}, off the unit circle; \
         log-norm growth along cusp excursions is not integrable"
    )))
}

fn generator_index(g: Generator) -> usize {
    // Matches the [A, AInv, B, BInv] order of generator_images_f64.
    match g {
        Generator::A => 0,
        Generator::AInv => 1,
        Generator::B => 2,
        Generator::BInv => 3,
    }
}

fn mat_pow(m: &DMatrix<f64>, mut k: u64) -> DMatrix<f64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &base * &result;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

fn mgs_pass(b: &mut DMatrix<f64>, logsums: &mut [f64]) -> Result<(), usize> {
    let n = b.nrows();
    for j in 0..n {
        for i in 0..j {
            let mut dot = 0.0;
            for r in 0..n {
                dot += b[(r, i)] * b[(r, j)];
            }
            for r in 0..n {
                let q = b[(r, i)];
                b[(r, j)] -= dot * q;
            }
        }
        let mut norm2 = 0.0;
        for r in 0..n {
            norm2 += b[(r, j)] * b[(r, j)];
        }
        let norm = norm2.sqrt();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(j);
        }
        logsums[j] += norm.ln();
        for r in 0..n {
            b[(r, j)] /= norm;
        }
    }
    Ok(())
}

/// QR with positive diagonal in place: B becomes Q, and the log of each
/// R diagonal entry is added to `logsums`. Two modified Gram-Schmidt
/// passes: the second repairs the orthogonality the first loses on
/// ill-conditioned input, and its near-unit diagonal folds into the log
/// sums, so B = Q (R2 R1) stays an exact positive-diagonal factorization.
/// Returns the index of the first collapsed or non-finite column, if any.
fn qr_positive_in_place(b: &mut DMatrix<f64>, logsums: &mut [f64]) -> Result<(), usize> {
    mgs_pass(b, logsums)?;
    mgs_pass(b, logsums)
}

/// One trajectory of the cocycle simulation; drives the frame, the
/// transported basis, and the QR bookkeeping step by step.
struct TrajectoryRunner<'a> {
    cfg: &'a SimulationConfig,
    images: &'a [DMatrix<f64>; 4],
    boundary: u64,
    step: u64,
    state: CocycleState,
    rng: ChaCha8Rng,
    scratch: DMatrix<f64>,
}

impl<'a> TrajectoryRunner<'a> {
    /// Fresh trajectory: draws the initial frame rotation from `rng`.
    fn new(
        cfg: &'a SimulationConfig,
        images: &'a [DMatrix<f64>; 4],
        dim: usize,
        mut rng: ChaCha8Rng,
    ) -> Self {
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        TrajectoryRunner {
            cfg,
            images,
            boundary: cfg.accumulation_boundary(),
            step: 0,
            state: CocycleState {
                frame: rotate_frame(&FrameState::IDENTITY, theta),
                b: DMatrix::identity(dim, dim),
                logsums: vec![0.0; dim],
                elapsed: 0.0,
            },
            rng,
            scratch: DMatrix::zeros(dim, dim),
        }
    }

    /// Rebuilds a runner from a stored state without consuming randomness.
    fn restore(
        cfg: &'a SimulationConfig,
        images: &'a [DMatrix<f64>; 4],
        dim: usize,
        step: u64,
        st: &TrajectorySnapshot,
    ) -> Result<Self, LyapunovError> {
        if st.b.len() != dim * dim || st.logsums.len() != dim {
            return Err(LyapunovError::CorruptSnapshot(format!(
                "stored basis has {} entries and {} log sums, expected {} and {}",
                st.b.len(),
                st.logsums.len(),
                dim * dim,
                dim
            )));
        }
        let det = st.frame.frame.det();
        if !det.is_finite() || det <= 0.0 {
            return Err(LyapunovError::CorruptSnapshot(
                "stored frame is degenerate".into(),
            ));
        }
        Ok(TrajectoryRunner {
            cfg,
            images,
            boundary: cfg.accumulation_boundary(),
            step,
            state: CocycleState {
                frame: st.frame,
                b: DMatrix::from_column_slice(dim, dim, &st.b),
                logsums: st.logsums.clone(),
                elapsed: step as f64 * cfg.dt,
            },
            rng: st.rng.clone(),
            scratch: DMatrix::zeros(dim, dim),
        })
    }

    fn to_snapshot(&self) -> TrajectorySnapshot {
        TrajectorySnapshot {
            frame: self.state.frame,
            b: self.state.b.as_slice().to_vec(),
            logsums: self.state.logsums.clone(),
            rng: self.rng.clone(),
        }
    }

    fn multiply_into_basis(&mut self, m: &DMatrix<f64>) {
        self.scratch.gemm(1.0, m, &self.state.b, 0.0);
        std::mem::swap(&mut self.state.b, &mut self.scratch);
    }

    /// Extra QR when the basis magnitude leaves the well-conditioned zone;
    /// fires only during deep cusp words, never on ordinary steps.
    fn maybe_deflate(&mut self) -> Result<(), LyapunovError> {
        let mut worst = 0.0f64;
        for v in self.state.b.iter() {
            worst = worst.max(v.abs());
        }
        if worst > DEFLATE_MAX_ENTRY {
            self.qr_event(false)?;
        }
        Ok(())
    }

    fn apply_generator_power(&mut self, g: Generator, k: u64) -> Result<(), LyapunovError> {
        let images = self.images;
        let img = &images[generator_index(g)];
        if k == 1 {
            self.multiply_into_basis(img);
        } else if k <= BURST_CHUNK {
            let p = mat_pow(img, k);
            self.multiply_into_basis(&p);
        } else {
            // Deep cusp burst: walk through it in conditioned chunks.
            let chunk = mat_pow(img, BURST_CHUNK);
            for _ in 0..k / BURST_CHUNK {
                self.multiply_into_basis(&chunk);
                self.maybe_deflate()?;
            }
            let rest = k % BURST_CHUNK;
            if rest > 0 {
                let p = mat_pow(img, rest);
                self.multiply_into_basis(&p);
            }
        }
        self.maybe_deflate()
    }

    fn qr_event(&mut self, at_boundary: bool) -> Result<(), LyapunovError> {
        qr_positive_in_place(&mut self.state.b, &mut self.state.logsums).map_err(|col| {
            LyapunovError::PrecisionAlarm(format!(
                "transported column {col} collapsed during orthonormalization at step {}",
                self.step
            ))
        })?;
        if at_boundary {
            // End of burn-in: the basis is conditioned, the growth history
            // is discarded.
            for v in &mut self.state.logsums {
                *v = 0.0;
            }
        }
        Ok(())
    }

    fn step_once(&mut self) -> Result<(), LyapunovError> {
        self.step += 1;
        let flowed = geodesic_step(&self.state.frame, self.cfg.dt);
        let (reduced, word) = reduce_to_domain(&flowed)?;
        self.state.frame = reduced;
        // The fold satisfies frame_out = matrix(word) * frame_in with the
        // leftmost label applied last, so the fiber picks up the word's
        // image by right-to-left run application.
        for &(g, k) in word.runs().iter().rev() {
            self.apply_generator_power(g, k)?;
        }
        let y = basepoint(&self.state.frame).y;
        if !(y >= self.cfg.y_guard && y <= 1.0 / self.cfg.y_guard) {
            return Err(LyapunovError::PrecisionAlarm(format!(
                "basepoint height {y:.3e} left the guard window [{:.1e}, {:.1e}] at step {}",
                self.cfg.y_guard,
                1.0 / self.cfg.y_guard,
                self.step
            )));
        }
        if self.step % self.cfg.qr_interval == 0 {
            self.qr_event(self.step == self.boundary)?;
        }
        self.state.elapsed = self.step as f64 * self.cfg.dt;
        Ok(())
    }

    fn advance(&mut self, to_step: u64) -> Result<(), LyapunovError> {
        debug_assert!(to_step <= self.cfg.steps);
        while self.step < to_step {
            self.step_once()?;
        }
        Ok(())
    }

    /// Final partial-interval flush and normalization by counted time.
    fn finish(&mut self) -> Result<Vec<f64>, LyapunovError> {
        debug_assert_eq!(self.step, self.cfg.steps);
        if self.cfg.steps % self.cfg.qr_interval != 0 {
            // The boundary is a multiple of qr_interval strictly below
            // steps, so this flush never doubles as the burn-in reset.
            self.qr_event(false)?;
        }
        let counted = self.cfg.counted_time();
        let mut exps: Vec<f64> = self.state.logsums.iter().map(|s| s / counted).collect();
        exps.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite exponents"));
        Ok(exps)
    }
}

/// Simulates one trajectory and returns its exponent vector sorted
/// descending (uncollapsed: realified representations give each exponent
/// twice). The RNG is advanced exactly as the trajectory consumed it.
pub fn run_trajectory(
    rep: &MonodromyRep,
    cfg: &SimulationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, LyapunovError> {
    cfg.validate()?;
    ensure_integrable(rep)?;
    let images = rep
        .generator_images_f64(&cfg.assignment)
        .map_err(|e| LyapunovError::InvalidConfig(e.to_string()))?;
    let mut runner = TrajectoryRunner::new(cfg, &images, rep.fiber_dim(), rng.clone());
    runner.advance(cfg.steps)?;
    let out = runner.finish()?;
    *rng = runner.rng.clone();
    Ok(out)
}

fn collapse_realified_pairs(v: Vec<f64>) -> Vec<f64> {
    v.chunks(2)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

fn defect_of(lambda: &[f64]) -> f64 {
    let r = lambda.len();
    (0..r)
        .map(|i| (lambda[i] + lambda[r - 1 - i]).abs())
        .fold(0.0, f64::max)
}

fn aggregate(rep: &MonodromyRep, cfg: &SimulationConfig, raw: Vec<Vec<f64>>) -> LyapunovEstimate {
    let per_trajectory: Vec<Vec<f64>> = match rep.arithmetic_mode() {
        ArithmeticMode::Exact => raw,
        // Realified complex representations produce every exponent twice;
        // averaging the pair halves the within-trajectory noise.
        ArithmeticMode::Floating => raw.into_iter().map(collapse_realified_pairs).collect(),
    };
    let n = per_trajectory.len();
    let r = per_trajectory[0].len();
    let mut lambda = vec![0.0; r];
    for v in &per_trajectory {
        for (l, x) in lambda.iter_mut().zip(v) {
            *l += x;
        }
    }
    for l in &mut lambda {
        *l /= n as f64;
    }
    let mut stderr = vec![0.0; r];
    if n > 1 {
        for v in &per_trajectory {
            for (s, (x, l)) in stderr.iter_mut().zip(v.iter().zip(&lambda)) {
                *s += (x - l) * (x - l);
            }
        }
        for s in &mut stderr {
            *s = (*s / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt();
        }
    }
    let symmetry_defect = defect_of(&lambda);
    LyapunovEstimate {
        lambda,
        stderr,
        total_time: n as f64 * cfg.counted_time(),
        symmetry_defect,
        per_trajectory,
    }
}

/// Runs `cfg.trajectories` independent trajectories in parallel and
/// aggregates them in trajectory order, so the result is identical for any
/// worker count. Any trajectory failure aborts the whole estimate.
pub fn estimate(rep: &MonodromyRep, cfg: &SimulationConfig) -> Result<LyapunovEstimate, LyapunovError> {
    cfg.validate()?;
    ensure_integrable(rep)?;
    let images = rep
        .generator_images_f64(&cfg.assignment)
        .map_err(|e| LyapunovError::InvalidConfig(e.to_string()))?;
    let dim = rep.fiber_dim();
    let raw: Vec<Vec<f64>> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|i| {
            let rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::from(i)));
            let mut runner = TrajectoryRunner::new(cfg, &images, dim, rng);
            runner.advance(cfg.steps)?;
            runner.finish()
        })
        .collect::<Result<_, _>>()?;
    Ok(aggregate(rep, cfg, raw))
}

/// Like [`estimate`], but checkpoints all trajectory states to `path`
/// every [`CHECKPOINT_INTERVAL_STEPS`] steps and resumes from an existing
/// snapshot, reproducing the uninterrupted run bitwise.
pub fn estimate_resumable(
    rep: &MonodromyRep,
    cfg: &SimulationConfig,
    path: &Path,
) -> Result<LyapunovEstimate, LyapunovError> {
    cfg.validate()?;
    ensure_integrable(rep)?;
    let images = rep
        .generator_images_f64(&cfg.assignment)
        .map_err(|e| LyapunovError::InvalidConfig(e.to_string()))?;
    let dim = rep.fiber_dim();
    let fingerprint = rep_fingerprint(rep);

    let mut snap = if path.exists() {
        let snap = Snapshot::load(path)?;
        if snap.rep_fingerprint != fingerprint {
            return Err(LyapunovError::CorruptSnapshot(
                "snapshot was produced by a different representation".into(),
            ));
        }
        if snap.config != *cfg {
            return Err(LyapunovError::CorruptSnapshot(
                "snapshot configuration differs from the requested run".into(),
            ));
        }
        if snap.step > cfg.steps || snap.states.len() != cfg.trajectories as usize {
            return Err(LyapunovError::CorruptSnapshot(
                "snapshot trajectory layout is inconsistent with its configuration".into(),
            ));
        }
        snap
    } else {
        let states = (0..cfg.trajectories)
            .map(|i| {
                let rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::from(i)));
                TrajectoryRunner::new(cfg, &images, dim, rng).to_snapshot()
            })
            .collect();
        let snap = Snapshot {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            rep_fingerprint: fingerprint,
            config: cfg.clone(),
            step: 0,
            states,
        };
        snap.save(path)?;
        snap
    };

    while snap.step < cfg.steps {
        let target = (snap.step + CHECKPOINT_INTERVAL_STEPS).min(cfg.steps);
        let step = snap.step;
        snap.states
            .par_iter_mut()
            .try_for_each(|st| -> Result<(), LyapunovError> {
                let mut runner = TrajectoryRunner::restore(cfg, &images, dim, step, st)?;
                runner.advance(target)?;
                *st = runner.to_snapshot();
                Ok(())
            })?;
        snap.step = target;
        snap.save(path)?;
    }

    let raw = snap
        .states
        .iter()
        .map(|st| TrajectoryRunner::restore(cfg, &images, dim, cfg.steps, st)?.finish())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(rep, cfg, raw))
}

/// Recomputes the self-duality diagnostic from the aggregated exponents.
pub fn symmetry_defect(e: &LyapunovEstimate) -> f64 {
    defect_of(&e.lambda)
}

/// Compares the top-k partial sum against the parabolic subbundle lower
/// bound `2 deg_par / (2g - 2 + cusps)`. Panics when k is outside 1..=r or
/// the base topology is not hyperbolic.
pub fn compare_bound(
    e: &LyapunovEstimate,
    k: usize,
    deg_par: &Rat,
    g: i64,
    cusps: i64,
) -> BoundComparison {
    assert!(
        k >= 1 && k <= e.lambda.len(),
        "subbundle rank k = {k} outside 1..={}",
        e.lambda.len()
    );
    let bound = rat_to_f64(
        &hodge::main_bound(deg_par, g, cusps).expect("base topology must be hyperbolic"),
    );
    let partial_sum: f64 = e.lambda[..k].iter().sum();
    BoundComparison {
        bound,
        partial_sum,
        slack: partial_sum - bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, rat_int, RatMat};
    use crate::monodromy::{cy_realization, levelt_construct, HypergeometricParams, MonodromyRep};

    fn small_cfg() -> SimulationConfig {
        SimulationConfig {
            steps: 4_000,
            burn_in: 500,
            trajectories: 3,
            ..SimulationConfig::default()
        }
    }

    fn temp_path(tag: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!(
            "hyperlyap-{tag}-{}-{:?}.json",
            std::process::id(),
            std::thread::current().id()
        ));
        let _ = fs::remove_file(&p);
        p
    }

    fn stub_estimate(lambda: Vec<f64>) -> LyapunovEstimate {
        LyapunovEstimate {
            stderr: vec![0.0; lambda.len()],
            total_time: 1.0,
            symmetry_defect: defect_of(&lambda),
            per_trajectory: vec![lambda.clone()],
            lambda,
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimulationConfig::default().validate().is_ok());
        let bad = [
            SimulationConfig { dt: 0.0, ..Default::default() },
            SimulationConfig { dt: 1.5, ..Default::default() },
            SimulationConfig { steps: 0, ..Default::default() },
            SimulationConfig { qr_interval: 0, ..Default::default() },
            SimulationConfig { trajectories: 0, ..Default::default() },
            SimulationConfig { burn_in: 2_000_000, ..Default::default() },
            SimulationConfig { y_guard: 0.0, ..Default::default() },
            SimulationConfig { y_guard: 2.0, ..Default::default() },
            // burn_in below steps but rounding to the QR grid hits steps.
            SimulationConfig { steps: 15, burn_in: 11, ..Default::default() },
        ];
        for cfg in bad {
            assert!(
                matches!(cfg.validate(), Err(LyapunovError::InvalidConfig(_))),
                "accepted {cfg:?}"
            );
        }
    }

    #[test]
    fn accumulation_boundary_rounds_up_to_qr_grid() {
        let cfg = SimulationConfig::default();
        assert_eq!(cfg.accumulation_boundary(), 10_000);
        let cfg = SimulationConfig { burn_in: 11, ..Default::default() };
        assert_eq!(cfg.accumulation_boundary(), 20);
        let cfg = SimulationConfig { burn_in: 0, ..Default::default() };
        assert_eq!(cfg.accumulation_boundary(), 0);
    }

    #[test]
    fn trivial_rep_has_exactly_zero_exponents() {
        let rep = MonodromyRep::trivial(3);
        let cfg = SimulationConfig {
            steps: 2_000,
            burn_in: 100,
            trajectories: 2,
            ..SimulationConfig::default()
        };
        let e = estimate(&rep, &cfg).unwrap();
        assert_eq!(e.lambda.len(), 3);
        for l in &e.lambda {
            assert!(l.abs() <= 1e-12, "trivial exponent {l}");
        }
        for s in &e.stderr {
            assert!(s.abs() <= 1e-12);
        }
        assert!(e.symmetry_defect <= 1e-12);
    }

    #[test]
    fn estimates_are_bitwise_deterministic() {
        let rep = cy_realization(4).unwrap();
        let cfg = small_cfg();
        let a = estimate(&rep, &cfg).unwrap();
        let b = estimate(&rep, &cfg).unwrap();
        assert_eq!(a, b);
        let other = estimate(
            &rep,
            &SimulationConfig { seed: 2, ..small_cfg() },
        )
        .unwrap();
        assert_ne!(a.lambda, other.lambda);
    }

    #[test]
    fn run_trajectory_advances_the_stream() {
        let rep = cy_realization(4).unwrap();
        let cfg = SimulationConfig {
            steps: 500,
            burn_in: 50,
            trajectories: 1,
            ..SimulationConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let before = rng.clone();
        let v = run_trajectory(&rep, &cfg, &mut rng).unwrap();
        assert_eq!(v.len(), rep.fiber_dim());
        // Exactly the initial rotation draw was consumed.
        let mut expect = before;
        let _ = expect.gen::<f64>();
        assert_eq!(rng, expect);
    }

    #[test]
    fn symplectic_cases_have_near_zero_exponent_sum() {
        let rep = cy_realization(7).unwrap();
        let cfg = SimulationConfig {
            steps: 20_000,
            burn_in: 1_000,
            trajectories: 2,
            ..SimulationConfig::default()
        };
        let e = estimate(&rep, &cfg).unwrap();
        let sum: f64 = e.lambda.iter().sum();
        assert!(sum.abs() <= 1e-9, "det-1 exponent sum {sum}");
    }

    #[test]
    fn legendre_short_run_lands_near_one() {
        let params = HypergeometricParams::new(vec![rat(1, 2), rat(1, 2)], vec![rat_int(0); 2])
            .unwrap();
        let rep = levelt_construct(&params);
        let cfg = SimulationConfig {
            steps: 100_000,
            burn_in: 2_000,
            trajectories: 2,
            ..SimulationConfig::default()
        };
        let e = estimate(&rep, &cfg).unwrap();
        assert!(
            e.lambda[0] > 0.7 && e.lambda[0] < 1.3,
            "short Legendre run gave lambda1 = {}",
            e.lambda[0]
        );
        assert!(e.symmetry_defect <= 3.0 * e.stderr[0].max(e.stderr[1]) + 1e-9);
    }

    #[test]
    fn expanding_rep_is_rejected() {
        let h0 = RatMat::from_rows(vec![
            vec![rat_int(2), rat_int(0)],
            vec![rat_int(0), rat(1, 2)],
        ]);
        let h1 = RatMat::identity(2);
        let rep = MonodromyRep::from_exact(h0, h1).unwrap();
        let err = estimate(&rep, &SimulationConfig::default()).unwrap_err();
        assert!(matches!(err, LyapunovError::NotIntegrable(_)));
    }

    #[test]
    fn tight_y_guard_trips_the_alarm() {
        let rep = cy_realization(4).unwrap();
        let cfg = SimulationConfig {
            steps: 1_000,
            burn_in: 10,
            trajectories: 1,
            y_guard: 0.99,
            ..SimulationConfig::default()
        };
        let err = estimate(&rep, &cfg).unwrap_err();
        assert!(matches!(err, LyapunovError::PrecisionAlarm(_)));
    }

    #[test]
    fn basis_is_orthonormal_after_qr_events() {
        let rep = cy_realization(12).unwrap();
        let cfg = SimulationConfig {
            steps: 100,
            burn_in: 10,
            trajectories: 1,
            ..SimulationConfig::default()
        };
        let images = rep.generator_images_f64(&cfg.assignment).unwrap();
        let mut runner = TrajectoryRunner::new(
            &cfg,
            &images,
            rep.fiber_dim(),
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0)),
        );
        runner.advance(100).unwrap();
        // Step 100 is a QR event, so the basis is freshly orthonormal.
        let b = &runner.state.b;
        let gram = b.transpose() * b;
        let dim = rep.fiber_dim();
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (gram[(i, j)] - want).abs() <= 1e-10,
                    "gram[{i},{j}] = {}",
                    gram[(i, j)]
                );
            }
        }
    }

    #[test]
    fn symmetry_defect_examples() {
        let e = stub_estimate(vec![1.0, 0.3, -0.3, -1.0]);
        assert_eq!(symmetry_defect(&e), 0.0);
        let e = stub_estimate(vec![1.0, 0.3, -0.2, -1.0]);
        assert!((symmetry_defect(&e) - 0.1).abs() <= 1e-15);
    }

    #[test]
    fn compare_bound_examples() {
        let e = stub_estimate(vec![0.7, 0.5, -0.5, -0.7]);
        let cmp = compare_bound(&e, 2, &rat(3, 5), 0, 3);
        assert!((cmp.bound - 1.2).abs() <= 1e-15);
        assert!((cmp.partial_sum - 1.2).abs() <= 1e-15);
        assert!(cmp.slack.abs() <= 1e-12);
        let cmp = compare_bound(&e, 2, &rat_int(0), 0, 3);
        assert_eq!(cmp.bound, 0.0);
        assert_eq!(cmp.slack, cmp.partial_sum);
        let cmp = compare_bound(&e, 2, &rat(1, 3), 0, 3);
        assert!((cmp.bound - 2.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    #[should_panic(expected = "subbundle rank")]
    fn compare_bound_rejects_zero_rank() {
        let e = stub_estimate(vec![0.5, -0.5]);
        compare_bound(&e, 0, &rat(1, 2), 0, 3);
    }

    #[test]
    fn resumable_fresh_run_matches_estimate() {
        let rep = cy_realization(4).unwrap();
        let cfg = SimulationConfig {
            steps: 3_000,
            burn_in: 200,
            trajectories: 2,
            ..SimulationConfig::default()
        };
        let path = temp_path("fresh");
        let direct = estimate(&rep, &cfg).unwrap();
        let resumed = estimate_resumable(&rep, &cfg, &path).unwrap();
        assert_eq!(direct, resumed);
        // The final snapshot sits at steps; running again only re-finishes.
        let again = estimate_resumable(&rep, &cfg, &path).unwrap();
        assert_eq!(direct, again);
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn mid_run_snapshot_resumes_bitwise() {
        let rep = cy_realization(4).unwrap();
        let cfg = SimulationConfig {
            steps: 3_000,
            burn_in: 200,
            trajectories: 2,
            ..SimulationConfig::default()
        };
        let images = rep.generator_images_f64(&cfg.assignment).unwrap();
        let dim = rep.fiber_dim();
        // Build a checkpoint mid-run, off the QR grid on purpose.
        let halt = 1_234;
        let states = (0..cfg.trajectories)
            .map(|i| {
                let rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::from(i)));
                let mut runner = TrajectoryRunner::new(&cfg, &images, dim, rng);
                runner.advance(halt).unwrap();
                runner.to_snapshot()
            })
            .collect();
        let snap = Snapshot {
            schema_version: SNAPSHOT_SCHEMA_VERSION,
            rep_fingerprint: rep_fingerprint(&rep),
            config: cfg.clone(),
            step: halt,
            states,
        };
        let path = temp_path("midrun");
        snap.save(&path).unwrap();
        let resumed = estimate_resumable(&rep, &cfg, &path).unwrap();
        assert_eq!(resumed, estimate(&rep, &cfg).unwrap());
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn snapshot_rejection_paths() {
        let rep = cy_realization(4).unwrap();
        let cfg = SimulationConfig {
            steps: 1_000,
            burn_in: 100,
            trajectories: 1,
            ..SimulationConfig::default()
        };
        let path = temp_path("corrupt");

        fs::write(&path, "not a snapshot {{").unwrap();
        assert!(matches!(
            estimate_resumable(&rep, &cfg, &path),
            Err(LyapunovError::CorruptSnapshot(_))
        ));

        // A healthy snapshot, then tamper with each guard in turn.
        let _ = fs::remove_file(&path);
        let _ = estimate_resumable(&rep, &cfg, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["schema_version"] = serde_json::json!(99);
        fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
        let err = estimate_resumable(&rep, &cfg, &path).unwrap_err();
        assert!(err.to_string().contains("schema version"), "{err}");

        fs::write(&path, &text).unwrap();
        let other_rep = cy_realization(7).unwrap();
        let err = estimate_resumable(&other_rep, &cfg, &path).unwrap_err();
        assert!(err.to_string().contains("different representation"), "{err}");

        let err = estimate_resumable(
            &rep,
            &SimulationConfig { steps: 2_000, ..cfg.clone() },
            &path,
        )
        .unwrap_err();
        assert!(err.to_string().contains("configuration differs"), "{err}");

        // Truncation breaks the parse.
        fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(
            estimate_resumable(&rep, &cfg, &path),
            Err(LyapunovError::CorruptSnapshot(_))
        ));
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn derived_seeds_are_distinct() {
        let seeds: Vec<u64> = (0..16).map(|i| derive_seed(1, i)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), seeds.len());
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn snapshot_json_roundtrip_is_bitwise() {
        let rep = cy_realization(4).unwrap();
        let cfg = SimulationConfig {
            steps: 3_000,
            burn_in: 200,
            trajectories: 2,
            ..SimulationConfig::default()
        };
        let images = rep.generator_images_f64(&cfg.assignment).unwrap();
        let dim = rep.fiber_dim();
        let rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
        let mut direct = TrajectoryRunner::new(&cfg, &images, dim, rng);
        direct.advance(1_234).unwrap();
        let snap = direct.to_snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        let back: TrajectorySnapshot = serde_json::from_str(&json).unwrap();
        // bitwise comparison of the round-trip
        assert_eq!(snap.b, back.b, "b round-trip");
        assert_eq!(snap.logsums, back.logsums, "logsums round-trip");
        assert_eq!(snap.rng, back.rng, "rng round-trip");
        assert_eq!(
            (snap.frame.frame.a, snap.frame.frame.b, snap.frame.frame.c, snap.frame.frame.d),
            (back.frame.frame.a, back.frame.frame.b, back.frame.frame.c, back.frame.frame.d),
            "frame round-trip"
        );
        let mut resumed = TrajectoryRunner::restore(&cfg, &images, dim, 1_234, &back).unwrap();
        direct.advance(3_000).unwrap();
        resumed.advance(3_000).unwrap();
        assert_eq!(direct.state.b, resumed.state.b, "basis diverged");
        assert_eq!(direct.state.logsums, resumed.state.logsums, "logsums diverged");
        assert_eq!(direct.state.frame.frame, resumed.state.frame.frame, "frame diverged");
        assert_eq!(direct.finish().unwrap(), resumed.finish().unwrap());
    }

    #[test]
    #[ignore]
    fn timing_probe_default_case() {
        let rep = cy_realization(4).unwrap();
        let cfg = SimulationConfig {
            trajectories: 1,
            ..SimulationConfig::default()
        };
        let t0 = std::time::Instant::now();
        let e = estimate(&rep, &cfg).unwrap();
        println!(
            "2e6 steps in {:?}; lambda = {:?}, stderr = {:?}",
            t0.elapsed(),
            e.lambda,
            e.stderr
        );
    }
}
