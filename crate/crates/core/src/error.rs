//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised while validating or querying the physical model.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("site index {0} out of range (array has {1} sites)")]
    SiteOutOfRange(usize, usize),
    #[error("site {0} is vacant")]
    VacantSite(usize),
    #[error("identical-site query (site {0})")]
    IdenticalSites(usize),
    #[error("duplicate site positions at indices {0} and {1}")]
    DuplicatePositions(usize, usize),
    #[error("duplicate color label '{0}'")]
    DuplicateColor(String),
    #[error("colors '{0}' and '{1}' have equal detunings {2} rad/us")]
    DegenerateDetunings(String, String, f64),
    #[error("color '{0}' has zero detuning")]
    ZeroDetuning(String),
    #[error("color '{0}' dresses vacant site {1}")]
    DressedVacancy(String, usize),
    #[error("negative Rabi magnitude is not representable; got {0} for color '{1}' site {2}")]
    NegativeRabi(f64, String, usize),
    #[error("interaction coefficient must be finite and nonzero, got {0}")]
    BadC6(f64),
    #[error("exact resonance: detuning of color '{0}' cancels V({1},{2}) = {3} rad/us")]
    ResonancePole(String, usize, usize, f64),
    #[error("no shared dressing color between sites {0} and {1}")]
    MissingChannel(usize, usize),
    #[error("noise rate must be nonnegative, got {0}")]
    NegativeRate(f64),
    #[error("{0}")]
    Invalid(String),
}

/// Errors raised by numerical procedures.
#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("detunings are incommensurate at tolerance {tol:e} with integer bound {bound}")]
    Incommensurate { tol: f64, bound: i64 },
    #[error("Fourier truncation too small: N_max = {n_max} < max harmonic {max_harmonic}")]
    TruncationTooSmall { n_max: i64, max_harmonic: i64 },
    #[error("quasienergies not converged: window eigenvalues move by {drift:e} (tol {tol:e}) under N_max -> N_max + 2")]
    NotConverged { drift: f64, tol: f64 },
    #[error("requested block is not quasi-degenerate: intra-block spread {spread:e} vs gap to complement {gap:e}")]
    NotQuasiDegenerate { spread: f64, gap: f64 },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("potential balancing did not converge after {iters} iterations; residual {residual:e}")]
    BalanceDiverged { iters: usize, residual: f64 },
    #[error("quasi-degeneracy violated: |V_ij - V_ik| = {defect:e} exceeds tolerance {tol:e}")]
    QuasiDegeneracyViolated { defect: f64, tol: f64 },
    #[error("state dimension {0} exceeds configured limit {1}")]
    DimensionOverflow(usize, usize),
    #[error("time grids differ; cannot compare runs")]
    GridMismatch,
    #[error("initial state outside the requested sector basis")]
    StateOutsideSector,
    #[error("broken loop: hopping between sites {0} and {1} vanishes")]
    BrokenLoop(usize, usize),
    #[error("gap closing detected on the momentum grid near k-index ({0}, {1})")]
    GapClosing(usize, usize),
    #[error("no eigenstates found in the requested energy window")]
    EmptyWindow,
    #[error("relative-coordinate cutoff too small: boundary weight {weight:e} exceeds {tol:e}")]
    CutoffTooSmall { weight: f64, tol: f64 },
    #[error("{0}")]
    Invalid(String),
}
