//! Every numerical tolerance and threshold used by the crate, in one place.

/// Identity-level tolerance for register dimensions up to [`SMALL_DIM`].
pub const IDENTITY_TOL: f64 = 1e-12;

/// Identity-level tolerance above [`SMALL_DIM`].
pub const IDENTITY_TOL_LARGE: f64 = 1e-10;

/// Largest dimension still covered by the tight identity tolerance.
pub const SMALL_DIM: usize = 4096;

/// Identity tolerance appropriate for a register of dimension `dim`.
pub fn identity_tol(dim: usize) -> f64 {
    if dim <= SMALL_DIM {
        IDENTITY_TOL
    } else {
        IDENTITY_TOL_LARGE
    }
}

/// Threshold below which an amplitude-squared sum counts as orthogonal.
/// Gates ABL denominators, weak-value denominators, and post-selection
/// success probabilities.
pub const ORTHOGONALITY_TOL: f64 = 1e-14;

/// Correlation-pattern classification: SAME needs p >= 1 - this, DIFFERENT
/// needs p <= this, anything else is reported undetermined.
pub const PATTERN_TOL: f64 = 1e-10;

/// Roots-of-unity residual bound reported by the generalization check.
pub const ROOTS_RESIDUAL_TOL: f64 = 1e-12;

/// Hard default cap on register dimension M^N (overridable per call site).
pub const DEFAULT_DIM_CAP: usize = 1 << 20;

/// Expected log-log slope of the post-selected deflection scan and its
/// tolerance band.
pub const SLOPE_NULL: f64 = 2.0;
pub const SLOPE_NULL_TOL: f64 = 0.1;

/// Expected log-log slope without post-selection and its tolerance band.
pub const SLOPE_LINEAR: f64 = 1.0;
pub const SLOPE_LINEAR_TOL: f64 = 0.05;

/// Mean shifts below this floor are excluded from slope fits.
pub const SHIFT_FLOOR: f64 = 1e-15;

/// Weakness regime: couplings with lambda <= WEAKNESS_RATIO * sigma count as
/// weak; larger couplings are tagged strong-coupling in scan outputs.
pub const WEAKNESS_RATIO: f64 = 0.1;

/// Monte Carlo z-score bands: |z| <= Z_OK passes, up to Z_FLAG is flagged,
/// beyond that a cell is reported extreme.
pub const Z_OK: f64 = 4.0;
pub const Z_FLAG: f64 = 5.0;

/// Probability mass enumerated over all outcome sequences must reach 1
/// within this bound.
pub const ENUMERATION_TOL: f64 = 1e-10;
