use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engines can report. The variants are grouped by the
/// module that raises them; [`Error::module`] returns that tag for
/// diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    // symbol
    #[error("reality violation: |Im| = {residual:e} exceeds tolerance {tolerance:e}")]
    RealityViolation { residual: f64, tolerance: f64 },
    #[error("frequency ({m}, {n}) exceeds the cap {cap}")]
    FrequencyCap { m: i32, n: i32, cap: i32 },
    #[error("matrix {0:?} is not unimodular")]
    NotUnimodular([[i64; 2]; 2]),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    // quantum
    #[error("Bloch matrix is not Hermitian (defect {defect:e}, norm {norm:e})")]
    HermiticityFailure { defect: f64, norm: f64 },
    #[error("eigenvalue iteration did not converge: {iterations} iterations, off-diagonal {residual:e}")]
    ConvergenceFailure { iterations: usize, residual: f64 },
    #[error("no band or gap intersects [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("invalid flux: {0}")]
    InvalidFlux(String),

    // classical
    #[error("degenerate critical point near (p, x) = ({p:.6}, {x:.6}), |det H''| = {det:e}")]
    DegenerateCritical { p: f64, x: f64, det: f64 },
    #[error("level set E = {energy} is empty (range [{min}, {max}])")]
    EmptyLevelSet { energy: f64, min: f64, max: f64 },
    #[error("energy {energy} is within {distance:e} of the critical value {critical}")]
    NearCriticalValue { energy: f64, critical: f64, distance: f64 },
    #[error("energy {0} is not a saddle value")]
    NotASaddleValue(f64),
    #[error("tracing diverged: {0}")]
    TracingDivergence(String),
    #[error("no sign change on the bracket [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    // actions
    #[error("trajectory is not a closed cycle")]
    NotAClosedCycle,
    #[error("arc passes within {distance:e} of a critical point (cutoff {cutoff:e})")]
    NearCritical { distance: f64, cutoff: f64 },
    #[error("renormalized time extrapolants disagree: {first} vs {second}")]
    NoConvergence { first: f64, second: f64 },
    #[error("vertical tangency at a corner survives the perturbation")]
    TangencyAtCorner,
    #[error("energy window [{lo}, {hi}] crosses the critical value {critical}")]
    WindowCrossesCritical { lo: f64, hi: f64, critical: f64 },

    // singular_bs / special functions
    #[error("argument {value} outside the supported range {limit}")]
    OutOfRange { value: f64, limit: f64 },
    #[error("branch n = {n} leaves the spectral window |mu| <= {window}")]
    BranchOutOfWindow { n: i64, window: f64 },
    #[error("local edge indexing inconsistent with the matching template: {0}")]
    InconsistentIndexing(String),
    #[error("separatrix topology not covered by a closed-form scenario: {0}")]
    ScenarioUnsupported(String),

    // harness
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            RealityViolation { .. } | FrequencyCap { .. } | NotUnimodular(_) | Parse { .. } => {
                "symbol"
            }
            HermiticityFailure { .. }
            | ConvergenceFailure { .. }
            | EmptyWindow { .. }
            | InvalidFlux(_) => "quantum",
            DegenerateCritical { .. }
            | EmptyLevelSet { .. }
            | NearCriticalValue { .. }
            | NotASaddleValue(_)
            | TracingDivergence(_)
            | NoBracket { .. } => "classical",
            NotAClosedCycle
            | NearCritical { .. }
            | NoConvergence { .. }
            | TangencyAtCorner
            | WindowCrossesCritical { .. } => "actions",
            OutOfRange { .. }
            | BranchOutOfWindow { .. }
            | InconsistentIndexing(_)
            | ScenarioUnsupported(_) => "singular_bs",
            Config(_) | Io { .. } => "harness",
        }
    }

    /// True for configuration problems (as opposed to numerical failures).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Parse { .. } | Error::Io { .. })
    }
}
