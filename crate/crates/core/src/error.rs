use thiserror::Error;

/// Unified error type for the simulator and its harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation that needs at least one element got none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Vector lengths that must agree do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The linear-domain potential or gradient magnitude left the
    /// representable range; callers must switch to the log-domain form.
    #[error("linear-domain overflow at u = {u}; use the log-domain form")]
    Overflow { u: f64 },

    /// A computation produced NaN or infinity where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Weight vector failed its sign/norm contract.
    #[error("invalid emotion weights: {0}")]
    InvalidWeights(String),

    /// A probability vector failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Configuration rejected at load or at run initialization, with one
    /// reason per line.
    #[error("invalid configuration:\n  {}", reasons.join("\n  "))]
    InvalidConfig { reasons: Vec<String> },

    /// External reward outside its configured bound.
    #[error("external reward {value} outside [-{bound}, {bound}]")]
    RewardOutOfRange { value: f64, bound: f64 },

    /// Toll increment outside `[0, eta_max]`.
    #[error("toll increment {value} outside [0, {eta_max}]")]
    TollOutOfRange { value: f64, eta_max: f64 },

    /// Exhaustive plug-in estimation refused an oversized joint alphabet.
    #[error("joint alphabet too large for exhaustive mode: {cells} cells > {max}")]
    AlphabetTooLarge { cells: usize, max: usize },

    /// Estimator precondition on the sample count.
    #[error("not enough samples: got {got}, need at least {need}")]
    NotEnoughSamples { got: usize, need: usize },

    /// A goal referenced a task family with no probe generator.
    #[error("goal family {0} has no probe generator")]
    UnknownGoalFamily(u32),

    /// A module error surfaced mid-run; carries the offending step.
    #[error("run aborted at step {step}: {source}")]
    RunAborted { step: u64, source: Box<Error> },

    /// A trace file failed to parse.
    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },

    /// A config file failed to parse (bad syntax or unknown key).
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// `verify` was asked for a check name that is not in the registry.
    #[error("unknown verification check: {0}")]
    UnknownCheck(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
