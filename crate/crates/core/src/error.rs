use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus {0} is composite")]
    CompositeModulus(u64),
    #[error("modulus 2 is not supported: halving is not a bijection")]
    EvenModulus,
    #[error("modulus {0} is below 3")]
    ModulusTooSmall(u64),
    #[error("functions live over different fields (p = {left} vs p = {right})")]
    FieldMismatch { left: usize, right: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("dilation factor must be nonzero")]
    ZeroDilation,
    #[error("spectral evaluation left imaginary residue {0:e}")]
    NonRealResult(f64),
    #[error("alpha = {0} is outside (2/3, 1]")]
    AlphaOutOfRange(f64),
    #[error("density theta = {theta} is infeasible at p = {p} (need 1/p <= theta <= 1)")]
    InfeasibleDensity { theta: f64, p: usize },
    #[error("eps = {0} is outside the admissible range")]
    EpsOutOfRange(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("progression length {n} is invalid for p = {p}")]
    BadLength { n: usize, p: usize },
    #[error("full-family enumeration capped at p <= {cap}, got p = {p}")]
    FamilyTooLarge { p: usize, cap: usize },
    #[error("search budget exhausted at N = {n}; best AP-free set found has size {best}")]
    BudgetExhausted { n: usize, best: usize },
    #[error("range N = {0} too small for the digit construction (need N >= 8)")]
    RangeTooSmall(usize),
    #[error("element {0} outside the range [1, {1}]")]
    ElementOutOfRange(usize, usize),
    #[error("surgery plan invariant violated: {0}")]
    PlanInvariant(String),
    #[error("surgery produced value {value} > 1 at {index}")]
    RangeViolation { index: usize, value: f64 },
    #[error("Bohr set is empty")]
    EmptyBohrSet,
    #[error("p = {0} is below the pipeline floor (29)")]
    ParameterRegime(usize),
    #[error("csv: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
