use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MelnikovError {
    #[error("incompatible radicals: {0} and {1}")]
    IncompatibleRadicals(String, String),
    #[error("resonant forcing: right-hand side has a component along the kernel H_{beta}")]
    ResonantForcing { beta: usize },
    #[error("kernel condition unsatisfiable: H_{beta}(0) = 0 cannot adjust the value at zero")]
    KernelConditionUnsatisfiable { beta: usize },
    #[error("not resonant: beta = {0} is not a non-negative integer")]
    NotResonant(String),
    #[error("no algebraic solution of the variational equation: {0}")]
    NoAlgebraicSolution(String),
    #[error("no decaying adjoint solution: {0}")]
    NoDecayingSolution(String),
    #[error("integrand is not even (parity {0})")]
    OddIntegrand(String),
    #[error("wrong parity for this derivative (sigma_v = {sigma_v})")]
    WrongParity { sigma_v: i8 },
    #[error("degenerate bifurcation: {0} vanishes")]
    DegenerateBifurcation(String),
    #[error("no closed form available for {0}")]
    NoClosedFormAvailable(String),
    #[error("cannot parse exact value: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, MelnikovError>;
