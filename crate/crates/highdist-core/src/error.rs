use alloc::string::String;
use core::fmt;

/// Errors raised by circuit construction, simulation and the engines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A register name was declared twice or has zero width.
    InvalidRegister(String),
    /// A register id or name that the layout does not contain.
    UnknownRegister(String),
    /// Operator dimension does not match the target width.
    DimensionMismatch { expected: usize, found: usize },
    /// Matrix, permutation or phase list failed the unitarity check.
    NotUnitary(String),
    /// Target and control registers overlap.
    RegisterCollision(String),
    /// A basis value does not fit its register.
    ValueOutOfRange { value: usize, width: usize },
    /// Dense simulation would exceed the configured qubit cap.
    QubitBudget { required: usize, cap: usize },
    /// Parameter outside the domain of the operation.
    InvalidParameter(String),
    /// An input vector (probabilities, values, truth table) is malformed.
    InvalidInput(String),
    /// A gate acts non-diagonally on the branch index register.
    NotBranchDiagonal(String),
    /// The operation does not support this oracle (for example `a > 0` in HighAmp).
    Unsupported(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidRegister(s) => write!(f, "invalid register: {s}"),
            Error::UnknownRegister(s) => write!(f, "unknown register: {s}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NotUnitary(s) => write!(f, "operator is not unitary: {s}"),
            Error::RegisterCollision(s) => write!(f, "register collision: {s}"),
            Error::ValueOutOfRange { value, width } => {
                write!(f, "value {value} does not fit in {width} qubits")
            }
            Error::QubitBudget { required, cap } => write!(f, "dense simulation needs {required} qubits but the cap is {cap}"),
            Error::InvalidParameter(s) => write!(f, "invalid parameter: {s}"),
            Error::InvalidInput(s) => write!(f, "invalid input: {s}"),
            Error::NotBranchDiagonal(s) => write!(f, "gate is not branch-diagonal: {s}"),
            Error::Unsupported(s) => write!(f, "unsupported: {s}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
