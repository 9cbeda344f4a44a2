use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("pixel value {0} is not a bit")]
    InvalidBit(u8),

    #[error("{what} must be finite")]
    NonFinite { what: &'static str },

    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("expectation has imaginary residue {0:e}; operator is not Hermitian")]
    ImaginaryResidue(f64),

    #[error("operator {name} is not Hermitian and cannot be measured")]
    NotObservable { name: String },

    #[error("operator {name} cannot be used as an ansatz generator")]
    NotGenerator { name: String },

    #[error("operator {name} fails the symmetry check (commutator norm {norm:e})")]
    NotEquivariant { name: String, norm: f64 },

    #[error("unknown pool operator {0:?}")]
    UnknownOperator(String),

    #[error("dense check limited to at most 3 qubits per register, got {0}")]
    DenseTooLarge(usize),

    #[error("could not draw {0} pairs disjoint from the excluded set")]
    Exhausted(usize),
}
