//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the coclass machinery.
///
/// Mathematical "no" answers (no solution, no morphism found during a
/// search) are normal return values, not errors; the variants here signal
/// invalid input data, precision exhaustion, or violated preconditions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("modulus mismatch: {0}")]
    ModulusMismatch(String),

    #[error("modulus overflow: {0}^{1} does not fit in 64 bits")]
    ModulusOverflow(u64, u32),

    #[error("invalid group table: {0}")]
    InvalidGroup(String),

    #[error("action is not uniserial: {0}")]
    NotUniserial(String),

    #[error("not a cocycle: coboundary is nonzero at tuple {0:?}")]
    NotACocycle(Vec<usize>),

    #[error("no complement: restricted cocycle is not a coboundary")]
    NoComplement,

    #[error("cochain values are not divisible by p^{0}")]
    DivNotDivisible(u32),

    #[error("precision too low: level {got} but the construction needs at least {need}")]
    PrecisionTooLow { need: u32, got: u32 },

    #[error("precision unstable: {0}; raise the precision slack")]
    PrecisionUnstable(String),

    #[error("conjugation by the given element does not map the source into the target: {0}")]
    NotMapped(String),

    #[error("element does not induce a morphism between the given objects")]
    NotAMorphism,

    #[error("family index x = {x} is below the certified bound x0 = {x0}")]
    BelowX0 { x: u32, x0: u32 },

    #[error("group order {order} exceeds the configured cap {cap}")]
    CapExceeded { order: u64, cap: u64 },

    #[error("no complement inside the target subgroup exists for this choice of invariant lifts")]
    NoConstrainedComplement,

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
