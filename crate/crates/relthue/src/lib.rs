//! Solver for relative power integral bases of totally complex quartic
//! extensions of totally real number fields.
//!
//! The pipeline: build the cubic resolvent and the two quadratic index forms
//! from the relative defining polynomial, solve the resolvent norm equation by
//! factoring it over a quadratic extension and resolving the resulting
//! two-term unit equation (Baker bound, lattice reduction, ellipsoid
//! enumeration, modular sieving), parametrize the conic cut out by the
//! resolvent solutions, solve the induced quartic relative Thue equations by
//! a small-solution bound, and assemble the generator families.

pub mod baker;
pub mod bigfloat;
#[cfg(test)]
pub(crate) mod fixtures;
pub mod indexform;
pub mod lattice;
pub mod order;
pub mod poly;
pub mod report;
pub mod spec_file;
pub mod thue;
pub mod units;
pub mod unitsolve;

/// Crate-wide error type.  Variants map to distinct CLI exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error("cardinality cap exceeded: {0}")]
    CardinalityCap(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::Verification(_) => 3,
            Error::CardinalityCap(_) => 4,
            Error::Precision(_) => 5,
            Error::MissingData(_) => 6,
            Error::Io(_) => 7,
        }
    }
}
