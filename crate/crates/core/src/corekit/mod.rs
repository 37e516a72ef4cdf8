//! Exact field arithmetic, ball arithmetic and the symbolic value ledger.

mod ball;
mod disk;
mod gauss;
mod precision;
mod reduce;
mod symbolic;
mod text;

pub use ball::{ComplexBox, RAD_PREC};
pub(crate) use ball::{down, mag_inf, up};
pub use disk::Disk;
pub use gauss::GaussianRational;
pub use precision::PrecisionPolicy;
pub use reduce::reduce_exact;
pub use symbolic::{Exactness, Kind, SymbolicValue, Transcendental};
pub use text::{read_dag, DagWriter};

/// Enclosure of `v` with radius at most `target`.
pub fn enclose(
    v: &SymbolicValue,
    target: &rug::Float,
    policy: &PrecisionPolicy,
) -> crate::error::Result<ComplexBox> {
    v.enclose(target, policy)
}
