//! Stage-by-stage construction of `f` and the bookkeeping that each
//! completed stage carries.

pub mod config;
pub mod engine;
pub mod enumeration;
pub mod state;
pub mod statefile;

pub use config::{ConstructionConfig, OrbitTarget};
pub use engine::{init_stage, nu_bound, run_stage};
pub use enumeration::AlgebraicEnumeration;
pub use state::{
    Budget, CoefficientRecord, Fact, FactKind, Margin, NailPolynomial, Orbit, RegistryEntry, StageState, StepKind,
};
