//! Adaptive verification of bipartite pure states.
//!
//! The crate builds verification strategies made of local measurements with
//! one round of classical communication, evaluates their spectral gap
//! `v(Ω)`, solves the convex relaxations that bound the best achievable gap,
//! and simulates the resulting pass/fail protocol.
//!
//! Module map:
//! - [`linalg`]: dense complex operators on `C^{d_A} ⊗ C^{d_B}`.
//! - [`states`]: Schmidt-canonical targets and density operators.
//! - [`strategy`]: conditional tests, mixtures, `v(Ω)`, twirl and swap maps.
//! - [`constructors`]: closed-form optimal and near-optimal strategies.
//! - [`optimizer`]: bisection plus Dykstra projections for the relaxations.
//! - [`protocol`]: sample-complexity bounds, worst-case states, Monte Carlo.

mod barrier;
pub mod constructors;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod protocol;
pub mod states;
pub mod strategy;

pub use constructors::{
    near_optimal_two_way, one_way_optimal, two_qubit_one_way, two_qubit_two_way, FourierPair,
};
pub use error::{Error, Result};
pub use linalg::{BipartiteDims, Complex64, ComplexMatrix, Subsystem};
pub use optimizer::{Mode, RelaxationSolution, SolverOptions};
pub use protocol::{ProtocolParams, SimMode, SimReport};
pub use states::{DensityOperator, SchmidtState, StateInput};
pub use strategy::{ConditionalTest, Direction, SpectralGapReport, Strategy, WeightedTest};
