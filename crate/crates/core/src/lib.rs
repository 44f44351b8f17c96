//! Normal Pontryagin extremals for left-invariant time-optimal problems on
//! step-2 free Carnot groups with strictly convex control sets.
//!
//! - [`convex_bodies`]: control sets and their support functions `H`.
//! - [`lie_structure`]: Poisson brackets on `L*`, linear Casimirs, symplectic leaves.
//! - [`extremal_flow`]: the vertical Hamiltonian flow, invariants, periodicity.
//! - [`horizontal_lift`]: the group trajectory driven by extremal controls.

pub mod convex_bodies;
pub mod error;
pub mod extremal_flow;
pub mod horizontal_lift;
pub mod lie_structure;
pub mod ode;

pub use convex_bodies::{ControlBody, ValidationReport, Violation};
pub use error::{Error, Result};
pub use extremal_flow::{
    classify_k3, detect_period, extremal_control, integrate_vertical, integrate_vertical_partial, is_equilibrium,
    quasi_periodicity_check, vertical_rhs, Classification, ExtremalClass, FlowOptions, PeriodEstimate,
    ReturnWitness, Trajectory, VerticalFlow, VerticalState,
};
pub use horizontal_lift::{
    horizontal_rhs, integrate_horizontal, integrate_horizontal_partial, GroupPoint, HorizontalVelocity,
    LiftedFlow, LiftedTrajectory,
};
pub use lie_structure::{
    casimir_brackets, casimir_value, leaf_classify, AlgebraSpec, BasisElement, BracketTable, CasimirBasis,
    LeafClass, SkewMatrix,
};
