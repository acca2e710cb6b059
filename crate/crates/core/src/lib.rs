//! Long-term behavior of `φ̇ + sin φ = f(t)` for periodic `f`.
//!
//! A single integration over one period (the ground solution) yields a
//! unimodular 2×2 matrix acting on real projective labels of solutions. Its
//! discriminant separates phase-locked from quasiperiodic motion, and its
//! powers give every solution at every later period in closed form.

pub mod bias;
mod dense;
pub mod error;
pub mod export;
pub mod integrator;
pub mod moebius;
pub mod monodromy;
mod ode;
pub mod propagation;
pub mod sweep;
pub mod validate;

pub use bias::{BiasSpec, Waveform};
pub use error::{Error, Result};
pub use integrator::{
    integrate_ground, integrate_phase, integrate_phase_periods, integrate_rsj,
    integrate_with_integrals, GroundSolution, GroundState, SolverConfig, Trajectory,
};
pub use moebius::{FValue, ProjectiveC};
pub use monodromy::{Monodromy, Regime, RegimeReport};
pub use propagation::{PropagationPlan, SegmentedTrajectory};
pub use sweep::{StepInterval, SweepRow};
pub use validate::{CheckName, CheckOutcome};
