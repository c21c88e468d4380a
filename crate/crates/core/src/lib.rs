//! Numerical laboratory for the Yamabe flow on locally conformally flat
//! manifolds.
//!
//! A metric in the conformal class of a flat chart is stored as its
//! log-conformal factor `phi`, so `g = e^{2 phi} * delta`. The flow
//! `dg/dt = -R g` becomes `d phi/dt = -R/2` with the scalar curvature `R`
//! given in closed conformal form. Radial symmetry reduces everything to a
//! one-dimensional grid; the crate provides the curvature engine, an explicit
//! flow integrator with blow-up detection, the monitor suite for the
//! evolution identities (scalar and Ricci evolution, the pinching-quantity
//! identity, the Harnack quantity), the pointwise eigenvalue algebra with a
//! fuzzing harness, and closed-form reference solutions.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all transcendental
//! math goes through [`math`].

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod curvature;
pub mod field;
pub mod flow;
pub mod math;
pub mod monitor;
pub mod pinch;
pub mod reference;
pub mod tensor;

pub use curvature::{christoffel, ricci_eigenvalues, scalar_curvature, CurvatureState};
pub use field::{build_field, Chart, ConformalField, FieldError, Grid, Profile};
pub use flow::{
    adaptive_dt, estimate_blowup_time, parabolic_rescale, FlowError, FlowParams, FlowState,
    RescaledTrajectory, StopReason,
};
pub use monitor::{
    classify_singularity, MonitorError, MonitorRecord, SingularityKind, SingularityVerdict,
};
pub use pinch::{EigenTuple, FuzzConfig, FuzzReport, PinchError};
pub use reference::{homothety, soliton_residual, Homothety, SolitonProbe};
