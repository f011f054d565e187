//! Nonadiabatic path control of a driven three-level system with global-phase error correction.
//!
//! Basis order is `(|0>, |1>, |e>)` throughout and times are in units of the stage period `T`.

pub mod analysis;
pub mod error;
pub mod fields;
pub mod frame;
pub mod operator;
pub mod propagate;
pub mod quadrature;
pub mod scenarios;
pub mod schedule;

pub use num_complex::Complex64 as C64;

pub use analysis::{
    correction_margin, dtilde_err, error_rotation, m12_ibp_bound, m_kernels_commutative, magnus_fidelity,
    magnus_propagator, ErrorRotation, FidelityEstimate, Kernels,
};
pub use error::{Error, Result};
pub use fields::{
    assemble_h0, error_hamiltonian, hamiltonian, synthesize_fields_general, synthesize_fields_lambda, ErrorKind,
    ErrorModel, FieldSet,
};
pub use frame::{ancillary_states, exact_propagator, global_phases, phase_functions, von_neumann_residual};
pub use frame::{AncillaryBasis, GlobalPhases, PhaseFunctions};
pub use operator::{matrix_exponential, Level, Operator, OperatorKind, StateVector};
pub use propagate::{propagate, propagator_accumulate, TimeGrid};
pub use quadrature::quadrature;
pub use scenarios::{
    audit, cyclic_transfer, epsilon_sweep, populations, single_transfer, CyclicSpec, DiagnosticsReport,
    SimulationResult, SweepTable, TransferSpec,
};
pub use schedule::{Path, PathSchedule, Profile, Stage};
