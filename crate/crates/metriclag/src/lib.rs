//! Calculus, mechanics and wave dynamics built on *deformed* derivatives:
//! operators of the form `kernel(x) * d/dx` whose kernel encodes a fractal
//! or nonextensive structure of the underlying medium.
//!
//! The crate provides the deformed operators themselves ([`deform`]), the
//! Tsallis q-algebra they connect to ([`qalgebra`]), a small symbolic
//! expression layer ([`expr`]), and the layers built on top: Lagrangians,
//! Euler-Lagrange residuals, action minimisation, Newton-like dynamics,
//! Schrödinger-type solvers, Hamiltonian flow and Noether currents.

// TRIM-MARKER: modules restored as they land
pub mod action;
pub mod deform;
pub mod dynamics;
pub mod error;
pub mod euler_lagrange;
pub mod expr;
pub mod hamiltonian;
pub mod lagrangian;
pub mod noether;
pub mod numeric;
pub mod props;
pub mod ode;
pub mod qalgebra;
pub mod schrodinger;

pub use error::{Error, Result};

pub use deform::{deformed_deriv, DeformKind, DeformationParams, Func1D};
pub use expr::Expr;
pub use lagrangian::{
    FieldLagrangian, FieldVariant, MechLagrangian, PhysicalParams, Potential, VariationalOption,
};
pub use euler_lagrange::{GridKind, Trajectory};
pub use action::{
    deformed_action, minimize_action, ActionProblem, ConvergenceSample, MinimizeReport,
};
pub use dynamics::{
    first_integral, solve_newton_opt12, solve_newton_opt3, solve_newton_q,
    solve_newton_q_linearized, solve_newton_shifted, solve_newton_shifted_linearized,
};
pub use hamiltonian::{hamilton_rhs, integrate_hamilton, legendre, PhaseState};
pub use schrodinger::{
    build_hamiltonian, eigen_decomposition, measure_for, nrt_ansatz_residual,
    solve_nrt_nonlinear, solve_opt3_spatial, solve_opt3_spatial_linearized, solve_scale_q_time,
    solve_spatial_deformed, solve_time_deformed, Evolution, HamiltonianMatrix, Measure,
    WaveFunction,
};

pub use noether::{
    charge_history, deformed_divergence, noether_current, DivergenceField, NoetherCurrent,
    SymmetryVariation,
};
pub use props::{run_identity_suite, IdentityCheck, SuiteReport};
pub use num_complex::Complex64;
