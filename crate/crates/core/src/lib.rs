//! Numerical core for methane transport in the hydrate stability zone.
//!
//! The transport equation `∂_t u + A χ = F`, `u ∈ β̄(x, χ)` couples total
//! methane content `u` to the dissolved mass fraction `χ` through a
//! position-dependent maximal monotone graph. This crate provides the
//! graph, a 1D finite-volume operator, backward-Euler time stepping with
//! two independent nonlinear solvers, a Darcy pressure solve, the
//! staggered transport-pressure driver and the closed-form pure-advection
//! solution used for verification.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod coupled;
pub mod darcy;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod grid;
pub mod operator;
pub mod oracle;
pub mod phase;
pub mod stationary;
pub mod tridiag;

pub use coupled::{
    run_coupled, CoupledOutcome, CoupledProblem, CoupledRun, CoupledState, PressureBoundary,
};
pub use darcy::{
    hydrostatic, permeability, solve_pressure_1d, solve_total_pressure, FluidParams,
    PressureSolution,
};
pub use error::{Error, NonConvergence, Result};
pub use graph::{GraphValue, KinkedGraph, MonotoneGraph, PositiveIndicator};
pub use evolution::{
    evolve, evolve_graphs, step, translate_boundary, Blowup, EvolutionFailure, NoSource,
    OperatorSource, PointwiseSource, Record, SourceTerm, StepBalance, TimeGrid, Trajectory,
    Translation,
};
pub use grid::{Field, Grid};
pub use operator::{BoundaryFluxes, Coefficient, DiscreteOperator, OperatorCoefficients};
pub use oracle::{AdvectionScenario, SafePulse, Zones};
pub use phase::{PhaseLaw, Profile};
pub use stationary::{
    fixed_point_sweep, solve_problem, solve_stationary, Method, SolveReport, StationaryParams,
    StationaryProblem, StationarySolution,
};
