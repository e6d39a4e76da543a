//! Loosely coupled transport-pressure loop.
//!
//! At every knot `t_n`: saturation from `u_n`, permeability from
//! saturation, Darcy solve for the flux `q_n`, then one backward-Euler
//! transport step with the operator reassembled for velocity `q_n`. There
//! is no inner iteration between pressure and transport.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::darcy::{permeability_field, solve_pressure_1d, FluidParams, PressureSolution};
use crate::error::{Error, Result};
use crate::evolution::{step, step_balance, EvolutionFailure, SourceTerm, TimeGrid, Trajectory};
use crate::graph::KinkedGraph;
use crate::grid::{Field, Grid};
use crate::operator::{Coefficient, DiscreteOperator, OperatorCoefficients};
use crate::phase::PhaseLaw;
use crate::stationary::StationaryParams;

/// Excess-pressure boundary values and fluid properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureBoundary {
    pub fluid: FluidParams,
    pub p_left: f64,
    pub p_right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledProblem {
    pub grid: Grid,
    pub law: PhaseLaw,
    pub diffusion: f64,
    pub reaction: Coefficient,
    pub dirichlet_left: f64,
    pub dirichlet_right: f64,
    pub pressure: PressureBoundary,
    /// Keep the permeability of the initial state for the whole run.
    pub freeze_permeability: bool,
}

impl CoupledProblem {
    /// Transport operator for a given flux.
    pub fn operator(&self, q: f64) -> Result<DiscreteOperator> {
        let coeffs = OperatorCoefficients::new(
            self.diffusion,
            q,
            self.dirichlet_left,
            self.dirichlet_right,
        )
        .with_reaction(self.reaction.clone());
        DiscreteOperator::assemble(self.grid, coeffs)
    }
}

/// Pressure-side quantities at one knot, derived from `u` at that knot.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub knot: usize,
    pub t: f64,
    pub saturation: Vec<f64>,
    pub kappa: Field,
    pub pressure: PressureSolution,
}

impl CoupledState {
    pub fn q(&self) -> f64 {
        self.pressure.q
    }

    pub fn clogged(&self) -> bool {
        self.pressure.clogged
    }
}

/// Why a coupled run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoupledOutcome {
    Completed,
    /// The flow clogged while there is no diffusion to carry transport.
    ClogHalt { knot: usize, t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    /// Records carry the flux, excess pressure and clog flag of each knot.
    pub trajectory: Trajectory,
    pub states: Vec<CoupledState>,
    pub outcome: CoupledOutcome,
}

/// Pressure state for the content `u` at knot `knot`.
pub fn pressure_state(
    problem: &CoupledProblem,
    graphs: &[KinkedGraph],
    kappa_override: Option<&Field>,
    knot: usize,
    t: f64,
    u: &[f64],
) -> Result<CoupledState> {
    let saturation: Vec<f64> = u.iter().zip(graphs).map(|(ui, g)| g.saturation(*ui)).collect();
    let kappa = match kappa_override {
        Some(k) => k.clone(),
        None => permeability_field(&problem.pressure.fluid, problem.grid, &saturation)?,
    };
    let pressure = solve_pressure_1d(
        &problem.grid,
        &kappa,
        &problem.pressure.fluid,
        problem.pressure.p_left,
        problem.pressure.p_right,
    )?;
    Ok(CoupledState { knot, t, saturation, kappa, pressure })
}

/// Runs the staggered loop from `u0` over `tg`.
pub fn run_coupled<S: SourceTerm + ?Sized>(
    problem: &CoupledProblem,
    u0: &Field,
    source: &S,
    tg: &TimeGrid,
    params: &StationaryParams,
) -> core::result::Result<CoupledRun, EvolutionFailure> {
    let grid = problem.grid;
    let graphs = problem.law.sample(&grid);
    let fail = |t: f64, error: Error, traj: Trajectory| EvolutionFailure {
        t,
        error,
        partial: Box::new(traj),
    };
    let mut traj = match Trajectory::new(grid, graphs.clone(), tg.t0(), u0) {
        Ok(t) => t,
        Err(e) => return Err(fail(tg.t0(), e, empty_trajectory(grid, &graphs, tg.t0()))),
    };
    let mut states = Vec::with_capacity(tg.steps() + 1);
    let mut frozen: Option<Field> = None;
    let mut u = u0.clone();
    let mut f_j = Field::zeros(grid);
    let mut f_mid = Field::zeros(grid);
    for n in 0..=tg.steps() {
        let t = tg.knots()[n];
        let state = match pressure_state(problem, &graphs, frozen.as_ref(), n, t, u.values()) {
            Ok(s) => s,
            Err(e) => return Err(fail(t, e, traj)),
        };
        if problem.freeze_permeability && frozen.is_none() {
            frozen = Some(state.kappa.clone());
        }
        {
            let record = &mut traj.records_mut()[n];
            record.flux = Some(state.q());
            record.p_star = Some(state.pressure.p_star.values().to_vec());
            record.clogged = state.clogged();
        }
        let halt = state.clogged() && problem.diffusion == 0.0;
        let q = state.q();
        states.push(state);
        if halt {
            return Ok(CoupledRun {
                trajectory: traj,
                states,
                outcome: CoupledOutcome::ClogHalt { knot: n, t },
            });
        }
        if n == tg.steps() {
            break;
        }
        let t_next = tg.knots()[n + 1];
        let dt = tg.dt(n + 1);
        let attempt = (|| {
            let op = problem.operator(q)?;
            source.fill(t_next, &grid, f_j.values_mut());
            source.fill(t_next - 0.5 * dt, &grid, f_mid.values_mut());
            let sol = step(&op, &graphs, &u, dt, &f_j, params)?;
            let balance = step_balance(&op, dt, f_j.values(), sol.chi.values());
            Ok((sol, balance))
        })();
        match attempt {
            Ok((sol, balance)) => {
                traj.quadrature_defect += dt * grid.l1_diff(f_mid.values(), f_j.values());
                u = sol.u.clone();
                traj.push_step(t_next, sol, balance);
            }
            Err(e) => return Err(fail(t_next, e, traj)),
        }
    }
    Ok(CoupledRun { trajectory: traj, states, outcome: CoupledOutcome::Completed })
}

fn empty_trajectory(grid: Grid, graphs: &[KinkedGraph], t0: f64) -> Trajectory {
    Trajectory::new(grid, graphs.to_vec(), t0, &Field::zeros(grid))
        .expect("zero field is admissible")
}
