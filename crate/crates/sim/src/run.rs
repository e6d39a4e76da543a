//! Drives the evolution or the coupled loop for a validated problem.

use std::borrow::Cow;
use std::time::{Duration, Instant};

use hydrate_core::{
    evolve, run_coupled, step, CoupledOutcome, CoupledProblem, CoupledState, DiscreteOperator,
    Method, OperatorSource, StationaryParams, Trajectory,
};

use crate::scenario::{Problem, Transport};

/// Outcome class of a run; each maps to a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// Some cell reached `S ≥ 1`.
    Blowup,
    /// The flow clogged with no diffusion left to carry transport.
    ClogHalt,
    SolverFailure,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::Blowup => 2,
            RunStatus::ClogHalt => 3,
            RunStatus::SolverFailure => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Blowup => "blowup",
            RunStatus::ClogHalt => "clog_halt",
            RunStatus::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Complete on success, the states reached so far on failure.
    pub trajectory: Trajectory,
    /// Pressure states of a coupled run, one per recorded knot.
    pub states: Option<Vec<CoupledState>>,
    pub status: RunStatus,
    /// Time at which a clogged run halted.
    pub clog_halt: Option<f64>,
    pub failure: Option<String>,
    /// Largest L¹ distance between the Newton and fixed-point solutions of
    /// the same step, when cross-checking was requested.
    pub path_disagreement: Option<f64>,
    pub wall_time: Duration,
}

/// Operator whose left Dirichlet value is switched off after `until`.
pub struct SwitchedInflow {
    pub on: DiscreteOperator,
    pub off: Option<(DiscreteOperator, f64)>,
}

impl SwitchedInflow {
    fn select(&self, t: f64) -> &DiscreteOperator {
        match &self.off {
            // steps ending at the switch time still see the inflow
            Some((off, until)) if t > until * (1.0 + 1e-12) => off,
            _ => &self.on,
        }
    }
}

impl OperatorSource for SwitchedInflow {
    fn operator_at(&self, _j: usize, t: f64) -> hydrate_core::Result<Cow<'_, DiscreteOperator>> {
        Ok(Cow::Borrowed(self.select(t)))
    }
}

fn inflow(problem: &Problem, q: f64) -> hydrate_core::Result<SwitchedInflow> {
    let on = problem.operator(q, problem.dirichlet_left)?;
    let off = match problem.left_until {
        Some(until) => Some((problem.operator(q, 0.0)?, until)),
        None => None,
    };
    Ok(SwitchedInflow { on, off })
}

fn coupled_problem(problem: &Problem) -> Option<CoupledProblem> {
    match &problem.transport {
        Transport::Fixed { .. } => None,
        Transport::Pressure { boundary, freeze_permeability, .. } => Some(CoupledProblem {
            grid: problem.grid,
            law: problem.law.clone(),
            diffusion: problem.diffusion,
            reaction: problem.reaction.clone(),
            dirichlet_left: problem.dirichlet_left,
            dirichlet_right: problem.dirichlet_right,
            pressure: *boundary,
            freeze_permeability: *freeze_permeability,
        }),
    }
}

/// Runs the problem to completion or to the first failure.
pub fn run_problem(problem: &Problem) -> RunOutput {
    let started = Instant::now();
    let params = &problem.params;
    let mut clog_halt = None;
    let (result, states) = match &problem.transport {
        Transport::Fixed { q } => {
            let ops = match inflow(problem, *q) {
                Ok(ops) => ops,
                Err(e) => unreachable!("validated operator failed to assemble: {e}"),
            };
            (evolve(&ops, &problem.law, &problem.u0, &problem.source, &problem.time, params), None)
        }
        Transport::Pressure { .. } => {
            let cp = coupled_problem(problem).expect("pressure transport");
            match run_coupled(&cp, &problem.u0, &problem.source, &problem.time, params) {
                Ok(run) => {
                    if let CoupledOutcome::ClogHalt { t, .. } = run.outcome {
                        clog_halt = Some(t);
                    }
                    (Ok(run.trajectory), Some(run.states))
                }
                Err(e) => (Err(e), None),
            }
        }
    };
    let (trajectory, failure) = match result {
        Ok(t) => (t, None),
        Err(e) => {
            log::error!("{e}");
            (*e.partial.clone(), Some(e.to_string()))
        }
    };
    let status = if failure.is_some() {
        RunStatus::SolverFailure
    } else if clog_halt.is_some() {
        RunStatus::ClogHalt
    } else if trajectory.blowup().is_some() {
        RunStatus::Blowup
    } else {
        RunStatus::Completed
    };
    let path_disagreement = (problem.cross_check && failure.is_none())
        .then(|| cross_check(problem, &trajectory));
    RunOutput {
        trajectory,
        states,
        status,
        clog_halt,
        failure,
        path_disagreement,
        wall_time: started.elapsed(),
    }
}

/// Re-solves every step on the fixed-point path from the recorded start
/// and returns the largest L¹ distance to the recorded end state.
fn cross_check(problem: &Problem, traj: &Trajectory) -> f64 {
    let params = StationaryParams { method: Method::FixedPoint, ..problem.params.clone() };
    let graphs = traj.graphs();
    let records = traj.records();
    let fixed = match &problem.transport {
        Transport::Fixed { q } => Some(inflow(problem, *q).expect("validated operator")),
        Transport::Pressure { .. } => None,
    };
    let coupled = coupled_problem(problem);
    let mut worst: f64 = 0.0;
    for j in 1..records.len() {
        let t = records[j].t;
        let dt = t - records[j - 1].t;
        let op: Cow<'_, DiscreteOperator> = match (&fixed, &coupled) {
            (Some(ops), _) => Cow::Borrowed(ops.select(t)),
            (None, Some(cp)) => {
                let q = records[j - 1].flux.unwrap_or(0.0);
                Cow::Owned(cp.operator(q).expect("validated operator"))
            }
            (None, None) => unreachable!("transport is fixed or coupled"),
        };
        let u_prev = traj.u_field(j - 1);
        match step(&op, graphs, &u_prev, dt, &problem.source, &params) {
            Ok(sol) => worst = worst.max(problem.grid.l1_diff(sol.u.values(), &records[j].u)),
            Err(e) => {
                log::warn!("fixed-point path failed in the step ending at t = {t}: {e}");
                return f64::INFINITY;
            }
        }
    }
    worst
}
